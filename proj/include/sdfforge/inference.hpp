#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "sdfforge/decoder.hpp"
#include "sdfforge/sampling.hpp"

namespace sdfforge {

/// Observed SDF samples (at +/- eta around measured surface points) and
/// free-space points known to lie outside the shape.
struct PartialObservation {
  std::vector<SdfSample> sdf_samples;
  std::vector<Point3> free_points;
  double eta = 0.005;
};

struct EstimateConfig {
  double lambda = 1e-4;
  int iterations = 800;
  double lr = 5e-3;
  double delta = 0.1;
  double init_stddev = 0.01;
  /// Points evaluated per iteration (random subset); 0 uses all points.
  std::size_t samples_per_iter = 8192;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CompletionConfig {
  double eta = 0.005;
  /// Clamp of the SDF term. Setting it to eta saturates every sample of a
  /// distant code (zero gradient), so the default is the training clamp.
  double delta = 0.1;
  int iterations = 800;
  double lr = 5e-3;
  double lambda = 1e-4;
  int free_points_per_ray = 2;
  bool use_free_space = true;
  double init_stddev = 0.01;
  std::size_t samples_per_iter = 8192;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct LatentEstimate {
  Vector<float> z;
  /// Objective over all points at the returned code.
  double objective = 0;
  /// Objective of the evaluated subset at every iteration (before the update).
  std::vector<double> history;
};

/// MAP latent code for a fixed decoder: Adam on
/// mean_j L(f(z, x_j), s_j) + lambda |z|^2, dropout disabled.
LatentEstimate estimate_latent(const DecoderParams<float>& params, std::span<const SdfSample> samples,
                               const EstimateConfig& config);

/// Two samples per hit pixel at p +/- eta * n with s = +/- eta, and
/// free_points_per_ray points uniform on the pixel ray in (0.05 d, 0.95 d).
PartialObservation depth_to_observation(const DepthMap& depth, double eta, int free_points_per_ray,
                                        std::uint64_t seed);

/// Penalty for negative predictions at free-space points.
inline double freespace_loss(double pred) { return pred < 0 ? -pred : 0.0; }

/// Latent code explaining a partial observation: clamped L1 over the SDF
/// samples plus the free-space penalty, averaged over all
/// points, plus lambda |z|^2.
LatentEstimate complete_shape(const DecoderParams<float>& params, const PartialObservation& observation,
                              const CompletionConfig& config);

/// Inverse-depth noise: D' = 1 / (1/D + N(0, alpha^2)) at hit pixels, with
/// non-positive draws resampled.
DepthMap perturb_depth(const DepthMap& depth, double alpha, std::uint64_t seed);

/// Depth file: "DPTH", 12 float32 pose (rotation rows, then camera
/// position), 4 float32 intrinsics (fx, fy, cx, cy), u32 width, u32 height,
/// then width*height x (depth, nx, ny, nz) float32; depth 0 marks a miss.
void write_depth_map(std::ostream& out, const DepthMap& depth);
void write_depth_map(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth_map(std::istream& in);
DepthMap read_depth_map(const std::filesystem::path& path);

}  // namespace sdfforge

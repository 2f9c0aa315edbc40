#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sdfforge/bvh.hpp"
#include "sdfforge/geometry.hpp"

namespace sdfforge {

struct SdfSample {
  Point3 position;
  double s = 0;
};

/// Signed distance samples of one shape. Samples with s > 0 count as
/// positive, all others as negative.
struct SampleSet {
  std::string shape_id;
  std::vector<SdfSample> samples;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;

  void recount();
  std::size_t size() const { return samples.size(); }
};

struct PrepConfig {
  std::size_t n_cameras = 100;
  int depth_resolution = 128;
  std::size_t n_surface = 250'000;
  std::vector<double> perturb_variances{0.0025, 0.00025};
  std::size_t n_uniform = 25'000;
  double double_sided_reject_fraction = 0.02;
  double camera_radius = 2.0;
  double fov_y_degrees = 60.0;

  void validate() const;
};

/// Pinhole camera. `rotation` rows are the camera axes (right, down, forward)
/// in world coordinates, so camera = rotation * (world - position).
struct Camera {
  Mat3 rotation;
  Vec3 position;
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;

  /// Looks from `eye` at `target`; up is +Y (or +X when the view direction is
  /// parallel to Y). Square pixels, principal point at the image center.
  static Camera look_at(const Vec3& eye, const Vec3& target, int width, int height, double fov_y_degrees);

  /// Unit world-space direction through the center of pixel (u, v).
  Vec3 ray_direction(int u, int v) const;
  Vec3 forward() const { return rotation.row(2); }
};

struct DepthPixel {
  double depth = 0;  // distance along the pixel ray; 0 = miss
  Vec3 normal;       // unit, facing the camera
  std::int32_t triangle = -1;
  bool front_facing = false;  // hit the side the triangle winding points to
};

struct DepthMap {
  Camera camera;
  std::vector<DepthPixel> pixels;  // row-major, width * height

  const DepthPixel& at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * camera.width + u]; }
  std::size_t hit_count() const;
  /// World position of the surface seen by pixel (u, v); only valid for hits.
  Vec3 back_project(int u, int v) const;
};

/// First-hit raycast of every pixel; normals flipped towards the camera.
DepthMap render_depth(const MeshBvh& bvh, const Camera& camera);
DepthMap render_depth(const TriangleMesh& mesh, const Camera& camera);

/// Cameras on a Fibonacci lattice of radius config.camera_radius looking at
/// the origin.
std::vector<Camera> shell_cameras(const PrepConfig& config);

struct Shell {
  std::vector<OrientedPoint> points;
  /// Fraction of mesh triangles observed from both orientations.
  double double_sided_fraction = 0;
};

/// Back-projects all hit pixels of all virtual cameras into an oriented
/// surface point cloud. Throws DataError when nothing is visible.
Shell extract_shell(const TriangleMesh& mesh, const PrepConfig& config, int threads = 1);

/// True iff the mesh passes the double-sided triangle filter (inclusive).
bool accept_mesh(double double_sided_fraction, const PrepConfig& config);

/// Area-weighted random points on the mesh surface with their face normals.
std::vector<OrientedPoint> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

struct GeneratedSamples {
  SampleSet set;
  double double_sided_fraction = 0;
};

/// Full sampling pipeline for one normalized mesh: shell extraction, two
/// Gaussian perturbations per area-weighted surface point, uniform points in
/// the unit ball (stored last), signs and distances from the shell.
GeneratedSamples generate_samples(const TriangleMesh& mesh, const PrepConfig& config, std::uint64_t seed,
                                  const std::string& shape_id = "shape", int threads = 1);

/// Uniform points in the unit ball by rejection from the enclosing cube.
template <typename Rng>
Vec3 uniform_in_ball(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    if (squared_norm(p) <= 1.0) return p;
  }
}

/// SampleSet binary file: "SDFS", u32 version = 1, u64 count, count x
/// (x, y, z, s) float32 little-endian.
void write_sample_set(std::ostream& out, const SampleSet& set);
void write_sample_set(const std::filesystem::path& path, const SampleSet& set);
SampleSet read_sample_set(std::istream& in, const std::string& shape_id);
SampleSet read_sample_set(const std::filesystem::path& path, const std::string& shape_id);

}  // namespace sdfforge


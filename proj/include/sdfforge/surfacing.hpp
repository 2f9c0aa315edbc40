#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "sdfforge/decoder.hpp"
#include "sdfforge/geometry.hpp"
#include "sdfforge/sampling.hpp"

namespace sdfforge {

struct Bounds {
  Vec3 lo{-1, -1, -1};
  Vec3 hi{1, 1, 1};
};

/// Scalar samples at the (res+1)^3 corners of a regular lattice of res^3
/// cells spanning `bounds`; x varies fastest.
struct VoxelGrid {
  int resolution = 0;  // cells per axis
  Bounds bounds;
  std::vector<float> values;

  int nodes() const { return resolution + 1; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * nodes() + j) * nodes() + i;
  }
  float at(int i, int j, int k) const { return values[index(i, j, k)]; }
  double spacing(int axis) const { return (bounds.hi[axis] - bounds.lo[axis]) / resolution; }
  Vec3 node(int i, int j, int k) const {
    return {bounds.lo.x + i * spacing(0), bounds.lo.y + j * spacing(1), bounds.lo.z + k * spacing(2)};
  }
};

using ScalarField = std::function<double(const Vec3&)>;

/// Decoder values f(z, .) at every grid node.
VoxelGrid evaluate_grid(const DecoderParams<float>& params, std::span<const float> z, int resolution,
                        const Bounds& bounds = {}, int threads = 1);
/// `field` at every grid node (the callable must be thread-safe).
VoxelGrid evaluate_grid(const ScalarField& field, int resolution, const Bounds& bounds = {}, int threads = 1);

struct IsoMesh {
  TriangleMesh mesh;
  std::vector<Vec3> vertex_normals;  // unit, one per vertex (may be empty)
};

/// Iso-surface of a grid. Corners with value < iso count as inside; shared
/// edge vertices are welded, so a closed level set yields a closed mesh.
/// Triangles wind counter-clockwise seen from the side of larger values.
/// Vertex normals are area-weighted face normal averages.
IsoMesh marching_cubes(const VoxelGrid& grid, double iso = 0.0);

/// Replaces vertex normals by the normalized decoder spatial gradient
/// (keeping the face-averaged normal where the gradient is degenerate).
void assign_decoder_normals(IsoMesh& mesh, const DecoderParams<float>& params, std::span<const float> z,
                            int threads = 1);

/// evaluate_grid + marching_cubes at level 0 + decoder normals.
IsoMesh extract_mesh(const DecoderParams<float>& params, std::span<const float> z, int resolution,
                     const Bounds& bounds = {}, int threads = 1);

/// Occupied volume: number of grid corners with value < 0 times the cell
/// volume.
double occupied_volume(const VoxelGrid& grid);

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
};

struct TraceConfig {
  int max_steps = 200;
  double surface_eps = 1e-3;
  double min_step = 1e-4;
  /// Steps never exceed this (the clamped training band of the decoder).
  double max_step = 0.1;
  /// Rays are marched inside the cube [-region, region]^3.
  double region = 1.2;
};

struct TraceHit {
  bool hit = false;
  double t = 0;
  Vec3 point;
  int steps = 0;  // field evaluations used
};

/// Sphere tracing of an arbitrary field. The march starts where the ray
/// enters the region cube and advances by min(max(f, min_step), max_step)
/// until f <= surface_eps (hit), the ray leaves the cube, or max_steps
/// evaluations were used (miss).
TraceHit sphere_trace(const ScalarField& field, const Ray& ray, const TraceConfig& config = {});

/// The same march for the decoder, advancing all rays in lockstep in fixed
/// batches.
std::vector<TraceHit> sphere_trace(const DecoderParams<float>& params, std::span<const float> z,
                                   std::span<const Ray> rays, const TraceConfig& config = {}, int threads = 1);
TraceHit sphere_trace(const DecoderParams<float>& params, std::span<const float> z, const Ray& ray,
                      const TraceConfig& config = {});

struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> intensity;  // row-major, in [0, 1]

  float at(int u, int v) const { return intensity[static_cast<std::size_t>(v) * width + u]; }
};

struct RenderResult {
  Image image;
  std::vector<TraceHit> hits;  // one per pixel, row-major
};

/// Lambertian gray rendering of the zero level set; `light` points from the
/// surface towards the light. Background pixels are 0.
RenderResult render(const DecoderParams<float>& params, std::span<const float> z, const Camera& camera,
                    const Vec3& light, const TraceConfig& config = {}, int threads = 1);

/// Binary PPM (P6), gray replicated to RGB.
void write_ppm(std::ostream& out, const Image& image);
void write_ppm(const std::filesystem::path& path, const Image& image);

/// (1 - t) z_a + t z_b.
Vector<float> interpolate_latents(const Vector<float>& z_a, const Vector<float>& z_b, double t);

}  // namespace sdfforge

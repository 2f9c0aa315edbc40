#include "sdfforge/surfacing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "sdfforge/detail/mc_tables.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/parallel.hpp"

namespace sdfforge {

namespace {

constexpr std::size_t kNodeChunk = 2048;
constexpr std::size_t kRayBatch = 1024;

void check_grid_args(int resolution, const Bounds& bounds) {
  if (resolution < 2) throw PreconditionError("grid resolution must be >= 2");
  for (int a = 0; a < 3; ++a) {
    if (!(bounds.hi[a] > bounds.lo[a])) throw PreconditionError("grid bounds must have positive extent");
  }
}

VoxelGrid empty_grid(int resolution, const Bounds& bounds) {
  check_grid_args(resolution, bounds);
  VoxelGrid grid;
  grid.resolution = resolution;
  grid.bounds = bounds;
  const auto n = static_cast<std::size_t>(resolution) + 1;
  grid.values.resize(n * n * n);
  return grid;
}

Vec3 node_of(const VoxelGrid& grid, std::size_t index) {
  const auto r = static_cast<std::size_t>(grid.nodes());
  return grid.node(static_cast<int>(index % r), static_cast<int>((index / r) % r), static_cast<int>(index / (r * r)));
}

void check_latent(const DecoderParams<float>& params, std::span<const float> z) {
  if (static_cast<int>(z.size()) != params.config.latent_dim) {
    throw ShapeError("latent code has " + std::to_string(z.size()) + " entries, decoder expects " +
                     std::to_string(params.config.latent_dim));
  }
}

}  // namespace

VoxelGrid evaluate_grid(const DecoderParams<float>& params, std::span<const float> z, int resolution,
                        const Bounds& bounds, int threads) {
  check_latent(params, z);
  VoxelGrid grid = empty_grid(resolution, bounds);
  parallel_chunks(grid.values.size(), kNodeChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<Vec3> pts(e - b);
    for (std::size_t i = b; i < e; ++i) pts[i - b] = node_of(grid, i);
    const Vector<float> out = evaluate(params, make_inputs<float>(z, pts), 1);
    std::copy(out.data(), out.data() + out.size(), grid.values.begin() + static_cast<std::ptrdiff_t>(b));
  });
  return grid;
}

VoxelGrid evaluate_grid(const ScalarField& field, int resolution, const Bounds& bounds, int threads) {
  VoxelGrid grid = empty_grid(resolution, bounds);
  parallel_chunks(grid.values.size(), kNodeChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) grid.values[i] = static_cast<float>(field(node_of(grid, i)));
  });
  return grid;
}

IsoMesh marching_cubes(const VoxelGrid& grid, double iso) {
  const int r = grid.nodes();
  if (grid.resolution < 1 || grid.values.size() != static_cast<std::size_t>(r) * r * r) {
    throw PreconditionError("marching_cubes: malformed grid");
  }
  for (float v : grid.values) {
    if (!std::isfinite(v)) throw NumericFault("marching_cubes: non-finite grid value");
  }

  // Corner offsets and, per edge, the lower endpoint offset and axis.
  static constexpr std::array<std::array<int, 3>, 8> kCorner{
      {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};
  static constexpr std::array<std::array<int, 4>, 12> kEdge{{{0, 0, 0, 0},
                                                             {1, 0, 0, 1},
                                                             {0, 1, 0, 0},
                                                             {0, 0, 0, 1},
                                                             {0, 0, 1, 0},
                                                             {1, 0, 1, 1},
                                                             {0, 1, 1, 0},
                                                             {0, 0, 1, 1},
                                                             {0, 0, 0, 2},
                                                             {1, 0, 0, 2},
                                                             {1, 1, 0, 2},
                                                             {0, 1, 0, 2}}};

  IsoMesh out;
  auto& verts = out.mesh.vertices;
  auto& tris = out.mesh.triangles;
  std::unordered_map<std::uint64_t, std::uint32_t> welded;

  const auto edge_vertex = [&](int i, int j, int k, int e) -> std::uint32_t {
    const int a0 = i + kEdge[e][0], a1 = j + kEdge[e][1], a2 = k + kEdge[e][2];
    const int axis = kEdge[e][3];
    const std::uint64_t key = static_cast<std::uint64_t>(grid.index(a0, a1, a2)) * 3 + axis;
    const auto found = welded.find(key);
    if (found != welded.end()) return found->second;
    const int b0 = a0 + (axis == 0), b1 = a1 + (axis == 1), b2 = a2 + (axis == 2);
    const double va = grid.at(a0, a1, a2), vb = grid.at(b0, b1, b2);
    // Keep vertices off the lattice nodes so no triangle collapses.
    const double t = std::clamp((iso - va) / (vb - va), 1e-3, 1.0 - 1e-3);
    const Vec3 pa = grid.node(a0, a1, a2), pb = grid.node(b0, b1, b2);
    const auto id = static_cast<std::uint32_t>(verts.size());
    verts.push_back(pa + (pb - pa) * t);
    welded.emplace(key, id);
    return id;
  };

  for (int k = 0; k + 1 < r; ++k) {
    for (int j = 0; j + 1 < r; ++j) {
      for (int i = 0; i + 1 < r; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (grid.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < iso) cube |= 1 << c;
        }
        if (detail::kEdgeTable[cube] == 0) continue;
        const int* row = detail::kTriTable[cube];
        for (int t = 0; row[t] != -1; t += 3) {
          const std::uint32_t a = edge_vertex(i, j, k, row[t]);
          const std::uint32_t b = edge_vertex(i, j, k, row[t + 1]);
          const std::uint32_t c = edge_vertex(i, j, k, row[t + 2]);
          // The table winds counter-clockwise seen from the inside; flip it.
          tris.push_back({a, c, b});
        }
      }
    }
  }

  out.vertex_normals.assign(verts.size(), Vec3{});
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Vec3 n = out.mesh.triangle(t).raw_normal();
    for (std::uint32_t v : tris[t]) out.vertex_normals[v] += n;
  }
  for (auto& n : out.vertex_normals) {
    const double len = norm(n);
    n = len > 0 ? n / len : Vec3{};
  }
  return out;
}

void assign_decoder_normals(IsoMesh& mesh, const DecoderParams<float>& params, std::span<const float> z,
                            int threads) {
  check_latent(params, z);
  const auto grads = spatial_gradients<float>(params, z, mesh.mesh.vertices, threads);
  mesh.vertex_normals.resize(mesh.mesh.vertices.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double len = norm(grads[i]);
    if (len > 1e-12) mesh.vertex_normals[i] = grads[i] / len;
  }
}

IsoMesh extract_mesh(const DecoderParams<float>& params, std::span<const float> z, int resolution,
                     const Bounds& bounds, int threads) {
  const VoxelGrid grid = evaluate_grid(params, z, resolution, bounds, threads);
  IsoMesh mesh = marching_cubes(grid, 0.0);
  assign_decoder_normals(mesh, params, z, threads);
  return mesh;
}

double occupied_volume(const VoxelGrid& grid) {
  const auto inside = std::count_if(grid.values.begin(), grid.values.end(), [](float v) { return v < 0; });
  return static_cast<double>(inside) * grid.spacing(0) * grid.spacing(1) * grid.spacing(2);
}

namespace {

/// Parameter interval of the ray inside the region cube; empty when t1 < t0.
std::pair<double, double> region_interval(const Ray& ray, double region) {
  double t0 = 0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.direction[a];
    if (d == 0) {
      if (o < -region || o > region) return {1, 0};
      continue;
    }
    double ta = (-region - o) / d, tb = (region - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return {t0, t1};
}

void check_trace_config(const TraceConfig& c) {
  if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!(c.surface_eps > 0)) throw ConfigError("surface_eps must be positive");
  if (!(c.min_step > 0 && c.max_step >= c.min_step)) throw ConfigError("step bounds must satisfy 0 < min <= max");
  if (!(c.region > 0)) throw ConfigError("trace region must be positive");
}

/// Advances one ray given the field value at its current point; returns
/// true while the ray is still marching.
bool advance(TraceHit& h, double f, double t_exit, const Ray& ray, const TraceConfig& c) {
  ++h.steps;
  if (f <= c.surface_eps) {
    h.hit = true;
    h.point = ray.origin + ray.direction * h.t;
    return false;
  }
  h.t += std::min(std::max(f, c.min_step), c.max_step);
  return h.steps < c.max_steps && h.t <= t_exit;
}

}  // namespace

TraceHit sphere_trace(const ScalarField& field, const Ray& ray, const TraceConfig& config) {
  check_trace_config(config);
  TraceHit h;
  const auto [t0, t1] = region_interval(ray, config.region);
  if (t1 < t0) return h;
  h.t = t0;
  while (advance(h, field(ray.origin + ray.direction * h.t), t1, ray, config)) {
  }
  return h;
}

std::vector<TraceHit> sphere_trace(const DecoderParams<float>& params, std::span<const float> z,
                                   std::span<const Ray> rays, const TraceConfig& config, int threads) {
  check_trace_config(config);
  check_latent(params, z);
  std::vector<TraceHit> hits(rays.size());
  parallel_chunks(rays.size(), kRayBatch, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<std::size_t> active;
    std::vector<double> exits(e - b);
    for (std::size_t i = b; i < e; ++i) {
      const auto [t0, t1] = region_interval(rays[i], config.region);
      if (t1 < t0) continue;
      hits[i].t = t0;
      exits[i - b] = t1;
      active.push_back(i);
    }
    std::vector<Vec3> pts;
    while (!active.empty()) {
      pts.resize(active.size());
      for (std::size_t a = 0; a < active.size(); ++a) {
        const Ray& ray = rays[active[a]];
        pts[a] = ray.origin + ray.direction * hits[active[a]].t;
      }
      const Vector<float> f = evaluate(params, make_inputs<float>(z, pts), 1);
      std::size_t keep = 0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t i = active[a];
        if (advance(hits[i], f(static_cast<Eigen::Index>(a)), exits[i - b], rays[i], config)) active[keep++] = i;
      }
      active.resize(keep);
    }
  });
  return hits;
}

TraceHit sphere_trace(const DecoderParams<float>& params, std::span<const float> z, const Ray& ray,
                      const TraceConfig& config) {
  return sphere_trace(params, z, std::span<const Ray>(&ray, 1), config, 1).front();
}

RenderResult render(const DecoderParams<float>& params, std::span<const float> z, const Camera& camera,
                    const Vec3& light, const TraceConfig& config, int threads) {
  if (!(norm(light) > 0)) throw PreconditionError("render: light direction must be non-zero");
  const Vec3 l = normalized(light);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(camera.width) * camera.height);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) rays.push_back({camera.position, camera.ray_direction(u, v)});
  }

  RenderResult out;
  out.hits = sphere_trace(params, z, rays, config, threads);
  out.image.width = camera.width;
  out.image.height = camera.height;
  out.image.intensity.assign(rays.size(), 0.0f);

  std::vector<std::size_t> hit_pixels;
  std::vector<Vec3> hit_points;
  for (std::size_t i = 0; i < out.hits.size(); ++i) {
    if (!out.hits[i].hit) continue;
    hit_pixels.push_back(i);
    hit_points.push_back(out.hits[i].point);
  }
  const auto grads = spatial_gradients<float>(params, z, hit_points, threads);
  for (std::size_t k = 0; k < hit_pixels.size(); ++k) {
    const double len = norm(grads[k]);
    const double shade = len > 1e-12 ? std::max(0.0, dot(grads[k] / len, l)) : 0.0;
    out.image.intensity[hit_pixels[k]] = static_cast<float>(shade);
  }
  return out;
}

void write_ppm(std::ostream& out, const Image& image) {
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (float i : image.intensity) {
    const auto c = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(i, 0.0f, 1.0f) * 255.0f)));
    const char rgb[3] = {c, c, c};
    out.write(rgb, 3);
  }
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  write_ppm(out, image);
}

Vector<float> interpolate_latents(const Vector<float>& z_a, const Vector<float>& z_b, double t) {
  if (z_a.size() != z_b.size()) throw ShapeError("interpolate_latents: code dimensions differ");
  if (!(t >= 0 && t <= 1)) throw PreconditionError("interpolation parameter must be in [0, 1]");
  return (static_cast<float>(1.0 - t) * z_a + static_cast<float>(t) * z_b).eval();
}

}  // namespace sdfforge

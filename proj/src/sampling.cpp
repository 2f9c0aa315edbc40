#include "sdfforge/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "sdfforge/binary_io.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/kdtree.hpp"
#include "sdfforge/parallel.hpp"

namespace sdfforge {

void SampleSet::recount() {
  n_positive = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const SdfSample& s) { return s.s > 0; }));
  n_negative = samples.size() - n_positive;
}

void PrepConfig::validate() const {
  if (n_cameras < 1) throw ConfigError("n_cameras must be >= 1");
  if (depth_resolution < 1) throw ConfigError("depth_resolution must be >= 1");
  if (n_surface < 1) throw ConfigError("n_surface must be >= 1");
  if (n_uniform < 1) throw ConfigError("n_uniform must be >= 1");
  if (perturb_variances.empty()) throw ConfigError("perturb_variances must not be empty");
  for (double v : perturb_variances) {
    if (!(v > 0)) throw ConfigError("perturb variances must be positive");
  }
  if (!(double_sided_reject_fraction > 0 && double_sided_reject_fraction <= 1)) {
    throw ConfigError("double_sided_reject_fraction must be in (0, 1]");
  }
  if (!(camera_radius > 1)) throw ConfigError("camera_radius must place cameras outside the unit sphere");
  if (!(fov_y_degrees > 0 && fov_y_degrees < 180)) throw ConfigError("fov_y_degrees must be in (0, 180)");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, int width, int height, double fov_y_degrees) {
  if (width < 1 || height < 1) throw PreconditionError("camera image size must be positive");
  const Vec3 forward = normalized(target - eye);
  Vec3 up{0, 1, 0};
  if (std::abs(dot(forward, up)) > 0.999) up = {1, 0, 0};
  const Vec3 right = normalized(cross(forward, up));
  const Vec3 down = cross(forward, right);

  Camera cam;
  cam.rotation = Mat3::from_rows(right, down, forward);
  cam.position = eye;
  cam.width = width;
  cam.height = height;
  cam.fy = 0.5 * height / std::tan(0.5 * fov_y_degrees * std::numbers::pi / 180.0);
  cam.fx = cam.fy;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  return cam;
}

Vec3 Camera::ray_direction(int u, int v) const {
  const Vec3 local{(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
  return normalized(rotation.transposed() * local);
}

std::size_t DepthMap::hit_count() const {
  return static_cast<std::size_t>(
      std::count_if(pixels.begin(), pixels.end(), [](const DepthPixel& p) { return p.depth > 0; }));
}

Vec3 DepthMap::back_project(int u, int v) const {
  return camera.position + camera.ray_direction(u, v) * at(u, v).depth;
}

DepthMap render_depth(const MeshBvh& bvh, const Camera& camera) {
  DepthMap map;
  map.camera = camera;
  map.pixels.resize(static_cast<std::size_t>(camera.width) * camera.height);
  const TriangleMesh& mesh = bvh.mesh();
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vec3 dir = camera.ray_direction(u, v);
      const auto hit = bvh.intersect(camera.position, dir);
      if (!hit) continue;
      DepthPixel& px = map.pixels[static_cast<std::size_t>(v) * camera.width + u];
      const Vec3 n = mesh.face_normal(hit->triangle);
      px.depth = hit->t;
      px.triangle = static_cast<std::int32_t>(hit->triangle);
      px.front_facing = dot(n, dir) < 0;
      px.normal = px.front_facing ? n : -n;
    }
  }
  return map;
}

DepthMap render_depth(const TriangleMesh& mesh, const Camera& camera) { return render_depth(MeshBvh(mesh), camera); }

std::vector<Camera> shell_cameras(const PrepConfig& config) {
  std::vector<Camera> cams;
  for (const Vec3& dir : fibonacci_sphere(config.n_cameras)) {
    cams.push_back(Camera::look_at(dir * config.camera_radius, {}, config.depth_resolution,
                                   config.depth_resolution, config.fov_y_degrees));
  }
  return cams;
}

Shell extract_shell(const TriangleMesh& mesh, const PrepConfig& config, int threads) {
  config.validate();
  if (mesh.empty()) throw DataError("extract_shell: mesh has no triangles");
  const MeshBvh bvh(mesh);
  const std::vector<Camera> cams = shell_cameras(config);
  std::vector<DepthMap> maps(cams.size());
  parallel_chunks(cams.size(), 1, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) maps[i] = render_depth(bvh, cams[i]);
  });

  Shell shell;
  std::vector<std::uint8_t> seen(mesh.triangles.size(), 0);  // bit 0: front, bit 1: back
  for (const DepthMap& map : maps) {
    for (int v = 0; v < map.camera.height; ++v) {
      for (int u = 0; u < map.camera.width; ++u) {
        const DepthPixel& px = map.at(u, v);
        if (!(px.depth > 0)) continue;
        seen[px.triangle] |= px.front_facing ? 1 : 2;
        shell.points.push_back({map.back_project(u, v), px.normal});
      }
    }
  }
  if (shell.points.empty()) throw DataError("extract_shell: no surface visible from any virtual camera");
  const auto both = std::count(seen.begin(), seen.end(), std::uint8_t{3});
  shell.double_sided_fraction = static_cast<double>(both) / static_cast<double>(mesh.triangles.size());
  return shell;
}

bool accept_mesh(double double_sided_fraction, const PrepConfig& config) {
  return double_sided_fraction <= config.double_sided_reject_fraction;
}

std::vector<OrientedPoint> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw PreconditionError("sample_surface: empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    total += mesh.triangle(i).area();
    cumulative[i] = total;
  }
  if (!(total > 0)) throw DegenerateGeometry("sample_surface: mesh has zero area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<OrientedPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = unit(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t tri = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    const double r1 = std::sqrt(unit(rng)), r2 = unit(rng);
    const Triangle t = mesh.triangle(tri);
    const Vec3 p = t.a * (1 - r1) + t.b * (r1 * (1 - r2)) + t.c * (r1 * r2);
    out.push_back({p, mesh.face_normal(tri)});
  }
  return out;
}

GeneratedSamples generate_samples(const TriangleMesh& mesh, const PrepConfig& config, std::uint64_t seed,
                                  const std::string& shape_id, int threads) {
  config.validate();
  Shell shell = extract_shell(mesh, config, threads);
  const double fraction = shell.double_sided_fraction;
  const OrientedPointSdf oracle(std::move(shell.points));

  const auto surface = sample_surface(mesh, config.n_surface, seed);
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GeneratedSamples out;
  out.double_sided_fraction = fraction;
  out.set.shape_id = shape_id;
  auto& samples = out.set.samples;
  samples.reserve(surface.size() * config.perturb_variances.size() + config.n_uniform);
  for (const auto& sp : surface) {
    for (double variance : config.perturb_variances) {
      const double sd = std::sqrt(variance);
      const Vec3 offset{gauss(rng), gauss(rng), gauss(rng)};
      samples.push_back({sp.position + offset * sd, 0.0});
    }
  }
  for (std::size_t i = 0; i < config.n_uniform; ++i) samples.push_back({uniform_in_ball(rng), 0.0});

  parallel_chunks(samples.size(), 4096, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) samples[i].s = oracle(samples[i].position);
  });
  out.set.recount();
  return out;
}

void write_sample_set(std::ostream& out, const SampleSet& set) {
  binio::write_magic(out, "SDFS");
  binio::write_uint<std::uint32_t>(out, 1);
  binio::write_uint<std::uint64_t>(out, set.samples.size());
  for (const auto& s : set.samples) {
    binio::write_f32(out, static_cast<float>(s.position.x));
    binio::write_f32(out, static_cast<float>(s.position.y));
    binio::write_f32(out, static_cast<float>(s.position.z));
    binio::write_f32(out, static_cast<float>(s.s));
  }
}

void write_sample_set(const std::filesystem::path& path, const SampleSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sample file " + path.string());
  write_sample_set(out, set);
}

SampleSet read_sample_set(std::istream& in, const std::string& shape_id) {
  binio::expect_magic(in, "SDFS");
  const auto version = binio::read_uint<std::uint32_t>(in, "SDFS version");
  if (version != 1) throw DataError("unsupported SDFS version " + std::to_string(version));
  const auto count = binio::read_uint<std::uint64_t>(in, "SDFS count");
  SampleSet set;
  set.shape_id = shape_id;
  set.samples.resize(count);
  for (auto& s : set.samples) {
    s.position.x = binio::read_f32(in, "SDFS record");
    s.position.y = binio::read_f32(in, "SDFS record");
    s.position.z = binio::read_f32(in, "SDFS record");
    s.s = binio::read_f32(in, "SDFS record");
  }
  set.recount();
  return set;
}

SampleSet read_sample_set(const std::filesystem::path& path, const std::string& shape_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sample file " + path.string());
  return read_sample_set(in, shape_id);
}

}  // namespace sdfforge

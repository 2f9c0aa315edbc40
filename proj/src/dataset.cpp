#include "sdfforge/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sdfforge/detail/seed.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/mesh_io.hpp"
#include "sdfforge/parallel.hpp"
#include "sdfforge/surfacing.hpp"

namespace sdfforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

FamilyKind parse_family_kind(const std::string& name) {
  if (name == "boxes") return FamilyKind::Boxes;
  if (name == "spheres") return FamilyKind::Spheres;
  if (name == "tori") return FamilyKind::Tori;
  throw ConfigError("unknown shape family '" + name + "' (expected boxes, spheres or tori)");
}

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Boxes: return "boxes";
    case FamilyKind::Spheres: return "spheres";
    case FamilyKind::Tori: return "tori";
  }
  return "?";
}

namespace {
std::string member_stem(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Boxes: return "box";
    case FamilyKind::Spheres: return "sphere";
    case FamilyKind::Tori: return "torus";
  }
  return "shape";
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace

ProceduralFamily ProceduralFamily::sweep(FamilyKind kind, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("a shape family needs at least one member");
  ProceduralFamily f;
  f.kind = kind;
  f.seed = seed;
  for (std::size_t i = 0; i < count; ++i) {
    f.parameters.push_back(count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return f;
}

void ProceduralFamily::validate() const {
  if (parameters.empty()) throw ConfigError("a shape family needs at least one member");
  for (double t : parameters) {
    if (!(t >= 0 && t <= 1)) throw ConfigError("family parameters must lie in [0, 1]");
  }
}

AnalyticShape family_shape(FamilyKind kind, double t) {
  if (!(t >= 0 && t <= 1)) throw PreconditionError("family parameter must lie in [0, 1]");
  switch (kind) {
    case FamilyKind::Boxes: return AnalyticShape::box({0.2 + 0.5 * t, 0.5 - 0.15 * t, 0.35});
    case FamilyKind::Spheres: return AnalyticShape::sphere({}, 0.3 + 0.5 * t);
    case FamilyKind::Tori: return AnalyticShape::torus(0.45 + 0.2 * t, 0.1 + 0.1 * t);
  }
  throw PreconditionError("unknown family kind");
}

std::vector<FamilyMember> family_members(const ProceduralFamily& family, const std::string& id_prefix) {
  family.validate();
  std::vector<FamilyMember> out;
  for (std::size_t i = 0; i < family.parameters.size(); ++i) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%02zu", i);
    const double t = family.parameters[i];
    out.push_back({id_prefix + member_stem(family.kind) + "_" + idx, t, family_shape(family.kind, t)});
  }
  return out;
}

TriangleMesh reference_mesh(FamilyKind kind, const AnalyticShape& shape, int resolution, int threads) {
  if (kind == FamilyKind::Boxes) {
    if (const auto* box = std::get_if<AnalyticShape::Box>(&shape.variant())) return make_box_mesh(box->half_extents);
  }
  const VoxelGrid grid =
      evaluate_grid([&](const Vec3& p) { return shape.sdf(p); }, resolution, Bounds{}, threads);
  return marching_cubes(grid).mesh;
}

void AnalyticSampling::validate() const {
  if (n_surface < 1) throw ConfigError("n_surface must be >= 1");
  if (n_uniform < 1) throw ConfigError("n_uniform must be >= 1");
  if (perturb_variances.empty()) throw ConfigError("perturb_variances must not be empty");
  for (double v : perturb_variances) {
    if (!(v > 0)) throw ConfigError("perturb variances must be positive");
  }
}

SampleSet analytic_samples(const AnalyticShape& shape, const TriangleMesh& surface, const AnalyticSampling& config,
                           std::uint64_t seed, const std::string& shape_id, int threads) {
  config.validate();
  const auto points = sample_surface(surface, config.n_surface, seed);
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SampleSet set;
  set.shape_id = shape_id;
  set.samples.reserve(points.size() * config.perturb_variances.size() + config.n_uniform);
  for (const auto& sp : points) {
    for (double variance : config.perturb_variances) {
      const double sd = std::sqrt(variance);
      const Vec3 offset{gauss(rng), gauss(rng), gauss(rng)};
      set.samples.push_back({sp.position + offset * sd, 0.0});
    }
  }
  for (std::size_t i = 0; i < config.n_uniform; ++i) set.samples.push_back({uniform_in_ball(rng), 0.0});
  parallel_chunks(set.samples.size(), 4096, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) set.samples[i].s = shape.sdf(set.samples[i].position);
  });
  set.recount();
  return set;
}

namespace {

std::string relative_to(const fs::path& file, const fs::path& dir) {
  if (file.empty()) return {};
  const fs::path abs_file = fs::absolute(file).lexically_normal();
  const fs::path abs_dir = fs::absolute(dir).lexically_normal();
  return abs_file.lexically_proximate(abs_dir).generic_string();
}

std::string describe(FamilyKind kind, const AnalyticShape& shape) {
  std::string out = "analytic:";
  if (const auto* b = std::get_if<AnalyticShape::Box>(&shape.variant())) {
    out += "box(" + format_number(b->half_extents.x) + "," + format_number(b->half_extents.y) + "," +
           format_number(b->half_extents.z) + ")";
  } else if (const auto* s = std::get_if<AnalyticShape::Sphere>(&shape.variant())) {
    out += "sphere(" + format_number(s->radius) + ")";
  } else if (const auto* t = std::get_if<AnalyticShape::Torus>(&shape.variant())) {
    out += "torus(" + format_number(t->major) + "," + format_number(t->minor) + ")";
  } else {
    out += family_name(kind);
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  for (const auto& r : manifest.records) {
    json j;
    j["shape_id"] = r.shape_id;
    j["file"] = relative_to(r.file, dir);
    j["n_positive"] = r.n_positive;
    j["n_negative"] = r.n_negative;
    j["double_sided_fraction"] = r.double_sided_fraction;
    j["provenance"] = r.provenance;
    j["prep_hash"] = r.prep_hash;
    if (!r.mesh.empty()) j["mesh"] = relative_to(r.mesh, dir);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const fs::path dir = path.parent_path();
  Manifest m;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, "manifest " + path.string() + ": " + e.what());
    }
    ManifestRecord r;
    try {
      r.shape_id = j.at("shape_id").get<std::string>();
      r.file = dir / j.at("file").get<std::string>();
      r.n_positive = j.value("n_positive", std::size_t{0});
      r.n_negative = j.value("n_negative", std::size_t{0});
      r.double_sided_fraction = j.value("double_sided_fraction", 0.0);
      r.provenance = j.value("provenance", std::string{});
      r.prep_hash = j.value("prep_hash", std::string{});
      if (j.contains("mesh")) r.mesh = dir / j.at("mesh").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(line_no, "manifest " + path.string() + ": " + e.what());
    }
    if (!ids.insert(r.shape_id).second) throw DataError("manifest repeats shape id '" + r.shape_id + "'");
    if (!fs::exists(r.file)) throw DataError("sample file " + r.file.string() + " listed in manifest does not exist");
    m.records.push_back(std::move(r));
  }
  if (m.records.empty()) throw DataError("manifest " + path.string() + " lists no shapes");
  return m;
}

std::vector<SampleSet> load_sample_sets(const Manifest& manifest) {
  std::vector<SampleSet> sets;
  sets.reserve(manifest.records.size());
  for (const auto& r : manifest.records) sets.push_back(read_sample_set(r.file, r.shape_id));
  return sets;
}

Manifest generate_family(const ProceduralFamily& family, const AnalyticSampling& sampling, const fs::path& out_dir,
                         int mesh_resolution, int threads, const std::string& id_prefix) {
  family.validate();
  sampling.validate();
  ensure_dir(out_dir);
  std::ostringstream settings;
  settings << "family=" << family_name(family.kind) << ";n_surface=" << sampling.n_surface << ";variances=";
  for (double v : sampling.perturb_variances) settings << format_number(v) << ',';
  settings << ";n_uniform=" << sampling.n_uniform << ";mesh_resolution=" << mesh_resolution
           << ";seed=" << family.seed;
  const std::string prep_hash = hash_hex(settings.str());

  Manifest manifest;
  const auto members = family_members(family, id_prefix);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const FamilyMember& m = members[i];
    const TriangleMesh mesh = reference_mesh(family.kind, m.shape, mesh_resolution, threads);
    const SampleSet set = analytic_samples(m.shape, mesh, sampling, detail::mix_seed(family.seed, i), m.id, threads);
    ManifestRecord r;
    r.shape_id = m.id;
    r.file = out_dir / (m.id + ".sdfs");
    r.mesh = out_dir / (m.id + ".obj");
    r.n_positive = set.n_positive;
    r.n_negative = set.n_negative;
    r.provenance = describe(family.kind, m.shape);
    r.prep_hash = prep_hash;
    write_sample_set(r.file, set);
    write_obj(r.mesh, mesh);
    manifest.records.push_back(std::move(r));
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

Manifest prepare_meshes(const std::vector<fs::path>& meshes, const PrepConfig& config, const fs::path& out_dir,
                        std::uint64_t seed, int threads, std::vector<std::string>* rejected) {
  config.validate();
  ensure_dir(out_dir);
  std::ostringstream settings;
  settings << "cameras=" << config.n_cameras << ";res=" << config.depth_resolution << ";n_surface=" << config.n_surface
           << ";variances=";
  for (double v : config.perturb_variances) settings << format_number(v) << ',';
  settings << ";n_uniform=" << config.n_uniform << ";reject=" << format_number(config.double_sided_reject_fraction)
           << ";seed=" << seed;
  const std::string prep_hash = hash_hex(settings.str());

  Manifest manifest;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const std::string id = meshes[i].stem().string();
    if (!ids.insert(id).second) throw DataError("two input meshes share the name '" + id + "'");
    const Normalization norm = normalize_to_unit_sphere(load_obj(meshes[i]));
    const GeneratedSamples gen = generate_samples(norm.mesh, config, detail::mix_seed(seed, i), id, threads);
    if (!accept_mesh(gen.double_sided_fraction, config)) {
      if (rejected) rejected->push_back(id);
      continue;
    }
    ManifestRecord r;
    r.shape_id = id;
    r.file = out_dir / (id + ".sdfs");
    r.mesh = out_dir / (id + ".obj");
    r.n_positive = gen.set.n_positive;
    r.n_negative = gen.set.n_negative;
    r.double_sided_fraction = gen.double_sided_fraction;
    r.provenance = fs::absolute(meshes[i]).lexically_normal().generic_string();
    r.prep_hash = prep_hash;
    write_sample_set(r.file, gen.set);
    write_obj(r.mesh, norm.mesh);
    manifest.records.push_back(std::move(r));
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

std::string hash_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdfforge

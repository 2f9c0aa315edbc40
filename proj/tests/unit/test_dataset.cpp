#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdfforge/dataset.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/pipeline.hpp"

using namespace sdfforge;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sdfforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

AnalyticSampling tiny_sampling() {
  AnalyticSampling s;
  s.n_surface = 200;
  s.n_uniform = 100;
  return s;
}

}  // namespace

TEST_CASE("family kinds and members") {
  CHECK(parse_family_kind("tori") == FamilyKind::Tori);
  CHECK(family_name(FamilyKind::Boxes) == "boxes");
  CHECK_THROWS_AS(parse_family_kind("cones"), ConfigError);

  const auto family = ProceduralFamily::sweep(FamilyKind::Boxes, 20, 3);
  const auto members = family_members(family);
  REQUIRE(members.size() == 20);
  CHECK(members.front().id == "box_00");
  CHECK(members.back().id == "box_19");
  CHECK(members.back().parameter == doctest::Approx(1.0));
  CHECK(members[0].shape.sdf({0.2, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ProceduralFamily::sweep(FamilyKind::Spheres, 1, 0).parameters == std::vector<double>{0.5});
  CHECK_THROWS_AS(ProceduralFamily::sweep(FamilyKind::Tori, 0, 0), ConfigError);

  // Sphere member with r = 0.5 has s = -0.5 at the origin.
  CHECK(family_shape(FamilyKind::Spheres, 0.4).sdf({0, 0, 0}) == doctest::Approx(-0.5));
}

TEST_CASE("analytic samples carry exact distances") {
  const auto shape = family_shape(FamilyKind::Tori, 0.5);
  const auto mesh = reference_mesh(FamilyKind::Tori, shape, 48);
  CHECK_FALSE(mesh.empty());
  const auto set = analytic_samples(shape, mesh, tiny_sampling(), 7, "t");
  CHECK(set.size() == 2 * 200 + 100);
  for (const auto& s : set.samples) CHECK(s.s == shape.sdf(s.position));
  for (std::size_t i = 400; i < set.size(); ++i) CHECK(norm(set.samples[i].position) <= 1.0);
  CHECK(analytic_samples(shape, mesh, tiny_sampling(), 7, "t", 4).samples[13].position == set.samples[13].position);
}

TEST_CASE("generate_family writes deterministic manifests") {
  const auto family = ProceduralFamily::sweep(FamilyKind::Boxes, 3, 11);
  const fs::path a = fresh_dir("fam_a"), b = fresh_dir("fam_b");
  const Manifest m = generate_family(family, tiny_sampling(), a, 32, 1);
  generate_family(family, tiny_sampling(), b, 32, 3);
  REQUIRE(m.records.size() == 3);
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(slurp(a / "box_01.sdfs") == slurp(b / "box_01.sdfs"));

  const Manifest back = read_manifest(a / "manifest.jsonl");
  REQUIRE(back.records.size() == 3);
  CHECK(back.records[2].shape_id == "box_02");
  CHECK(fs::exists(back.records[2].file));
  CHECK(fs::exists(back.records[2].mesh));
  const auto sets = load_sample_sets(back);
  CHECK(sets[1].shape_id == "box_01");
  CHECK(sets[1].n_positive == back.records[1].n_positive);
}

TEST_CASE("manifest errors") {
  const fs::path dir = fresh_dir("manifest_err");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{\"shape_id\": \"a\"}\nnot json\n";
  }
  try {
    read_manifest(dir / "bad.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 1);
  }
  {
    std::ofstream out(dir / "empty.jsonl");
  }
  CHECK_THROWS_AS(read_manifest(dir / "empty.jsonl"), DataError);
  CHECK_THROWS_AS(read_manifest(dir / "missing.jsonl"), DataError);
}

TEST_CASE("prepare_meshes normalizes and samples mesh files") {
  const fs::path dir = fresh_dir("prepare");
  {
    std::ofstream out(dir / "cube.obj");
    out << "v 1 1 1\nv 3 1 1\nv 3 3 1\nv 1 3 1\nv 1 1 3\nv 3 1 3\nv 3 3 3\nv 1 3 3\n"
           "f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";
  }
  PrepConfig cfg;
  cfg.n_cameras = 10;
  cfg.depth_resolution = 32;
  cfg.n_surface = 300;
  cfg.n_uniform = 100;
  std::vector<std::string> rejected;
  const Manifest m = prepare_meshes({dir / "cube.obj"}, cfg, dir / "out", 1, 1, &rejected);
  CHECK(rejected.empty());
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].shape_id == "cube");
  const auto set = read_sample_set(m.records[0].file, "cube");
  CHECK(set.size() == 700);
  CHECK(set.n_negative > 0);
  CHECK(set.n_positive > 0);
}

TEST_CASE("hash_hex") {
  CHECK(hash_hex("") == "cbf29ce484222325");
  CHECK(hash_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("pipeline config parsing") {
  std::istringstream ok("# comment\nepochs = 12\nfamily = tori  # trailing\nskip = 2,3\n\nlatent_dim=4\n");
  const auto c = PipelineConfig::parse(ok);
  CHECK(c.epochs == 12);
  CHECK(c.family == "tori");
  CHECK(c.skip == std::vector<int>{2, 3});
  CHECK(c.latent_dim == 4);

  std::istringstream unknown("epochs = 3\nwarp_speed = 9\n");
  try {
    PipelineConfig::parse(unknown);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("warp_speed") != std::string::npos);
  }
  std::istringstream repeated("epochs = 3\nepochs = 4\n");
  CHECK_THROWS_AS(PipelineConfig::parse(repeated), ConfigError);
  std::istringstream bad_value("epochs = many\n");
  CHECK_THROWS_AS(PipelineConfig::parse(bad_value), ConfigError);
  std::istringstream no_equals("epochs 3\n");
  CHECK_THROWS_AS(PipelineConfig::parse(no_equals), ConfigError);
}

TEST_CASE("tiny pipeline reruns reproduce the summary") {
  PipelineConfig c;
  c.family = "spheres";
  c.family_count = 2;
  c.n_surface = 200;
  c.n_uniform = 100;
  c.mesh_resolution = 24;
  c.latent_dim = 2;
  c.layers = 3;
  c.hidden = 16;
  c.epochs = 5;
  c.samples_per_step = 64;
  c.shapes_per_batch = 2;
  c.mc_resolution = 16;
  c.eval_points = 100;
  c.threads = 1;
  const fs::path dir_a = fresh_dir("pipe_a");
  c.out_dir = dir_a;
  const auto a = run_pipeline(c);
  c.out_dir = fresh_dir("pipe_b");
  c.threads = 3;
  const auto b = run_pipeline(c);
  CHECK(a.final_sdf_loss == b.final_sdf_loss);
  REQUIRE(a.shapes.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a.shapes[i].chamfer == b.shapes[i].chamfer);
  CHECK(fs::exists(c.out_dir / "summary.json"));
  CHECK(fs::exists(c.out_dir / "checkpoint.dsdf"));
  CHECK(fs::exists(c.out_dir / "loss.csv"));
  CHECK(slurp(dir_a / "checkpoint.dsdf") == slurp(c.out_dir / "checkpoint.dsdf"));
}

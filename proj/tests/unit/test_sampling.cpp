#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/sampling.hpp"

using namespace sdfforge;

namespace {

PrepConfig small_prep() {
  PrepConfig c;
  c.n_cameras = 20;
  c.depth_resolution = 48;
  c.n_surface = 1000;
  c.n_uniform = 500;
  return c;
}

}  // namespace

TEST_CASE("camera axes and ray directions") {
  const Camera cam = Camera::look_at({0, 0, 3}, {0, 0, 0}, 5, 5, 60);
  CHECK(norm(cam.forward() - Vec3{0, 0, -1}) < 1e-12);
  CHECK(norm(cam.ray_direction(2, 2) - Vec3{0, 0, -1}) < 1e-12);
  // Image rows grow downwards.
  CHECK(cam.ray_direction(2, 0).y > 0);
  CHECK(cam.ray_direction(4, 2).x > 0);
  const Camera vertical = Camera::look_at({0, 3, 0}, {0, 0, 0}, 4, 4, 60);
  CHECK(norm(vertical.forward() - Vec3{0, -1, 0}) < 1e-12);
}

TEST_CASE("depth of a box face is the range along the ray") {
  const auto box = make_box_mesh({0.5, 0.5, 0.5});
  const Camera cam = Camera::look_at({0, 0, 2}, {0, 0, 0}, 9, 9, 30);
  const DepthMap d = render_depth(box, cam);
  CHECK(d.hit_count() == 81);
  for (int v = 0; v < 9; ++v) {
    for (int u = 0; u < 9; ++u) {
      const Vec3 dir = cam.ray_direction(u, v);
      CHECK(d.at(u, v).depth == doctest::Approx(1.5 / -dir.z).epsilon(1e-12));
      CHECK(norm(d.at(u, v).normal - Vec3{0, 0, 1}) < 1e-12);
      CHECK(d.at(u, v).front_facing);
      CHECK(d.back_project(u, v).z == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("shell points lie on the surface with outward normals") {
  const auto box = make_box_mesh({0.4, 0.3, 0.2});
  const Shell shell = extract_shell(box, small_prep());
  REQUIRE(shell.points.size() > 1000);
  CHECK(shell.double_sided_fraction == 0.0);
  for (std::size_t i = 0; i < shell.points.size(); i += 13) {
    const auto& p = shell.points[i];
    CHECK(oracle::mesh_distance(box, p.position) < 1e-9);
    CHECK(oracle::mesh_signed_distance(box, p.position + p.normal * 0.01) > 0);
  }
  CHECK_THROWS_AS(extract_shell(TriangleMesh{}, small_prep()), DataError);
}

TEST_CASE("open surfaces are seen from both sides") {
  TriangleMesh sheet;
  sheet.vertices = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
  sheet.triangles = {{0, 1, 2}, {0, 2, 3}};
  const Shell shell = extract_shell(sheet, small_prep());
  CHECK(shell.double_sided_fraction == 1.0);
  PrepConfig c = small_prep();
  CHECK_FALSE(accept_mesh(shell.double_sided_fraction, c));
  CHECK(accept_mesh(0.02, c));
  CHECK_FALSE(accept_mesh(0.0201, c));
}

TEST_CASE("generated samples agree with the brute-force oracle") {
  const auto box = make_box_mesh({0.4, 0.3, 0.35});
  const auto gen = generate_samples(box, small_prep(), 4);
  const auto& set = gen.set;
  CHECK(set.size() == 1000 * 2 + 500);
  CHECK(set.n_positive + set.n_negative == set.size());
  std::size_t agree = 0, considered = 0;
  for (std::size_t i = 0; i < set.size(); i += 3) {
    const auto& s = set.samples[i];
    const double truth = oracle::mesh_signed_distance(box, s.position);
    if (std::abs(truth) <= 0.01) continue;
    ++considered;
    if ((truth > 0) == (s.s > 0)) ++agree;
  }
  CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(considered));
  for (std::size_t i = 2000; i < set.size(); ++i) CHECK(norm(set.samples[i].position) <= 1.0);

  const auto again = generate_samples(box, small_prep(), 4, "shape", 3);
  REQUIRE(again.set.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(again.set.samples[i].s == set.samples[i].s);
  }
}

TEST_CASE("sample file round trip") {
  SampleSet set;
  set.shape_id = "x";
  set.samples = {{{0.1, 0.2, 0.3}, -0.25}, {{-1, 0, 1}, 0.5}};
  set.recount();
  std::stringstream buf;
  write_sample_set(buf, set);
  const SampleSet back = read_sample_set(buf, "x");
  REQUIRE(back.size() == 2);
  CHECK(back.n_positive == 1);
  CHECK(back.samples[0].s == doctest::Approx(-0.25));
  CHECK(back.samples[1].position.z == doctest::Approx(1));
  std::istringstream bad("SDFX");
  CHECK_THROWS_AS(read_sample_set(bad, "x"), DataError);
  const std::string bytes = buf.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_sample_set(truncated, "x"), DataError);
}

TEST_CASE("surface sampling is area weighted") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 5}, {3, 0, 5}, {0, 3, 5}};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};
  const auto pts = sample_surface(m, 10000, 2);
  std::size_t big = 0;
  for (const auto& p : pts) big += p.position.z > 1 ? 1 : 0;
  // Areas are 0.5 and 4.5.
  CHECK(static_cast<double>(big) / 10000.0 == doctest::Approx(0.9).epsilon(0.02));
}

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/metrics.hpp"
#include "sdfforge/sampling.hpp"

using namespace sdfforge;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  const auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double s = 0;
    for (const auto& p : from) s += squared_norm(to[oracle::nearest_index(to, p)] - p);
    return s / static_cast<double>(from.size());
  };
  return one_way(a, b) + one_way(b, a);
}

TriangleMesh unit_square() {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

}  // namespace

TEST_CASE("chamfer matches brute force, is symmetric and zero on identical sets") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_points(rng, 200 + trial);
    const auto b = random_points(rng, 150);
    CHECK(chamfer_distance(a, b) == doctest::Approx(brute_chamfer(a, b)).epsilon(1e-12));
    CHECK(chamfer_distance(a, b, 1) == chamfer_distance(b, a, 3));
    CHECK(chamfer_distance(a, a) == 0.0);
  }
  CHECK_THROWS_AS(chamfer_distance({}, random_points(rng, 3)), PreconditionError);
}

TEST_CASE("EMD equals enumeration for small sets") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const auto a = random_points(rng, n);
    const auto b = random_points(rng, n);
    CHECK(emd(a, b) == oracle::emd_by_enumeration(a, b));
  }
  const std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> b{{1, 0, 1}, {0, 0, 1}};
  CHECK(emd(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(emd(a, std::vector<Vec3>{{0, 0, 0}}), PreconditionError);
}

TEST_CASE("surface sampling lies on the mesh and is seeded") {
  const auto m = make_box_mesh({0.2, 0.3, 0.4});
  const auto pts = sample_points(m, 500, 3);
  CHECK(pts.size() == 500);
  for (const auto& p : pts) CHECK(oracle::mesh_distance(m, p) < 1e-12);
  CHECK(sample_points(m, 500, 3) == pts);
  CHECK(sample_points(m, 500, 4) != pts);
}

TEST_CASE("accuracy of samples on a plane") {
  const TriangleMesh square = unit_square();
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({0.5, 0.5, 0.1 * (i + 1)});
  // Nearest-rank 90th percentile of {0.1 .. 1.0} is 0.9.
  CHECK(mesh_accuracy(pts, square, 0.9) == doctest::Approx(0.9));
  CHECK(mesh_accuracy(pts, square, 1.0) == doctest::Approx(1.0));
  const auto self = sample_points(square, 300, 5);
  CHECK(mesh_accuracy(self, square) <= 1e-9);
}

TEST_CASE("completion and cosine similarity") {
  const auto box = make_box_mesh({0.3, 0.3, 0.3});
  const auto own = sample_points(box, 1000, 6);
  CHECK(mesh_completion(box, own, 0.01) == 1.0);
  const auto far = make_box_mesh({0.1, 0.1, 0.1}, {5, 5, 5});
  CHECK(mesh_completion(far, own, 0.01) == 0.0);
  CHECK(mesh_completion(TriangleMesh{}, own, 0.01) == 0.0);

  std::vector<OrientedPoint> oriented;
  for (std::size_t t = 0; t < box.triangles.size(); ++t) {
    const Triangle tri = box.triangle(t);
    oriented.push_back({(tri.a + tri.b + tri.c) / 3.0, box.face_normal(t)});
    oriented.push_back({(tri.a + tri.b + tri.c) / 3.0, box.face_normal(t) * -1.0});
  }
  CHECK(cosine_similarity(box, oriented) == doctest::Approx(1.0));
}

TEST_CASE("surface chamfer of identical meshes is zero") {
  const auto sphere = make_uv_sphere({}, 0.5, 16, 32);
  CHECK(surface_chamfer(sphere, sphere, 500, 1) < 1e-20);
  const auto bigger = make_uv_sphere({}, 0.6, 16, 32);
  const double c = surface_chamfer(sphere, bigger, 2000, 1);
  CHECK(c > 0.015);
  CHECK(c < 0.025);
}

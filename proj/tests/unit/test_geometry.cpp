#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sdfforge/bvh.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/geometry.hpp"
#include "sdfforge/kdtree.hpp"
#include "sdfforge/mesh_io.hpp"

using namespace sdfforge;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

double signed_volume(const TriangleMesh& m) {
  double v = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Triangle tri = m.triangle(t);
    v += dot(tri.a, cross(tri.b, tri.c)) / 6.0;
  }
  return v;
}

}  // namespace

TEST_CASE("point_triangle_distance matches projection oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Triangle tri{random_vec(rng), random_vec(rng), random_vec(rng)};
    if (tri.area() < 1e-3) continue;
    const Vec3 q = random_vec(rng, -2, 2);
    const auto cp = point_triangle_distance(q, tri);
    CHECK(cp.distance == doctest::Approx(oracle::triangle_distance(q, tri.a, tri.b, tri.c)).epsilon(1e-12));
    CHECK(norm(cp.closest - q) == doctest::Approx(cp.distance).epsilon(1e-12));
  }
}

TEST_CASE("point_triangle_distance hand cases") {
  const Triangle tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK(point_triangle_distance({0.2, 0.2, 3}, tri).distance == doctest::Approx(3));
  CHECK(point_triangle_distance({-1, -1, 0}, tri).distance == doctest::Approx(std::sqrt(2.0)));
  const auto on_edge = point_triangle_distance({0.5, -2, 0}, tri);
  CHECK(on_edge.distance == doctest::Approx(2));
  CHECK(on_edge.closest.x == doctest::Approx(0.5));
  CHECK_THROWS_AS(point_triangle_distance({0, 0, 1}, Triangle{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}), DegenerateGeometry);
}

TEST_CASE("fibonacci_sphere") {
  CHECK_THROWS_AS(fibonacci_sphere(0), PreconditionError);
  const auto dirs = fibonacci_sphere(500);
  REQUIRE(dirs.size() == 500);
  Vec3 mean;
  for (const auto& d : dirs) {
    CHECK(norm(d) == doctest::Approx(1.0).epsilon(1e-12));
    mean += d / 500.0;
  }
  CHECK(norm(mean) < 0.01);
  // Near-uniform: every direction has a neighbor closer than on a coarse grid.
  for (std::size_t i = 0; i < dirs.size(); i += 37) {
    double best = 10;
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      if (j != i) best = std::min(best, norm(dirs[i] - dirs[j]));
    }
    CHECK(best < 0.2);
  }
}

TEST_CASE("normalize_to_unit_sphere") {
  TriangleMesh m = make_box_mesh({2, 1, 0.5}, {10, -3, 4});
  const Normalization n = normalize_to_unit_sphere(m);
  double max_r = 0;
  Vec3 lo = n.mesh.vertices[0], hi = lo;
  for (const auto& v : n.mesh.vertices) {
    max_r = std::max(max_r, norm(v));
    lo = vmin(lo, v);
    hi = vmax(hi, v);
  }
  CHECK(max_r == doctest::Approx(1.0 / 1.03));
  CHECK(norm((lo + hi) * 0.5) < 1e-12);
  CHECK(norm(n.to_original(n.mesh.vertices[3]) - m.vertices[3]) < 1e-12);
  CHECK_THROWS_AS(normalize_to_unit_sphere(TriangleMesh{}), PreconditionError);
}

TEST_CASE("analytic shapes") {
  const auto sphere = AnalyticShape::sphere({}, 0.5);
  CHECK(sphere.sdf({0, 0, 0}) == doctest::Approx(-0.5));
  CHECK(sphere.sdf({1, 0, 0}) == doctest::Approx(0.5));
  const auto box = AnalyticShape::box({1, 1, 1});
  CHECK(box.sdf({2, 0, 0}) == doctest::Approx(1));
  CHECK(box.sdf({2, 2, 0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(box.sdf({0.5, 0, 0}) == doctest::Approx(-0.5));
  const auto torus = AnalyticShape::torus(0.5, 0.1);
  CHECK(torus.sdf({0.5, 0, 0}) == doctest::Approx(-0.1));
  CHECK(torus.sdf({0, 0, 0}) == doctest::Approx(0.4));
  CHECK(torus.sdf({0, 0.5, 0.5}) == doctest::Approx(0.4));
  const auto moved = AnalyticShape::transformed(sphere, Mat3::identity(), {1, 0, 0}, 2.0);
  CHECK(moved.sdf({1, 0, 0}) == doctest::Approx(-1.0));
  CHECK_THROWS(AnalyticShape::sphere({}, -1));
  CHECK_THROWS(AnalyticShape::box({1, 0, 1}));
}

TEST_CASE("box mesh agrees with analytic box") {
  const TriangleMesh m = make_box_mesh({0.3, 0.5, 0.2});
  CHECK(m.triangles.size() == 12);
  CHECK(signed_volume(m) == doctest::Approx(8 * 0.3 * 0.5 * 0.2));
  const auto box = AnalyticShape::box({0.3, 0.5, 0.2});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const Vec3 q = random_vec(rng);
    CHECK(oracle::mesh_signed_distance(m, q) == doctest::Approx(box.sdf(q)).epsilon(1e-9));
  }
}

TEST_CASE("signed_distance_oracle on oriented points") {
  const std::vector<OrientedPoint> pts{{{0, 0, 0}, {0, 0, 1}}, {{1, 0, 0}, {0, 0, -1}}};
  CHECK(signed_distance_oracle(pts, {0, 0, 2}) == doctest::Approx(2));
  CHECK(signed_distance_oracle(pts, {0, 0, -2}) == doctest::Approx(-2));
  CHECK(signed_distance_oracle(pts, {1, 0, 1}) == doctest::Approx(-1));
  // Equidistant: the first point decides the sign.
  CHECK(signed_distance_oracle(pts, {0.5, 0, 0.5}) > 0);
}

TEST_CASE("KdTree3 matches linear scan") {
  std::mt19937_64 rng(11);
  std::vector<Vec3> pts;
  for (int i = 0; i < 1500; ++i) pts.push_back(random_vec(rng));
  for (int i = 0; i < 100; ++i) pts.push_back(pts[static_cast<std::size_t>(i) * 7]);  // duplicates
  for (int i = 0; i < 50; ++i) pts.push_back({0.25 * (i % 5), 0.5, -0.25});         // shared coordinates
  const KdTree3 tree(pts);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q = i < 100 ? pts[static_cast<std::size_t>(i) * 7] : random_vec(rng, -1.5, 1.5);
    const auto hit = tree.nearest(q);
    CHECK(hit.index == oracle::nearest_index(pts, q));
  }
  CHECK_THROWS_AS(KdTree3(std::vector<Vec3>{}).nearest({0, 0, 0}), PreconditionError);
}

TEST_CASE("OrientedPointSdf matches signed_distance_oracle") {
  std::mt19937_64 rng(5);
  std::vector<OrientedPoint> surface;
  for (const auto& d : fibonacci_sphere(800)) surface.push_back({d * 0.5, d});
  const OrientedPointSdf sdf(surface);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q = random_vec(rng);
    CHECK(sdf(q) == signed_distance_oracle(surface, q));
  }
}

TEST_CASE("MeshBvh closest and intersect match brute force") {
  const TriangleMesh m = make_uv_sphere({0.1, 0, 0}, 0.6, 12, 24);
  const MeshBvh bvh(m);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 400; ++i) {
    const Vec3 q = random_vec(rng, -1.2, 1.2);
    CHECK(bvh.closest(q).distance == doctest::Approx(oracle::mesh_distance(m, q)).epsilon(1e-10));
    CHECK(bvh.closest(q).distance == doctest::Approx(mesh_unsigned_distance(m, q)).epsilon(1e-12));

    const Vec3 dir = normalized(random_vec(rng));
    std::optional<double> best;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto hit = intersect_triangle(q, dir, m.triangle(t));
      if (hit && *hit > 1e-9 && (!best || *hit < *best)) best = hit;
    }
    const auto got = bvh.intersect(q, dir);
    REQUIRE(got.has_value() == best.has_value());
    if (got) CHECK(got->t == doctest::Approx(*best).epsilon(1e-12));
  }
}

TEST_CASE("load_obj parses polygons and reports malformed lines") {
  std::istringstream quad("# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n");
  const TriangleMesh m = load_obj(quad);
  CHECK(m.vertices.size() == 4);
  CHECK(m.triangles.size() == 2);

  std::istringstream bad_vertex("v 0 0 0\nv 1 0\n");
  try {
    load_obj(bad_vertex);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream negative("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 2 3\n");
  CHECK_THROWS_AS(load_obj(negative), ParseError);
  std::istringstream out_of_range("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  CHECK_THROWS_AS(load_obj(out_of_range), DataError);
}

TEST_CASE("OBJ round trip") {
  const TriangleMesh m = make_uv_sphere({}, 0.5, 6, 8);
  std::stringstream buf;
  write_obj(buf, m);
  const TriangleMesh back = load_obj(buf);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.triangles.size() == m.triangles.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK(norm(back.vertices[i] - m.vertices[i]) < 1e-9);
  CHECK(back.triangles == m.triangles);
}

TEST_CASE("oriented point cloud round trip") {
  std::vector<OrientedPoint> pts{{{1, 2, 3}, {0, 0, 1}}, {{-1, 0.5, 0}, {1, 0, 0}}};
  std::stringstream buf;
  write_oriented_points(buf, pts);
  const auto back = read_oriented_points(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[1].position == Vec3{-1, 0.5, 0});
  CHECK(back[0].normal == Vec3{0, 0, 1});
}

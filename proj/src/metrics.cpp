#include "sdfforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdfforge/bvh.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/kdtree.hpp"
#include "sdfforge/parallel.hpp"
#include "sdfforge/sampling.hpp"

namespace sdfforge {

namespace {

constexpr std::size_t kPointChunk = 1024;

/// Per-point values computed in parallel, then summed in index order.
template <typename Fn>
std::vector<double> per_point(std::size_t n, int threads, Fn&& fn) {
  std::vector<double> values(n);
  parallel_chunks(n, kPointChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) values[i] = fn(i);
  });
  return values;
}

double ordered_sum(const std::vector<double>& values) {
  double s = 0;
  for (double v : values) s += v;
  return s;
}

double directed_mean_sq(std::span<const Vec3> from, const KdTree3& to, int threads) {
  const auto d2 = per_point(from.size(), threads, [&](std::size_t i) { return to.nearest(from[i]).squared_distance; });
  return ordered_sum(d2) / static_cast<double>(from.size());
}

}  // namespace

std::vector<Vec3> sample_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<Vec3> out;
  out.reserve(n);
  for (const auto& p : sample_surface(mesh, n, seed)) out.push_back(p.position);
  return out;
}

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b, int threads) {
  if (a.empty() || b.empty()) throw PreconditionError("chamfer_distance: point sets must be non-empty");
  const KdTree3 tree_a(std::vector<Vec3>(a.begin(), a.end()));
  const KdTree3 tree_b(std::vector<Vec3>(b.begin(), b.end()));
  return directed_mean_sq(a, tree_b, threads) + directed_mean_sq(b, tree_a, threads);
}

double surface_chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n, std::uint64_t seed,
                       int threads) {
  if (a.empty() || b.empty()) throw PreconditionError("surface_chamfer: meshes must be non-empty");
  if (n == 0) throw PreconditionError("surface_chamfer: need at least one sample");
  const auto directed = [&](const TriangleMesh& from, const TriangleMesh& to, std::uint64_t s) {
    const auto pts = sample_points(from, n, s);
    const MeshBvh bvh(to);
    const auto d2 = per_point(pts.size(), threads, [&](std::size_t i) {
      const double d = bvh.closest(pts[i]).distance;
      return d * d;
    });
    return ordered_sum(d2) / static_cast<double>(n);
  };
  return directed(a, b, seed) + directed(b, a, seed ^ 0x5DEECE66Dull);
}

double emd(std::span<const Vec3> a, std::span<const Vec3> b) {
  const std::size_t n = a.size();
  if (n == 0) throw PreconditionError("emd: point sets must be non-empty");
  if (b.size() != n) throw PreconditionError("emd: point sets must have equal size");
  if (n > 2000) throw PreconditionError("emd: at most 2000 points are supported");

  // Hungarian algorithm with potentials (rows: a, columns: b), 1-based.
  const auto cost = [&](std::size_t i, std::size_t j) { return norm(a[i - 1] - b[j - 1]); };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> match(n + 1);
  for (std::size_t j = 1; j <= n; ++j) match[p[j]] = j;
  double total = 0;
  for (std::size_t i = 1; i <= n; ++i) total += cost(i, match[i]);
  return total / static_cast<double>(n);
}

double mesh_accuracy(std::span<const Vec3> generated_points, const TriangleMesh& ground_truth, double percentile,
                     int threads) {
  if (generated_points.empty()) throw PreconditionError("mesh_accuracy: no generated points");
  if (ground_truth.empty()) throw PreconditionError("mesh_accuracy: empty ground-truth mesh");
  if (!(percentile > 0 && percentile <= 1)) throw PreconditionError("mesh_accuracy: percentile must be in (0, 1]");
  const MeshBvh bvh(ground_truth);
  auto d = per_point(generated_points.size(), threads,
                     [&](std::size_t i) { return bvh.closest(generated_points[i]).distance; });
  std::sort(d.begin(), d.end());
  const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(d.size())));
  return d[std::clamp<std::size_t>(rank, 1, d.size()) - 1];
}

double mesh_completion(const TriangleMesh& generated, std::span<const Vec3> ground_truth_points, double delta,
                       int threads) {
  if (ground_truth_points.empty()) throw PreconditionError("mesh_completion: no ground-truth points");
  if (!(delta > 0)) throw PreconditionError("mesh_completion: delta must be positive");
  if (generated.empty()) return 0.0;
  const MeshBvh bvh(generated);
  const auto within = per_point(ground_truth_points.size(), threads, [&](std::size_t i) {
    return bvh.closest(ground_truth_points[i]).distance <= delta ? 1.0 : 0.0;
  });
  return ordered_sum(within) / static_cast<double>(ground_truth_points.size());
}

double cosine_similarity(const TriangleMesh& generated, std::span<const OrientedPoint> ground_truth, int threads) {
  if (generated.empty()) throw PreconditionError("cosine_similarity: empty generated mesh");
  if (ground_truth.empty()) throw PreconditionError("cosine_similarity: no ground-truth points");
  const MeshBvh bvh(generated);
  const auto cosines = per_point(ground_truth.size(), threads, [&](std::size_t i) {
    const auto hit = bvh.closest(ground_truth[i].position);
    const Vec3 n = generated.triangle(hit.triangle).raw_normal();
    const double len = norm(n) * norm(ground_truth[i].normal);
    return len > 0 ? std::abs(dot(n, ground_truth[i].normal)) / len : 0.0;
  });
  return ordered_sum(cosines) / static_cast<double>(ground_truth.size());
}

}  // namespace sdfforge

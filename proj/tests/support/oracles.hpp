#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "sdfforge/decoder.hpp"
#include "sdfforge/geometry.hpp"

namespace oracle {

using sdfforge::Vec3;

/// Linear scan; lowest index wins ties.
inline std::size_t nearest_index(std::span<const Vec3> points, const Vec3& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = sdfforge::squared_norm(points[i] - q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp(sdfforge::dot(p - a, ab) / sdfforge::dot(ab, ab), 0.0, 1.0);
  return sdfforge::norm(p - (a + ab * t));
}

/// Point-triangle distance by plane projection + barycentric inside test,
/// falling back to the three edges.
inline double triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = sdfforge::normalized(sdfforge::cross(b - a, c - a));
  const double h = sdfforge::dot(p - a, n);
  const Vec3 q = p - n * h;
  const auto side = [&](const Vec3& u, const Vec3& v) { return sdfforge::dot(sdfforge::cross(v - u, q - u), n); };
  if (side(a, b) >= 0 && side(b, c) >= 0 && side(c, a) >= 0) return std::abs(h);
  return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

inline double mesh_distance(const sdfforge::TriangleMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    best = std::min(best, triangle_distance(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
  }
  return best;
}

/// Ray crossing count along a fixed oblique direction; odd means inside a
/// closed mesh.
inline bool inside_by_parity(const sdfforge::TriangleMesh& mesh, const Vec3& p) {
  const Vec3 d = sdfforge::normalized(Vec3{0.5773, 0.2134, 0.7881});
  int crossings = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 h = sdfforge::cross(d, e2);
    const double det = sdfforge::dot(e1, h);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 s = p - a;
    const double u = sdfforge::dot(s, h) / det;
    const Vec3 qv = sdfforge::cross(s, e1);
    const double v = sdfforge::dot(d, qv) / det;
    const double tt = sdfforge::dot(e2, qv) / det;
    if (u >= 0 && v >= 0 && u + v <= 1 && tt > 0) ++crossings;
  }
  return crossings % 2 == 1;
}

/// Signed distance to a closed mesh over all triangles.
inline double mesh_signed_distance(const sdfforge::TriangleMesh& mesh, const Vec3& p) {
  const double d = mesh_distance(mesh, p);
  return inside_by_parity(mesh, p) ? -d : d;
}

/// Minimum over all n! bijections of the mean matched distance, with costs
/// summed in row order.
inline double emd_by_enumeration(std::span<const Vec3> a, std::span<const Vec3> b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) total += sdfforge::norm(a[i] - b[perm[i]]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
};

/// Relative error with a floor on the denominator, so entries that are zero
/// up to rounding are compared absolutely.
inline double rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences (step h) of the summed decoder outputs with respect to
/// every parameter, latent and coordinate entry, compared with backward().
inline GradCheckResult check_decoder_gradients(const sdfforge::DecoderParams<double>& params,
                                               const sdfforge::Matrix<double>& inputs, sdfforge::Mode mode,
                                               std::uint64_t mask_seed, double h, double floor) {
  using namespace sdfforge;
  const auto total = [&](const DecoderParams<double>& p, const Matrix<double>& in) {
    return forward<double>(p, in, mode, mask_seed).output.sum();
  };
  const ForwardTape<double> tape = forward<double>(params, inputs, mode, mask_seed);
  const Gradients<double> g =
      backward<double>(params, tape, Vector<double>(Vector<double>::Ones(inputs.cols())), true);

  GradCheckResult r;
  DecoderParams<double> p = params;
  const auto probe = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + h;
    ++p.revision;
    const double up = total(p, inputs);
    slot = saved - h;
    ++p.revision;
    const double down = total(p, inputs);
    slot = saved;
    ++p.revision;
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, (up - down) / (2 * h), floor));
    ++r.checked;
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    for (Eigen::Index i = 0; i < layer.v.size(); ++i) probe(layer.v.data()[i], g.layers[l].v.data()[i]);
    for (Eigen::Index i = 0; i < layer.g.size(); ++i) probe(layer.g.data()[i], g.layers[l].g.data()[i]);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) probe(layer.b.data()[i], g.layers[l].b.data()[i]);
  }
  Matrix<double> in = inputs;
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const double saved = in.data()[i];
    in.data()[i] = saved + h;
    const double up = total(params, in);
    in.data()[i] = saved - h;
    const double down = total(params, in);
    in.data()[i] = saved;
    r.max_rel_error = std::max(r.max_rel_error, rel_error(g.input.data()[i], (up - down) / (2 * h), floor));
    ++r.checked;
  }
  return r;
}

/// Smallest |pre-activation| over all hidden units; finite differences are
/// only meaningful away from the ReLU kink.
inline double min_hidden_preactivation(const sdfforge::DecoderParams<double>& params,
                                       const sdfforge::Matrix<double>& inputs, sdfforge::Mode mode,
                                       std::uint64_t mask_seed) {
  const auto tape = sdfforge::forward<double>(params, inputs, mode, mask_seed);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l) m = std::min(m, tape.pre[l].cwiseAbs().minCoeff());
  return m;
}

/// Random architecture within the given limits, with a skip connection
/// whenever the width allows one.
inline sdfforge::NetConfig random_net(std::mt19937_64& rng, int max_layers, int max_width, int max_latent) {
  std::uniform_int_distribution<int> layers(2, max_layers), latent(1, max_latent);
  sdfforge::NetConfig c;
  c.n_layers = layers(rng);
  c.latent_dim = latent(rng);
  std::uniform_int_distribution<int> width(c.latent_dim + 5, std::max(c.latent_dim + 5, max_width));
  c.hidden_width = width(rng);
  c.skip_layers.clear();
  if (c.n_layers >= 3) {
    std::uniform_int_distribution<int> k(2, c.n_layers - 1);
    c.skip_layers.push_back(k(rng));
  }
  c.dropout_rate = 0;
  c.seed = rng();
  return c;
}

}  // namespace oracle

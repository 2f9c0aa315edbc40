#include "sdfforge/inference.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "sdfforge/binary_io.hpp"
#include "sdfforge/detail/seed.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/parallel.hpp"
#include "sdfforge/training.hpp"

namespace sdfforge {

namespace {

constexpr std::size_t kColumnChunk = 2048;

struct Term {
  Vec3 x;
  double target = 0;
  bool free_space = false;
};

struct LatentProblem {
  std::vector<Term> terms;
  double delta = 0.1;
  double lambda = 0;
  int iterations = 0;
  double lr = 0;
  double init_stddev = 0;
  std::size_t samples_per_iter = 0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct Evaluation {
  double loss = 0;  // mean data term over the evaluated points
  Vector<float> grad;
};

// Mean data term over terms[subset] and its gradient with respect to z.
Evaluation evaluate_terms(const DecoderParams<float>& params, const Vector<float>& z, const std::vector<Term>& terms,
                          const std::vector<std::size_t>& subset, double delta, bool want_grad, int threads) {
  const int d = params.config.latent_dim;
  const double w = 1.0 / static_cast<double>(subset.size());
  const std::size_t n_chunks = (subset.size() + kColumnChunk - 1) / kColumnChunk;
  std::vector<double> losses(n_chunks, 0.0);
  std::vector<Vector<float>> grads(n_chunks);

  parallel_chunks(subset.size(), kColumnChunk, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    const auto n = static_cast<Eigen::Index>(e - b);
    Matrix<float> in(d + 3, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Term& t = terms[subset[b + static_cast<std::size_t>(j)]];
      in.col(j).head(d) = z;
      in(d, j) = static_cast<float>(t.x.x);
      in(d + 1, j) = static_cast<float>(t.x.y);
      in(d + 2, j) = static_cast<float>(t.x.z);
    }
    const ForwardTape<float> tape = forward(params, in, Mode::Eval);
    Vector<float> upstream(n);
    double loss = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Term& t = terms[subset[b + static_cast<std::size_t>(j)]];
      const double pred = tape.output(j);
      if (t.free_space) {
        loss += w * freespace_loss(pred);
        upstream(j) = static_cast<float>(pred < 0 ? -w : 0.0);
      } else {
        loss += w * clamped_l1(pred, t.target, delta);
        upstream(j) = static_cast<float>(w * clamped_l1_grad(pred, t.target, delta));
      }
    }
    losses[c] = loss;
    if (want_grad) {
      const Gradients<float> g = backward(params, tape, upstream, false);
      grads[c] = g.input.topRows(d).rowwise().sum();
    }
  });

  Evaluation out;
  out.grad = Vector<float>::Zero(d);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    out.loss += losses[c];
    if (want_grad) out.grad += grads[c];
  }
  return out;
}

LatentEstimate optimize_latent(const DecoderParams<float>& params, const LatentProblem& problem) {
  const int d = params.config.latent_dim;
  if (d < 1) throw PreconditionError("latent optimization requires latent_dim >= 1");
  if (problem.terms.empty()) throw DataError("latent optimization: no observed points");
  if (problem.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(problem.lr > 0)) throw ConfigError("learning rate must be positive");
  if (!(problem.lambda >= 0)) throw ConfigError("lambda must be >= 0");
  if (!(problem.delta > 0)) throw ConfigError("delta must be positive");
  if (!(problem.init_stddev >= 0)) throw ConfigError("init_stddev must be >= 0");

  std::mt19937_64 rng(problem.seed);
  std::normal_distribution<double> gauss(0.0, problem.init_stddev);
  LatentEstimate est;
  est.z.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) est.z(k) = static_cast<float>(gauss(rng));

  const std::size_t n = problem.terms.size();
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  const std::size_t per_iter =
      problem.samples_per_iter == 0 ? n : std::min(problem.samples_per_iter, n);
  std::vector<std::size_t> subset(per_iter);

  AdamState<float> adam(static_cast<std::size_t>(d));
  for (int it = 0; it < problem.iterations; ++it) {
    if (per_iter == n) {
      subset = pool;
    } else {
      for (std::size_t i = 0; i < per_iter; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
        subset[i] = pool[i];
      }
    }
    Evaluation ev = evaluate_terms(params, est.z, problem.terms, subset, problem.delta, true, problem.threads);
    const double objective = ev.loss + problem.lambda * static_cast<double>(est.z.squaredNorm());
    if (!std::isfinite(objective)) throw NumericFault("latent optimization produced a non-finite objective");
    est.history.push_back(objective);
    ev.grad += static_cast<float>(2.0 * problem.lambda) * est.z;
    adam_step<float>(adam, std::span(est.z.data(), static_cast<std::size_t>(d)),
                     std::span<const float>(ev.grad.data(), static_cast<std::size_t>(d)), problem.lr);
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Evaluation final_eval = evaluate_terms(params, est.z, problem.terms, all, problem.delta, false, problem.threads);
  est.objective = final_eval.loss + problem.lambda * static_cast<double>(est.z.squaredNorm());
  if (!std::isfinite(est.objective)) throw NumericFault("latent optimization produced a non-finite objective");
  return est;
}

}  // namespace

LatentEstimate estimate_latent(const DecoderParams<float>& params, std::span<const SdfSample> samples,
                               const EstimateConfig& config) {
  if (samples.empty()) throw PreconditionError("estimate_latent: no samples");
  LatentProblem problem;
  problem.terms.reserve(samples.size());
  for (const auto& s : samples) problem.terms.push_back({s.position, s.s, false});
  problem.delta = config.delta;
  problem.lambda = config.lambda;
  problem.iterations = config.iterations;
  problem.lr = config.lr;
  problem.init_stddev = config.init_stddev;
  problem.samples_per_iter = config.samples_per_iter;
  problem.seed = config.seed;
  problem.threads = config.threads;
  return optimize_latent(params, problem);
}

PartialObservation depth_to_observation(const DepthMap& depth, double eta, int free_points_per_ray,
                                        std::uint64_t seed) {
  if (!(eta > 0)) throw PreconditionError("eta must be positive");
  if (free_points_per_ray < 0) throw PreconditionError("free_points_per_ray must be >= 0");
  PartialObservation obs;
  obs.eta = eta;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  const Camera& cam = depth.camera;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const DepthPixel& px = depth.at(u, v);
      if (!(px.depth > 0)) continue;
      const Vec3 dir = cam.ray_direction(u, v);
      const Vec3 p = cam.position + dir * px.depth;
      obs.sdf_samples.push_back({p + px.normal * eta, eta});
      obs.sdf_samples.push_back({p - px.normal * eta, -eta});
      for (int k = 0; k < free_points_per_ray; ++k) {
        obs.free_points.push_back(cam.position + dir * (unit(rng) * px.depth));
      }
    }
  }
  if (obs.sdf_samples.empty()) throw DataError("depth map has no surface pixels");
  return obs;
}

LatentEstimate complete_shape(const DecoderParams<float>& params, const PartialObservation& observation,
                              const CompletionConfig& config) {
  if (!(config.eta > 0)) throw ConfigError("eta must be positive");
  if (!(config.delta > 0)) throw ConfigError("completion delta must be positive");
  LatentProblem problem;
  for (const auto& s : observation.sdf_samples) problem.terms.push_back({s.position, s.s, false});
  if (config.use_free_space) {
    for (const auto& p : observation.free_points) problem.terms.push_back({p, 0.0, true});
  }
  problem.delta = config.delta;
  problem.lambda = config.lambda;
  problem.iterations = config.iterations;
  problem.lr = config.lr;
  problem.init_stddev = config.init_stddev;
  problem.samples_per_iter = config.samples_per_iter;
  problem.seed = config.seed;
  problem.threads = config.threads;
  return optimize_latent(params, problem);
}

DepthMap perturb_depth(const DepthMap& depth, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0)) throw PreconditionError("noise level alpha must be >= 0");
  DepthMap out = depth;
  if (alpha == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, alpha);
  for (auto& px : out.pixels) {
    if (!(px.depth > 0)) continue;
    double inv;
    do {
      inv = 1.0 / px.depth + gauss(rng);
    } while (!(inv > 0));
    px.depth = 1.0 / inv;
  }
  return out;
}

void write_depth_map(std::ostream& out, const DepthMap& depth) {
  const Camera& cam = depth.camera;
  binio::write_magic(out, "DPTH");
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = cam.rotation.row(r);
    for (int k = 0; k < 3; ++k) binio::write_f32(out, static_cast<float>(row[k]));
  }
  for (int k = 0; k < 3; ++k) binio::write_f32(out, static_cast<float>(cam.position[k]));
  for (double v : {cam.fx, cam.fy, cam.cx, cam.cy}) binio::write_f32(out, static_cast<float>(v));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cam.width));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cam.height));
  for (const auto& px : depth.pixels) {
    binio::write_f32(out, static_cast<float>(px.depth));
    for (int k = 0; k < 3; ++k) binio::write_f32(out, static_cast<float>(px.normal[k]));
  }
}

void write_depth_map(const std::filesystem::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write depth file " + path.string());
  write_depth_map(out, depth);
}

DepthMap read_depth_map(std::istream& in) {
  binio::expect_magic(in, "DPTH");
  DepthMap map;
  Camera& cam = map.camera;
  Vec3 rows[3];
  for (auto& row : rows) {
    for (int k = 0; k < 3; ++k) row[k] = binio::read_f32(in, "DPTH pose");
  }
  cam.rotation = Mat3::from_rows(rows[0], rows[1], rows[2]);
  for (int k = 0; k < 3; ++k) cam.position[k] = binio::read_f32(in, "DPTH pose");
  cam.fx = binio::read_f32(in, "DPTH intrinsics");
  cam.fy = binio::read_f32(in, "DPTH intrinsics");
  cam.cx = binio::read_f32(in, "DPTH intrinsics");
  cam.cy = binio::read_f32(in, "DPTH intrinsics");
  const auto w = binio::read_uint<std::uint32_t>(in, "DPTH width");
  const auto h = binio::read_uint<std::uint32_t>(in, "DPTH height");
  if (w == 0 || h == 0 || w > 16384 || h > 16384) throw DataError("DPTH: invalid image size");
  if (!(cam.fx > 0 && cam.fy > 0)) throw DataError("DPTH: focal lengths must be positive");
  cam.width = static_cast<int>(w);
  cam.height = static_cast<int>(h);
  map.pixels.resize(static_cast<std::size_t>(w) * h);
  for (auto& px : map.pixels) {
    px.depth = binio::read_f32(in, "DPTH pixel");
    for (int k = 0; k < 3; ++k) px.normal[k] = binio::read_f32(in, "DPTH pixel");
    if (!std::isfinite(px.depth) || px.depth < 0) throw DataError("DPTH: invalid depth value");
  }
  return map;
}

DepthMap read_depth_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open depth file " + path.string());
  return read_depth_map(in);
}

}  // namespace sdfforge

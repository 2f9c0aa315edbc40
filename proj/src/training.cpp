#include "sdfforge/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "sdfforge/detail/seed.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/parallel.hpp"

namespace sdfforge {

namespace {
constexpr std::size_t kColumnChunk = 2048;
}

using detail::mix_seed;

void TrainConfig::validate() const {
  if (!(delta > 0)) throw ConfigError("delta must be positive");
  if (!(decoder_lr_per_shape > 0)) throw ConfigError("decoder learning rate must be positive");
  if (!(latent_lr > 0)) throw ConfigError("latent learning rate must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  if (samples_per_shape < 2) throw ConfigError("samples_per_shape must be >= 2");
  if (shapes_per_batch < 1) throw ConfigError("shapes_per_batch must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(latent_init_stddev >= 0)) throw ConfigError("latent_init_stddev must be >= 0");
}

template <typename T>
void adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  for (T g : grads) {
    if (!std::isfinite(static_cast<double>(g))) throw NumericFault("adam_step: non-finite gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const double m_hat = static_cast<double>(state.m[i]) / c1;
    const double v_hat = static_cast<double>(state.v[i]) / c2;
    params[i] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + state.eps));
  }
}

template <typename T>
std::vector<T> flatten_params(const DecoderParams<T>& params) {
  std::vector<T> flat;
  flat.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    flat.insert(flat.end(), l.v.data(), l.v.data() + l.v.size());
    flat.insert(flat.end(), l.g.data(), l.g.data() + l.g.size());
    flat.insert(flat.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return flat;
}

template <typename T>
void assign_params(DecoderParams<T>& params, std::span<const T> flat) {
  if (flat.size() != params.parameter_count()) throw ShapeError("assign_params: size mismatch");
  std::size_t o = 0;
  const auto take = [&](T* dst, Eigen::Index n) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(o), n, dst);
    o += static_cast<std::size_t>(n);
  };
  for (auto& l : params.layers) {
    take(l.v.data(), l.v.size());
    take(l.g.data(), l.g.size());
    take(l.b.data(), l.b.size());
  }
  ++params.revision;
}

template <typename T>
std::vector<T> flatten_grads(const std::vector<LayerGrads<T>>& grads) {
  std::vector<T> flat;
  for (const auto& l : grads) {
    flat.insert(flat.end(), l.v.data(), l.v.data() + l.v.size());
    flat.insert(flat.end(), l.g.data(), l.g.data() + l.g.size());
    flat.insert(flat.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return flat;
}

namespace {

/// Positive / negative index lists of one SampleSet, drawn from with a
/// partial Fisher-Yates shuffle.
class BalancedSampler {
 public:
  explicit BalancedSampler(const SampleSet& set) : set_(&set) {
    for (std::size_t i = 0; i < set.samples.size(); ++i) (set.samples[i].s > 0 ? pos_ : neg_).push_back(i);
  }

  std::vector<std::size_t> draw(std::size_t n, std::mt19937_64& rng) {
    const std::size_t n_pos = (n + 1) / 2, n_neg = n / 2;
    if (pos_.size() < n_pos) throw deficient("positive", pos_.size(), n_pos);
    if (neg_.size() < n_neg) throw deficient("negative", neg_.size(), n_neg);
    std::vector<std::size_t> out;
    out.reserve(n);
    take(pos_, n_pos, rng, out);
    take(neg_, n_neg, rng, out);
    return out;
  }

 private:
  DataError deficient(const char* sign, std::size_t have, std::size_t need) const {
    return DataError("shape '" + set_->shape_id + "' has " + std::to_string(have) + " " + sign +
                     " samples but a balanced batch needs " + std::to_string(need) + " (insufficient " + sign +
                     " samples)");
  }

  static void take(std::vector<std::size_t>& pool, std::size_t k, std::mt19937_64& rng,
                   std::vector<std::size_t>& out) {
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      out.push_back(pool[i]);
    }
  }

  const SampleSet* set_;
  std::vector<std::size_t> pos_, neg_;
};

}  // namespace

std::vector<std::size_t> make_balanced_batch(const SampleSet& set, std::size_t n, std::uint64_t seed) {
  BalancedSampler sampler(set);
  std::mt19937_64 rng(seed);
  return sampler.draw(n, rng);
}

template <typename T>
ObjectiveResult<T> batch_objective(const DecoderParams<T>& params, std::span<const ShapeBatch> batch,
                                   std::span<const Vector<T>> codes, double delta, double lambda, Mode mode,
                                   std::uint64_t mask_seed, bool param_grads, int threads) {
  const int d = params.config.latent_dim;
  if (batch.empty()) throw PreconditionError("batch_objective: empty batch");
  if (codes.size() != batch.size()) throw ShapeError("batch_objective: one latent code per batch entry required");

  // Column -> (batch entry, sample index).
  std::vector<std::pair<std::uint32_t, std::size_t>> columns;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    if (codes[e].size() != d) throw ShapeError("batch_objective: latent code dimension mismatch");
    if (batch[e].indices.empty()) throw PreconditionError("batch_objective: shape without samples");
    for (std::size_t idx : batch[e].indices) columns.emplace_back(static_cast<std::uint32_t>(e), idx);
  }
  const double inv_shapes = 1.0 / static_cast<double>(batch.size());

  struct ChunkResult {
    double loss = 0;
    std::vector<LayerGrads<T>> grads;
    Matrix<T> input_grads;
  };
  const std::size_t n_chunks = (columns.size() + kColumnChunk - 1) / kColumnChunk;
  std::vector<ChunkResult> chunks(n_chunks);

  parallel_chunks(columns.size(), kColumnChunk, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    const auto n = static_cast<Eigen::Index>(e - b);
    Matrix<T> in(d + 3, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto [entry, idx] = columns[b + static_cast<std::size_t>(j)];
      const SdfSample& s = batch[entry].set->samples[idx];
      in.col(j).head(d) = codes[entry];
      in(d, j) = static_cast<T>(s.position.x);
      in(d + 1, j) = static_cast<T>(s.position.y);
      in(d + 2, j) = static_cast<T>(s.position.z);
    }
    const ForwardTape<T> tape = forward(params, in, mode, mix_seed(mask_seed, c));
    Vector<T> upstream(n);
    double loss = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto [entry, idx] = columns[b + static_cast<std::size_t>(j)];
      const double target = batch[entry].set->samples[idx].s;
      const double pred = static_cast<double>(tape.output(j));
      const double w = inv_shapes / static_cast<double>(batch[entry].indices.size());
      loss += w * clamped_l1(pred, target, delta);
      upstream(j) = static_cast<T>(w * clamped_l1_grad(pred, target, delta));
    }
    Gradients<T> g = backward(params, tape, upstream, param_grads);
    chunks[c].loss = loss;
    chunks[c].grads = std::move(g.layers);
    chunks[c].input_grads = g.input.topRows(d);
  });

  ObjectiveResult<T> result;
  result.latent_grads.assign(batch.size(), Vector<T>::Zero(d));
  for (std::size_t c = 0; c < n_chunks; ++c) {
    ChunkResult& cr = chunks[c];
    result.sdf_loss += cr.loss;
    if (param_grads) {
      if (result.param_grads.empty()) {
        result.param_grads = std::move(cr.grads);
      } else {
        for (std::size_t l = 0; l < cr.grads.size(); ++l) {
          result.param_grads[l].v += cr.grads[l].v;
          result.param_grads[l].g += cr.grads[l].g;
          result.param_grads[l].b += cr.grads[l].b;
        }
      }
    }
    const std::size_t b = c * kColumnChunk;
    for (Eigen::Index j = 0; j < cr.input_grads.cols(); ++j) {
      result.latent_grads[columns[b + static_cast<std::size_t>(j)].first] += cr.input_grads.col(j);
    }
  }
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const double sq = static_cast<double>(codes[e].squaredNorm());
    result.reg_loss += inv_shapes * lambda * sq;
    result.latent_grads[e] += static_cast<T>(2.0 * lambda * inv_shapes) * codes[e];
  }
  return result;
}

void LossRecord::write_csv(std::ostream& out) const {
  out << "epoch,sdf_loss,reg_loss,seconds\n";
  for (const auto& e : epochs) out << e.epoch << ',' << e.sdf_loss << ',' << e.reg_loss << ',' << e.seconds << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericFault(std::string("training produced a non-finite ") + what);
}

}  // namespace

SingleShapeResult train_single_shape(const SampleSet& samples, const NetConfig& net, const TrainConfig& train,
                                     const EpochCallback& on_epoch) {
  train.validate();
  if (net.latent_dim != 0) throw PreconditionError("train_single_shape requires latent_dim = 0");
  SingleShapeResult result{init_params<float>(net, net.seed), {}};
  AdamState<float> adam(result.params.parameter_count());
  BalancedSampler sampler(samples);
  std::mt19937_64 rng(train.seed);
  const Vector<float> no_code(0);
  const auto start = Clock::now();

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    const ShapeBatch batch{&samples, sampler.draw(train.samples_per_shape, rng)};
    const auto obj = batch_objective<float>(result.params, std::span(&batch, 1), std::span(&no_code, 1), train.delta,
                                            0.0, Mode::Train, mix_seed(train.seed, static_cast<std::uint64_t>(epoch)),
                                            true, train.threads);
    check_finite(obj.sdf_loss, "loss");
    std::vector<float> flat = flatten_params(result.params);
    const std::vector<float> grads = flatten_grads(obj.param_grads);
    adam_step<float>(adam, flat, grads, train.decoder_lr(1));
    assign_params<float>(result.params, flat);

    const EpochLoss rec{epoch, obj.sdf_loss, 0.0, std::chrono::duration<double>(Clock::now() - start).count()};
    result.record.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

AutoDecoderResult train_auto_decoder(const std::vector<SampleSet>& sets, const NetConfig& net,
                                     const TrainConfig& train, const EpochCallback& on_epoch) {
  train.validate();
  if (sets.empty()) throw PreconditionError("train_auto_decoder: no training shapes");
  if (net.latent_dim < 1) throw PreconditionError("train_auto_decoder requires latent_dim >= 1");

  AutoDecoderResult result{init_params<float>(net, net.seed), LatentCodebook(net.latent_dim), {}};
  std::mt19937_64 rng(train.seed);
  std::normal_distribution<double> gauss(0.0, train.latent_init_stddev);

  std::vector<Vector<float>> codes(sets.size(), Vector<float>(net.latent_dim));
  for (auto& code : codes) {
    for (Eigen::Index k = 0; k < code.size(); ++k) code(k) = static_cast<float>(gauss(rng));
  }
  std::vector<BalancedSampler> samplers;
  samplers.reserve(sets.size());
  for (const auto& s : sets) samplers.emplace_back(s);

  AdamState<float> decoder_adam(result.params.parameter_count());
  std::vector<AdamState<float>> code_adam(sets.size(), AdamState<float>(static_cast<std::size_t>(net.latent_dim)));
  const std::size_t shapes_per_step = std::min(train.shapes_per_batch, sets.size());
  const double decoder_lr = train.decoder_lr(shapes_per_step);
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  const auto start = Clock::now();
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sdf_sum = 0, reg_sum = 0;
    std::size_t n_steps = 0;
    for (std::size_t first = 0; first < order.size(); first += shapes_per_step) {
      const std::size_t last = std::min(order.size(), first + shapes_per_step);
      std::vector<ShapeBatch> batch;
      std::vector<Vector<float>> batch_codes;
      for (std::size_t k = first; k < last; ++k) {
        const std::size_t shape = order[k];
        batch.push_back({&sets[shape], samplers[shape].draw(train.samples_per_shape, rng)});
        batch_codes.push_back(codes[shape]);
      }
      const auto obj = batch_objective<float>(result.params, batch, batch_codes, train.delta, train.lambda,
                                              Mode::Train, mix_seed(train.seed, step++), true, train.threads);
      check_finite(obj.sdf_loss + obj.reg_loss, "objective");

      std::vector<float> flat = flatten_params(result.params);
      const std::vector<float> grads = flatten_grads(obj.param_grads);
      adam_step<float>(decoder_adam, flat, grads, decoder_lr);
      assign_params<float>(result.params, flat);
      for (std::size_t k = first; k < last; ++k) {
        const std::size_t shape = order[k];
        const Vector<float>& g = obj.latent_grads[k - first];
        adam_step<float>(code_adam[shape], std::span(codes[shape].data(), static_cast<std::size_t>(codes[shape].size())),
                         std::span(g.data(), static_cast<std::size_t>(g.size())), train.latent_lr);
      }
      sdf_sum += obj.sdf_loss;
      reg_sum += obj.reg_loss;
      ++n_steps;
    }
    const EpochLoss rec{epoch, sdf_sum / static_cast<double>(n_steps), reg_sum / static_cast<double>(n_steps),
                        std::chrono::duration<double>(Clock::now() - start).count()};
    result.record.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  for (std::size_t i = 0; i < sets.size(); ++i) result.codebook.add(sets[i].shape_id, codes[i]);
  return result;
}

template void adam_step<float>(AdamState<float>&, std::span<float>, std::span<const float>, double);
template void adam_step<double>(AdamState<double>&, std::span<double>, std::span<const double>, double);
template std::vector<float> flatten_params<float>(const DecoderParams<float>&);
template std::vector<double> flatten_params<double>(const DecoderParams<double>&);
template void assign_params<float>(DecoderParams<float>&, std::span<const float>);
template void assign_params<double>(DecoderParams<double>&, std::span<const double>);
template std::vector<float> flatten_grads<float>(const std::vector<LayerGrads<float>>&);
template std::vector<double> flatten_grads<double>(const std::vector<LayerGrads<double>>&);
template ObjectiveResult<float> batch_objective<float>(const DecoderParams<float>&, std::span<const ShapeBatch>,
                                                       std::span<const Vector<float>>, double, double, Mode,
                                                       std::uint64_t, bool, int);
template ObjectiveResult<double> batch_objective<double>(const DecoderParams<double>&, std::span<const ShapeBatch>,
                                                         std::span<const Vector<double>>, double, double, Mode,
                                                         std::uint64_t, bool, int);

}  // namespace sdfforge

#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "sdfforge/decoder.hpp"
#include "sdfforge/sampling.hpp"

namespace sdfforge {

/// Saturates v to [-delta, delta].
inline double clamp(double v, double delta) { return std::min(delta, std::max(-delta, v)); }

/// |clamp(pred) - clamp(target)|, in [0, 2 delta].
inline double clamped_l1(double pred, double target, double delta) {
  return std::abs(clamp(pred, delta) - clamp(target, delta));
}

/// Subgradient of clamped_l1 with respect to pred. Zero where the prediction
/// is saturated (|pred| >= delta) and where the clamped values coincide.
inline double clamped_l1_grad(double pred, double target, double delta) {
  if (!(std::abs(pred) < delta)) return 0.0;
  const double diff = pred - clamp(target, delta);
  return diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
}

struct TrainConfig {
  double delta = 0.1;
  /// Decoder learning rate is decoder_lr_per_shape * B.
  double decoder_lr_per_shape = 1e-5;
  double latent_lr = 1e-3;
  /// Weight of |z|^2 in the objective (see prior_weight_from_sigma).
  double lambda = 1e-4;
  double sigma = 1e-2;
  std::size_t samples_per_shape = 16384;
  /// B: shapes per optimization step (clipped to the number of shapes).
  std::size_t shapes_per_batch = 64;
  int epochs = 1000;
  double latent_init_stddev = 0.01;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  double decoder_lr(std::size_t shapes_in_batch) const {
    return decoder_lr_per_shape * static_cast<double>(shapes_in_batch);
  }
  /// 1 / sigma^2, the literal Gaussian-prior weight.
  static double prior_weight_from_sigma(double sigma) { return 1.0 / (sigma * sigma); }
};

/// Bias-corrected Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, T(0)), v(n, T(0)) {}
};

/// One Adam update of params in place. Throws NumericFault on a non-finite
/// gradient (parameters and state are left untouched).
template <typename T>
void adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grads, double lr);

/// Flattened parameter / gradient views of the decoder (layer order, then
/// v, g, b in storage order).
template <typename T>
std::vector<T> flatten_params(const DecoderParams<T>& params);
template <typename T>
void assign_params(DecoderParams<T>& params, std::span<const T> flat);
template <typename T>
std::vector<T> flatten_grads(const std::vector<LayerGrads<T>>& grads);

/// ceil(n/2) positive and floor(n/2) negative sample indices, each drawn
/// without replacement; deterministic per seed. Throws DataError naming the
/// deficient sign when the set cannot supply them.
std::vector<std::size_t> make_balanced_batch(const SampleSet& set, std::size_t n, std::uint64_t seed);

/// Samples of one shape participating in a step.
struct ShapeBatch {
  const SampleSet* set = nullptr;
  std::vector<std::size_t> indices;
};

template <typename T>
struct ObjectiveResult {
  double sdf_loss = 0;  // mean over shapes of the mean clamped L1
  double reg_loss = 0;  // mean over shapes of lambda |z|^2
  std::vector<LayerGrads<T>> param_grads;
  std::vector<Vector<T>> latent_grads;  // one per batch entry
};

/// Objective (1/B) sum_i [ mean_j L(f(z_i, x_j), s_j) + lambda |z_i|^2 ] and
/// its gradients. Per-sample work is split into fixed column chunks and
/// reduced in chunk order, so results are independent of `threads`.
template <typename T>
ObjectiveResult<T> batch_objective(const DecoderParams<T>& params, std::span<const ShapeBatch> batch,
                                   std::span<const Vector<T>> codes, double delta, double lambda, Mode mode,
                                   std::uint64_t mask_seed, bool param_grads, int threads);

struct EpochLoss {
  int epoch = 0;
  double sdf_loss = 0;
  double reg_loss = 0;
  double seconds = 0;
};

struct LossRecord {
  std::vector<EpochLoss> epochs;

  /// CSV with header `epoch,sdf_loss,reg_loss,seconds`.
  void write_csv(std::ostream& out) const;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

struct SingleShapeResult {
  DecoderParams<float> params;
  LossRecord record;
};

/// Fits f(x) to one shape (latent_dim must be 0). One epoch is one Adam step
/// on a balanced batch of samples_per_shape samples.
SingleShapeResult train_single_shape(const SampleSet& samples, const NetConfig& net, const TrainConfig& train,
                                     const EpochCallback& on_epoch = {});

struct AutoDecoderResult {
  DecoderParams<float> params;
  LatentCodebook codebook;
  LossRecord record;
};

/// Joint optimization of decoder weights and one latent code per shape. Each
/// epoch visits every shape once, in a shuffled order, B shapes per step.
AutoDecoderResult train_auto_decoder(const std::vector<SampleSet>& sets, const NetConfig& net,
                                     const TrainConfig& train, const EpochCallback& on_epoch = {});

}  // namespace sdfforge

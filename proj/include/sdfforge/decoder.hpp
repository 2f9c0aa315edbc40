#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdfforge/geometry.hpp"

namespace sdfforge {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Architecture of the latent-conditioned decoder f(z, x).
///
/// Layers are numbered 1..n_layers; layers 1..n_layers-1 are hidden
/// (affine -> ReLU -> dropout) and layer n_layers is the scalar tanh output.
/// A layer index k in `skip_layers` concatenates the network input [z; x]
/// below the output of layer k, so layer k emits hidden_width - (latent_dim+3)
/// units and layer k+1 again sees hidden_width inputs.
struct NetConfig {
  int latent_dim = 256;
  int hidden_width = 512;
  int n_layers = 8;
  std::vector<int> skip_layers{4};
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  int input_dim() const { return latent_dim + 3; }
  bool is_skip(int layer) const;
  int layer_inputs(int layer) const;
  int layer_outputs(int layer) const;

  bool operator==(const NetConfig&) const = default;
};

/// Weight-normalized affine layer: effective row i is g_i * v_i / |v_i|.
template <typename T>
struct LayerParams {
  Matrix<T> v;  // outputs x inputs
  Vector<T> g;
  Vector<T> b;

  Matrix<T> effective_weight() const;
};

template <typename T>
struct DecoderParams {
  NetConfig config;
  std::vector<LayerParams<T>> layers;
  /// Bumped by every in-place update; forward tapes remember it.
  std::uint64_t revision = 0;

  std::size_t parameter_count() const;
  template <typename U>
  DecoderParams<U> cast() const;
  /// FNV-1a over the raw parameter bytes; used to assert immutability.
  std::uint64_t checksum() const;
};

enum class Mode { Train, Eval };

/// Everything reverse mode needs to differentiate one batched forward pass.
/// Column j of every matrix belongs to input sample j.
template <typename T>
struct ForwardTape {
  const DecoderParams<T>* params = nullptr;
  std::uint64_t revision = 0;
  Mode mode = Mode::Eval;
  std::vector<Matrix<T>> weights;       // effective weights per layer
  std::vector<Matrix<T>> layer_inputs;  // input to each layer (after skip concatenation)
  std::vector<Matrix<T>> pre;           // pre-activations per layer
  std::vector<Matrix<T>> masks;         // dropout masks of hidden layers (train mode)
  Vector<T> output;                     // tanh outputs, one per column

  std::size_t batch() const { return static_cast<std::size_t>(output.size()); }
  /// Recomputes the output from the cached input, weights and masks.
  Vector<T> replay() const;
};

template <typename T>
struct LayerGrads {
  Matrix<T> v;
  Vector<T> g;
  Vector<T> b;
};

template <typename T>
struct Gradients {
  std::vector<LayerGrads<T>> layers;  // empty when parameter gradients were skipped
  Matrix<T> input;                    // d/d[z; x], one column per sample
};

/// Deterministic parameter initialization: v ~ N(0, 2/fan_in), g = |v_row|,
/// b = 0, so the initial effective weights equal v.
template <typename T>
DecoderParams<T> init_params(const NetConfig& config, std::uint64_t seed);

/// Batched forward pass; `inputs` is (latent_dim + 3) x N with rows [z; x].
/// Train mode samples a 0/1 dropout mask per hidden activation from
/// mask_seed; eval mode scales hidden activations by (1 - dropout_rate).
template <typename T>
ForwardTape<T> forward(const DecoderParams<T>& params, const Matrix<T>& inputs, Mode mode,
                       std::uint64_t mask_seed = 0);

/// Single-sample convenience wrapper.
template <typename T>
ForwardTape<T> forward(const DecoderParams<T>& params, std::span<const T> z, const Vec3& x, Mode mode,
                       std::uint64_t mask_seed = 0);

/// Reverse-mode gradients of sum_j upstream_j * f_j under the tape's masks.
/// With param_grads = false only input gradients are produced.
template <typename T>
Gradients<T> backward(const DecoderParams<T>& params, const ForwardTape<T>& tape, const Vector<T>& upstream,
                      bool param_grads = true);

/// Eval-mode outputs for every column of `inputs`, evaluated in fixed
/// column chunks so results do not depend on the worker count.
template <typename T>
Vector<T> evaluate(const DecoderParams<T>& params, const Matrix<T>& inputs, int threads = 1);

struct SpatialGradient {
  Vec3 gradient;
  bool degenerate = false;  // gradient too small to define a normal
};

template <typename T>
SpatialGradient spatial_gradient(const DecoderParams<T>& params, std::span<const T> z, const Vec3& x);

/// Batched eval-mode spatial gradients at many points sharing one latent code.
template <typename T>
std::vector<Vec3> spatial_gradients(const DecoderParams<T>& params, std::span<const T> z,
                                    std::span<const Vec3> points, int threads = 1);

/// Stacks [z; x] columns for a shared latent code.
template <typename T>
Matrix<T> make_inputs(std::span<const T> z, std::span<const Vec3> points);

/// Per-shape latent vectors in insertion order.
class LatentCodebook {
 public:
  explicit LatentCodebook(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  void add(const std::string& id, Vector<float> code);
  const Vector<float>* find(const std::string& id) const;
  const Vector<float>& at(const std::string& id) const;
  Vector<float>& code(std::size_t i) { return codes_[i]; }
  const Vector<float>& code(std::size_t i) const { return codes_[i]; }

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::vector<Vector<float>> codes_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Checkpoint {
  DecoderParams<float> params;
  LatentCodebook codebook;
};

/// Binary checkpoint: "DSDF", u32 version, NetConfig block, per-layer v, g, b
/// (float32, row-major), then the latent codebook.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <typename T>
template <typename U>
DecoderParams<U> DecoderParams<T>::cast() const {
  DecoderParams<U> out;
  out.config = config;
  for (const auto& l : layers) {
    out.layers.push_back({l.v.template cast<U>(), l.g.template cast<U>(), l.b.template cast<U>()});
  }
  return out;
}

extern template struct LayerParams<float>;
extern template struct LayerParams<double>;
extern template struct DecoderParams<float>;
extern template struct DecoderParams<double>;
extern template struct ForwardTape<float>;
extern template struct ForwardTape<double>;

}  // namespace sdfforge

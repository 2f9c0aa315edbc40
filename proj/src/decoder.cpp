#include "sdfforge/decoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "sdfforge/binary_io.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/parallel.hpp"

namespace sdfforge {

void NetConfig::validate() const {
  if (latent_dim < 0) throw ConfigError("latent_dim must be >= 0");
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) throw ConfigError("dropout_rate must be in [0, 1)");
  for (int k : skip_layers) {
    if (k <= 1 || k >= n_layers) {
      throw ConfigError("skip layer " + std::to_string(k) + " outside (1, " + std::to_string(n_layers) + ")");
    }
  }
  if (!skip_layers.empty() && hidden_width <= input_dim()) {
    throw ConfigError("hidden_width must exceed latent_dim + 3 when skip connections are used");
  }
}

bool NetConfig::is_skip(int layer) const {
  return std::find(skip_layers.begin(), skip_layers.end(), layer) != skip_layers.end();
}

int NetConfig::layer_outputs(int layer) const {
  if (layer == n_layers) return 1;
  return is_skip(layer) ? hidden_width - input_dim() : hidden_width;
}

int NetConfig::layer_inputs(int layer) const {
  if (layer == 1) return input_dim();
  return layer_outputs(layer - 1) + (is_skip(layer - 1) ? input_dim() : 0);
}

template <typename T>
Matrix<T> LayerParams<T>::effective_weight() const {
  const Vector<T> scale = g.array() / v.rowwise().norm().array();
  return scale.asDiagonal() * v;
}

template <typename T>
std::size_t DecoderParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.v.size() + l.g.size() + l.b.size());
  return n;
}

namespace {

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

template <typename T>
std::uint64_t DecoderParams<T>::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& l : layers) {
    fnv_mix(h, l.v.data(), sizeof(T) * l.v.size());
    fnv_mix(h, l.g.data(), sizeof(T) * l.g.size());
    fnv_mix(h, l.b.data(), sizeof(T) * l.b.size());
  }
  return h;
}

template <typename T>
DecoderParams<T> init_params(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  DecoderParams<T> params;
  params.config = config;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int l = 1; l <= config.n_layers; ++l) {
    const int in = config.layer_inputs(l), out = config.layer_outputs(l);
    const double sd = std::sqrt(2.0 / in);
    LayerParams<T> layer;
    layer.v.resize(out, in);
    // Row-major fill order keeps the draw sequence independent of storage.
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.v(r, c) = static_cast<T>(sd * gauss(rng));
    }
    layer.g = layer.v.rowwise().norm();
    layer.b = Vector<T>::Zero(out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

template <typename T>
struct Propagation {
  std::vector<Matrix<T>>* layer_inputs = nullptr;
  std::vector<Matrix<T>>* pre = nullptr;
};

/// Shared forward recurrence for tapes, replays and plain evaluation.
/// In train mode with dropout, masks are drawn from rng when it is non-null,
/// otherwise the given masks are reused.
template <typename T>
Vector<T> propagate(const NetConfig& cfg, const std::vector<Matrix<T>>& weights,
                    const std::vector<LayerParams<T>>& layers, const Matrix<T>& input, Mode mode,
                    std::vector<Matrix<T>>& masks, std::mt19937_64* rng, Propagation<T> store) {
  const int n_layers = cfg.n_layers;
  const T keep = static_cast<T>(1.0 - cfg.dropout_rate);
  const bool dropout = cfg.dropout_rate > 0;
  if (rng) masks.assign(static_cast<std::size_t>(n_layers - 1), Matrix<T>());
  std::bernoulli_distribution coin(1.0 - cfg.dropout_rate);

  Matrix<T> a = input;
  for (int l = 1; l <= n_layers; ++l) {
    const std::size_t li = static_cast<std::size_t>(l - 1);
    Matrix<T> z = weights[li] * a;
    z.colwise() += layers[li].b;
    if (store.layer_inputs) (*store.layer_inputs)[li] = std::move(a);
    if (l == n_layers) {
      Vector<T> out = z.row(0).transpose().array().tanh().matrix();
      if (store.pre) (*store.pre)[li] = std::move(z);
      return out;
    }
    Matrix<T> h = z.cwiseMax(T(0));
    if (dropout && mode == Mode::Train) {
      if (rng) {
        Matrix<T>& m = masks[li];
        m.resize(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(*rng) ? T(1) : T(0);
      }
      h.array() *= masks[li].array();
    } else if (dropout) {
      h *= keep;
    }
    if (store.pre) (*store.pre)[li] = std::move(z);
    if (cfg.is_skip(l)) {
      a.resize(h.rows() + input.rows(), h.cols());
      a.topRows(h.rows()) = h;
      a.bottomRows(input.rows()) = input;
    } else {
      a = std::move(h);
    }
  }
  return {};  // unreachable: n_layers >= 1
}

template <typename T>
std::vector<Matrix<T>> effective_weights(const DecoderParams<T>& params) {
  std::vector<Matrix<T>> w;
  w.reserve(params.layers.size());
  for (const auto& l : params.layers) w.push_back(l.effective_weight());
  return w;
}

template <typename T>
void check_inputs(const DecoderParams<T>& params, const Matrix<T>& inputs) {
  if (inputs.rows() != params.config.input_dim()) {
    throw ShapeError("decoder input has " + std::to_string(inputs.rows()) + " rows, expected " +
                     std::to_string(params.config.input_dim()));
  }
}

}  // namespace

template <typename T>
Vector<T> ForwardTape<T>::replay() const {
  if (!params) throw ContractViolation("replay on an empty tape");
  std::vector<Matrix<T>> m = masks;
  return propagate<T>(params->config, weights, params->layers, layer_inputs.front(), mode, m, nullptr, {});
}

template <typename T>
ForwardTape<T> forward(const DecoderParams<T>& params, const Matrix<T>& inputs, Mode mode, std::uint64_t mask_seed) {
  check_inputs(params, inputs);
  ForwardTape<T> tape;
  tape.params = &params;
  tape.revision = params.revision;
  tape.mode = mode;
  tape.weights = effective_weights(params);
  const auto n = static_cast<std::size_t>(params.config.n_layers);
  tape.layer_inputs.resize(n);
  tape.pre.resize(n);
  std::mt19937_64 rng(mask_seed);
  tape.output = propagate<T>(params.config, tape.weights, params.layers, inputs, mode, tape.masks, &rng,
                             {&tape.layer_inputs, &tape.pre});
  return tape;
}

template <typename T>
Matrix<T> make_inputs(std::span<const T> z, std::span<const Vec3> points) {
  const auto d = static_cast<Eigen::Index>(z.size());
  Matrix<T> in(d + 3, static_cast<Eigen::Index>(points.size()));
  for (Eigen::Index j = 0; j < in.cols(); ++j) {
    for (Eigen::Index i = 0; i < d; ++i) in(i, j) = z[static_cast<std::size_t>(i)];
    const Vec3& p = points[static_cast<std::size_t>(j)];
    in(d, j) = static_cast<T>(p.x);
    in(d + 1, j) = static_cast<T>(p.y);
    in(d + 2, j) = static_cast<T>(p.z);
  }
  return in;
}

template <typename T>
ForwardTape<T> forward(const DecoderParams<T>& params, std::span<const T> z, const Vec3& x, Mode mode,
                       std::uint64_t mask_seed) {
  if (static_cast<int>(z.size()) != params.config.latent_dim) {
    throw ShapeError("latent code has " + std::to_string(z.size()) + " entries, expected " +
                     std::to_string(params.config.latent_dim));
  }
  return forward(params, make_inputs<T>(z, std::span<const Vec3>(&x, 1)), mode, mask_seed);
}

template <typename T>
Gradients<T> backward(const DecoderParams<T>& params, const ForwardTape<T>& tape, const Vector<T>& upstream,
                      bool param_grads) {
  if (tape.params != &params || tape.revision != params.revision) {
    throw ContractViolation("backward: tape was recorded for different or since-modified parameters");
  }
  if (static_cast<std::size_t>(upstream.size()) != tape.batch()) {
    throw ContractViolation("backward: upstream size does not match the tape batch");
  }
  const NetConfig& cfg = params.config;
  const int n_layers = cfg.n_layers;
  const int d_in = cfg.input_dim();
  const T keep = static_cast<T>(1.0 - cfg.dropout_rate);
  const auto n = static_cast<Eigen::Index>(tape.batch());

  Gradients<T> grads;
  grads.input = Matrix<T>::Zero(d_in, n);
  if (param_grads) grads.layers.resize(static_cast<std::size_t>(n_layers));

  // d/dz of tanh output.
  Matrix<T> dz = (upstream.array() * (T(1) - tape.output.array().square())).matrix().transpose();
  for (int l = n_layers; l >= 1; --l) {
    const std::size_t li = static_cast<std::size_t>(l - 1);
    const Matrix<T>& a = tape.layer_inputs[li];
    if (param_grads) {
      const Matrix<T> dw = dz * a.transpose();
      const LayerParams<T>& layer = params.layers[li];
      const Vector<T> row_norm = layer.v.rowwise().norm();
      LayerGrads<T>& out = grads.layers[li];
      out.b = dz.rowwise().sum();
      out.g = (dw.cwiseProduct(layer.v).rowwise().sum().array() / row_norm.array()).matrix();
      const Vector<T> s1 = layer.g.array() / row_norm.array();
      const Vector<T> s2 = (layer.g.array() * out.g.array() / row_norm.array().square()).matrix();
      out.v = s1.asDiagonal() * dw - s2.asDiagonal() * layer.v;
    }
    Matrix<T> da = tape.weights[li].transpose() * dz;
    if (l == 1) {
      grads.input += da;
      break;
    }
    const int prev_out = cfg.layer_outputs(l - 1);
    if (cfg.is_skip(l - 1)) grads.input += da.bottomRows(d_in);
    Matrix<T> dh = da.topRows(prev_out);
    const std::size_t pi = li - 1;
    if (cfg.dropout_rate > 0) {
      if (tape.mode == Mode::Train) {
        dh.array() *= tape.masks[pi].array();
      } else {
        dh *= keep;
      }
    }
    dz = (tape.pre[pi].array() > T(0)).select(dh.array(), T(0)).matrix();
  }
  return grads;
}

template <typename T>
Vector<T> evaluate(const DecoderParams<T>& params, const Matrix<T>& inputs, int threads) {
  check_inputs(params, inputs);
  const auto weights = effective_weights(params);
  Vector<T> out(inputs.cols());
  parallel_chunks(static_cast<std::size_t>(inputs.cols()), 2048, threads,
                  [&](std::size_t, std::size_t b, std::size_t e) {
                    const auto cols = static_cast<Eigen::Index>(e - b);
                    std::vector<Matrix<T>> masks;
                    const Matrix<T> chunk = inputs.middleCols(static_cast<Eigen::Index>(b), cols);
                    out.segment(static_cast<Eigen::Index>(b), cols) =
                        propagate<T>(params.config, weights, params.layers, chunk, Mode::Eval, masks, nullptr, {});
                  });
  return out;
}

template <typename T>
std::vector<Vec3> spatial_gradients(const DecoderParams<T>& params, std::span<const T> z,
                                    std::span<const Vec3> points, int threads) {
  if (static_cast<int>(z.size()) != params.config.latent_dim) throw ShapeError("spatial_gradients: latent size");
  std::vector<Vec3> out(points.size());
  const int d = params.config.latent_dim;
  parallel_chunks(points.size(), 1024, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    const Matrix<T> in = make_inputs<T>(z, points.subspan(b, e - b));
    const ForwardTape<T> tape = forward(params, in, Mode::Eval);
    const Gradients<T> g = backward(params, tape, Vector<T>(Vector<T>::Ones(in.cols())), false);
    for (std::size_t j = b; j < e; ++j) {
      const auto c = static_cast<Eigen::Index>(j - b);
      out[j] = {static_cast<double>(g.input(d, c)), static_cast<double>(g.input(d + 1, c)),
                static_cast<double>(g.input(d + 2, c))};
    }
  });
  return out;
}

template <typename T>
SpatialGradient spatial_gradient(const DecoderParams<T>& params, std::span<const T> z, const Vec3& x) {
  const Vec3 g = spatial_gradients<T>(params, z, std::span<const Vec3>(&x, 1)).front();
  return {g, !(norm(g) > 1e-12)};
}

// ---------------------------------------------------------------------------
// Latent codebook and checkpoints.

void LatentCodebook::add(const std::string& id, Vector<float> code) {
  if (code.size() != dim_) throw ShapeError("latent code for '" + id + "' has wrong dimension");
  if (!code.allFinite()) throw NumericFault("latent code for '" + id + "' is not finite");
  if (index_.count(id)) throw DataError("duplicate shape id '" + id + "' in codebook");
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  codes_.push_back(std::move(code));
}

const Vector<float>* LatentCodebook::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &codes_[it->second];
}

const Vector<float>& LatentCodebook::at(const std::string& id) const {
  const auto* code = find(id);
  if (!code) throw DataError("unknown shape id '" + id + "'");
  return *code;
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const NetConfig& cfg = ckpt.params.config;
  binio::write_magic(out, "DSDF");
  binio::write_uint<std::uint32_t>(out, kCheckpointVersion);
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.latent_dim));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.hidden_width));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_layers));
  binio::write_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(cfg.dropout_rate));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.seed & 0xFFFFFFFFu));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.seed >> 32));
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.skip_layers.size()));
  for (int k : cfg.skip_layers) binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(k));
  for (const auto& layer : ckpt.params.layers) {
    for (Eigen::Index r = 0; r < layer.v.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.v.cols(); ++c) binio::write_f32(out, layer.v(r, c));
    }
    for (Eigen::Index i = 0; i < layer.g.size(); ++i) binio::write_f32(out, layer.g(i));
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) binio::write_f32(out, layer.b(i));
  }
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.codebook.size()));
  for (std::size_t i = 0; i < ckpt.codebook.size(); ++i) {
    const std::string& id = ckpt.codebook.ids()[i];
    if (id.size() > 0xFFFF) throw DataError("shape id too long for checkpoint: " + id);
    binio::write_uint<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    const auto& code = ckpt.codebook.code(i);
    for (Eigen::Index k = 0; k < code.size(); ++k) binio::write_f32(out, code(k));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint read_checkpoint(std::istream& in) {
  binio::expect_magic(in, "DSDF");
  const auto version = binio::read_uint<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  NetConfig cfg;
  cfg.latent_dim = static_cast<int>(binio::read_uint<std::uint32_t>(in, "latent_dim"));
  cfg.hidden_width = static_cast<int>(binio::read_uint<std::uint32_t>(in, "hidden_width"));
  cfg.n_layers = static_cast<int>(binio::read_uint<std::uint32_t>(in, "n_layers"));
  cfg.dropout_rate = std::bit_cast<double>(binio::read_uint<std::uint64_t>(in, "dropout_rate"));
  const std::uint64_t seed_lo = binio::read_uint<std::uint32_t>(in, "seed");
  const std::uint64_t seed_hi = binio::read_uint<std::uint32_t>(in, "seed");
  cfg.seed = seed_lo | (seed_hi << 32);
  const auto n_skip = binio::read_uint<std::uint32_t>(in, "skip count");
  if (n_skip > 4096) throw DataError("implausible skip count in checkpoint");
  cfg.skip_layers.clear();
  for (std::uint32_t i = 0; i < n_skip; ++i) {
    cfg.skip_layers.push_back(static_cast<int>(binio::read_uint<std::uint32_t>(in, "skip layer")));
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint holds an invalid network config: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.params.config = cfg;
  for (int l = 1; l <= cfg.n_layers; ++l) {
    LayerParams<float> layer;
    layer.v.resize(cfg.layer_outputs(l), cfg.layer_inputs(l));
    for (Eigen::Index r = 0; r < layer.v.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.v.cols(); ++c) layer.v(r, c) = binio::read_f32(in, "layer weights");
    }
    layer.g.resize(layer.v.rows());
    layer.b.resize(layer.v.rows());
    for (Eigen::Index i = 0; i < layer.g.size(); ++i) layer.g(i) = binio::read_f32(in, "layer gains");
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = binio::read_f32(in, "layer biases");
    ckpt.params.layers.push_back(std::move(layer));
  }
  ckpt.codebook = LatentCodebook(cfg.latent_dim);
  const auto count = binio::read_uint<std::uint32_t>(in, "codebook count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = binio::read_uint<std::uint16_t>(in, "shape id length");
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (!in) throw DataError("unexpected end of file while reading shape id");
    Vector<float> code(cfg.latent_dim);
    for (Eigen::Index k = 0; k < code.size(); ++k) code(k) = binio::read_f32(in, "latent code");
    ckpt.codebook.add(id, std::move(code));
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

// ---------------------------------------------------------------------------

#define SDFFORGE_INSTANTIATE(T)                                                                                \
  template struct LayerParams<T>;                                                                              \
  template struct DecoderParams<T>;                                                                            \
  template struct ForwardTape<T>;                                                                              \
  template DecoderParams<T> init_params<T>(const NetConfig&, std::uint64_t);                                   \
  template ForwardTape<T> forward<T>(const DecoderParams<T>&, const Matrix<T>&, Mode, std::uint64_t);          \
  template ForwardTape<T> forward<T>(const DecoderParams<T>&, std::span<const T>, const Vec3&, Mode,           \
                                     std::uint64_t);                                                           \
  template Gradients<T> backward<T>(const DecoderParams<T>&, const ForwardTape<T>&, const Vector<T>&, bool);   \
  template Vector<T> evaluate<T>(const DecoderParams<T>&, const Matrix<T>&, int);                              \
  template SpatialGradient spatial_gradient<T>(const DecoderParams<T>&, std::span<const T>, const Vec3&);      \
  template std::vector<Vec3> spatial_gradients<T>(const DecoderParams<T>&, std::span<const T>,                 \
                                                  std::span<const Vec3>, int);                                 \
  template Matrix<T> make_inputs<T>(std::span<const T>, std::span<const Vec3>);

SDFFORGE_INSTANTIATE(float)
SDFFORGE_INSTANTIATE(double)

#undef SDFFORGE_INSTANTIATE

}  // namespace sdfforge

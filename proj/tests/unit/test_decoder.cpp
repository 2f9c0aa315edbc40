#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sdfforge/decoder.hpp"
#include "sdfforge/error.hpp"

using namespace sdfforge;

namespace {

Matrix<double> random_inputs(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

NetConfig small_net(int latent, int layers, int width, std::vector<int> skip, double dropout) {
  NetConfig c;
  c.latent_dim = latent;
  c.n_layers = layers;
  c.hidden_width = width;
  c.skip_layers = std::move(skip);
  c.dropout_rate = dropout;
  return c;
}

}  // namespace

TEST_CASE("layer shapes follow the skip rule") {
  const NetConfig c = small_net(4, 5, 32, {3}, 0);
  const auto p = init_params<double>(c, 1);
  REQUIRE(p.layers.size() == 5);
  CHECK(p.layers[0].v.cols() == 7);
  CHECK(p.layers[2].v.rows() == 32 - 7);
  CHECK(p.layers[3].v.cols() == 32);
  CHECK(p.layers[4].v.rows() == 1);
  for (const auto& l : p.layers) {
    CHECK((l.effective_weight() - l.v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l.b.isZero());
  }
  CHECK_THROWS_AS(init_params<double>(small_net(4, 5, 7, {3}, 0), 1), ConfigError);
  CHECK_THROWS_AS(init_params<double>(small_net(4, 5, 32, {5}, 0), 1), ConfigError);
  CHECK_THROWS_AS(init_params<double>(small_net(4, 5, 32, {}, 1.0), 1), ConfigError);
}

TEST_CASE("outputs lie in (-1, 1) and match the tape replay") {
  std::mt19937_64 rng(2);
  const auto p = init_params<double>(small_net(3, 4, 24, {2}, 0.2), 9);
  const auto in = random_inputs(rng, 6, 50);
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    const auto tape = forward(p, in, mode, 17);
    CHECK(tape.output.cwiseAbs().maxCoeff() < 1.0);
    CHECK((tape.replay() - tape.output).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(forward(p, random_inputs(rng, 5, 3), Mode::Eval), ShapeError);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 12; ++trial) {
    NetConfig c = oracle::random_net(rng, 4, 24, 4);
    const auto p = init_params<double>(c, rng());
    const auto in = random_inputs(rng, c.input_dim(), 3);
    if (oracle::min_hidden_preactivation(p, in, Mode::Eval, 0) < 1e-4) continue;
    const auto r = oracle::check_decoder_gradients(p, in, Mode::Eval, 0, 1e-5, 1e-6);
    CHECK(r.checked == p.parameter_count() + static_cast<std::size_t>(in.size()));
    CHECK(r.max_rel_error < 1e-5);
  }
}

TEST_CASE("train-mode gradients respect the dropout mask") {
  std::mt19937_64 rng(5);
  auto c = small_net(2, 4, 16, {2}, 0.3);
  const auto p = init_params<double>(c, 3);
  const auto in = random_inputs(rng, 5, 4);
  REQUIRE(oracle::min_hidden_preactivation(p, in, Mode::Train, 77) > 1e-4);
  const auto r = oracle::check_decoder_gradients(p, in, Mode::Train, 77, 1e-5, 1e-6);
  CHECK(r.max_rel_error < 1e-5);

  const auto tape = forward(p, in, Mode::Train, 77);
  for (const auto& mask : tape.masks) {
    CHECK(((mask.array() == 0) || (mask.array() == 1)).all());
  }
  const auto again = forward(p, in, Mode::Train, 77);
  CHECK((again.output - tape.output).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval mode scales hidden activations by the keep probability") {
  std::mt19937_64 rng(8);
  auto with = small_net(0, 2, 8, {}, 0.25);
  auto without = with;
  without.dropout_rate = 0;
  const auto p = init_params<double>(with, 4);
  auto q = init_params<double>(without, 4);
  q.layers[1].v *= 0.75;
  q.layers[1].g *= 0.75;
  const auto in = random_inputs(rng, 3, 20);
  const auto a = forward(p, in, Mode::Eval).output;
  const auto b = forward(q, in, Mode::Eval).output;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward rejects stale or mismatched tapes") {
  std::mt19937_64 rng(3);
  auto p = init_params<double>(small_net(1, 3, 8, {}, 0), 1);
  const auto in = random_inputs(rng, 4, 5);
  const auto tape = forward(p, in, Mode::Eval);
  CHECK_THROWS_AS(backward(p, tape, Vector<double>(Vector<double>::Ones(4))), ContractViolation);
  ++p.revision;
  CHECK_THROWS_AS(backward(p, tape, Vector<double>(Vector<double>::Ones(5))), ContractViolation);
  const auto copy = p;
  const auto fresh = forward(p, in, Mode::Eval);
  CHECK_THROWS_AS(backward(copy, fresh, Vector<double>(Vector<double>::Ones(5))), ContractViolation);
}

TEST_CASE("backward without parameter gradients gives the same input gradient") {
  std::mt19937_64 rng(4);
  const auto p = init_params<double>(small_net(3, 4, 20, {2}, 0), 6);
  const auto in = random_inputs(rng, 6, 7);
  const auto tape = forward(p, in, Mode::Eval);
  const Vector<double> up = Vector<double>::LinSpaced(7, -1, 1);
  const auto full = backward(p, tape, up, true);
  const auto partial = backward(p, tape, up, false);
  CHECK(partial.layers.empty());
  CHECK((full.input - partial.input).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluate is independent of the worker count") {
  std::mt19937_64 rng(6);
  const auto p = init_params<float>(small_net(4, 4, 32, {2}, 0.1), 2);
  Matrix<float> in = random_inputs(rng, 7, 5000).cast<float>();
  const auto one = evaluate(p, in, 1);
  const auto four = evaluate(p, in, 4);
  CHECK((one - four).cwiseAbs().maxCoeff() == 0.0f);
  const auto direct = forward(p, in, Mode::Eval).output;
  CHECK((one - direct).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("spatial gradient matches central differences") {
  const auto p = init_params<double>(small_net(2, 3, 16, {}, 0), 12);
  const std::vector<double> z{0.3, -0.2};
  const Vec3 x{0.1, 0.2, -0.3};
  const auto sg = spatial_gradient<double>(p, z, x);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 up = x, down = x;
    up[k] += h;
    down[k] -= h;
    const double fd = (forward<double>(p, z, up, Mode::Eval).output(0) - forward<double>(p, z, down, Mode::Eval).output(0)) / (2 * h);
    CHECK(sg.gradient[k] == doctest::Approx(fd).epsilon(1e-6));
  }
  const std::vector<Vec3> pts{x, {0, 0, 0}, {0.5, 0.5, 0.5}};
  const auto many = spatial_gradients<double>(p, z, pts, 2);
  CHECK(norm(many[0] - sg.gradient) < 1e-12);
}

TEST_CASE("checkpoint round trip") {
  Checkpoint ck;
  ck.params = init_params<float>(small_net(3, 4, 16, {2}, 0.2), 5);
  ck.codebook = LatentCodebook(3);
  ck.codebook.add("a", Vector<float>::Constant(3, 0.5f));
  ck.codebook.add("b", Vector<float>::LinSpaced(3, -1, 1));
  std::stringstream buf;
  write_checkpoint(buf, ck);
  const Checkpoint back = read_checkpoint(buf);
  CHECK(back.params.config == ck.params.config);
  CHECK(back.params.checksum() == ck.params.checksum());
  CHECK(back.codebook.ids() == ck.codebook.ids());
  CHECK(back.codebook.at("b") == ck.codebook.at("b"));

  std::string bytes = buf.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);
  std::istringstream garbage("NOPE and more");
  CHECK_THROWS_AS(read_checkpoint(garbage), DataError);
}

TEST_CASE("codebook rejects duplicates and wrong sizes") {
  LatentCodebook cb(2);
  cb.add("x", Vector<float>::Zero(2));
  CHECK_THROWS_AS(cb.add("x", Vector<float>::Zero(2)), DataError);
  CHECK_THROWS_AS(cb.add("y", Vector<float>::Zero(3)), ShapeError);
  CHECK_THROWS_AS(cb.at("missing"), DataError);
  CHECK(cb.find("missing") == nullptr);
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "sdfforge/error.hpp"
#include "sdfforge/training.hpp"

using namespace sdfforge;

namespace {

SampleSet sphere_samples(std::size_t n, double radius, std::uint64_t seed, const std::string& id) {
  std::mt19937_64 rng(seed);
  SampleSet set;
  set.shape_id = id;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = uniform_in_ball(rng);
    set.samples.push_back({p, norm(p) - radius});
  }
  set.recount();
  return set;
}

NetConfig tiny_net(int latent) {
  NetConfig c;
  c.latent_dim = latent;
  c.n_layers = 3;
  c.hidden_width = 32;
  c.skip_layers = {};
  c.dropout_rate = 0;
  return c;
}

}  // namespace

TEST_CASE("clamped L1 loss and subgradient") {
  CHECK(clamped_l1(0.05, 0.02, 0.1) == doctest::Approx(0.03));
  CHECK(clamped_l1(0.5, -0.5, 0.1) == doctest::Approx(0.2));
  CHECK(clamped_l1(0.3, 0.2, 0.1) == 0.0);
  CHECK(clamped_l1_grad(0.05, 0.02, 0.1) == 1.0);
  CHECK(clamped_l1_grad(-0.05, 0.02, 0.1) == -1.0);
  CHECK(clamped_l1_grad(0.5, 0.0, 0.1) == 0.0);
  CHECK(clamped_l1_grad(-0.1, 0.0, 0.1) == 0.0);
  CHECK(clamped_l1_grad(0.05, 0.05, 0.1) == 0.0);
}

TEST_CASE("Adam hand-computed steps") {
  AdamState<double> st(2);
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g1{0.5, -4.0};
  adam_step<double>(st, p, g1, 0.1);
  // Bias correction makes the first step lr * g / (|g| + eps').
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-7));

  const double after_first = p[0];
  const std::vector<double> g2{0.25, 0.0};
  adam_step<double>(st, p, g2, 0.1);
  const double m = (0.9 * 0.1 * 0.5 + 0.1 * 0.25) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 0.25 + 0.001 * 0.0625) / (1 - 0.999 * 0.999);
  CHECK(p[0] == doctest::Approx(after_first - 0.1 * m / (std::sqrt(v) + 1e-8)).epsilon(1e-12));
  CHECK(st.step == 2);

  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0};
  const auto before = p;
  CHECK_THROWS_AS(adam_step<double>(st, p, bad, 0.1), NumericFault);
  CHECK(p == before);
  CHECK(st.step == 2);
}

TEST_CASE("balanced batches") {
  const SampleSet set = sphere_samples(400, 0.7, 1, "s");
  REQUIRE(set.n_positive > 60);
  REQUIRE(set.n_negative > 60);
  const auto idx = make_balanced_batch(set, 101, 7);
  CHECK(idx.size() == 101);
  std::size_t pos = 0;
  for (auto i : idx) pos += set.samples[i].s > 0 ? 1 : 0;
  CHECK(pos == 51);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
  CHECK(make_balanced_batch(set, 101, 7) == idx);
  CHECK(make_balanced_batch(set, 101, 8) != idx);
  CHECK_THROWS_AS(make_balanced_batch(set, 2 * set.n_negative + 10, 7), DataError);
}

TEST_CASE("flatten and assign parameters round trip") {
  auto p = init_params<double>(tiny_net(2), 3);
  auto flat = flatten_params(p);
  CHECK(flat.size() == p.parameter_count());
  for (auto& x : flat) x += 1.0;
  const auto rev = p.revision;
  assign_params<double>(p, flat);
  CHECK(flatten_params(p) == flat);
  CHECK(p.revision != rev);
}

TEST_CASE("batch objective latent gradient matches finite differences") {
  const auto p = init_params<double>(tiny_net(3), 4);
  const SampleSet a = sphere_samples(64, 0.4, 2, "a");
  const SampleSet b = sphere_samples(64, 0.6, 3, "b");
  std::vector<ShapeBatch> batch{{&a, {}}, {&b, {}}};
  for (std::size_t i = 0; i < 64; ++i) {
    batch[0].indices.push_back(i);
    batch[1].indices.push_back(i);
  }
  std::vector<Vector<double>> codes{Vector<double>::Constant(3, 0.1), Vector<double>::LinSpaced(3, -0.2, 0.2)};
  // Large delta keeps every sample on the linear branch of the loss.
  const double delta = 10, lambda = 0.3;
  const auto r = batch_objective<double>(p, batch, codes, delta, lambda, Mode::Eval, 0, false, 1);
  const double h = 1e-6;
  for (std::size_t s = 0; s < 2; ++s) {
    for (int k = 0; k < 3; ++k) {
      auto up = codes, down = codes;
      up[s](k) += h;
      down[s](k) -= h;
      const auto fu = batch_objective<double>(p, batch, up, delta, lambda, Mode::Eval, 0, false, 1);
      const auto fd = batch_objective<double>(p, batch, down, delta, lambda, Mode::Eval, 0, false, 1);
      const double numeric = (fu.sdf_loss + fu.reg_loss - fd.sdf_loss - fd.reg_loss) / (2 * h);
      CHECK(r.latent_grads[s](k) == doctest::Approx(numeric).epsilon(1e-5));
    }
  }
  const auto threaded = batch_objective<double>(p, batch, codes, delta, lambda, Mode::Eval, 0, true, 3);
  const auto serial = batch_objective<double>(p, batch, codes, delta, lambda, Mode::Eval, 0, true, 1);
  CHECK(threaded.sdf_loss == serial.sdf_loss);
  CHECK(flatten_grads(threaded.param_grads) == flatten_grads(serial.param_grads));
}

TEST_CASE("single-shape training reduces the loss and is thread invariant") {
  const SampleSet set = sphere_samples(3000, 0.5, 5, "s");
  TrainConfig tc;
  tc.samples_per_shape = 512;
  tc.epochs = 60;
  tc.decoder_lr_per_shape = 1e-3;
  tc.threads = 1;
  const auto one = train_single_shape(set, tiny_net(0), tc);
  tc.threads = 3;
  const auto three = train_single_shape(set, tiny_net(0), tc);
  CHECK(one.params.checksum() == three.params.checksum());
  REQUIRE(one.record.epochs.size() == 60);
  CHECK(one.record.epochs.back().sdf_loss < one.record.epochs.front().sdf_loss);
  for (const auto& e : one.record.epochs) {
    CHECK(e.sdf_loss >= 0);
    CHECK(e.sdf_loss <= 2 * tc.delta);
  }
  CHECK_THROWS_AS(train_single_shape(set, tiny_net(2), tc), PreconditionError);
}

TEST_CASE("auto-decoder training is reproducible and shrinks codes under a strong prior") {
  std::vector<SampleSet> sets{sphere_samples(1200, 0.6, 1, "a"), sphere_samples(1200, 0.7, 2, "b"),
                              sphere_samples(1200, 0.8, 3, "c")};
  TrainConfig tc;
  tc.samples_per_shape = 256;
  tc.shapes_per_batch = 2;
  tc.epochs = 15;
  tc.decoder_lr_per_shape = 5e-4;
  tc.seed = 9;
  const auto first = train_auto_decoder(sets, tiny_net(4), tc);
  tc.threads = 4;
  const auto second = train_auto_decoder(sets, tiny_net(4), tc);
  CHECK(first.params.checksum() == second.params.checksum());
  CHECK(first.codebook.ids() == std::vector<std::string>{"a", "b", "c"});
  for (std::size_t i = 0; i < 3; ++i) CHECK(first.codebook.code(i) == second.codebook.code(i));

  std::ostringstream csv;
  first.record.write_csv(csv);
  CHECK(csv.str().rfind("epoch,sdf_loss,reg_loss,seconds\n", 0) == 0);

  tc.lambda = 100;
  tc.shapes_per_batch = 3;
  tc.latent_lr = 1e-4;
  tc.latent_init_stddev = 0.5;
  double previous = std::numeric_limits<double>::infinity();
  bool monotone = true;
  train_auto_decoder(sets, tiny_net(4), tc, [&](const EpochLoss& e) {
    if (!(e.reg_loss < previous)) monotone = false;
    previous = e.reg_loss;
  });
  CHECK(monotone);
}

TEST_CASE("training rejects invalid configuration") {
  TrainConfig tc;
  tc.samples_per_shape = 1;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = {};
  tc.delta = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  CHECK(TrainConfig::prior_weight_from_sigma(1e-2) == doctest::Approx(1e4));
}

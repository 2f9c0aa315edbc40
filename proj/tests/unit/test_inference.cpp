#include <doctest.h>

#include <sstream>

#include "sdfforge/error.hpp"
#include "sdfforge/inference.hpp"

using namespace sdfforge;

namespace {

NetConfig tiny_net(int latent) {
  NetConfig c;
  c.latent_dim = latent;
  c.n_layers = 3;
  c.hidden_width = 24;
  c.skip_layers = {};
  c.dropout_rate = 0;
  return c;
}

DepthMap sphere_depth(int res) {
  const auto mesh = make_uv_sphere({}, 0.5, 48, 96);
  return render_depth(mesh, Camera::look_at({0, 0, 2}, {0, 0, 0}, res, res, 40));
}

}  // namespace

TEST_CASE("freespace loss") {
  CHECK(freespace_loss(0.3) == 0.0);
  CHECK(freespace_loss(-0.2) == doctest::Approx(0.2));
  CHECK(freespace_loss(0.0) == 0.0);
}

TEST_CASE("one hit pixel gives two samples and the requested free points") {
  DepthMap d;
  d.camera = Camera::look_at({0, 0, 2}, {0, 0, 0}, 3, 3, 40);
  d.pixels.resize(9);
  d.pixels[4].depth = 1.5;
  d.pixels[4].normal = {0, 0, 1};
  const auto obs = depth_to_observation(d, 0.01, 3, 1);
  REQUIRE(obs.sdf_samples.size() == 2);
  CHECK(obs.free_points.size() == 3);
  CHECK(obs.sdf_samples[0].s == doctest::Approx(0.01));
  CHECK(obs.sdf_samples[1].s == doctest::Approx(-0.01));
  CHECK(obs.sdf_samples[0].position.z == doctest::Approx(0.51));
  CHECK(obs.sdf_samples[1].position.z == doctest::Approx(0.49));
  for (const auto& p : obs.free_points) {
    CHECK(p.z < 2 - 0.05 * 1.5 + 1e-12);
    CHECK(p.z > 2 - 0.95 * 1.5 - 1e-12);
  }
  CHECK_THROWS_AS(depth_to_observation(d, 0.0, 2, 1), PreconditionError);
  d.pixels[4].depth = 0;
  CHECK_THROWS_AS(depth_to_observation(d, 0.01, 2, 1), DataError);
}

TEST_CASE("sphere observation samples carry their analytic distance") {
  const DepthMap d = sphere_depth(32);
  const double eta = 0.005;
  const auto obs = depth_to_observation(d, eta, 2, 3);
  CHECK(obs.sdf_samples.size() == 2 * d.hit_count());
  CHECK(obs.free_points.size() == 2 * d.hit_count());
  const auto sphere = AnalyticShape::sphere({}, 0.5);
  for (const auto& s : obs.sdf_samples) {
    // The tessellated sphere sits slightly inside the analytic one.
    CHECK(std::abs(sphere.sdf(s.position) - s.s) < 2e-3);
  }
  for (const auto& p : obs.free_points) CHECK(sphere.sdf(p) > -1e-3);
}

TEST_CASE("depth file round trip") {
  const DepthMap d = sphere_depth(8);
  std::stringstream buf;
  write_depth_map(buf, d);
  const DepthMap back = read_depth_map(buf);
  CHECK(back.camera.width == 8);
  CHECK(back.camera.height == 8);
  CHECK(back.hit_count() == d.hit_count());
  for (std::size_t i = 0; i < d.pixels.size(); ++i) {
    CHECK(back.pixels[i].depth == doctest::Approx(d.pixels[i].depth).epsilon(1e-6));
    CHECK(norm(back.pixels[i].normal - d.pixels[i].normal) < 1e-6);
  }
  std::istringstream bad("DPTX");
  CHECK_THROWS_AS(read_depth_map(bad), DataError);
}

TEST_CASE("inverse depth noise") {
  const DepthMap d = sphere_depth(16);
  const DepthMap same = perturb_depth(d, 0.0, 1);
  for (std::size_t i = 0; i < d.pixels.size(); ++i) CHECK(same.pixels[i].depth == d.pixels[i].depth);
  const DepthMap noisy = perturb_depth(d, 0.05, 1);
  bool changed = false;
  for (std::size_t i = 0; i < d.pixels.size(); ++i) {
    if (d.pixels[i].depth == 0) {
      CHECK(noisy.pixels[i].depth == 0);
    } else {
      CHECK(noisy.pixels[i].depth > 0);
      changed = changed || noisy.pixels[i].depth != d.pixels[i].depth;
    }
  }
  CHECK(changed);
  CHECK(perturb_depth(d, 0.05, 1).pixels[d.pixels.size() / 2].depth == noisy.pixels[d.pixels.size() / 2].depth);
  CHECK_THROWS_AS(perturb_depth(d, -1, 1), PreconditionError);
}

TEST_CASE("latent estimation leaves the decoder untouched and lowers the objective") {
  const auto params = init_params<float>(tiny_net(4), 3);
  const auto sphere = AnalyticShape::sphere({}, 0.3);
  std::vector<SdfSample> samples;
  for (const auto& d : fibonacci_sphere(300)) {
    samples.push_back({d * 0.3, 0.0});
    samples.push_back({d * 0.35, sphere.sdf(d * 0.35)});
  }
  const auto before = params.checksum();
  EstimateConfig cfg;
  cfg.iterations = 80;
  cfg.samples_per_iter = 0;
  const auto est = estimate_latent(params, samples, cfg);
  CHECK(params.checksum() == before);
  CHECK(est.z.size() == 4);
  REQUIRE(est.history.size() == 80);
  CHECK(est.objective <= est.history.front());
  cfg.threads = 3;
  CHECK(estimate_latent(params, samples, cfg).z == est.z);

  cfg.lambda = 1e3;
  cfg.iterations = 400;
  cfg.init_stddev = 0.5;
  const auto shrunk = estimate_latent(params, samples, cfg);
  CHECK(shrunk.z.norm() < 0.2);

  CHECK_THROWS_AS(estimate_latent(params, {}, cfg), PreconditionError);
}

TEST_CASE("completion without free points still runs") {
  const auto params = init_params<float>(tiny_net(3), 5);
  PartialObservation obs;
  obs.sdf_samples = {{{0.5, 0, 0}, 0.005}, {{0.49, 0, 0}, -0.005}};
  CompletionConfig cfg;
  cfg.iterations = 20;
  const auto est = complete_shape(params, obs, cfg);
  CHECK(std::isfinite(est.objective));
  cfg.eta = 0;
  CHECK_THROWS_AS(complete_shape(params, obs, cfg), ConfigError);
  cfg.eta = 0.005;
  cfg.delta = 0;
  CHECK_THROWS_AS(complete_shape(params, obs, cfg), ConfigError);
}

TEST_CASE("completion without free space matches latent estimation at the same clamp") {
  const auto params = init_params<float>(tiny_net(3), 8);
  const auto obs = depth_to_observation(sphere_depth(12), 0.005, 2, 4);
  for (double delta : {0.005, 0.1}) {
    CompletionConfig c;
    c.delta = delta;
    c.iterations = 30;
    c.use_free_space = false;
    c.seed = 9;
    EstimateConfig e;
    e.delta = delta;
    e.iterations = c.iterations;
    e.lr = c.lr;
    e.lambda = c.lambda;
    e.init_stddev = c.init_stddev;
    e.samples_per_iter = c.samples_per_iter;
    e.seed = c.seed;
    const auto a = complete_shape(params, obs, c);
    const auto b = estimate_latent(params, obs.sdf_samples, e);
    CHECK(a.z == b.z);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
  }
}

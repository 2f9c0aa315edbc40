#include "sdfforge/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "sdfforge/dataset.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/mesh_io.hpp"
#include "sdfforge/metrics.hpp"
#include "sdfforge/parallel.hpp"
#include "sdfforge/surfacing.hpp"

namespace sdfforge {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const std::string item = trim(value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(parse_number<int>(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(PipelineConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"out_dir", [](PipelineConfig& c, const std::string& v) { c.out_dir = v; }},
      {"seed", [](PipelineConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"threads", [](PipelineConfig& c, const std::string& v) { c.threads = parse_number<int>("threads", v); }},
      {"family", [](PipelineConfig& c, const std::string& v) { c.family = v; }},
      {"family_count",
       [](PipelineConfig& c, const std::string& v) { c.family_count = parse_number<std::size_t>("family_count", v); }},
      {"n_surface",
       [](PipelineConfig& c, const std::string& v) { c.n_surface = parse_number<std::size_t>("n_surface", v); }},
      {"n_uniform",
       [](PipelineConfig& c, const std::string& v) { c.n_uniform = parse_number<std::size_t>("n_uniform", v); }},
      {"mesh_resolution",
       [](PipelineConfig& c, const std::string& v) { c.mesh_resolution = parse_number<int>("mesh_resolution", v); }},
      {"latent_dim", [](PipelineConfig& c, const std::string& v) { c.latent_dim = parse_number<int>("latent_dim", v); }},
      {"layers", [](PipelineConfig& c, const std::string& v) { c.layers = parse_number<int>("layers", v); }},
      {"hidden", [](PipelineConfig& c, const std::string& v) { c.hidden = parse_number<int>("hidden", v); }},
      {"skip", [](PipelineConfig& c, const std::string& v) { c.skip = parse_int_list("skip", v); }},
      {"dropout", [](PipelineConfig& c, const std::string& v) { c.dropout = parse_number<double>("dropout", v); }},
      {"delta", [](PipelineConfig& c, const std::string& v) { c.delta = parse_number<double>("delta", v); }},
      {"lambda", [](PipelineConfig& c, const std::string& v) { c.lambda = parse_number<double>("lambda", v); }},
      {"latent_lr", [](PipelineConfig& c, const std::string& v) { c.latent_lr = parse_number<double>("latent_lr", v); }},
      {"decoder_lr_per_shape",
       [](PipelineConfig& c, const std::string& v) {
         c.decoder_lr_per_shape = parse_number<double>("decoder_lr_per_shape", v);
       }},
      {"epochs", [](PipelineConfig& c, const std::string& v) { c.epochs = parse_number<int>("epochs", v); }},
      {"samples_per_step",
       [](PipelineConfig& c, const std::string& v) {
         c.samples_per_step = parse_number<std::size_t>("samples_per_step", v);
       }},
      {"shapes_per_batch",
       [](PipelineConfig& c, const std::string& v) {
         c.shapes_per_batch = parse_number<std::size_t>("shapes_per_batch", v);
       }},
      {"latent_init_stddev",
       [](PipelineConfig& c, const std::string& v) {
         c.latent_init_stddev = parse_number<double>("latent_init_stddev", v);
       }},
      {"mc_resolution",
       [](PipelineConfig& c, const std::string& v) { c.mc_resolution = parse_number<int>("mc_resolution", v); }},
      {"eval_points",
       [](PipelineConfig& c, const std::string& v) { c.eval_points = parse_number<std::size_t>("eval_points", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(*this, value);
}

PipelineConfig PipelineConfig::parse(std::istream& in, const std::string& source) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(where + "key '" + key + "' given twice");
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

NetConfig PipelineConfig::net() const {
  NetConfig n;
  n.latent_dim = latent_dim;
  n.hidden_width = hidden;
  n.n_layers = layers;
  n.skip_layers = skip;
  n.dropout_rate = dropout;
  n.seed = seed;
  n.validate();
  return n;
}

TrainConfig PipelineConfig::train() const {
  TrainConfig t;
  t.delta = delta;
  t.lambda = lambda;
  t.latent_lr = latent_lr;
  t.decoder_lr_per_shape = decoder_lr_per_shape;
  t.epochs = epochs;
  t.samples_per_shape = samples_per_step;
  t.shapes_per_batch = shapes_per_batch;
  t.latent_init_stddev = latent_init_stddev;
  t.seed = seed;
  t.threads = resolve_threads(threads);
  t.validate();
  return t;
}

std::string PipelineSummary::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["first_objective"] = first_objective;
  j["final_sdf_loss"] = final_sdf_loss;
  j["final_reg_loss"] = final_reg_loss;
  j["shapes"] = nlohmann::ordered_json::array();
  for (const auto& s : shapes) j["shapes"].push_back({{"shape_id", s.shape_id}, {"chamfer", s.chamfer}});
  j["mean_chamfer"] = mean_chamfer;
  j["wall_seconds"] = {{"generate", gen_seconds}, {"train", train_seconds}, {"evaluate", eval_seconds}};
  return j.dump(2);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + name + "' failed: " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Data, "stage '" + name + "' failed: " + e.what());
  }
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& config, std::ostream* log) {
  const NetConfig net = run_stage("config", [&] { return config.net(); });
  const TrainConfig train = run_stage("config", [&] { return config.train(); });
  const int threads = train.threads;
  PipelineSummary summary;
  const fs::path data_dir = config.out_dir / "data";

  auto start = Clock::now();
  const Manifest manifest = run_stage("generate", [&] {
    AnalyticSampling sampling;
    sampling.n_surface = config.n_surface;
    sampling.n_uniform = config.n_uniform;
    const auto family = ProceduralFamily::sweep(parse_family_kind(config.family), config.family_count, config.seed);
    return generate_family(family, sampling, data_dir, config.mesh_resolution, threads);
  });
  summary.gen_seconds = seconds_since(start);
  if (log) *log << "generated " << manifest.records.size() << " shapes in " << data_dir.string() << '\n';

  start = Clock::now();
  const AutoDecoderResult trained = run_stage("train", [&] {
    const auto sets = load_sample_sets(manifest);
    const int report_every = std::max(1, train.epochs / 10);
    return train_auto_decoder(sets, net, train, [&](const EpochLoss& e) {
      if (log && (e.epoch % report_every == 0 || e.epoch + 1 == train.epochs)) {
        *log << "epoch " << e.epoch << " sdf " << e.sdf_loss << " reg " << e.reg_loss << '\n';
      }
    });
  });
  summary.train_seconds = seconds_since(start);
  summary.epochs = static_cast<int>(trained.record.epochs.size());
  if (!trained.record.epochs.empty()) {
    const auto& first = trained.record.epochs.front();
    const auto& last = trained.record.epochs.back();
    summary.first_objective = first.sdf_loss + first.reg_loss;
    summary.final_sdf_loss = last.sdf_loss;
    summary.final_reg_loss = last.reg_loss;
  }
  run_stage("save", [&] {
    write_checkpoint(config.out_dir / "checkpoint.dsdf", Checkpoint{trained.params, trained.codebook});
    std::ofstream csv(config.out_dir / "loss.csv");
    if (!csv) throw DataError("cannot write " + (config.out_dir / "loss.csv").string());
    trained.record.write_csv(csv);
  });

  start = Clock::now();
  run_stage("evaluate", [&] {
    const fs::path mesh_dir = config.out_dir / "meshes";
    fs::create_directories(mesh_dir);
    double total = 0;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      const ManifestRecord& r = manifest.records[i];
      const Vector<float>& z = trained.codebook.at(r.shape_id);
      const IsoMesh iso = extract_mesh(trained.params, std::span(z.data(), static_cast<std::size_t>(z.size())),
                                       config.mc_resolution, Bounds{}, threads);
      write_obj(mesh_dir / (r.shape_id + ".obj"), iso.mesh, iso.vertex_normals);
      double chamfer = std::numeric_limits<double>::infinity();
      if (!iso.mesh.empty()) {
        const TriangleMesh gt = load_obj(r.mesh);
        const auto gen_pts = sample_points(iso.mesh, config.eval_points, config.seed + 2 * i);
        const auto gt_pts = sample_points(gt, config.eval_points, config.seed + 2 * i + 1);
        chamfer = chamfer_distance(gen_pts, gt_pts, threads);
      }
      summary.shapes.push_back({r.shape_id, chamfer});
      total += chamfer;
      if (log) *log << r.shape_id << " chamfer " << chamfer << '\n';
    }
    summary.mean_chamfer = total / static_cast<double>(manifest.records.size());
  });
  summary.eval_seconds = seconds_since(start);

  run_stage("summary", [&] {
    std::ofstream out(config.out_dir / "summary.json");
    if (!out) throw DataError("cannot write " + (config.out_dir / "summary.json").string());
    out << summary.to_json() << '\n';
  });
  return summary;
}

}  // namespace sdfforge

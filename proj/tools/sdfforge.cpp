// Command line front end: dataset generation, training, inference,
// surfacing and evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdfforge/sdfforge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sdfforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (0: $SDFFORGE_THREADS or 1)")->capture_default_str();
}

Vec3 parse_vec3(const std::string& text, const std::string& flag) {
  Vec3 v;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof()) {
    throw ConfigError(flag + " expects x,y,z (got '" + text + "')");
  }
  return v;
}

std::span<const float> as_span(const Vector<float>& z) { return {z.data(), static_cast<std::size_t>(z.size())}; }

void write_latent(const fs::path& path, const Vector<float>& z) {
  json j;
  j["dim"] = z.size();
  j["latent"] = std::vector<float>(z.data(), z.data() + z.size());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write latent file " + path.string());
  out << j.dump() << '\n';
}

Vector<float> read_latent(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open latent file " + path.string());
  try {
    const json j = json::parse(in);
    const auto values = j.at("latent").get<std::vector<float>>();
    if (j.at("dim").get<std::size_t>() != values.size()) throw DataError("latent file dimension mismatch");
    Vector<float> z(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) z(static_cast<Eigen::Index>(i)) = values[i];
    if (!z.allFinite()) throw NumericFault("latent file contains non-finite values");
    return z;
  } catch (const json::exception& e) {
    throw DataError("malformed latent file " + path.string() + ": " + e.what());
  }
}

Vector<float> select_latent(const Checkpoint& ckpt, const std::string& shape_id, const std::string& latent_file) {
  Vector<float> z;
  if (!latent_file.empty()) {
    z = read_latent(latent_file);
  } else if (!shape_id.empty()) {
    z = ckpt.codebook.at(shape_id);
  } else if (ckpt.params.config.latent_dim == 0) {
    z.resize(0);
  } else {
    throw ConfigError("one of --shape-id or --latent-file is required");
  }
  if (z.size() != ckpt.params.config.latent_dim) throw ShapeError("latent code does not match the checkpoint");
  return z;
}

void write_iso_mesh(const fs::path& path, const IsoMesh& mesh) {
  if (mesh.mesh.empty()) std::cerr << "warning: extracted surface is empty\n";
  write_obj(path, mesh.mesh, mesh.vertex_normals);
}

void print_loss(const EpochLoss& e, int epochs) {
  const int every = std::max(1, epochs / 20);
  if (e.epoch % every == 0 || e.epoch + 1 == epochs) {
    std::cerr << "epoch " << e.epoch << " sdf " << e.sdf_loss << " reg " << e.reg_loss << " (" << e.seconds << " s)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdfforge: learned signed distance functions for shape families"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  // gen-family
  Common gen_c;
  std::string gen_family = "boxes";
  std::size_t gen_count = 20;
  std::vector<double> gen_params;
  fs::path gen_out;
  AnalyticSampling gen_sampling;
  int gen_mesh_res = 128;
  std::string gen_prefix;
  auto* gen = app.add_subcommand("gen-family", "Generate a procedural shape family with exact SDF samples");
  gen->add_option("--family", gen_family, "boxes | spheres | tori")->capture_default_str();
  gen->add_option("--count", gen_count, "Members, evenly spaced over the family parameter")->capture_default_str();
  gen->add_option("--params", gen_params, "Explicit family parameters in [0,1] (overrides --count)");
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  gen->add_option("--n-surface", gen_sampling.n_surface, "Surface points per shape")->capture_default_str();
  gen->add_option("--n-uniform", gen_sampling.n_uniform, "Uniform points per shape")->capture_default_str();
  gen->add_option("--mesh-res", gen_mesh_res, "Marching cubes cells per axis for curved ground truth")
      ->capture_default_str();
  gen->add_option("--id-prefix", gen_prefix, "Prefix for shape ids");
  add_common(gen, gen_c);

  // prepare
  Common prep_c;
  std::vector<fs::path> prep_meshes;
  fs::path prep_out;
  PrepConfig prep_cfg;
  auto* prep = app.add_subcommand("prepare", "Sample SDF values from OBJ meshes");
  prep->add_option("--mesh", prep_meshes, "Input OBJ files")->required();
  prep->add_option("--out-dir", prep_out, "Output directory")->required();
  prep->add_option("--cameras", prep_cfg.n_cameras, "Virtual cameras")->capture_default_str();
  prep->add_option("--depth-res", prep_cfg.depth_resolution, "Virtual depth map resolution")->capture_default_str();
  prep->add_option("--n-surface", prep_cfg.n_surface, "Surface points per shape")->capture_default_str();
  prep->add_option("--n-uniform", prep_cfg.n_uniform, "Uniform points per shape")->capture_default_str();
  prep->add_option("--reject", prep_cfg.double_sided_reject_fraction, "Double-sided triangle fraction limit")
      ->capture_default_str();
  add_common(prep, prep_c);

  // train
  Common train_c;
  fs::path train_manifest, train_out, train_csv;
  NetConfig train_net;
  TrainConfig train_cfg;
  auto* train = app.add_subcommand("train", "Train an auto-decoder on a manifest of sample sets");
  train->add_option("--manifest", train_manifest, "Manifest (JSON lines)")->required();
  train->add_option("--latent-dim", train_net.latent_dim, "Latent code size")->capture_default_str();
  train->add_option("--layers", train_net.n_layers, "Fully connected layers incl. output")->capture_default_str();
  train->add_option("--hidden", train_net.hidden_width, "Hidden width")->capture_default_str();
  train->add_option("--skip", train_net.skip_layers, "Layers followed by an input skip connection")
      ->capture_default_str();
  train->add_flag_callback("--no-skip", [&] { train_net.skip_layers.clear(); }, "Disable skip connections");
  train->add_option("--dropout", train_net.dropout_rate, "Dropout probability")->capture_default_str();
  train->add_option("--delta", train_cfg.delta, "Clamp distance")->capture_default_str();
  train->add_option("--lambda", train_cfg.lambda, "Latent regularization weight")->capture_default_str();
  train->add_option("--epochs", train_cfg.epochs, "Epochs")->capture_default_str();
  train->add_option("--samples-per-step", train_cfg.samples_per_shape, "Samples per shape and step")
      ->capture_default_str();
  train->add_option("--shapes-per-batch", train_cfg.shapes_per_batch, "Shapes per step")->capture_default_str();
  train->add_option("--decoder-lr", train_cfg.decoder_lr_per_shape, "Decoder learning rate per batch shape")
      ->capture_default_str();
  train->add_option("--latent-lr", train_cfg.latent_lr, "Latent learning rate")->capture_default_str();
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--loss-csv", train_csv, "Per-epoch loss CSV");
  add_common(train, train_c);

  // train-single
  Common single_c;
  fs::path single_samples, single_out, single_csv;
  NetConfig single_net;
  single_net.latent_dim = 0;
  TrainConfig single_cfg;
  auto* single = app.add_subcommand("train-single", "Fit a decoder without latent code to one shape");
  single->add_option("--samples", single_samples, "Sample file (SDFS)")->required();
  single->add_option("--layers", single_net.n_layers, "Fully connected layers incl. output")->capture_default_str();
  single->add_option("--hidden", single_net.hidden_width, "Hidden width")->capture_default_str();
  single->add_option("--skip", single_net.skip_layers, "Layers followed by an input skip connection")
      ->capture_default_str();
  single->add_flag_callback("--no-skip", [&] { single_net.skip_layers.clear(); }, "Disable skip connections");
  single->add_option("--dropout", single_net.dropout_rate, "Dropout probability")->capture_default_str();
  single->add_option("--delta", single_cfg.delta, "Clamp distance")->capture_default_str();
  single->add_option("--epochs", single_cfg.epochs, "Adam steps")->capture_default_str();
  single->add_option("--samples-per-step", single_cfg.samples_per_shape, "Samples per step")->capture_default_str();
  single->add_option("--lr", single_cfg.decoder_lr_per_shape, "Learning rate")->capture_default_str();
  single->add_option("--out", single_out, "Checkpoint path")->required();
  single->add_option("--loss-csv", single_csv, "Per-epoch loss CSV");
  add_common(single, single_c);

  // embed
  Common embed_c;
  fs::path embed_ckpt, embed_samples, embed_latent, embed_mesh;
  EstimateConfig embed_cfg;
  int embed_res = 64;
  auto* embed = app.add_subcommand("embed", "Estimate the latent code of an unseen shape from SDF samples");
  embed->add_option("--checkpoint", embed_ckpt, "Checkpoint")->required();
  embed->add_option("--samples", embed_samples, "Sample file (SDFS)")->required();
  embed->add_option("--lambda", embed_cfg.lambda, "Latent regularization weight")->capture_default_str();
  embed->add_option("--iters", embed_cfg.iterations, "Adam iterations")->capture_default_str();
  embed->add_option("--lr", embed_cfg.lr, "Learning rate")->capture_default_str();
  embed->add_option("--delta", embed_cfg.delta, "Clamp distance")->capture_default_str();
  embed->add_option("--samples-per-iter", embed_cfg.samples_per_iter, "Samples per iteration (0: all)")
      ->capture_default_str();
  embed->add_option("--out-latent", embed_latent, "Latent code output (JSON)")->required();
  embed->add_option("--out-mesh", embed_mesh, "Optional reconstructed mesh (OBJ)");
  embed->add_option("--res", embed_res, "Marching cubes cells per axis")->capture_default_str();
  add_common(embed, embed_c);

  // complete
  Common comp_c;
  fs::path comp_ckpt, comp_depth, comp_latent, comp_mesh;
  CompletionConfig comp_cfg;
  double comp_alpha = 0;
  bool comp_no_free = false;
  int comp_res = 64;
  auto* comp = app.add_subcommand("complete", "Complete a shape from one depth observation");
  comp->add_option("--checkpoint", comp_ckpt, "Checkpoint")->required();
  comp->add_option("--depth", comp_depth, "Depth file (DPTH)")->required();
  comp->add_option("--eta", comp_cfg.eta, "Offset along the normal for observed samples")->capture_default_str();
  comp->add_option("--alpha", comp_alpha, "Inverse-depth noise standard deviation")->capture_default_str();
  comp->add_option("--delta", comp_cfg.delta, "Clamp distance of the SDF term")->capture_default_str();
  comp->add_option("--iters", comp_cfg.iterations, "Adam iterations")->capture_default_str();
  comp->add_option("--lr", comp_cfg.lr, "Learning rate")->capture_default_str();
  comp->add_option("--lambda", comp_cfg.lambda, "Latent regularization weight")->capture_default_str();
  comp->add_option("--free-per-ray", comp_cfg.free_points_per_ray, "Free-space points per ray")->capture_default_str();
  comp->add_flag("--no-free-space", comp_no_free, "Disable the free-space term");
  comp->add_option("--out-latent", comp_latent, "Latent code output (JSON)")->required();
  comp->add_option("--out-mesh", comp_mesh, "Optional completed mesh (OBJ)");
  comp->add_option("--res", comp_res, "Marching cubes cells per axis")->capture_default_str();
  add_common(comp, comp_c);

  // depth
  Common depth_c;
  fs::path depth_mesh, depth_out;
  int depth_w = 128, depth_h = 128;
  double depth_fov = 60;
  std::string depth_eye = "0,0,2", depth_target = "0,0,0";
  auto* depth = app.add_subcommand("depth", "Render a depth observation of an OBJ mesh");
  depth->add_option("--mesh", depth_mesh, "Input OBJ")->required();
  depth->add_option("--width", depth_w, "Image width")->capture_default_str();
  depth->add_option("--height", depth_h, "Image height")->capture_default_str();
  depth->add_option("--fov", depth_fov, "Vertical field of view in degrees")->capture_default_str();
  depth->add_option("--eye", depth_eye, "Camera position x,y,z")->capture_default_str();
  depth->add_option("--target", depth_target, "Look-at point x,y,z")->capture_default_str();
  depth->add_option("--out", depth_out, "Depth file (DPTH)")->required();
  add_common(depth, depth_c);

  // extract
  Common ext_c;
  fs::path ext_ckpt, ext_latent, ext_out;
  std::string ext_id;
  int ext_res = 64;
  auto* ext = app.add_subcommand("extract", "Extract a mesh with marching cubes");
  ext->add_option("--checkpoint", ext_ckpt, "Checkpoint")->required();
  ext->add_option("--shape-id", ext_id, "Training shape id");
  ext->add_option("--latent-file", ext_latent, "Latent code (JSON)");
  ext->add_option("--res", ext_res, "Marching cubes cells per axis")->capture_default_str();
  ext->add_option("--out", ext_out, "Output OBJ")->required();
  add_common(ext, ext_c);

  // render
  Common ren_c;
  fs::path ren_ckpt, ren_latent, ren_out;
  std::string ren_id, ren_eye = "0,0,2.5", ren_target = "0,0,0", ren_light;
  int ren_w = 256, ren_h = 256;
  double ren_fov = 60;
  TraceConfig ren_trace;
  auto* ren = app.add_subcommand("render", "Sphere-trace the surface into a PPM image");
  ren->add_option("--checkpoint", ren_ckpt, "Checkpoint")->required();
  ren->add_option("--shape-id", ren_id, "Training shape id");
  ren->add_option("--latent-file", ren_latent, "Latent code (JSON)");
  ren->add_option("--width", ren_w, "Image width")->capture_default_str();
  ren->add_option("--height", ren_h, "Image height")->capture_default_str();
  ren->add_option("--camera", ren_eye, "Camera position x,y,z")->capture_default_str();
  ren->add_option("--target", ren_target, "Look-at point x,y,z")->capture_default_str();
  ren->add_option("--fov", ren_fov, "Vertical field of view in degrees")->capture_default_str();
  ren->add_option("--light", ren_light, "Direction towards the light x,y,z (default: towards the camera)");
  ren->add_option("--max-steps", ren_trace.max_steps, "Sphere tracing step limit")->capture_default_str();
  ren->add_option("--eps", ren_trace.surface_eps, "Hit threshold")->capture_default_str();
  ren->add_option("--out", ren_out, "Output PPM")->required();
  add_common(ren, ren_c);

  // interp
  Common int_c;
  fs::path int_ckpt, int_out;
  std::string int_a, int_b;
  int int_steps = 5, int_res = 64;
  auto* interp = app.add_subcommand("interp", "Extract meshes along the line between two latent codes");
  interp->add_option("--checkpoint", int_ckpt, "Checkpoint")->required();
  interp->add_option("--a", int_a, "First shape id")->required();
  interp->add_option("--b", int_b, "Second shape id")->required();
  interp->add_option("--steps", int_steps, "Number of meshes, t = k / (steps - 1)")->capture_default_str();
  interp->add_option("--res", int_res, "Marching cubes cells per axis")->capture_default_str();
  interp->add_option("--out-dir", int_out, "Output directory")->required();
  add_common(interp, int_c);

  // eval
  Common ev_c;
  fs::path ev_gen, ev_gt;
  std::vector<std::string> ev_metrics{"chamfer", "emd", "acc", "comp", "cos"};
  std::size_t ev_n_chamfer = 30000, ev_n_emd = 500, ev_n_acc = 1000, ev_n_comp = 1000, ev_n_cos = 2500;
  double ev_percentile = 0.9, ev_comp_delta = 0.01;
  auto* ev = app.add_subcommand("eval", "Compare a generated mesh against ground truth");
  ev->add_option("--gen", ev_gen, "Generated OBJ")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth OBJ")->required();
  ev->add_option("--metrics", ev_metrics, "chamfer,emd,acc,comp,cos")->delimiter(',')->capture_default_str();
  ev->add_option("--n-chamfer", ev_n_chamfer, "Points per set for Chamfer")->capture_default_str();
  ev->add_option("--n-emd", ev_n_emd, "Points per set for EMD")->capture_default_str();
  ev->add_option("--n-acc", ev_n_acc, "Generated points for accuracy")->capture_default_str();
  ev->add_option("--n-comp", ev_n_comp, "Ground-truth points for completion")->capture_default_str();
  ev->add_option("--n-cos", ev_n_cos, "Ground-truth points for normal cosine")->capture_default_str();
  ev->add_option("--percentile", ev_percentile, "Accuracy percentile")->capture_default_str();
  ev->add_option("--comp-delta", ev_comp_delta, "Completion distance threshold")->capture_default_str();
  add_common(ev, ev_c);

  // pipeline
  Common pipe_c;
  fs::path pipe_config, pipe_out;
  auto* pipe = app.add_subcommand("pipeline", "Run generate, train and evaluate from a config file");
  pipe->add_option("--config", pipe_config, "Config file (key = value)")->required();
  pipe->add_option("--out-dir", pipe_out, "Override the configured output directory");
  add_common(pipe, pipe_c);

  // info
  fs::path info_ckpt;
  auto* info = app.add_subcommand("info", "Print the configuration stored in a checkpoint");
  info->add_option("--checkpoint", info_ckpt, "Checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      ProceduralFamily family = gen_params.empty()
                                    ? ProceduralFamily::sweep(parse_family_kind(gen_family), gen_count, gen_c.seed)
                                    : ProceduralFamily{parse_family_kind(gen_family), gen_params, gen_c.seed};
      const Manifest m =
          generate_family(family, gen_sampling, gen_out, gen_mesh_res, resolve_threads(gen_c.threads), gen_prefix);
      std::cout << "wrote " << m.records.size() << " shapes to " << (gen_out / "manifest.jsonl").string() << '\n';
    } else if (*prep) {
      std::vector<std::string> rejected;
      const Manifest m =
          prepare_meshes(prep_meshes, prep_cfg, prep_out, prep_c.seed, resolve_threads(prep_c.threads), &rejected);
      for (const auto& id : rejected) std::cerr << "rejected " << id << " (double-sided triangles)\n";
      std::cout << "wrote " << m.records.size() << " shapes to " << (prep_out / "manifest.jsonl").string() << '\n';
    } else if (*train) {
      train_net.seed = train_c.seed;
      train_cfg.seed = train_c.seed;
      train_cfg.threads = resolve_threads(train_c.threads);
      const auto sets = load_sample_sets(read_manifest(train_manifest));
      const auto result = train_auto_decoder(sets, train_net, train_cfg,
                                             [&](const EpochLoss& e) { print_loss(e, train_cfg.epochs); });
      write_checkpoint(train_out, Checkpoint{result.params, result.codebook});
      if (!train_csv.empty()) {
        std::ofstream csv(train_csv);
        if (!csv) throw DataError("cannot write " + train_csv.string());
        result.record.write_csv(csv);
      }
    } else if (*single) {
      single_net.seed = single_c.seed;
      single_cfg.seed = single_c.seed;
      single_cfg.threads = resolve_threads(single_c.threads);
      const SampleSet set = read_sample_set(single_samples, single_samples.stem().string());
      const auto result = train_single_shape(set, single_net, single_cfg,
                                             [&](const EpochLoss& e) { print_loss(e, single_cfg.epochs); });
      write_checkpoint(single_out, Checkpoint{result.params, LatentCodebook(0)});
      if (!single_csv.empty()) {
        std::ofstream csv(single_csv);
        if (!csv) throw DataError("cannot write " + single_csv.string());
        result.record.write_csv(csv);
      }
    } else if (*embed) {
      const Checkpoint ckpt = read_checkpoint(embed_ckpt);
      const SampleSet set = read_sample_set(embed_samples, embed_samples.stem().string());
      embed_cfg.seed = embed_c.seed;
      embed_cfg.threads = resolve_threads(embed_c.threads);
      const LatentEstimate est = estimate_latent(ckpt.params, set.samples, embed_cfg);
      write_latent(embed_latent, est.z);
      if (!embed_mesh.empty()) {
        write_iso_mesh(embed_mesh, extract_mesh(ckpt.params, as_span(est.z), embed_res, Bounds{}, embed_cfg.threads));
      }
      std::cout << json{{"objective", est.objective}}.dump() << '\n';
    } else if (*comp) {
      const Checkpoint ckpt = read_checkpoint(comp_ckpt);
      DepthMap map = read_depth_map(comp_depth);
      if (comp_alpha > 0) map = perturb_depth(map, comp_alpha, comp_c.seed);
      comp_cfg.use_free_space = !comp_no_free;
      comp_cfg.seed = comp_c.seed;
      comp_cfg.threads = resolve_threads(comp_c.threads);
      const auto obs = depth_to_observation(map, comp_cfg.eta, comp_cfg.free_points_per_ray, comp_c.seed);
      const LatentEstimate est = complete_shape(ckpt.params, obs, comp_cfg);
      write_latent(comp_latent, est.z);
      if (!comp_mesh.empty()) {
        write_iso_mesh(comp_mesh, extract_mesh(ckpt.params, as_span(est.z), comp_res, Bounds{}, comp_cfg.threads));
      }
      std::cout << json{{"objective", est.objective}}.dump() << '\n';
    } else if (*depth) {
      const TriangleMesh mesh = load_obj(depth_mesh);
      const Camera cam = Camera::look_at(parse_vec3(depth_eye, "--eye"), parse_vec3(depth_target, "--target"),
                                         depth_w, depth_h, depth_fov);
      const DepthMap map = render_depth(mesh, cam);
      write_depth_map(depth_out, map);
      std::cout << "hit pixels: " << map.hit_count() << '\n';
    } else if (*ext) {
      const Checkpoint ckpt = read_checkpoint(ext_ckpt);
      const Vector<float> z = select_latent(ckpt, ext_id, ext_latent.string());
      write_iso_mesh(ext_out, extract_mesh(ckpt.params, as_span(z), ext_res, Bounds{}, resolve_threads(ext_c.threads)));
    } else if (*ren) {
      const Checkpoint ckpt = read_checkpoint(ren_ckpt);
      const Vector<float> z = select_latent(ckpt, ren_id, ren_latent.string());
      const Vec3 eye = parse_vec3(ren_eye, "--camera");
      const Vec3 target = parse_vec3(ren_target, "--target");
      const Camera cam = Camera::look_at(eye, target, ren_w, ren_h, ren_fov);
      const Vec3 light = ren_light.empty() ? eye - target : parse_vec3(ren_light, "--light");
      const RenderResult r = render(ckpt.params, as_span(z), cam, light, ren_trace, resolve_threads(ren_c.threads));
      write_ppm(ren_out, r.image);
    } else if (*interp) {
      if (int_steps < 2) throw ConfigError("--steps must be >= 2");
      const Checkpoint ckpt = read_checkpoint(int_ckpt);
      const Vector<float>& za = ckpt.codebook.at(int_a);
      const Vector<float>& zb = ckpt.codebook.at(int_b);
      fs::create_directories(int_out);
      const int threads = resolve_threads(int_c.threads);
      for (int k = 0; k < int_steps; ++k) {
        const double t = static_cast<double>(k) / (int_steps - 1);
        const Vector<float> z = interpolate_latents(za, zb, t);
        char name[32];
        std::snprintf(name, sizeof name, "interp_%03d", k);
        write_latent(int_out / (std::string(name) + ".json"), z);
        write_iso_mesh(int_out / (std::string(name) + ".obj"),
                       extract_mesh(ckpt.params, as_span(z), int_res, Bounds{}, threads));
      }
    } else if (*ev) {
      const TriangleMesh gen_mesh = load_obj(ev_gen);
      const TriangleMesh gt_mesh = load_obj(ev_gt);
      const int threads = resolve_threads(ev_c.threads);
      const std::uint64_t s = ev_c.seed;
      nlohmann::ordered_json out;
      for (const auto& m : ev_metrics) {
        if (m == "chamfer") {
          out["chamfer"] = chamfer_distance(sample_points(gen_mesh, ev_n_chamfer, s),
                                            sample_points(gt_mesh, ev_n_chamfer, s + 1), threads);
        } else if (m == "emd") {
          out["emd"] = emd(sample_points(gen_mesh, ev_n_emd, s + 2), sample_points(gt_mesh, ev_n_emd, s + 3));
        } else if (m == "acc") {
          out["acc"] = mesh_accuracy(sample_points(gen_mesh, ev_n_acc, s + 4), gt_mesh, ev_percentile, threads);
        } else if (m == "comp") {
          out["comp"] = mesh_completion(gen_mesh, sample_points(gt_mesh, ev_n_comp, s + 5), ev_comp_delta, threads);
        } else if (m == "cos") {
          out["cos"] = cosine_similarity(gen_mesh, sample_surface(gt_mesh, ev_n_cos, s + 6), threads);
        } else {
          throw ConfigError("unknown metric '" + m + "' (expected chamfer, emd, acc, comp or cos)");
        }
      }
      std::cout << out.dump() << '\n';
    } else if (*pipe) {
      PipelineConfig cfg = PipelineConfig::load(pipe_config);
      if (!pipe_out.empty()) cfg.out_dir = pipe_out;
      if (pipe->count("--seed")) cfg.seed = pipe_c.seed;
      if (pipe->count("--threads")) cfg.threads = pipe_c.threads;
      const PipelineSummary summary = run_pipeline(cfg, &std::cerr);
      std::cout << "mean chamfer " << summary.mean_chamfer << ", summary in "
                << (cfg.out_dir / "summary.json").string() << '\n';
    } else if (*info) {
      const Checkpoint ckpt = read_checkpoint(info_ckpt);
      const NetConfig& c = ckpt.params.config;
      nlohmann::ordered_json j;
      j["latent_dim"] = c.latent_dim;
      j["hidden_width"] = c.hidden_width;
      j["n_layers"] = c.n_layers;
      j["skip_layers"] = c.skip_layers;
      j["dropout_rate"] = c.dropout_rate;
      j["seed"] = c.seed;
      j["parameters"] = ckpt.params.parameter_count();
      j["shapes"] = ckpt.codebook.ids();
      std::cout << j.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config: return kExitConfig;
      case ErrorKind::Data: return kExitData;
      case ErrorKind::Numeric: return kExitNumeric;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sdfforge/decoder.hpp"
#include "sdfforge/training.hpp"

namespace sdfforge {

/// End-to-end experiment settings read from flat `key = value` text
/// (`#` starts a comment). Unknown or repeated keys are rejected.
struct PipelineConfig {
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 0;
  int threads = 0;

  std::string family = "boxes";
  std::size_t family_count = 20;
  std::size_t n_surface = 4000;
  std::size_t n_uniform = 1000;
  int mesh_resolution = 128;

  int latent_dim = 8;
  int layers = 4;
  int hidden = 128;
  std::vector<int> skip;
  double dropout = 0.0;

  double delta = 0.1;
  double lambda = 1e-4;
  double latent_lr = 1e-3;
  double decoder_lr_per_shape = 1e-5;
  int epochs = 1500;
  std::size_t samples_per_step = 2048;
  std::size_t shapes_per_batch = 5;
  double latent_init_stddev = 0.01;

  int mc_resolution = 64;
  std::size_t eval_points = 2000;

  static PipelineConfig parse(std::istream& in, const std::string& source = "config");
  static PipelineConfig load(const std::filesystem::path& path);
  /// Applies one setting; throws ConfigError naming an unknown key or a bad value.
  void set(const std::string& key, const std::string& value);

  NetConfig net() const;
  TrainConfig train() const;
};

struct ShapeScore {
  std::string shape_id;
  double chamfer = 0;
};

struct PipelineSummary {
  int epochs = 0;
  double first_objective = 0;
  double final_sdf_loss = 0;
  double final_reg_loss = 0;
  std::vector<ShapeScore> shapes;
  double mean_chamfer = 0;
  double gen_seconds = 0;
  double train_seconds = 0;
  double eval_seconds = 0;

  std::string to_json() const;
};

/// Generates the procedural family, trains the auto-decoder, reconstructs
/// every training shape and scores it against its ground-truth mesh. Writes
/// data/, checkpoint.dsdf, loss.csv, meshes/ and summary.json under out_dir.
/// Failures are rethrown with the failing stage named, keeping their kind.
PipelineSummary run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace sdfforge

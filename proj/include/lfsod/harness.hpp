#pragma once

// Run configuration and the command-line modes: gen-data, augment, train,
// eval, gradcheck, predict. Every mode is a pure function of the config, the
// seed and the dataset bytes; wall-clock time goes to its own file.

#include "lfsod/diagnostics.hpp"
#include "lfsod/gradcheck.hpp"
#include "lfsod/losses.hpp"
#include "lfsod/metrics.hpp"
#include "lfsod/model.hpp"
#include "lfsod/optim.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lft {

enum class Mode { gen_data, augment, train, eval, gradcheck, predict };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

/// A scene is held out of training iff fnv1a64(name) % modulus == 0.
struct HoldoutConfig {
  bool enabled = true;
  std::uint64_t modulus = 5;
};

struct GenDataConfig {
  Index count = 20;
  Index num_shapes = 2;
  Index num_slices = kStackSize;  // distinct slices before normalization
  double blur_per_band = 1.0;
};

struct GradCheckConfig {
  double eps = 1e-5;
  double tol = 1e-4;
  Index entries_per_parameter = 3;
  double denominator_floor = 1e-6;
  Index distinct_slices = 3;
};

struct RunConfig {
  std::filesystem::path dataset_root = "data";
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint = "out/model.lft";
  Index image_size = 256;
  Index epochs = 300;
  Index batch_size = 6;
  Index max_steps = 0;         // 0: no cap beyond `epochs`
  Index checkpoint_every = 0;  // epochs between intermediate checkpoints; 0: final only
  double lr = 5e-5;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  IAConfig ia;
  EncoderConfig encoder;
  DecoderConfig decoder;
  LossOptions loss;
  HoldoutConfig holdout;
  GenDataConfig gen_data;
  GradCheckConfig gradcheck;

  ModelConfig model_config() const;
  AdamWOptions optimizer() const;
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Strict: unknown keys and ill-typed values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies `key=value` to a config document. The key is a dotted path that
/// must already exist; the value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Ablation presets: wo-mixld, wo-ia, wo-lf, stack-{2,3,5,12}, rr-{1,4,8,16}.
void apply_preset(nlohmann::json& doc, const std::string& preset);
std::vector<std::string> preset_names();

/// Defaults, then the file, then presets in order, then overrides in order.
/// gradcheck defaults to a 64-pixel image unless the size is set explicitly.
RunConfig load_run_config(Mode mode, const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& presets, const std::vector<std::string>& overrides);

bool held_out(const std::string& scene_name, const HoldoutConfig& cfg);

// ---- modes -----------------------------------------------------------------

/// Writes gen_data.count synthetic scenes named scene_NNN under dataset_root.
std::vector<std::string> generate_dataset(const RunConfig& cfg);

/// Stream behind scene `index` in epoch `epoch`: scene_seed(seed, index) split by epoch.
CounterRng scene_stream(std::uint64_t seed, Index index, Index epoch);

/// Augments every scene with its first-epoch stream and writes it under
/// output_dir in scene layout, plus augment_trace.json and, on request,
/// hist_report.json.
void augment_dataset(const RunConfig& cfg, bool histograms);

struct TrainStep {
  Index epoch = 0;  // 1-based
  Index step = 0;   // 1-based, global
  LossReport loss;  // batch means
};

struct TrainResult {
  std::vector<TrainStep> steps;
  std::vector<double> heldout_mae;  // per epoch; empty without held-out scenes
  std::filesystem::path checkpoint;
};

/// Files under output_dir: train_log.csv, train_timing.csv, heldout_log.csv
/// (when scenes are held out) and checkpoint_epochNNN.lft for intermediate
/// saves. The final checkpoint goes to cfg.checkpoint.
TrainResult train(const RunConfig& cfg, std::ostream& progress);

/// The training loop on scenes already in memory. Writes nothing unless
/// `output_dir` is given.
TrainResult train_scenes(const RunConfig& cfg, const std::vector<LFScene>& scenes, Model& model, std::ostream& progress,
                         const std::optional<std::filesystem::path>& output_dir);

/// Unaugmented prediction and scoring of every scene, ordered by name.
SaliencyScores evaluate_dataset(const std::vector<LFScene>& scenes, Model& model);

/// Loads cfg.checkpoint, scores the dataset, writes scores.csv and aggregate.json.
SaliencyScores evaluate(const RunConfig& cfg);

/// Writes output_dir/<scene>.pgm for every scene.
void predict(const RunConfig& cfg);

struct GroupCheck {
  std::string group;
  double max_rel_error = 0.0;
  std::string worst_parameter;
};

struct GradCheckSummary {
  std::vector<GroupCheck> groups;  // in parameter_group order of first appearance
  double tol = 0.0;
  bool passed = true;
};

GradCheckSummary summarize_groups(const GradCheckReport& report);

/// Full-pipeline check on one synthetic scene with gradcheck.distinct_slices
/// slices repeated to 12.
GradCheckSummary run_gradcheck(const RunConfig& cfg);

void write_scores(const std::filesystem::path& dir, const SaliencyScores& scores);
nlohmann::json to_json(const AugmentTrace& trace);
nlohmann::json to_json(const HistogramReport& report);

}  // namespace lft

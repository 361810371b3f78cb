#include "lfsod/harness.hpp"

#include "lfsod/checkpoint.hpp"
#include "lfsod/errors.hpp"
#include "lfsod/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace lft {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_directory(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
  ensure_directory(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Every key of `doc` must exist in `reference`, recursively.
void check_known_keys(const json& doc, const json& reference, const std::string& prefix) {
  if (!doc.is_object()) throw ConfigError("config: '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigError("config: unknown key '" + path + "'");
    if (reference[it.key()].is_object()) check_known_keys(it.value(), reference[it.key()], path);
  }
}

void merge_into(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base[it.key()].is_object()) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

template <typename T>
T get(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("config: missing key '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!node->is_number_integer()) throw ConfigError("config: '" + path + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (node->is_number_unsigned()) return node->get<T>();
        if (node->get<std::int64_t>() < 0) throw ConfigError("config: '" + path + "' must be non-negative");
      }
    }
    if constexpr (std::is_same_v<T, bool>) {
      if (!node->is_boolean()) throw ConfigError("config: '" + path + "' must be true or false");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!node->is_number()) throw ConfigError("config: '" + path + "' must be a number");
    }
    return node->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path + "': " + e.what());
  }
}

std::array<Index, kStages> get_stage_array(const json& doc, const std::string& path) {
  const auto values = get<std::vector<Index>>(doc, path);
  if (values.size() != static_cast<std::size_t>(kStages)) throw ConfigError("config: '" + path + "' needs 4 entries");
  std::array<Index, kStages> out{};
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

json histogram_json(const auto& bins) { return json(std::vector<std::int64_t>(bins.begin(), bins.end())); }

void zero_missing_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (!p->tensor.grad) p->tensor.grad = Vector::Zero(p->size());
  }
}

std::vector<const Parameter*> const_view(std::span<Parameter* const> params) { return {params.begin(), params.end()}; }

void add_report(LossReport& acc, const LossReport& r, double weight) {
  acc.total += weight * r.total;
  for (std::size_t l = 0; l < acc.structure_stage.size(); ++l) acc.structure_stage[l] += weight * r.structure_stage[l];
  acc.structure_final += weight * r.structure_final;
  acc.tversky += weight * r.tversky;
}

std::vector<LFScene> load_nonempty(const RunConfig& cfg, const char* mode) {
  std::vector<LFScene> scenes = load_dataset(cfg.dataset_root, cfg.image_size);
  if (scenes.empty()) throw UsageError(std::string(mode) + ": dataset " + cfg.dataset_root.string() + " contains no scenes");
  return scenes;
}

Model load_model(const RunConfig& cfg) {
  Model model = make_model(cfg.model_config(), cfg.seed);
  const auto params = model.parameters();
  load_checkpoint(cfg.checkpoint, params);
  return model;
}

}  // namespace

// ---- configuration ---------------------------------------------------------

Mode parse_mode(const std::string& name) {
  static const std::map<std::string, Mode> modes{{"gen-data", Mode::gen_data}, {"augment", Mode::augment},
                                                 {"train", Mode::train},       {"eval", Mode::eval},
                                                 {"gradcheck", Mode::gradcheck}, {"predict", Mode::predict}};
  const auto it = modes.find(name);
  if (it == modes.end()) throw UsageError("unknown mode '" + name + "'");
  return it->second;
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::gen_data: return "gen-data";
    case Mode::augment: return "augment";
    case Mode::train: return "train";
    case Mode::eval: return "eval";
    case Mode::gradcheck: return "gradcheck";
    case Mode::predict: return "predict";
  }
  return "?";
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.encoder = encoder;
  m.encoder.input_size = image_size;
  m.ia = ia;
  m.decoder = decoder;
  return m;
}

AdamWOptions RunConfig::optimizer() const {
  AdamWOptions o;
  o.lr = lr;
  o.weight_decay = weight_decay;
  return o;
}

void RunConfig::validate() const {
  if (image_size < 16) throw ConfigError("image_size must be >= 16");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_steps < 0 || checkpoint_every < 0) throw ConfigError("max_steps and checkpoint_every must be >= 0");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("lr and weight_decay must be >= 0");
  if (holdout.modulus < 1) throw ConfigError("holdout.modulus must be >= 1");
  if (gen_data.count < 0 || gen_data.num_shapes < 0) throw ConfigError("gen_data.count and num_shapes must be >= 0");
  if (gen_data.num_slices < 1 || gen_data.num_slices > kStackSize) throw ConfigError("gen_data.num_slices must be in 1..12");
  if (!(gen_data.blur_per_band >= 0.0)) throw ConfigError("gen_data.blur_per_band must be >= 0");
  if (!(gradcheck.eps > 0.0) || !(gradcheck.tol > 0.0)) throw ConfigError("gradcheck.eps and gradcheck.tol must be > 0");
  if (gradcheck.entries_per_parameter < 0) throw ConfigError("gradcheck.entries_per_parameter must be >= 0");
  if (gradcheck.distinct_slices < 1 || gradcheck.distinct_slices > kStackSize) {
    throw ConfigError("gradcheck.distinct_slices must be in 1..12");
  }
  if (!(loss.tversky_weight >= 0.0) || !(loss.tversky_a >= 0.0) || !(loss.tversky_b >= 0.0)) {
    throw ConfigError("loss weights must be >= 0");
  }
  if (loss.boundary_window < 1 || loss.boundary_window % 2 == 0) throw ConfigError("loss.boundary_window must be odd");
  augment.validate();
  model_config().validate();
}

json to_json(const RunConfig& c) {
  return json{
      {"dataset_root", c.dataset_root.string()},
      {"output_dir", c.output_dir.string()},
      {"checkpoint", c.checkpoint.string()},
      {"image_size", c.image_size},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"max_steps", c.max_steps},
      {"checkpoint_every", c.checkpoint_every},
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"seed", c.seed},
      {"augment",
       {{"alpha", c.augment.alpha},
        {"beta", c.augment.beta},
        {"p_fs2af", c.augment.p_fs2af},
        {"p_af2fs", c.augment.p_af2fs},
        {"enabled", c.augment.enabled},
        {"geometric",
         {{"flip_h", c.augment.geometric.flip_h},
          {"rotate", c.augment.geometric.rotate},
          {"crop", c.augment.geometric.crop}}}}},
      {"ia",
       {{"fusion", to_string(c.ia.fusion)},
        {"reduction_rate", c.ia.reduction_rate},
        {"num_slices", c.ia.num_slices}}},
      {"encoder",
       {{"stage_channels", c.encoder.stage_channels},
        {"stage_strides", c.encoder.stage_strides},
        {"blocks_per_stage", c.encoder.blocks_per_stage}}},
      {"decoder", {{"channels", c.decoder.channels}}},
      {"loss",
       {{"tversky_weight", c.loss.tversky_weight},
        {"tversky_a", c.loss.tversky_a},
        {"tversky_b", c.loss.tversky_b},
        {"boundary_window", c.loss.boundary_window}}},
      {"holdout", {{"enabled", c.holdout.enabled}, {"modulus", c.holdout.modulus}}},
      {"gen_data",
       {{"count", c.gen_data.count},
        {"num_shapes", c.gen_data.num_shapes},
        {"num_slices", c.gen_data.num_slices},
        {"blur_per_band", c.gen_data.blur_per_band}}},
      {"gradcheck",
       {{"eps", c.gradcheck.eps},
        {"tol", c.gradcheck.tol},
        {"entries_per_parameter", c.gradcheck.entries_per_parameter},
        {"denominator_floor", c.gradcheck.denominator_floor},
        {"distinct_slices", c.gradcheck.distinct_slices}}},
  };
}

RunConfig run_config_from_json(const json& user) {
  json doc = to_json(RunConfig{});
  check_known_keys(user, doc, "");
  merge_into(doc, user);

  RunConfig c;
  c.dataset_root = get<std::string>(doc, "dataset_root");
  c.output_dir = get<std::string>(doc, "output_dir");
  c.checkpoint = get<std::string>(doc, "checkpoint");
  c.image_size = get<Index>(doc, "image_size");
  c.epochs = get<Index>(doc, "epochs");
  c.batch_size = get<Index>(doc, "batch_size");
  c.max_steps = get<Index>(doc, "max_steps");
  c.checkpoint_every = get<Index>(doc, "checkpoint_every");
  c.lr = get<double>(doc, "lr");
  c.weight_decay = get<double>(doc, "weight_decay");
  c.seed = get<std::uint64_t>(doc, "seed");

  c.augment.alpha = get<double>(doc, "augment.alpha");
  c.augment.beta = get<double>(doc, "augment.beta");
  c.augment.p_fs2af = get<double>(doc, "augment.p_fs2af");
  c.augment.p_af2fs = get<double>(doc, "augment.p_af2fs");
  c.augment.enabled = get<bool>(doc, "augment.enabled");
  c.augment.geometric.flip_h = get<bool>(doc, "augment.geometric.flip_h");
  c.augment.geometric.rotate = get<bool>(doc, "augment.geometric.rotate");
  c.augment.geometric.crop = get<bool>(doc, "augment.geometric.crop");

  c.ia.fusion = parse_fusion(get<std::string>(doc, "ia.fusion"));
  c.ia.reduction_rate = get<Index>(doc, "ia.reduction_rate");
  c.ia.num_slices = get<Index>(doc, "ia.num_slices");

  c.encoder.stage_channels = get_stage_array(doc, "encoder.stage_channels");
  c.encoder.stage_strides = get_stage_array(doc, "encoder.stage_strides");
  c.encoder.blocks_per_stage = get<Index>(doc, "encoder.blocks_per_stage");
  c.decoder.channels = get<Index>(doc, "decoder.channels");

  c.loss.tversky_weight = get<double>(doc, "loss.tversky_weight");
  c.loss.tversky_a = get<double>(doc, "loss.tversky_a");
  c.loss.tversky_b = get<double>(doc, "loss.tversky_b");
  c.loss.boundary_window = get<Index>(doc, "loss.boundary_window");

  c.holdout.enabled = get<bool>(doc, "holdout.enabled");
  c.holdout.modulus = get<std::uint64_t>(doc, "holdout.modulus");

  c.gen_data.count = get<Index>(doc, "gen_data.count");
  c.gen_data.num_shapes = get<Index>(doc, "gen_data.num_shapes");
  c.gen_data.num_slices = get<Index>(doc, "gen_data.num_slices");
  c.gen_data.blur_per_band = get<double>(doc, "gen_data.blur_per_band");

  c.gradcheck.eps = get<double>(doc, "gradcheck.eps");
  c.gradcheck.tol = get<double>(doc, "gradcheck.tol");
  c.gradcheck.entries_per_parameter = get<Index>(doc, "gradcheck.entries_per_parameter");
  c.gradcheck.denominator_floor = get<double>(doc, "gradcheck.denominator_floor");
  c.gradcheck.distinct_slices = get<Index>(doc, "gradcheck.distinct_slices");

  c.validate();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);

  // Paths are checked against the full default document, so an override may
  // name a key the user's file left out.
  const json reference = to_json(RunConfig{});
  const json* ref = &reference;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!ref->is_object() || !ref->contains(part)) throw ConfigError("override: unknown key '" + key + "'");
    ref = &(*ref)[part];
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = json::parse(text, nullptr, false);
  *node = value.is_discarded() ? json(text) : std::move(value);
}

std::vector<std::string> preset_names() {
  return {"wo-mixld", "wo-ia", "wo-lf", "stack-2", "stack-3", "stack-5", "stack-12", "rr-1", "rr-4", "rr-8", "rr-16"};
}

void apply_preset(json& doc, const std::string& preset) {
  if (preset == "wo-mixld") {
    apply_override(doc, "augment.enabled=false");
  } else if (preset == "wo-ia") {
    apply_override(doc, "ia.fusion=ADD");
  } else if (preset == "wo-lf") {
    // Without a focal stack there is nothing for MixLD to blend.
    apply_override(doc, "ia.num_slices=0");
    apply_override(doc, "augment.enabled=false");
  } else if (preset.starts_with("stack-") && (preset == "stack-2" || preset == "stack-3" || preset == "stack-5" || preset == "stack-12")) {
    apply_override(doc, "ia.num_slices=" + preset.substr(6));
  } else if (preset == "rr-1" || preset == "rr-4" || preset == "rr-8" || preset == "rr-16") {
    apply_override(doc, "ia.reduction_rate=" + preset.substr(3));
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
}

RunConfig load_run_config(Mode mode, const std::optional<fs::path>& file, const std::vector<std::string>& presets,
                          const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (mode == Mode::gradcheck) doc["image_size"] = 64;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw IoError("cannot read config " + file->string());
    std::stringstream text;
    text << in.rdbuf();
    const json parsed = json::parse(text.str(), nullptr, false);
    if (parsed.is_discarded()) throw ConfigError("config " + file->string() + " is not valid JSON");
    check_known_keys(parsed, to_json(RunConfig{}), "");
    merge_into(doc, parsed);
  }
  for (const auto& p : presets) apply_preset(doc, p);
  for (const auto& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

bool held_out(const std::string& scene_name, const HoldoutConfig& cfg) {
  return cfg.enabled && fnv1a64(scene_name) % cfg.modulus == 0;
}

// ---- gen-data and augment --------------------------------------------------

std::vector<std::string> generate_dataset(const RunConfig& cfg) {
  SyntheticOptions o;
  o.size = cfg.image_size;
  o.num_slices = cfg.gen_data.num_slices;
  o.num_shapes = cfg.gen_data.num_shapes;
  o.blur_per_band = cfg.gen_data.blur_per_band;
  std::vector<std::string> names;
  for (Index i = 0; i < cfg.gen_data.count; ++i) {
    LFScene scene = generate_synthetic_scene(scene_seed(cfg.seed, static_cast<std::uint64_t>(i)), o);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03ld", static_cast<long>(i));
    scene.name = name;
    save_scene(cfg.dataset_root / scene.name, scene);
    names.push_back(scene.name);
  }
  return names;
}

CounterRng scene_stream(std::uint64_t seed, Index index, Index epoch) {
  return CounterRng(scene_seed(seed, static_cast<std::uint64_t>(index))).split(static_cast<std::uint64_t>(epoch));
}

json to_json(const AugmentTrace& t) {
  return json{{"fs2af", t.fs2af},   {"slice", t.slice},   {"af2fs", t.af2fs},           {"flipped", t.flipped},
              {"quarter_turns", t.quarter_turns},         {"cropped", t.cropped},       {"crop_scale", t.crop_scale},
              {"crop_y", t.crop_y}, {"crop_x", t.crop_x}, {"crop_h", t.crop_h},         {"crop_w", t.crop_w}};
}

json to_json(const HistogramReport& r) {
  return json{{"af", histogram_json(r.af)},
              {"fs", histogram_json(r.fs)},
              {"af_m", histogram_json(r.af_m)},
              {"fs_m", histogram_json(r.fs_m)},
              {"diff_before", histogram_json(r.diff_before)},
              {"diff_after", histogram_json(r.diff_after)},
              {"support_before", difference_support(r.diff_before)},
              {"support_after", difference_support(r.diff_after)}};
}

void augment_dataset(const RunConfig& cfg, bool histograms) {
  const std::vector<LFScene> scenes = load_nonempty(cfg, "augment");
  json traces = json::array(), reports = json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const LFScene& scene = scenes[i];
    const AugmentedScene aug = augment_scene(scene, cfg.augment, scene_stream(cfg.seed, static_cast<Index>(i), 1));
    LFScene out;
    out.name = scene.name;
    out.af = aug.af_m;
    out.fs = aug.fs_m;
    out.gt = aug.gt;
    save_scene(cfg.output_dir / scene.name, out);
    json t = to_json(aug.trace);
    t["scene"] = scene.name;
    traces.push_back(std::move(t));
    if (histograms) {
      json h = to_json(histogram_report(scene, aug));
      h["scene"] = scene.name;
      reports.push_back(std::move(h));
    }
  }
  write_text(cfg.output_dir / "augment_trace.json", traces.dump(2) + "\n");
  if (histograms) write_text(cfg.output_dir / "hist_report.json", reports.dump() + "\n");
}

// ---- training --------------------------------------------------------------

TrainResult train_scenes(const RunConfig& cfg, const std::vector<LFScene>& scenes, Model& model, std::ostream& progress,
                         const std::optional<fs::path>& output_dir) {
  std::vector<Index> train_idx, heldout_idx;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    (held_out(scenes[i].name, cfg.holdout) ? heldout_idx : train_idx).push_back(static_cast<Index>(i));
  }
  if (train_idx.empty()) throw UsageError("train: every scene is held out; nothing to train on");
  std::vector<LFScene> heldout;
  for (Index i : heldout_idx) heldout.push_back(scenes[static_cast<std::size_t>(i)]);

  std::ofstream log, timing, heldout_log;
  if (output_dir) {
    log = open_output(*output_dir / "train_log.csv");
    timing = open_output(*output_dir / "train_timing.csv");
    log << "epoch,step,total,structure_stage1,structure_stage2,structure_stage3,structure_stage4,structure_final,tversky\n";
    timing << "epoch,step,wall_seconds\n";
    if (!heldout.empty()) {
      heldout_log = open_output(*output_dir / "heldout_log.csv");
      heldout_log << "epoch,heldout_mae\n";
    }
  }

  const auto params = model.parameters();
  const AdamWOptions adam = cfg.optimizer();
  const CounterRng order_rng = CounterRng(cfg.seed).split("order");
  TrainResult result;
  Index step = 0;
  bool done = false;

  for (Index epoch = 1; epoch <= cfg.epochs && !done; ++epoch) {
    std::vector<Index> order = train_idx;
    CounterRng shuffle = order_rng.split(static_cast<std::uint64_t>(epoch));
    for (Index i = static_cast<Index>(order.size()) - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(shuffle.uniform_index(i + 1))]);
    }

    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        done = true;
        break;
      }
      ++step;
      const auto started = std::chrono::steady_clock::now();
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const double weight = 1.0 / static_cast<double>(end - b);
      TrainStep row{epoch, step, {}};
      for (std::size_t k = b; k < end; ++k) {
        const Index idx = order[k];
        const LFScene& scene = scenes[static_cast<std::size_t>(idx)];
        const AugmentedScene aug = augment_scene(scene, cfg.augment, scene_stream(cfg.seed, idx, epoch));
        Tape tape;
        LossTerms terms;
        try {
          terms = total_loss(forward(tape, model, aug, true), to_tensor(aug.gt), cfg.loss);
        } catch (const NumericError& e) {
          throw NumericError("train: epoch " + std::to_string(epoch) + " step " + std::to_string(step) + " scene '" +
                             scene.name + "': " + e.what());
        }
        tape.backward(scale(terms.total, weight));
        add_report(row.loss, terms.report, weight);
      }
      zero_missing_grads(params);
      adamw_step(params, adam);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

      if (output_dir) {
        log << epoch << ',' << step << ',' << format_double(row.loss.total);
        for (double s : row.loss.structure_stage) log << ',' << format_double(s);
        log << ',' << format_double(row.loss.structure_final) << ',' << format_double(row.loss.tversky) << '\n';
        timing << epoch << ',' << step << ',' << format_double(seconds) << '\n';
      }
      progress << "epoch " << epoch << " step " << step << " loss " << format_double(row.loss.total) << '\n';
      result.steps.push_back(row);
    }

    if (!heldout.empty() && !result.steps.empty() && result.steps.back().epoch == epoch) {
      const double mae = evaluate_dataset(heldout, model).mae;
      result.heldout_mae.push_back(mae);
      if (output_dir) heldout_log << epoch << ',' << format_double(mae) << '\n';
      progress << "epoch " << epoch << " heldout_mae " << format_double(mae) << '\n';
    }
    if (output_dir && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      char name[40];
      std::snprintf(name, sizeof name, "checkpoint_epoch%03ld.lft", static_cast<long>(epoch));
      save_checkpoint(*output_dir / name, const_view(params));
    }
  }
  if (log && !log.flush()) throw IoError("write failed: train_log.csv");
  return result;
}

TrainResult train(const RunConfig& cfg, std::ostream& progress) {
  const std::vector<LFScene> scenes = load_nonempty(cfg, "train");
  Model model = make_model(cfg.model_config(), cfg.seed);
  TrainResult result = train_scenes(cfg, scenes, model, progress, cfg.output_dir);
  ensure_directory(cfg.checkpoint.parent_path());
  save_checkpoint(cfg.checkpoint, const_view(model.parameters()));
  result.checkpoint = cfg.checkpoint;
  return result;
}

// ---- eval and predict ------------------------------------------------------

SaliencyScores evaluate_dataset(const std::vector<LFScene>& scenes, Model& model) {
  if (scenes.empty()) throw UsageError("evaluate: no scenes to score");
  std::vector<SceneScores> per_scene;
  per_scene.reserve(scenes.size());
  for (const LFScene& scene : scenes) per_scene.push_back(score_scene(scene.name, predict_mask(model, scene), to_tensor(scene.gt)));
  return aggregate_scores(std::move(per_scene));
}

void write_scores(const fs::path& dir, const SaliencyScores& s) {
  std::ostringstream csv;
  csv << "scene,mae,f_mean,e_mean,s_measure\n";
  for (const auto& r : s.per_scene) {
    csv << r.name << ',' << format_double(r.mae) << ',' << format_double(r.f_mean) << ',' << format_double(r.e_mean) << ','
        << format_double(r.s_measure) << '\n';
  }
  write_text(dir / "scores.csv", csv.str());
  const json agg{{"n_scenes", s.n_scenes}, {"mae", s.mae}, {"f_mean", s.f_mean}, {"e_mean", s.e_mean}, {"s_measure", s.s_measure}};
  write_text(dir / "aggregate.json", agg.dump(2) + "\n");
}

SaliencyScores evaluate(const RunConfig& cfg) {
  const std::vector<LFScene> scenes = load_nonempty(cfg, "eval");
  Model model = load_model(cfg);
  SaliencyScores scores = evaluate_dataset(scenes, model);
  write_scores(cfg.output_dir, scores);
  return scores;
}

void predict(const RunConfig& cfg) {
  const std::vector<LFScene> scenes = load_nonempty(cfg, "predict");
  Model model = load_model(cfg);
  ensure_directory(cfg.output_dir);
  for (const LFScene& scene : scenes) write_image(cfg.output_dir / (scene.name + ".pgm"), from_tensor(predict_mask(model, scene)));
}

// ---- gradcheck -------------------------------------------------------------

GradCheckSummary summarize_groups(const GradCheckReport& report) {
  GradCheckSummary out;
  out.tol = report.tol;
  for (const auto& p : report.parameters) {
    const std::string group = parameter_group(p.name);
    auto it = std::find_if(out.groups.begin(), out.groups.end(), [&](const GroupCheck& g) { return g.group == group; });
    if (it == out.groups.end()) {
      out.groups.push_back({group, p.worst.rel_error, p.name});
      continue;
    }
    if (p.worst.rel_error > it->max_rel_error) {
      it->max_rel_error = p.worst.rel_error;
      it->worst_parameter = p.name;
    }
  }
  for (const auto& g : out.groups) out.passed = out.passed && g.max_rel_error <= out.tol;
  return out;
}

GradCheckSummary run_gradcheck(const RunConfig& cfg) {
  SyntheticOptions o;
  o.size = cfg.image_size;
  o.num_slices = cfg.gradcheck.distinct_slices;
  const AugmentedScene scene = unaugmented(generate_synthetic_scene(cfg.seed, o));
  const Tensor gt = to_tensor(scene.gt);
  Model model = make_model(cfg.model_config(), cfg.seed);
  const auto params = model.parameters();

  GradCheckOptions opts;
  opts.eps = cfg.gradcheck.eps;
  opts.tol = cfg.gradcheck.tol;
  opts.entries_per_parameter = cfg.gradcheck.entries_per_parameter;
  opts.denominator_floor = cfg.gradcheck.denominator_floor;
  opts.seed = cfg.seed;
  const GradCheckReport report = check_gradients(
      [&](Tape& tape) { return total_loss(forward(tape, model, scene, true), gt, cfg.loss).total; }, params, opts);
  return summarize_groups(report);
}

}  // namespace lft

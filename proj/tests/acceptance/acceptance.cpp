// Acceptance driver. One PASS/FAIL line per criterion; every tolerance and
// budget below is fixed here and nowhere else.
//
//   acceptance                 runs all ten criteria
//   acceptance --criterion 3   runs one (repeatable)

#include "lfsod/errors.hpp"
#include "lfsod/harness.hpp"
#include "lfsod/losses.hpp"
#include "lfsod/metrics.hpp"
#include "lfsod/model.hpp"

#include "metric_oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace lft;
namespace fs = std::filesystem;

namespace {

namespace budget {
constexpr double shape_forward_seconds = 120.0;
constexpr double gradcheck_seconds = 1800.0;
constexpr double mixld_seconds = 60.0;
constexpr double overfit_seconds = 3600.0;
}  // namespace budget

namespace tol {
constexpr double gradcheck = 1e-4;
constexpr double attention_row_sum = 1e-9;
constexpr double sigma_scaling = 1e-12;
constexpr double tversky_dice = 1e-12;
constexpr double perfect_loss = 1e-3;
constexpr double metric_mfe = 1e-9;
constexpr double metric_s = 1e-6;
constexpr double overfit_mae = 0.1;
constexpr double overfit_loss_ratio = 0.5;
constexpr double binomial_sigmas = 4.0;
}  // namespace tol

// The overfit protocol shared by criteria 8 and 9: 20 scenes at 64x64, 12
// slices, A_PD with reduction 8, MixLD on, 20 scenes x 10 epochs = 200 steps.
const std::vector<std::string> kOverfitOverrides = {
    "image_size=64", "gen_data.count=20", "epochs=10", "batch_size=1", "lr=1e-3", "holdout.enabled=false"};
constexpr Index kOverfitSteps = 200;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("lft_acceptance_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> bytes for every regular file under `root`. Wall-clock
// timings live in train_timing.csv and are the one file allowed to differ.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "train_timing.csv") continue;
    files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

LFScene synthetic_scene(Index size, std::uint64_t seed) {
  SyntheticOptions o;
  o.size = size;
  return generate_synthetic_scene(seed, o);
}

ModelConfig default_model(Index size) {
  ModelConfig cfg;
  cfg.encoder.input_size = size;
  return cfg;
}

RunConfig overfit_config(const fs::path& root, const std::vector<std::string>& presets) {
  RunConfig cfg = load_run_config(Mode::train, std::nullopt, presets, kOverfitOverrides);
  cfg.dataset_root = root / "data";
  cfg.output_dir = root / "out";
  cfg.checkpoint = root / "out" / "model.lft";
  return cfg;
}

double window_mean(const std::vector<TrainStep>& steps, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += steps[i].loss.total;
  return s / static_cast<double>(end - begin);
}

// ---- 1 ----------------------------------------------------------------------

Outcome shape_contract() {
  const ModelConfig cfg = default_model(256);
  Model model = make_model(cfg, 1);
  const AugmentedScene scene = unaugmented(synthetic_scene(256, 11));
  Outcome out;

  Tape tape(false);
  const ScenePyramids pyr = encode_scene(tape, model.encoder, cfg.encoder, scene);
  const FeaturePyramid fused = fuse_pyramids(tape, model.ia, cfg.ia, pyr);
  const std::array<Shape, kStages> expected{Shape{64, 64, 64}, Shape{128, 32, 32}, Shape{320, 16, 16}, Shape{512, 8, 8}};
  for (Index l = 0; l < kStages; ++l) out.pass &= fused[static_cast<std::size_t>(l)].shape() == expected[static_cast<std::size_t>(l)];
  const Var m = attention_map(tape, model.ia[0], cfg.ia, pyr.fs[0][0]);
  out.pass &= m.shape() == Shape{4096, 4096};

  Tape timed(false);
  const Stopwatch clock;
  const DecoderOutput pred = forward(timed, model, scene, false);
  const double seconds = clock.seconds();
  out.pass &= pred.mask.shape() == Shape{1, 256, 256};
  out.pass &= seconds < budget::shape_forward_seconds;
  out.detail = fmt("fused {%s}, stage-1 map %ldx%ld, forward %.1f s (budget %.0f s)",
                   [&] {
                     std::string s;
                     for (const Var& f : fused) s += (s.empty() ? "" : ", ") + to_string(f.shape());
                     return s;
                   }()
                       .c_str(),
                   static_cast<long>(m.dim(0)), static_cast<long>(m.dim(1)), seconds, budget::shape_forward_seconds);
  return out;
}

// ---- 2 ----------------------------------------------------------------------

Outcome gradient_check() {
  const RunConfig cfg = load_run_config(Mode::gradcheck, std::nullopt, {}, {});
  const Stopwatch clock;
  const GradCheckSummary s = run_gradcheck(cfg);
  const double seconds = clock.seconds();
  Outcome out;
  out.pass = cfg.image_size == 64 && cfg.gradcheck.distinct_slices == 3 && cfg.encoder.blocks_per_stage == 1 &&
             cfg.ia.reduction_rate == 8 && s.groups.size() == 7 && seconds <= budget::gradcheck_seconds;
  std::string worst;
  double max_err = 0.0;
  for (const auto& g : s.groups) {
    out.pass &= g.max_rel_error <= tol::gradcheck;
    if (g.max_rel_error >= max_err) {
      max_err = g.max_rel_error;
      worst = g.group;
    }
  }
  out.detail = fmt("%zu groups, worst %s %.2e (tol %.0e), %.0f s (budget %.0f s)", s.groups.size(), worst.c_str(), max_err,
                   tol::gradcheck, seconds, budget::gradcheck_seconds);
  return out;
}

// ---- 3 ----------------------------------------------------------------------

Outcome attention_rows() {
  const ModelConfig cfg = default_model(256);
  double worst = 0.0;
  Index maps = 0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    Model model = make_model(cfg, 100 + k);
    const AugmentedScene scene = unaugmented(synthetic_scene(256, 200 + k));
    Tape tape(false);
    const ScenePyramids pyr = encode_scene(tape, model.encoder, cfg.encoder, scene);
    for (Index l = 0; l < kStages; ++l) {
      for (const FeaturePyramid& slice : pyr.fs) {
        const Var m = attention_map(tape, model.ia[static_cast<std::size_t>(l)], cfg.ia, slice[static_cast<std::size_t>(l)]);
        const Index n = m.dim(0);
        const auto rows = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            m.value().data.data(), n, m.dim(1));
        worst = std::max(worst, (rows.rowwise().sum().array() - 1.0).abs().maxCoeff());
        ++maps;
      }
    }
  }
  return {worst <= tol::attention_row_sum && maps == 5 * kStages * kStackSize,
          fmt("%ld maps over 5 scenes at 256, max |row sum - 1| %.2e (tol %.0e)", static_cast<long>(maps), worst,
              tol::attention_row_sum)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome sigma_identities() {
  const ModelConfig cfg = default_model(64);
  Model model = make_model(cfg, 3);
  const AugmentedScene scene = unaugmented(synthetic_scene(64, 31));
  Tape tape(false);
  const ScenePyramids pyr = encode_scene(tape, model.encoder, cfg.encoder, scene);
  IAConfig plain = cfg.ia;
  plain.fusion = Fusion::A_D;
  constexpr double c = 3.0;

  bool zero_ok = true, one_ok = true;
  double worst_scaling = 0.0;
  for (Index l = 0; l < kStages; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const Var& af = pyr.af[li];
    std::vector<Var> fs;
    for (const FeaturePyramid& slice : pyr.fs) fs.push_back(slice[li]);
    // Parameter leaves are cached per tape, so each σ setting gets its own.
    auto fused = [&](double sigma_scale, std::optional<double> fill, const IAConfig& ia) {
      IAStageParams p = model.ia[li];
      if (fill) p.sigma.tensor.data.setConstant(*fill);
      p.sigma.tensor.data *= sigma_scale;
      Tape t(false);
      return fuse_stage(t, &p, ia, af, fs).value();
    };
    zero_ok &= same_values(fused(1.0, 0.0, cfg.ia), af.value());
    one_ok &= same_values(fused(1.0, 1.0, cfg.ia), fused(1.0, 1.0, plain));
    const Vector r1 = fused(1.0, std::nullopt, cfg.ia).data - af.value().data;
    const Vector rc = fused(c, std::nullopt, cfg.ia).data - af.value().data;
    worst_scaling = std::max(worst_scaling, (rc - c * r1).cwiseAbs().maxCoeff() / (c * r1).cwiseAbs().maxCoeff());
  }
  return {zero_ok && one_ok && worst_scaling <= tol::sigma_scaling,
          fmt("4 stages: sigma=0 bitwise %s, sigma=1 A_PD==A_D bitwise %s, sigma x3 residual rel err %.2e (tol %.0e)",
              zero_ok ? "yes" : "no", one_ok ? "yes" : "no", worst_scaling, tol::sigma_scaling)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome mixld_exactness() {
  const Stopwatch clock;
  const LFScene scene = synthetic_scene(64, 41);
  bool alpha_one = true, alpha_zero = true, convex = true;
  for (Index k = 0; k < kStackSize; ++k) {
    const Image& slice = scene.fs[static_cast<std::size_t>(k)];
    alpha_one &= fs2af_blend(scene, 1.0, k) == scene.af;
    alpha_zero &= fs2af_blend(scene, 0.0, k) == slice;
    const Image half = fs2af_blend(scene, 0.5, k);
    for (Index i = 0; i < half.pixels.size(); ++i) convex &= half.pixels[i] == 0.5 * scene.af.pixels[i] + 0.5 * slice.pixels[i];
  }
  const Image af_m = fs2af_blend(scene, 0.5, 4);
  const FocalStack fs_m = af2fs_blend(af_m, scene.fs, 0.5);
  for (std::size_t n = 0; n < fs_m.size(); ++n) {
    for (Index i = 0; i < af_m.pixels.size(); ++i) convex &= fs_m[n].pixels[i] == 0.5 * af_m.pixels[i] + 0.5 * scene.fs[n].pixels[i];
  }

  // Firing rates. A 16x16 scene keeps 10^5 trials well inside the budget.
  const LFScene small = synthetic_scene(16, 42);
  AugmentConfig aug;
  constexpr long trials = 100000;
  long fs2af = 0, af2fs = 0;
  for (long t = 0; t < trials; ++t) {
    const AugmentTrace tr = apply_mixld(small, aug, CounterRng(scene_seed(2024, static_cast<std::uint64_t>(t)))).trace;
    fs2af += tr.fs2af;
    af2fs += tr.af2fs;
  }
  auto z = [&](long hits, double p) { return (hits - trials * p) / std::sqrt(trials * p * (1.0 - p)); };
  const double z1 = z(fs2af, aug.p_fs2af), z2 = z(af2fs, aug.p_af2fs);
  const double seconds = clock.seconds();
  return {alpha_one && alpha_zero && convex && std::abs(z1) <= tol::binomial_sigmas && std::abs(z2) <= tol::binomial_sigmas &&
              seconds < budget::mixld_seconds,
          fmt("alpha=1 %s, alpha=0 %s, convex %s; fs2af %ld/%ld (z %.2f), af2fs %ld/%ld (z %.2f), bound %.0f sigma; %.1f s",
              alpha_one ? "bitwise" : "DIFFERS", alpha_zero ? "bitwise" : "DIFFERS", convex ? "exact" : "INEXACT", fs2af, trials,
              z1, af2fs, trials, z2, tol::binomial_sigmas, seconds)};
}

// ---- 6 ----------------------------------------------------------------------

Outcome loss_identities() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Tensor p({1, 16, 16}), g({1, 16, 16});
    double tp = 0, sp = 0, sg = 0;
    const double density = unit(gen);
    for (Index k = 0; k < p.size(); ++k) {
      p[k] = unit(gen);
      g[k] = unit(gen) < density ? 1.0 : 0.0;
      tp += p[k] * g[k];
      sp += p[k];
      sg += g[k];
    }
    // Dice with the same unit smoothing in numerator and denominator.
    const double dice = (2.0 * tp + 2.0) / (sp + sg + 2.0);
    worst = std::max(worst, std::abs(tversky_loss(constant(p), g, 0.5, 0.5).value()[0] - (1.0 - dice)));
  }

  // A decoder output that is saturated on the ground truth at every scale.
  const LFScene scene = synthetic_scene(64, 61);
  auto saturated = [](const Image& mask) {
    Tensor t = to_tensor(mask);
    t.data = (t.data.array() * 2.0 - 1.0) * 40.0;
    return constant(t);
  };
  DecoderOutput perfect;
  perfect.logits = saturated(scene.gt);
  perfect.mask = sigmoid(perfect.logits);
  for (Index s : {16, 8, 4, 2}) perfect.stage_logits.push_back(saturated(resize_nearest(scene.gt, s, s)));
  const double total = total_loss(perfect, to_tensor(scene.gt)).report.total;
  return {worst <= tol::tversky_dice && total < tol::perfect_loss,
          fmt("Tversky(.5,.5) vs 1-Dice max diff %.2e over 100 pairs (tol %.0e); perfect total %.2e (< %.0e)", worst,
              tol::tversky_dice, total, tol::perfect_loss)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 gen(707);
  std::uniform_int_distribution<int> side(1, 8), kind(0, 5), level(0, 255);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_mfe = 0.0, worst_s = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int rows = side(gen), cols = side(gen), k = kind(gen);
    const double density = k == 0 ? 0.0 : k == 1 ? 1.0 : unit(gen);
    Map2 p(rows, cols), g(rows, cols);
    oracle::Grid pg(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(cols)));
    oracle::Grid gg = pg;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        g(r, c) = gg[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = unit(gen) < density ? 1.0 : 0.0;
        // Odd kinds sit exactly on the 256 threshold levels.
        p(r, c) = pg[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = k % 2 ? level(gen) / 255.0 : unit(gen);
      }
    }
    worst_mfe = std::max(worst_mfe, std::abs(mae(p, g) - oracle::mae(pg, gg)));
    worst_mfe = std::max(worst_mfe, std::abs(f_measure_mean(p, g) - oracle::f_measure_mean(pg, gg)));
    worst_mfe = std::max(worst_mfe, std::abs(e_measure_mean(p, g) - oracle::e_measure_mean(pg, gg)));
    worst_s = std::max(worst_s, std::abs(s_measure(p, g) - oracle::s_measure(pg, gg)));
  }
  return {worst_mfe <= tol::metric_mfe && worst_s <= tol::metric_s,
          fmt("200 instances: MAE/F/E max err %.2e (tol %.0e), S max err %.2e (tol %.0e)", worst_mfe, tol::metric_mfe, worst_s,
              tol::metric_s)};
}

// ---- 8 ----------------------------------------------------------------------

Outcome overfit_smoke() {
  TempDir tmp("overfit");
  const RunConfig cfg = overfit_config(tmp.path, {});
  generate_dataset(cfg);
  const std::vector<LFScene> scenes = load_dataset(cfg.dataset_root, cfg.image_size);
  Model untrained = make_model(cfg.model_config(), cfg.seed);
  const double before = evaluate_dataset(scenes, untrained).mae;

  const Stopwatch clock;
  std::ostringstream progress;
  const TrainResult r = train(cfg, progress);
  const double seconds = clock.seconds();
  const SaliencyScores s = evaluate(cfg);

  const std::size_t n = r.steps.size(), tenth = n / 10;
  const double first = window_mean(r.steps, 0, tenth), last = window_mean(r.steps, n - tenth, n);
  const bool pass = cfg.ia.fusion == Fusion::A_PD && cfg.ia.reduction_rate == 8 && cfg.ia.num_slices == kStackSize &&
                    cfg.augment.enabled && static_cast<Index>(n) >= kOverfitSteps && s.mae < tol::overfit_mae &&
                    last < tol::overfit_loss_ratio * first && s.mae < before && seconds <= budget::overfit_seconds;
  return {pass, fmt("%zu steps in %.0f s; train MAE %.4f (< %.1f, untrained %.4f); loss first-10%% %.3f, last-10%% %.3f, "
                    "ratio %.3f (< %.1f)",
                    n, seconds, s.mae, tol::overfit_mae, before, first, last, last / first, tol::overfit_loss_ratio)};
}

// ---- 9 ----------------------------------------------------------------------

bool add_leaves_attention_gradients_zero() {
  ModelConfig cfg = default_model(64);
  cfg.ia.fusion = Fusion::ADD;
  Model model = make_model(cfg, 9);
  const AugmentedScene scene = unaugmented(synthetic_scene(64, 91));
  Tape tape;
  tape.backward(total_loss(forward(tape, model, scene, true), to_tensor(scene.gt)).total);
  bool zero = true;
  for (Parameter* p : model.parameters()) {
    const std::string group = parameter_group(p->name);
    if (group != "ia.conv_q" && group != "ia.conv_k" && group != "ia.conv_v") continue;
    // Never reached by the backward walk, or reached with exact zeros.
    if (p->tensor.grad) zero &= (p->tensor.grad->array() == 0.0).all();
  }
  return zero;
}

Outcome ablation_wiring() {
  TempDir tmp("ablation");
  Outcome out;
  std::string results;
  {
    RunConfig gen = overfit_config(tmp.path, {});
    generate_dataset(gen);
  }
  for (const std::string& preset : preset_names()) {
    RunConfig cfg = overfit_config(tmp.path, {preset});
    cfg.output_dir = tmp.path / preset;
    cfg.checkpoint = cfg.output_dir / "model.lft";
    std::ostringstream progress;
    const TrainResult r = train(cfg, progress);
    bool ok = static_cast<Index>(r.steps.size()) >= kOverfitSteps && std::isfinite(r.steps.back().loss.total);
    cfg.output_dir = tmp.path / preset / "masks";
    predict(cfg);
    Index masks = 0;
    for (const auto& e : fs::directory_iterator(cfg.output_dir)) {
      const Image m = read_image(e.path());
      ok &= m.channels == 1 && m.height == cfg.image_size && m.width == cfg.image_size;
      ok &= m.pixels.allFinite() && m.pixels.minCoeff() >= 0.0 && m.pixels.maxCoeff() <= 1.0;
      ++masks;
    }
    ok &= masks == cfg.gen_data.count;
    cfg.output_dir = tmp.path / preset / "eval";
    const double mae = evaluate(cfg).mae;
    results += fmt("%s%s %.3f%s", results.empty() ? "" : ", ", preset.c_str(), mae, ok ? "" : " BROKEN");
    out.pass &= ok;
  }
  const bool zero = add_leaves_attention_gradients_zero();
  out.pass &= zero;
  out.detail = fmt("train MAE per preset: %s; ADD q/k/v gradients %s", results.c_str(), zero ? "exactly zero" : "NONZERO");
  return out;
}

// ---- 10 ---------------------------------------------------------------------

Outcome determinism() {
  TempDir tmp("determinism");
  RunConfig cfg = load_run_config(Mode::train, std::nullopt, {},
                                  {"image_size=64", "gen_data.count=5", "epochs=2", "batch_size=2", "checkpoint_every=1"});
  cfg.dataset_root = tmp.path / "data";
  cfg.output_dir = tmp.path / "train";
  cfg.checkpoint = tmp.path / "train" / "model.lft";
  std::ostringstream progress;
  std::vector<std::string> differing;

  auto twice = [&](const std::string& mode, const fs::path& dir, const std::function<void()>& run) {
    run();
    const auto first = snapshot(dir);
    fs::remove_all(dir);
    run();
    if (first.empty() || snapshot(dir) != first) differing.push_back(mode);
  };

  twice("gen-data", cfg.dataset_root, [&] { generate_dataset(cfg); });
  RunConfig aug = cfg;
  aug.output_dir = tmp.path / "augment";
  twice("augment", aug.output_dir, [&] { augment_dataset(aug, true); });
  twice("train", cfg.output_dir, [&] { train(cfg, progress); });
  RunConfig ev = cfg;
  ev.output_dir = tmp.path / "eval";
  twice("eval", ev.output_dir, [&] { evaluate(ev); });
  RunConfig pr = cfg;
  pr.output_dir = tmp.path / "predict";
  twice("predict", pr.output_dir, [&] { predict(pr); });

  const RunConfig gc = load_run_config(Mode::gradcheck, std::nullopt, {},
                                       {"image_size=32", "encoder.stage_channels=[8,8,16,16]", "decoder.channels=8"});
  auto errors = [&] {
    std::vector<double> e;
    for (const auto& g : run_gradcheck(gc).groups) e.push_back(g.max_rel_error);
    return e;
  };
  if (errors() != errors()) differing.push_back("gradcheck");

  std::string list;
  for (const auto& m : differing) list += (list.empty() ? "" : ", ") + m;
  return {differing.empty(), differing.empty() ? "gen-data, augment, train (logs and checkpoints), eval, predict, gradcheck "
                                                 "reruns are bit-identical"
                                               : "reruns differ in: " + list};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--criterion", only, "criterion number to run (repeatable)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "shape contract", shape_contract},
      {2, "gradient check", gradient_check},
      {3, "attention normalization", attention_rows},
      {4, "sigma identities", sigma_identities},
      {5, "MixLD exactness", mixld_exactness},
      {6, "loss identities", loss_identities},
      {7, "metric oracles", metric_oracles},
      {8, "overfit smoke", overfit_smoke},
      {9, "ablation wiring", ablation_wiring},
      {10, "determinism", determinism},
  };

  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const Stopwatch clock;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("criterion %2d  %-24s %s  %s  [%.1f s]\n", c.id, c.title, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                clock.seconds());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

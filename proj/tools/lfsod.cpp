// lfsod <mode> [--config cfg.json] [--preset name]... [--set key=value]...
//
// Exit codes: 0 success, 1 numeric or gradient-check failure, 2 usage or
// configuration error, 3 I/O, scene, format or checkpoint error.

#include "lfsod/errors.hpp"
#include "lfsod/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int run(lft::Mode mode, const lft::RunConfig& cfg, bool histograms) {
  using lft::Mode;
  switch (mode) {
    case Mode::gen_data: {
      const auto names = lft::generate_dataset(cfg);
      std::cout << "wrote " << names.size() << " scenes to " << cfg.dataset_root.string() << '\n';
      return 0;
    }
    case Mode::augment:
      lft::augment_dataset(cfg, histograms);
      std::cout << "augmented dataset written to " << cfg.output_dir.string() << '\n';
      return 0;
    case Mode::train: {
      const auto result = lft::train(cfg, std::cout);
      std::cout << "trained " << result.steps.size() << " steps; checkpoint " << result.checkpoint.string() << '\n';
      return 0;
    }
    case Mode::eval: {
      const auto s = lft::evaluate(cfg);
      std::printf("scenes %ld  mae %.6f  f_mean %.6f  e_mean %.6f  s_measure %.6f\n", static_cast<long>(s.n_scenes), s.mae,
                  s.f_mean, s.e_mean, s.s_measure);
      return 0;
    }
    case Mode::gradcheck: {
      const auto summary = lft::run_gradcheck(cfg);
      const lft::GroupCheck* worst = nullptr;
      for (const auto& g : summary.groups) {
        std::printf("%-14s max_rel_error %.3e  (%s)\n", g.group.c_str(), g.max_rel_error, g.worst_parameter.c_str());
        if (!worst || g.max_rel_error > worst->max_rel_error) worst = &g;
      }
      if (summary.passed) {
        std::printf("gradcheck passed (tol %.1e)\n", summary.tol);
        return 0;
      }
      std::printf("gradcheck FAILED: group %s, parameter %s, rel error %.3e > tol %.1e\n", worst->group.c_str(),
                  worst->worst_parameter.c_str(), worst->max_rel_error, summary.tol);
      return 1;
    }
    case Mode::predict:
      lft::predict(cfg);
      std::cout << "masks written to " << cfg.output_dir.string() << '\n';
      return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-field salient object detection: data, training, evaluation"};
  app.require_subcommand(1, 1);

  std::string config;
  std::vector<std::string> presets, overrides;
  bool histograms = false;
  for (const char* name : {"gen-data", "augment", "train", "eval", "gradcheck", "predict"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--preset", presets, "ablation preset (repeatable)");
    sub->add_option("--set", overrides, "dotted-path override key=value (repeatable)");
    if (std::string(name) == "augment") sub->add_flag("--histograms", histograms, "also write hist_report.json");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const lft::Mode mode = lft::parse_mode(app.get_subcommands().front()->get_name());
    const auto file = config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config);
    const lft::RunConfig cfg = lft::load_run_config(mode, file, presets, overrides);
    return run(mode, cfg, histograms);
  } catch (const lft::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 1;
  } catch (const lft::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const lft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lft::ContractError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return 2;
  } catch (const lft::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return 2;
  } catch (const lft::LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return 3;
  } catch (const lft::Error& e) {
    // IoError, SceneError, FormatError.
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

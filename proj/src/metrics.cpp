#include "lfsod/metrics.hpp"

#include <algorithm>

namespace lft {

SceneScores score_scene(const std::string& name, const Tensor& pred, const Tensor& gt) {
  const auto p = as_map(pred);
  const auto g = as_map(gt);
  return SceneScores{name, mae(p, g), f_measure_mean(p, g), e_measure_mean(p, g), s_measure(p, g)};
}

SaliencyScores aggregate_scores(std::vector<SceneScores> scenes) {
  if (scenes.empty()) throw UsageError("cannot aggregate scores of an empty dataset");
  std::stable_sort(scenes.begin(), scenes.end(), [](const SceneScores& a, const SceneScores& b) { return a.name < b.name; });
  SaliencyScores out;
  out.n_scenes = static_cast<Index>(scenes.size());
  for (const auto& s : scenes) {
    out.mae += s.mae;
    out.f_mean += s.f_mean;
    out.e_mean += s.e_mean;
    out.s_measure += s.s_measure;
  }
  const double n = static_cast<double>(scenes.size());
  out.mae /= n;
  out.f_mean /= n;
  out.e_mean /= n;
  out.s_measure /= n;
  out.per_scene = std::move(scenes);
  return out;
}

}  // namespace lft

#pragma once

// Saliency metrics over H×W maps. Every function accepts any Eigen dense
// expression; pred holds values in [0, 1] and gt holds 0/1.

#include "lfsod/errors.hpp"
#include "lfsod/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lft {

using Map2 = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kThresholds = 256;
inline constexpr double kBetaSquared = 0.3;

namespace detail {

template <typename P, typename G>
void require_same_size(const Eigen::DenseBase<P>& pred, const Eigen::DenseBase<G>& gt, const char* metric) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw DimensionError(std::string(metric) + ": prediction is " + std::to_string(pred.rows()) + "x" +
                         std::to_string(pred.cols()) + ", gt is " + std::to_string(gt.rows()) + "x" +
                         std::to_string(gt.cols()));
  }
}

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// Structural similarity of one region as in the structure-measure reference:
/// sample variances over N − 1 + eps.
inline double region_ssim(const Map2& pred, const Map2& gt) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double n = static_cast<double>(pred.size());
  const double x = pred.mean(), y = gt.mean();
  const double sx2 = (pred - x).square().sum() / (n - 1.0 + eps);
  const double sy2 = (gt - y).square().sum() / (n - 1.0 + eps);
  const double sxy = ((pred - x) * (gt - y)).sum() / (n - 1.0 + eps);
  const double alpha = 4.0 * x * y * sxy;
  const double beta = (x * x + y * y) * (sx2 + sy2);
  if (alpha != 0.0) return alpha / (beta + eps);
  return beta == 0.0 ? 1.0 : 0.0;
}

/// 2x̄/(x̄² + 1 + σ + eps) over the pixels where `region` is set; σ is the
/// sample standard deviation (0 for a single pixel).
inline double object_score(const Map2& values, const Map2& region) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double n = region.sum();
  if (n == 0.0) return 0.0;
  const double mean = (values * region).sum() / n;
  const double var = n > 1.0 ? ((values - mean).square() * region).sum() / (n - 1.0) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + std::sqrt(var) + eps);
}

}  // namespace detail

template <typename P, typename G>
double mae(const Eigen::DenseBase<P>& pred, const Eigen::DenseBase<G>& gt) {
  detail::require_same_size(pred, gt, "mae");
  return (pred.derived().array() - gt.derived().array()).abs().mean();
}

/// Mean over t = 0..255 of F_β at threshold t/255 (pred ≥ t/255 is positive),
/// β² = 0.3, with 0/0 taken as 0 in precision, recall and F.
template <typename P, typename G>
double f_measure_mean(const Eigen::DenseBase<P>& pred_in, const Eigen::DenseBase<G>& gt_in) {
  detail::require_same_size(pred_in, gt_in, "f_measure_mean");
  const Map2 pred = pred_in.derived().array(), gt = gt_in.derived().array();
  const double positives = gt.sum();
  double total = 0.0;
  for (int t = 0; t < kThresholds; ++t) {
    const Map2 bin = (pred >= t / 255.0).template cast<double>();
    const double tp = (bin * gt).sum(), predicted = bin.sum();
    const double precision = detail::ratio_or_zero(tp, predicted);
    const double recall = detail::ratio_or_zero(tp, positives);
    total += detail::ratio_or_zero((1.0 + kBetaSquared) * precision * recall, kBetaSquared * precision + recall);
  }
  return total / kThresholds;
}

/// Mean over the 256 thresholds of the enhanced-alignment score. With an
/// all-zero or all-one gt the score is 1 − mean|bin − gt|.
template <typename P, typename G>
double e_measure_mean(const Eigen::DenseBase<P>& pred_in, const Eigen::DenseBase<G>& gt_in) {
  detail::require_same_size(pred_in, gt_in, "e_measure_mean");
  const Map2 pred = pred_in.derived().array(), gt = gt_in.derived().array();
  const double n = static_cast<double>(gt.size());
  const double positives = gt.sum();
  const bool degenerate = positives == 0.0 || positives == n;
  const Map2 phi_g = gt - gt.mean();
  double total = 0.0;
  for (int t = 0; t < kThresholds; ++t) {
    const Map2 bin = (pred >= t / 255.0).template cast<double>();
    if (degenerate) {
      total += 1.0 - (bin - gt).abs().mean();
      continue;
    }
    const Map2 phi_p = bin - bin.mean();
    const Map2 align = 2.0 * phi_p * phi_g / (phi_p.square() + phi_g.square());
    total += ((1.0 + align).square() / 4.0).sum() / n;
  }
  return total / kThresholds;
}

/// 0.5·S_object + 0.5·S_region, clamped to [0, 1]. An all-zero gt scores
/// 1 − mean(pred); an all-one gt scores mean(pred). The region split sits at
/// the rounded 1-based gt centroid; an empty quadrant contributes 0.
template <typename P, typename G>
double s_measure(const Eigen::DenseBase<P>& pred_in, const Eigen::DenseBase<G>& gt_in) {
  detail::require_same_size(pred_in, gt_in, "s_measure");
  const Map2 pred = pred_in.derived().array(), gt = gt_in.derived().array();
  const Index rows = gt.rows(), cols = gt.cols();
  const double fg = gt.mean();
  if (fg == 0.0) return std::clamp(1.0 - pred.mean(), 0.0, 1.0);
  if (fg == 1.0) return std::clamp(pred.mean(), 0.0, 1.0);

  const Map2 bg = 1.0 - gt;
  const double o_fg = detail::object_score(pred * gt, gt);
  const double o_bg = detail::object_score((1.0 - pred) * bg, bg);
  const double s_object = fg * o_fg + (1.0 - fg) * o_bg;

  const double total = gt.sum();
  double sx = 0.0, sy = 0.0;
  for (Index c = 0; c < cols; ++c) sx += gt.col(c).sum() * static_cast<double>(c + 1);
  for (Index r = 0; r < rows; ++r) sy += gt.row(r).sum() * static_cast<double>(r + 1);
  const Index x = static_cast<Index>(std::round(sx / total));
  const Index y = static_cast<Index>(std::round(sy / total));

  const double area = static_cast<double>(rows * cols);
  const double w1 = static_cast<double>(x * y) / area;
  const double w2 = static_cast<double>((cols - x) * y) / area;
  const double w3 = static_cast<double>(x * (rows - y)) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  auto quadrant = [&](Index r0, Index c0, Index nr, Index nc) {
    if (nr <= 0 || nc <= 0) return 0.0;
    return detail::region_ssim(pred.block(r0, c0, nr, nc), gt.block(r0, c0, nr, nc));
  };
  const double s_region = w1 * quadrant(0, 0, y, x) + w2 * quadrant(0, x, y, cols - x) +
                          w3 * quadrant(y, 0, rows - y, x) + w4 * quadrant(y, x, rows - y, cols - x);
  return std::clamp(0.5 * s_object + 0.5 * s_region, 0.0, 1.0);
}

/// Row-major H×W view of a 1×H×W tensor.
inline Eigen::Map<const Map2> as_map(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) throw DimensionError("expected a 1×H×W map, got " + to_string(t.shape));
  return Eigen::Map<const Map2>(t.data.data(), t.dim(1), t.dim(2));
}

struct SceneScores {
  std::string name;
  double mae = 0.0;
  double f_mean = 0.0;
  double e_mean = 0.0;
  double s_measure = 0.0;
};

struct SaliencyScores {
  double mae = 0.0;
  double f_mean = 0.0;
  double e_mean = 0.0;
  double s_measure = 0.0;
  Index n_scenes = 0;
  std::vector<SceneScores> per_scene;  // ordered by name
};

SceneScores score_scene(const std::string& name, const Tensor& pred, const Tensor& gt);

/// Unweighted means of the per-scene scores, which are sorted by name.
SaliencyScores aggregate_scores(std::vector<SceneScores> scenes);

}  // namespace lft

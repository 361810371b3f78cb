#pragma once

#include "lfsod/decoder.hpp"

#include <array>

namespace lft {

struct LossOptions {
  double tversky_weight = 1.0;  // λ_t
  double tversky_a = 0.7;       // false-positive penalty
  double tversky_b = 0.3;       // false-negative penalty
  Index boundary_window = 31;
};

/// w = 1 + 5·|avgpool(gt) − gt|, stride 1, pad window/2. Padding is excluded
/// from each average, so a constant mask has w ≡ 1.
Tensor boundary_weights(const Tensor& gt, Index window = 31);

/// Weighted BCE + weighted IoU of sigmoid(logits) against a binary mask:
///   Σw·bce/Σw + 1 − (Σw·p·g + 1)/(Σw·(p + g − p·g) + 1).
Var structure_loss(const Var& logits, const Tensor& gt, Index window = 31);

/// 1 − (TP + 1)/(TP + a·FP + b·FN + 1) with soft counts.
Var tversky_loss(const Var& prob, const Tensor& gt, double a, double b);

struct LossReport {
  double total = 0.0;
  std::array<double, 4> structure_stage{};
  double structure_final = 0.0;
  double tversky = 0.0;
};

struct LossTerms {
  Var total;
  LossReport report;
};

/// Σ_l structure(stage_l, gt↓) + structure(final, gt) + λ_t·tversky(final).
/// gt↓ is the nearest-neighbour downsample of gt to each stage's size.
LossTerms total_loss(const DecoderOutput& out, const Tensor& gt, const LossOptions& options = {});

}  // namespace lft

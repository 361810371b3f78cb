#pragma once

#include "lfsod/tensor.hpp"

#include <span>

namespace lft {

struct AdamWOptions {
  double lr = 5e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update with decoupled weight decay:
///   θ ← θ − lr·wd·θ,  m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²,
///   θ ← θ − lr·m̂ / (√v̂ + eps)  with bias-corrected m̂, v̂.
/// Gradients are cleared afterwards. Every parameter must carry a gradient.
void adamw_step(std::span<Parameter* const> params, const AdamWOptions& options);

}  // namespace lft

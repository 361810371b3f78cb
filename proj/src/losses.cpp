#include "lfsod/losses.hpp"

#include "lfsod/errors.hpp"
#include "lfsod/image.hpp"

#include <cmath>

namespace lft {

namespace {

void require_mask(const Tensor& gt, const char* op) {
  if (gt.rank() != 3 || gt.dim(0) != 1) throw DimensionError(std::string(op) + ": gt must be 1×H×W, got " + to_string(gt.shape));
  if (!((gt.data.array() == 0.0) || (gt.data.array() == 1.0)).all()) throw ContractError(std::string(op) + ": gt is not binary");
}

}  // namespace

Tensor boundary_weights(const Tensor& gt, Index window) {
  require_mask(gt, "boundary_weights");
  const Index h = gt.dim(1), w = gt.dim(2), r = window / 2;
  // Summed-area table; entries are integer counts, so every sum is exact.
  RowMatrix sat = RowMatrix::Zero(h + 1, w + 1);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) sat(y + 1, x + 1) = gt.at(0, y, x) + sat(y, x + 1) + sat(y + 1, x) - sat(y, x);
  }
  Tensor out({1, h, w});
  for (Index y = 0; y < h; ++y) {
    const Index y0 = std::max<Index>(0, y - r), y1 = std::min(h, y + r + 1);
    for (Index x = 0; x < w; ++x) {
      const Index x0 = std::max<Index>(0, x - r), x1 = std::min(w, x + r + 1);
      const double ones = sat(y1, x1) - sat(y0, x1) - sat(y1, x0) + sat(y0, x0);
      const double avg = ones / static_cast<double>((y1 - y0) * (x1 - x0));
      out.at(0, y, x) = 1.0 + 5.0 * std::abs(avg - gt.at(0, y, x));
    }
  }
  return out;
}

Var structure_loss(const Var& logits, const Tensor& gt, Index window) {
  require_mask(gt, "structure_loss");
  if (logits.shape() != gt.shape) {
    throw DimensionError("structure_loss: logits " + to_string(logits.shape()) + " vs gt " + to_string(gt.shape));
  }
  const Tensor w = boundary_weights(gt, window);
  const Var W = constant(w), G = constant(gt);

  const Var wbce = sum(W * bce_with_logits(logits, G)) / constant_scalar(w.data.sum());

  const Var p = sigmoid(logits);
  const Var inter = sum(W * p * G);
  const Var uni = sum(W * (p + G));
  const Var wiou = shift(scale(shift(inter, 1.0) / shift(uni - inter, 1.0), -1.0), 1.0);
  return wbce + wiou;
}

Var tversky_loss(const Var& prob, const Tensor& gt, double a, double b) {
  require_mask(gt, "tversky_loss");
  if (a < 0.0 || b < 0.0) throw ConfigError("tversky weights must be non-negative");
  if (prob.shape() != gt.shape) throw DimensionError("tversky_loss: shapes differ");
  const Var G = constant(gt);
  Tensor background = gt;
  background.data = 1.0 - gt.data.array();
  const Var tp = sum(prob * G);
  const Var fp = sum(prob * constant(background));
  const Var fn = sum(shift(scale(prob, -1.0), 1.0) * G);
  const Var denom = shift(tp + scale(fp, a) + scale(fn, b), 1.0);
  return shift(scale(shift(tp, 1.0) / denom, -1.0), 1.0);
}

LossTerms total_loss(const DecoderOutput& out, const Tensor& gt, const LossOptions& o) {
  if (out.stage_logits.size() != 4) throw ContractError("total_loss needs the four training-mode stage masks");
  LossTerms t;
  Image mask = from_tensor(gt);
  Var total;
  for (std::size_t l = 0; l < 4; ++l) {
    const Var& s = out.stage_logits[l];
    const Tensor g = to_tensor(resize_nearest(mask, s.dim(1), s.dim(2)));
    const Var term = structure_loss(s, g, o.boundary_window);
    t.report.structure_stage[l] = term.value()[0];
    total = total.valid() ? total + term : term;
  }
  const Var final_term = structure_loss(out.logits, gt, o.boundary_window);
  const Var tv = tversky_loss(out.mask, gt, o.tversky_a, o.tversky_b);
  t.report.structure_final = final_term.value()[0];
  t.report.tversky = tv.value()[0];
  t.total = total + final_term + scale(tv, o.tversky_weight);
  t.report.total = t.total.value()[0];
  if (!std::isfinite(t.report.total)) throw NumericError("total loss is not finite");
  return t;
}

}  // namespace lft

#pragma once

#include "lfsod/autograd.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lft {

/// A deterministic scalar objective. It is called once with a recording tape
/// for the analytic gradient and then with non-recording tapes for the
/// central differences.
using Objective = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-6;
  /// 0 checks every entry; otherwise this many random entries plus the
  /// entry with the largest analytic gradient.
  Index entries_per_parameter = 0;
  std::uint64_t seed = 0;
  /// Relative error is |a − n| / max(|a|, |n|, floor).
  double denominator_floor = 1e-8;
};

struct EntryCheck {
  Index index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct ParameterCheck {
  std::string name;
  Index checked = 0;
  EntryCheck worst;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;
  double max_rel_error = 0.0;
  double tol = 0.0;
  bool passed = true;
};

double relative_error(double analytic, double numeric, double floor);

/// Central-difference check of every parameter gradient of `f`. Parameter
/// values are restored afterwards and their grads hold the analytic result.
/// Throws NumericError when `f` is not finite.
GradCheckReport check_gradients(const Objective& f, std::span<Parameter* const> params,
                                const GradCheckOptions& options = {});

}  // namespace lft

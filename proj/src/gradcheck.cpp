#include "lfsod/gradcheck.hpp"

#include "lfsod/errors.hpp"
#include "lfsod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lft {

namespace {

double evaluate(const Objective& f) {
  Tape tape(false);
  const Var out = f(tape);
  if (out.size() != 1) throw ContractError("gradient-check objective must return one value");
  const double v = out.value().data[0];
  if (!std::isfinite(v)) throw NumericError("gradient-check objective is not finite");
  return v;
}

std::vector<Index> chosen_entries(const Parameter& p, const Vector& analytic, Index count, CounterRng rng) {
  const Index n = p.size();
  if (count <= 0 || count >= n) {
    std::vector<Index> all(n);
    for (Index i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::set<Index> picked;
  Index largest = 0;
  analytic.cwiseAbs().maxCoeff(&largest);
  picked.insert(largest);
  while (static_cast<Index>(picked.size()) < count + 1) picked.insert(rng.uniform_index(n));
  return {picked.begin(), picked.end()};
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const Objective& f, std::span<Parameter* const> params,
                                const GradCheckOptions& options) {
  if (options.eps <= 0.0) throw ConfigError("gradient check eps must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    const Var out = f(tape);
    if (!std::isfinite(out.value().data[0])) throw NumericError("gradient-check objective is not finite");
    tape.backward(out);
  }

  GradCheckReport report;
  report.tol = options.tol;
  CounterRng rng(options.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const Vector analytic = p.tensor.grad ? *p.tensor.grad : Vector::Zero(p.size());
    ParameterCheck check;
    check.name = p.name;
    for (Index i : chosen_entries(p, analytic, options.entries_per_parameter, rng.split(pi))) {
      const double saved = p.tensor.data[i];
      p.tensor.data[i] = saved + options.eps;
      const double up = evaluate(f);
      p.tensor.data[i] = saved - options.eps;
      const double down = evaluate(f);
      p.tensor.data[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double err = relative_error(analytic[i], numeric, options.denominator_floor);
      ++check.checked;
      if (check.worst.index < 0 || err > check.worst.rel_error) check.worst = {i, analytic[i], numeric, err};
    }
    report.max_rel_error = std::max(report.max_rel_error, check.worst.rel_error);
    report.parameters.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= options.tol;
  return report;
}

}  // namespace lft

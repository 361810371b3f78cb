#include "lfsod/optim.hpp"

#include "lfsod/errors.hpp"

#include <cmath>

namespace lft {

void adamw_step(std::span<Parameter* const> params, const AdamWOptions& o) {
  for (Parameter* p : params) {
    if (!p->tensor.grad) throw ContractError("adamw_step: parameter '" + p->name + "' has no gradient");
  }
  for (Parameter* p : params) {
    const Vector& g = *p->tensor.grad;
    Vector& theta = p->tensor.data;
    if (p->first_moment.size() != theta.size()) p->first_moment = Vector::Zero(theta.size());
    if (p->second_moment.size() != theta.size()) p->second_moment = Vector::Zero(theta.size());
    ++p->step;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(p->step));
    for (Index i = 0; i < theta.size(); ++i) {
      theta[i] -= o.lr * o.weight_decay * theta[i];
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = o.beta1 * m + (1.0 - o.beta1) * g[i];
      v = o.beta2 * v + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      theta[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
    p->zero_grad();
  }
}

}  // namespace lft

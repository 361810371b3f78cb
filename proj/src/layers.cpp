#include "lfsod/layers.hpp"

#include <cmath>

namespace lft {

ConvParams make_conv(const std::string& name, Index in, Index out, Index kernel, const CounterRng& rng, Bias bias) {
  CounterRng draw = rng.split(name);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  Tensor w({out, in, kernel, kernel});
  for (Index i = 0; i < w.size(); ++i) w[i] = draw.uniform(-bound, bound);
  ConvParams p{Parameter(name + ".weight", std::move(w)), std::nullopt, kernel};
  if (bias == Bias::with) p.bias.emplace(name + ".bias", Tensor({out}));
  return p;
}

NormParams make_norm(const std::string& name, Index channels) {
  return NormParams{Parameter(name + ".scale", Tensor({channels}, 1.0)), Parameter(name + ".shift", Tensor({channels}))};
}

Var conv(Tape& tape, ConvParams& p, const Var& x, Index stride) {
  const Var b = p.bias ? tape.parameter(*p.bias) : constant(Tensor({p.weight.tensor.dim(0)}));
  return conv2d(x, tape.parameter(p.weight), b, stride, p.kernel / 2);
}

Var norm(Tape& tape, NormParams& p, const Var& x) {
  return channel_norm(x, tape.parameter(p.scale), tape.parameter(p.shift));
}

void append(std::vector<Parameter*>& out, ConvParams& p) {
  out.push_back(&p.weight);
  if (p.bias) out.push_back(&*p.bias);
}

void append(std::vector<Parameter*>& out, NormParams& p) {
  out.push_back(&p.scale);
  out.push_back(&p.shift);
}

}  // namespace lft

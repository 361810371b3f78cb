#pragma once

#include "lfsod/autograd.hpp"
#include "lfsod/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lft {

/// Square-kernel convolution weights [out×in×k×k] and optional bias [out].
/// A bias that a following operation cancels exactly (per-channel
/// normalisation, a row-wise softmax) is left out: its true gradient is 0.
struct ConvParams {
  Parameter weight;
  std::optional<Parameter> bias;
  Index kernel = 1;
};

/// Per-channel affine after normalisation.
struct NormParams {
  Parameter scale;
  Parameter shift;
};

enum class Bias { with, without };

/// Weights uniform in ±1/√(in·k·k) drawn from rng.split(name), zero bias.
ConvParams make_conv(const std::string& name, Index in, Index out, Index kernel, const CounterRng& rng,
                     Bias bias = Bias::with);
/// Scale ones, shift zeros.
NormParams make_norm(const std::string& name, Index channels);

Var conv(Tape& tape, ConvParams& p, const Var& x, Index stride = 1);
Var norm(Tape& tape, NormParams& p, const Var& x);

void append(std::vector<Parameter*>& out, ConvParams& p);
void append(std::vector<Parameter*>& out, NormParams& p);

}  // namespace lft

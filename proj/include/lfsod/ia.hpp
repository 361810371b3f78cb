#pragma once

#include "lfsod/encoder.hpp"

#include <string>
#include <vector>

namespace lft {

/// A_PD: af + Σ σ_n·F̂_n.  A_D: af + Σ F̂_n.  ADD: af + Σ fs_n (no attention).
enum class Fusion { A_PD, A_D, ADD };

Fusion parse_fusion(const std::string& name);
std::string to_string(Fusion f);

struct IAConfig {
  Fusion fusion = Fusion::A_PD;
  Index reduction_rate = 8;  // query/key channels are C / reduction_rate
  /// Slices taken from the 12-slice stack, evenly spaced; 0 bypasses the stack.
  Index num_slices = kStackSize;

  void validate() const;
};

/// Stack indices i·12/k for i < k.
std::vector<Index> selected_slices(Index num_slices);

struct IAStageParams {
  ConvParams conv_q;
  ConvParams conv_k;
  ConvParams conv_v;
  Parameter sigma;  // one weight per slice, initialised to 1/num_slices
};

/// One entry per stage; empty when the stack is bypassed.
std::vector<IAStageParams> make_ia(const EncoderConfig& enc, const IAConfig& cfg, const CounterRng& rng);
void append(std::vector<Parameter*>& out, std::vector<IAStageParams>& p);

/// Exact parameter count of the module for the given configuration.
Index ia_parameter_count(const EncoderConfig& enc, const IAConfig& cfg);

/// M = softmax_rows(Q·Kᵀ) with Q, K the HW×C* reshapes of conv_q(fs), conv_k(fs).
Var attention_map(Tape& tape, IAStageParams& p, const IAConfig& cfg, const Var& fs_feat);

/// conv_v(af), the value map shared by every slice of a stage.
Var value_map(Tape& tape, IAStageParams& p, const Var& af_feat);

/// T = M·V with V the HW×C reshape of `value`; returned as C×H×W.
Var aggregate_slice(const Var& attention, const Var& value);

/// Fused stage feature; the output shape equals af_feat's.
Var fuse_stage(Tape& tape, IAStageParams* p, const IAConfig& cfg, const Var& af_feat, const std::vector<Var>& fs_feats);

FeaturePyramid fuse_pyramids(Tape& tape, std::vector<IAStageParams>& p, const IAConfig& cfg, const ScenePyramids& pyramids);

}  // namespace lft

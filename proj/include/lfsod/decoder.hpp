#pragma once

#include "lfsod/encoder.hpp"

#include <vector>

namespace lft {

struct DecoderConfig {
  Index channels = 64;  // width of the 3×3 fusion conv
};

struct DecoderParams {
  std::vector<ConvParams> compress;  // 1×1, C_l → 1, one per stage
  ConvParams fuse;                   // 3×3, ΣC_l → channels
  ConvParams head;                   // 1×1, channels → 1
};

struct DecoderOutput {
  Var logits;  // 1×input×input
  Var mask;    // sigmoid(logits)
  /// Per-stage deep-supervision logits [1×H_l×W_l]; empty outside training.
  std::vector<Var> stage_logits;
};

DecoderParams make_decoder(const EncoderConfig& enc, const DecoderConfig& cfg, const CounterRng& rng);
void append(std::vector<Parameter*>& out, DecoderParams& p);

/// 1×1 conv of stage l's features to one channel.
Var compress_stage(Tape& tape, DecoderParams& p, Index stage, const Var& feature);

/// f_2..f_4 resized to f_1's size, concatenated, fused by conv3×3 + GELU and
/// the 1×1 head, then resized to the input size.
DecoderOutput decode_pyramid(Tape& tape, DecoderParams& p, const EncoderConfig& enc, const FeaturePyramid& pyramid,
                             bool training);

}  // namespace lft

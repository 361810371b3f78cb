#pragma once

#include "lfsod/layers.hpp"
#include "lfsod/mixld.hpp"

#include <array>
#include <vector>

namespace lft {

inline constexpr Index kStages = 4;

struct EncoderConfig {
  std::array<Index, kStages> stage_channels{64, 128, 320, 512};
  std::array<Index, kStages> stage_strides{4, 2, 2, 2};
  Index blocks_per_stage = 1;
  Index input_size = 256;

  /// Spatial side of stage l's features for a square input.
  Index stage_size(Index l) const;
  void validate() const;
};

/// y = x + gelu(norm(conv3x3(x))).
struct EncoderBlock {
  ConvParams conv;
  NormParams norm;
};

/// Patch embedding: a (2s−1)×(2s−1) conv with stride s and pad s−1, then a norm.
struct EncoderStage {
  ConvParams embed;
  NormParams norm;
  std::vector<EncoderBlock> blocks;
};

struct EncoderParams {
  std::vector<EncoderStage> stages;
};

using FeaturePyramid = std::array<Var, kStages>;

EncoderParams make_encoder(const EncoderConfig& cfg, const CounterRng& rng);
void append(std::vector<Parameter*>& out, EncoderParams& p);

/// Four feature maps [C_l × H/∏s × W/∏s]. The image must be 3×input_size×input_size.
FeaturePyramid encode_image(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const Var& image);

/// The AF image and each listed FS slice through the same parameters.
struct ScenePyramids {
  FeaturePyramid af;
  std::vector<FeaturePyramid> fs;
};

ScenePyramids encode_scene(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const AugmentedScene& scene,
                           const std::vector<Index>& slices);

/// All twelve slices.
ScenePyramids encode_scene(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const AugmentedScene& scene);

}  // namespace lft

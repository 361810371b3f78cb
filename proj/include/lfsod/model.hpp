#pragma once

#include "lfsod/decoder.hpp"
#include "lfsod/ia.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lft {

struct ModelConfig {
  EncoderConfig encoder;
  IAConfig ia;
  DecoderConfig decoder;

  void validate() const;
};

/// Every trainable tensor of the pipeline. Parameters live in vectors, so
/// their addresses survive moves of the Model.
struct Model {
  ModelConfig config;
  EncoderParams encoder;
  std::vector<IAStageParams> ia;
  DecoderParams decoder;

  /// Encoder, then IA, then decoder, in construction order.
  std::vector<Parameter*> parameters();
  Index parameter_count();
};

Model make_model(const ModelConfig& cfg, std::uint64_t seed);

/// Gradient-check group of a parameter name: encoder, ia.conv_q, ia.conv_k,
/// ia.conv_v, ia.sigma, decoder or head.
std::string parameter_group(const std::string& name);

/// Encode AF and the selected slices, fuse, decode.
DecoderOutput forward(Tape& tape, Model& model, const AugmentedScene& scene, bool training);

/// Inference on an unaugmented scene: probabilities [1×H×W].
Tensor predict_mask(Model& model, const LFScene& scene);

}  // namespace lft

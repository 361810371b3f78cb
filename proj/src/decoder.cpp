#include "lfsod/decoder.hpp"

#include "lfsod/errors.hpp"

namespace lft {

DecoderParams make_decoder(const EncoderConfig& enc, const DecoderConfig& cfg, const CounterRng& rng) {
  if (cfg.channels < 1) throw ConfigError("decoder.channels must be positive");
  DecoderParams p;
  Index total = 0;
  for (Index l = 0; l < kStages; ++l) {
    const Index c = enc.stage_channels[static_cast<std::size_t>(l)];
    p.compress.push_back(make_conv("decoder.compress" + std::to_string(l + 1), c, 1, 1, rng));
    total += c;
  }
  p.fuse = make_conv("decoder.fuse", total, cfg.channels, 3, rng);
  p.head = make_conv("decoder.head", cfg.channels, 1, 1, rng);
  return p;
}

void append(std::vector<Parameter*>& out, DecoderParams& p) {
  for (auto& c : p.compress) append(out, c);
  append(out, p.fuse);
  append(out, p.head);
}

Var compress_stage(Tape& tape, DecoderParams& p, Index stage, const Var& feature) {
  ConvParams& c = p.compress.at(static_cast<std::size_t>(stage));
  if (feature.value().rank() != 3 || feature.dim(0) != c.weight.tensor.dim(1)) {
    throw ContractError("compress_stage: stage " + std::to_string(stage + 1) + " expects " +
                        std::to_string(c.weight.tensor.dim(1)) + " channels, got " + to_string(feature.shape()));
  }
  return conv(tape, c, feature);
}

DecoderOutput decode_pyramid(Tape& tape, DecoderParams& p, const EncoderConfig& enc, const FeaturePyramid& pyramid,
                             bool training) {
  const Index h = pyramid[0].dim(1), w = pyramid[0].dim(2);
  std::vector<Var> parts{pyramid[0]};
  for (std::size_t l = 1; l < kStages; ++l) parts.push_back(bilinear_resize(pyramid[l], h, w));

  DecoderOutput out;
  const Var fused = gelu(conv(tape, p.fuse, concat(parts)));
  out.logits = bilinear_resize(conv(tape, p.head, fused), enc.input_size, enc.input_size);
  out.mask = sigmoid(out.logits);
  if (training) {
    for (Index l = 0; l < kStages; ++l) out.stage_logits.push_back(compress_stage(tape, p, l, pyramid[static_cast<std::size_t>(l)]));
  }
  return out;
}

}  // namespace lft

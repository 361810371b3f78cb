#include "lfsod/encoder.hpp"

#include "lfsod/errors.hpp"

namespace lft {

Index EncoderConfig::stage_size(Index l) const {
  Index size = input_size;
  for (Index i = 0; i <= l; ++i) size /= stage_strides[static_cast<std::size_t>(i)];
  return size;
}

void EncoderConfig::validate() const {
  if (blocks_per_stage < 1) throw ConfigError("encoder.blocks_per_stage must be >= 1");
  Index size = input_size;
  for (std::size_t l = 0; l < kStages; ++l) {
    if (stage_channels[l] < 1) throw ConfigError("encoder.stage_channels must be positive");
    if (stage_strides[l] < 1 || size % stage_strides[l] != 0) {
      throw ConfigError("encoder: input size " + std::to_string(input_size) + " is not divisible by the stage strides");
    }
    size /= stage_strides[l];
  }
}

EncoderParams make_encoder(const EncoderConfig& cfg, const CounterRng& rng) {
  cfg.validate();
  EncoderParams p;
  Index in = 3;
  for (Index l = 0; l < kStages; ++l) {
    const std::string prefix = "encoder.stage" + std::to_string(l + 1);
    const Index c = cfg.stage_channels[static_cast<std::size_t>(l)];
    const Index s = cfg.stage_strides[static_cast<std::size_t>(l)];
    EncoderStage stage{make_conv(prefix + ".embed", in, c, 2 * s - 1, rng, Bias::without), make_norm(prefix + ".embed_norm", c), {}};
    for (Index b = 0; b < cfg.blocks_per_stage; ++b) {
      const std::string block = prefix + ".block" + std::to_string(b + 1);
      stage.blocks.push_back({make_conv(block + ".conv", c, c, 3, rng, Bias::without), make_norm(block + ".norm", c)});
    }
    p.stages.push_back(std::move(stage));
    in = c;
  }
  return p;
}

void append(std::vector<Parameter*>& out, EncoderParams& p) {
  for (auto& stage : p.stages) {
    append(out, stage.embed);
    append(out, stage.norm);
    for (auto& block : stage.blocks) {
      append(out, block.conv);
      append(out, block.norm);
    }
  }
}

FeaturePyramid encode_image(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const Var& image) {
  if (image.value().rank() != 3 || image.dim(0) != 3 || image.dim(1) != cfg.input_size || image.dim(2) != cfg.input_size) {
    throw ContractError("encode_image expects a 3×" + std::to_string(cfg.input_size) + "×" +
                        std::to_string(cfg.input_size) + " image, got " + to_string(image.shape()));
  }
  FeaturePyramid out;
  Var x = image;
  for (Index l = 0; l < kStages; ++l) {
    EncoderStage& stage = p.stages[static_cast<std::size_t>(l)];
    x = norm(tape, stage.norm, conv(tape, stage.embed, x, cfg.stage_strides[static_cast<std::size_t>(l)]));
    for (auto& block : stage.blocks) x = x + gelu(norm(tape, block.norm, conv(tape, block.conv, x)));
    out[static_cast<std::size_t>(l)] = x;
  }
  return out;
}

ScenePyramids encode_scene(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const AugmentedScene& scene,
                           const std::vector<Index>& slices) {
  ScenePyramids out;
  out.af = encode_image(tape, p, cfg, constant(to_tensor(scene.af_m)));
  for (Index n : slices) {
    if (n < 0 || n >= static_cast<Index>(scene.fs_m.size())) throw ContractError("encode_scene: slice index out of range");
    out.fs.push_back(encode_image(tape, p, cfg, constant(to_tensor(scene.fs_m[static_cast<std::size_t>(n)]))));
  }
  return out;
}

ScenePyramids encode_scene(Tape& tape, EncoderParams& p, const EncoderConfig& cfg, const AugmentedScene& scene) {
  std::vector<Index> all(scene.fs_m.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  return encode_scene(tape, p, cfg, scene, all);
}

}  // namespace lft

#include "lfsod/model.hpp"

#include "lfsod/errors.hpp"

namespace lft {

void ModelConfig::validate() const {
  encoder.validate();
  ia.validate();
  if (decoder.channels < 1) throw ConfigError("decoder.channels must be positive");
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  append(out, encoder);
  append(out, ia);
  append(out, decoder);
  return out;
}

Index Model::parameter_count() {
  Index total = 0;
  for (const Parameter* p : parameters()) total += p->size();
  return total;
}

Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const CounterRng rng = CounterRng(seed).split("init");
  Model m;
  m.config = cfg;
  m.encoder = make_encoder(cfg.encoder, rng);
  m.ia = make_ia(cfg.encoder, cfg.ia, rng);
  m.decoder = make_decoder(cfg.encoder, cfg.decoder, rng);
  return m;
}

std::string parameter_group(const std::string& name) {
  auto starts = [&](const char* prefix) { return name.rfind(prefix, 0) == 0; };
  auto has = [&](const char* part) { return name.find(part) != std::string::npos; };
  if (starts("encoder.")) return "encoder";
  if (starts("ia.")) {
    for (const char* g : {"conv_q", "conv_k", "conv_v", "sigma"}) {
      if (has((std::string(".") + g).c_str())) return std::string("ia.") + g;
    }
  }
  if (starts("decoder.head")) return "head";
  if (starts("decoder.")) return "decoder";
  throw ContractError("parameter '" + name + "' belongs to no group");
}

DecoderOutput forward(Tape& tape, Model& model, const AugmentedScene& scene, bool training) {
  const ModelConfig& cfg = model.config;
  if (static_cast<Index>(scene.fs_m.size()) != kStackSize) throw ContractError("forward: scene stack is not normalized to 12 slices");
  const ScenePyramids pyramids = encode_scene(tape, model.encoder, cfg.encoder, scene, selected_slices(cfg.ia.num_slices));
  const FeaturePyramid fused = fuse_pyramids(tape, model.ia, cfg.ia, pyramids);
  return decode_pyramid(tape, model.decoder, cfg.encoder, fused, training);
}

Tensor predict_mask(Model& model, const LFScene& scene) {
  Tape tape(false);
  return forward(tape, model, unaugmented(scene), false).mask.value();
}

}  // namespace lft

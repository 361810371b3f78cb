#include "lfsod/ia.hpp"

#include "lfsod/errors.hpp"

namespace lft {

Fusion parse_fusion(const std::string& name) {
  if (name == "A_PD") return Fusion::A_PD;
  if (name == "A_D") return Fusion::A_D;
  if (name == "ADD") return Fusion::ADD;
  if (name == "DA") throw ConfigError("fusion 'DA' (deformable cross attention) is not supported");
  throw ConfigError("unknown fusion strategy '" + name + "' (expected A_PD, A_D or ADD)");
}

std::string to_string(Fusion f) {
  switch (f) {
    case Fusion::A_PD: return "A_PD";
    case Fusion::A_D: return "A_D";
    case Fusion::ADD: return "ADD";
  }
  return "?";
}

void IAConfig::validate() const {
  if (reduction_rate != 1 && reduction_rate != 4 && reduction_rate != 8 && reduction_rate != 16) {
    throw ConfigError("ia.reduction_rate must be one of 1, 4, 8, 16; got " + std::to_string(reduction_rate));
  }
  if (num_slices < 0 || num_slices > kStackSize) throw ConfigError("ia.num_slices must lie in [0, 12]");
}

std::vector<Index> selected_slices(Index num_slices) {
  std::vector<Index> out;
  for (Index i = 0; i < num_slices; ++i) out.push_back(i * kStackSize / num_slices);
  return out;
}

namespace {

Index reduced_channels(Index c, const IAConfig& cfg) {
  if (c % cfg.reduction_rate != 0) {
    throw ConfigError("ia: " + std::to_string(c) + " channels are not divisible by reduction rate " +
                      std::to_string(cfg.reduction_rate));
  }
  return c / cfg.reduction_rate;
}

}  // namespace

std::vector<IAStageParams> make_ia(const EncoderConfig& enc, const IAConfig& cfg, const CounterRng& rng) {
  cfg.validate();
  std::vector<IAStageParams> out;
  if (cfg.num_slices == 0) return out;
  for (Index l = 0; l < kStages; ++l) {
    const std::string prefix = "ia.stage" + std::to_string(l + 1);
    const Index c = enc.stage_channels[static_cast<std::size_t>(l)];
    const Index cr = reduced_channels(c, cfg);
    out.push_back({make_conv(prefix + ".conv_q", c, cr, 1, rng), make_conv(prefix + ".conv_k", c, cr, 1, rng, Bias::without),
                   make_conv(prefix + ".conv_v", c, c, 1, rng),
                   Parameter(prefix + ".sigma", Tensor({cfg.num_slices}, 1.0 / static_cast<double>(cfg.num_slices)))});
  }
  return out;
}

void append(std::vector<Parameter*>& out, std::vector<IAStageParams>& p) {
  for (auto& stage : p) {
    append(out, stage.conv_q);
    append(out, stage.conv_k);
    append(out, stage.conv_v);
    out.push_back(&stage.sigma);
  }
}

Index ia_parameter_count(const EncoderConfig& enc, const IAConfig& cfg) {
  if (cfg.num_slices == 0) return 0;
  Index total = 0;
  for (Index c : enc.stage_channels) {
    const Index cr = reduced_channels(c, cfg);
    total += (c * cr + cr) + c * cr + (c * c + c) + cfg.num_slices;  // q, k (no bias), v, σ
  }
  return total;
}

Var attention_map(Tape& tape, IAStageParams& p, const IAConfig& cfg, const Var& fs_feat) {
  const Index c = fs_feat.dim(0), hw = fs_feat.dim(1) * fs_feat.dim(2);
  const Index cr = reduced_channels(c, cfg);
  const Var q = reshape(conv(tape, p.conv_q, fs_feat), {cr, hw});
  const Var k = reshape(conv(tape, p.conv_k, fs_feat), {cr, hw});
  return softmax_lastdim(matmul(transpose(q), k));
}

Var value_map(Tape& tape, IAStageParams& p, const Var& af_feat) { return conv(tape, p.conv_v, af_feat); }

Var aggregate_slice(const Var& attention, const Var& value) {
  const Index c = value.dim(0), h = value.dim(1), w = value.dim(2);
  if (attention.value().rank() != 2 || attention.dim(0) != h * w || attention.dim(1) != h * w) {
    throw ContractError("aggregate_slice: attention " + to_string(attention.shape()) + " does not fit value " +
                        to_string(value.shape()));
  }
  const Var tokens = matmul(attention, transpose(reshape(value, {c, h * w})));
  return reshape(transpose(tokens), {c, h, w});
}

Var fuse_stage(Tape& tape, IAStageParams* p, const IAConfig& cfg, const Var& af_feat, const std::vector<Var>& fs_feats) {
  if (static_cast<Index>(fs_feats.size()) != cfg.num_slices) {
    throw ContractError("fuse_stage: expected " + std::to_string(cfg.num_slices) + " slice features, got " +
                        std::to_string(fs_feats.size()));
  }
  for (const Var& f : fs_feats) {
    if (f.shape() != af_feat.shape()) {
      throw ContractError("fuse_stage: slice feature " + to_string(f.shape()) + " differs from af " + to_string(af_feat.shape()));
    }
  }
  if (fs_feats.empty()) return af_feat;

  Var acc;
  auto accumulate = [&acc](const Var& term) { acc = acc.valid() ? acc + term : term; };
  if (cfg.fusion == Fusion::ADD) {
    for (const Var& f : fs_feats) accumulate(f);
  } else {
    if (!p) throw ContractError("fuse_stage: attention fusion needs IA parameters");
    const Var value = value_map(tape, *p, af_feat);
    const Var sigma = tape.parameter(p->sigma);
    for (std::size_t n = 0; n < fs_feats.size(); ++n) {
      const Var slice = aggregate_slice(attention_map(tape, *p, cfg, fs_feats[n]), value);
      accumulate(cfg.fusion == Fusion::A_PD ? select(sigma, static_cast<Index>(n)) * slice : slice);
    }
  }
  return af_feat + acc;
}

FeaturePyramid fuse_pyramids(Tape& tape, std::vector<IAStageParams>& p, const IAConfig& cfg, const ScenePyramids& pyramids) {
  FeaturePyramid out;
  for (std::size_t l = 0; l < kStages; ++l) {
    std::vector<Var> fs;
    for (const auto& pyr : pyramids.fs) fs.push_back(pyr[l]);
    out[l] = fuse_stage(tape, p.empty() ? nullptr : &p[l], cfg, pyramids.af[l], fs);
  }
  return out;
}

}  // namespace lft

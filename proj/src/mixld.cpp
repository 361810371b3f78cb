#include "lfsod/mixld.hpp"

#include "lfsod/errors.hpp"

#include <cmath>

namespace lft {

void AugmentConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("augment.") + name + " must lie in [0,1], got " + std::to_string(v));
  };
  unit(alpha, "alpha");
  unit(beta, "beta");
  unit(p_fs2af, "p_fs2af");
  unit(p_af2fs, "p_af2fs");
}

namespace {

Vector blend(const Vector& keep, const Vector& other, double rate) {
  return (rate * keep.array() + (1.0 - rate) * other.array()).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

Image fs2af_blend(const LFScene& scene, double alpha, Index slice_index) {
  if (slice_index < 0 || slice_index >= static_cast<Index>(scene.fs.size())) {
    throw ContractError("fs2af_blend: slice index " + std::to_string(slice_index) + " outside [0," +
                        std::to_string(scene.fs.size()) + ")");
  }
  const Image& slice = scene.fs[static_cast<std::size_t>(slice_index)];
  if (!slice.same_size(scene.af) || slice.channels != scene.af.channels) throw ContractError("fs2af_blend: slice does not match af");
  Image out = scene.af;
  out.pixels = blend(scene.af.pixels, slice.pixels, alpha);
  return out;
}

FocalStack af2fs_blend(const Image& af_m, const FocalStack& fs, double beta) {
  FocalStack out;
  out.reserve(fs.size());
  for (const Image& slice : fs) {
    if (!slice.same_size(af_m) || slice.channels != af_m.channels) throw ContractError("af2fs_blend: slice does not match af_m");
    Image s = slice;
    s.pixels = blend(af_m.pixels, slice.pixels, beta);
    out.push_back(std::move(s));
  }
  return out;
}

AugmentedScene unaugmented(const LFScene& scene) {
  return AugmentedScene{scene.name, scene.af, scene.fs, scene.gt, {}};
}

AugmentedScene apply_mixld(const LFScene& scene, const AugmentConfig& cfg, const CounterRng& rng) {
  AugmentedScene out = unaugmented(scene);
  CounterRng phase1 = rng.split("fs2af");
  if (phase1.bernoulli(cfg.p_fs2af)) {
    out.trace.fs2af = true;
    out.trace.slice = phase1.uniform_index(static_cast<Index>(scene.fs.size()));
    out.af_m = fs2af_blend(scene, cfg.alpha, out.trace.slice);
  }
  CounterRng phase2 = rng.split("af2fs");
  if (phase2.bernoulli(cfg.p_af2fs)) {
    out.trace.af2fs = true;
    out.fs_m = af2fs_blend(out.af_m, scene.fs, cfg.beta);
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (Index c = 0; c < img.channels; ++c) {
    for (Index y = 0; y < img.height; ++y) {
      for (Index x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    }
  }
  return out;
}

Image rotate_quarter_turns(const Image& img, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return img;
  const bool swap = k % 2 == 1;
  Image out(img.channels, swap ? img.width : img.height, swap ? img.height : img.width);
  const Index h = img.height, w = img.width;
  for (Index c = 0; c < img.channels; ++c) {
    for (Index y = 0; y < out.height; ++y) {
      for (Index x = 0; x < out.width; ++x) {
        // Counter-clockwise: out(y, x) reads the source pixel that lands there.
        double v = 0.0;
        switch (k) {
          case 1: v = img.at(c, x, w - 1 - y); break;
          case 2: v = img.at(c, h - 1 - y, w - 1 - x); break;
          default: v = img.at(c, h - 1 - x, y); break;
        }
        out.at(c, y, x) = v;
      }
    }
  }
  return out;
}

Image crop(const Image& img, Index y, Index x, Index h, Index w) {
  if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > img.height || x + w > img.width) {
    throw ContractError("crop window outside the image");
  }
  Image out(img.channels, h, w);
  for (Index c = 0; c < img.channels; ++c) {
    for (Index r = 0; r < h; ++r) {
      for (Index q = 0; q < w; ++q) out.at(c, r, q) = img.at(c, y + r, x + q);
    }
  }
  return out;
}

AugmentedScene apply_geometric(AugmentedScene s, const GeometricFlags& flags, const CounterRng& rng) {
  CounterRng draw = rng.split("geometric");
  AugmentTrace& t = s.trace;
  if (flags.flip_h) t.flipped = draw.bernoulli(0.5);
  if (flags.rotate && s.af_m.height == s.af_m.width) t.quarter_turns = static_cast<int>(draw.uniform_index(4));
  if (flags.crop) {
    const Index h = s.af_m.height, w = s.af_m.width;
    t.cropped = true;
    t.crop_scale = draw.uniform(0.8, 1.0);
    t.crop_h = std::max<Index>(1, std::lround(t.crop_scale * static_cast<double>(h)));
    t.crop_w = std::max<Index>(1, std::lround(t.crop_scale * static_cast<double>(w)));
    t.crop_y = draw.uniform_index(h - t.crop_h + 1);
    t.crop_x = draw.uniform_index(w - t.crop_w + 1);
  }

  auto transform = [&](const Image& img, bool mask) {
    Image out = t.flipped ? flip_horizontal(img) : img;
    out = rotate_quarter_turns(out, t.quarter_turns);
    if (t.cropped) {
      const Index h = out.height, w = out.width;
      out = crop(out, t.crop_y, t.crop_x, t.crop_h, t.crop_w);
      out = mask ? resize_nearest(out, h, w) : resize_bilinear(out, h, w);
    }
    return out;
  };
  s.af_m = transform(s.af_m, false);
  for (Image& slice : s.fs_m) slice = transform(slice, false);
  s.gt = transform(s.gt, true);
  return s;
}

AugmentedScene augment_scene(const LFScene& scene, const AugmentConfig& cfg, const CounterRng& rng) {
  AugmentedScene out = cfg.enabled ? apply_mixld(scene, cfg, rng) : unaugmented(scene);
  return apply_geometric(std::move(out), cfg.geometric, rng);
}

}  // namespace lft

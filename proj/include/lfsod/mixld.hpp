#pragma once

#include "lfsod/rng.hpp"
#include "lfsod/scene.hpp"

#include <cstdint>
#include <optional>

namespace lft {

struct GeometricFlags {
  bool flip_h = true;
  bool rotate = true;
  bool crop = true;
};

struct AugmentConfig {
  double alpha = 0.5;    // FS2AF keep-rate of the AF image
  double beta = 0.5;     // AF2FS keep-rate of the blended AF image
  double p_fs2af = 0.1;
  double p_af2fs = 0.5;
  bool enabled = true;   // false skips both blend phases
  GeometricFlags geometric;

  /// Throws ConfigError unless every rate and probability is in [0, 1].
  void validate() const;
};

/// Every random outcome behind one augmented sample.
struct AugmentTrace {
  bool fs2af = false;
  Index slice = -1;  // chosen FS slice when fs2af fired
  bool af2fs = false;
  bool flipped = false;
  int quarter_turns = 0;  // counter-clockwise rotation by 90°·k
  bool cropped = false;
  double crop_scale = 1.0;
  Index crop_y = 0, crop_x = 0, crop_h = 0, crop_w = 0;
};

struct AugmentedScene {
  std::string name;
  Image af_m;
  FocalStack fs_m;
  Image gt;
  AugmentTrace trace;
};

/// α·I_AF + (1 − α)·I_FS^n; the stack itself is left alone.
Image fs2af_blend(const LFScene& scene, double alpha, Index slice_index);

/// Every slice becomes β·af_m + (1 − β)·slice.
FocalStack af2fs_blend(const Image& af_m, const FocalStack& fs, double beta);

/// The two blend phases. Draws come from rng.split("fs2af") (firing coin,
/// then slice) and rng.split("af2fs") (one coin for the whole stack).
AugmentedScene apply_mixld(const LFScene& scene, const AugmentConfig& cfg, const CounterRng& rng);

/// One flip / rotation / crop draw from rng.split("geometric") applied
/// identically to af_m, every slice and gt. Rotation needs a square image and
/// is skipped otherwise; crops are resized back (bilinear, nearest for gt).
AugmentedScene apply_geometric(AugmentedScene scene, const GeometricFlags& flags, const CounterRng& rng);

/// MixLD (when enabled) followed by the geometric transforms.
AugmentedScene augment_scene(const LFScene& scene, const AugmentConfig& cfg, const CounterRng& rng);

/// The scene as-is, for evaluation.
AugmentedScene unaugmented(const LFScene& scene);

Image flip_horizontal(const Image& img);
Image rotate_quarter_turns(const Image& img, int k);
Image crop(const Image& img, Index y, Index x, Index h, Index w);

}  // namespace lft

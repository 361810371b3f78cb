#pragma once

#include "lfsod/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lft {

inline constexpr Index kStackSize = 12;

using FocalStack = std::vector<Image>;

enum class SceneSource { loaded, synthetic };

struct LFScene {
  std::string name;
  Image af;        // 3 channels
  FocalStack fs;   // kStackSize slices of 3 channels after normalization
  Image gt;        // 1 channel, values in {0, 1}
  SceneSource source = SceneSource::loaded;

  Index height() const { return af.height; }
  Index width() const { return af.width; }
};

/// Output slice i is input slice i mod k; more than 12 slices keep the first 12.
FocalStack normalize_stack(const FocalStack& fs);

/// Throws SceneError when the scene breaks a structural invariant.
void validate_scene(const LFScene& scene);

/// Reads <dir>/af.ppm, <dir>/gt.pgm and <dir>/fs/slice_00.ppm … (contiguous).
/// Sizes are checked before any resampling; with `size` set, images are then
/// brought to size×size (bilinear for colour, nearest for the mask).
LFScene load_scene(const std::filesystem::path& dir, std::optional<Index> size = std::nullopt);

/// Writes the layout read by load_scene.
void save_scene(const std::filesystem::path& dir, const LFScene& scene);

/// Every scene directory under `root`, ordered by name.
std::vector<LFScene> load_dataset(const std::filesystem::path& root, std::optional<Index> size = std::nullopt);

struct SyntheticOptions {
  Index size = 64;
  Index num_slices = kStackSize;
  Index num_shapes = 2;
  /// Box-blur radius per band of depth distance.
  double blur_per_band = 1.0;
};

/// Describes one foreground shape of a generated scene.
struct SyntheticShape {
  bool ellipse = true;
  double cy = 0, cx = 0, ry = 0, rx = 0;
  double color[3] = {0, 0, 0};
  Index depth = 0;  // focal band, in [0, num_slices)
};

struct SyntheticLayout {
  std::vector<SyntheticShape> shapes;
  Index background_depth = 0;  // == num_slices, behind every band
};

/// The random layout drawn for `seed`; generate_synthetic_scene renders it.
SyntheticLayout synthetic_layout(std::uint64_t seed, const SyntheticOptions& options);

/// Hard 0/1 coverage of one shape.
Image shape_mask(const SyntheticShape& shape, Index size);

/// Box-blur radius used for content at `depth` in slice `band`.
Index blur_radius(Index depth, Index band, double blur_per_band);

/// Separable box blur with clamp-to-edge and window 2r+1.
Image box_blur(const Image& img, Index radius);

LFScene generate_synthetic_scene(std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace lft

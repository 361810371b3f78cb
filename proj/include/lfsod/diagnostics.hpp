#pragma once

#include "lfsod/mixld.hpp"

#include <array>
#include <cstdint>

namespace lft {

using PixelHistogram = std::array<std::int64_t, 256>;
/// Bin k + 255 counts pixel differences of k/255, k ∈ [−255, 255].
using DifferenceHistogram = std::array<std::int64_t, 511>;

/// Counts of round(p·255), channels pooled.
PixelHistogram pixel_histogram(const Image& img);
DifferenceHistogram difference_histogram(const Image& a, const Image& b);

/// Largest |k| whose difference bin is occupied.
Index difference_support(const DifferenceHistogram& h);

/// Pixel statistics of one scene before and after augmentation. FS
/// histograms pool all slices; difference histograms pool AF − FS^n over n.
struct HistogramReport {
  PixelHistogram af{}, fs{}, af_m{}, fs_m{};
  DifferenceHistogram diff_before{}, diff_after{};
};

HistogramReport histogram_report(const LFScene& scene, const AugmentedScene& augmented);

}  // namespace lft

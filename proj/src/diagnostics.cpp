#include "lfsod/diagnostics.hpp"

#include "lfsod/errors.hpp"

#include <cmath>

namespace lft {

namespace {

Index level(double p) { return static_cast<Index>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)); }

template <typename H>
void accumulate(H& into, const H& from) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

}  // namespace

PixelHistogram pixel_histogram(const Image& img) {
  PixelHistogram h{};
  for (Index i = 0; i < img.pixels.size(); ++i) ++h[static_cast<std::size_t>(level(img.pixels[i]))];
  return h;
}

DifferenceHistogram difference_histogram(const Image& a, const Image& b) {
  if (!a.same_size(b) || a.channels != b.channels) throw DimensionError("difference_histogram: image shapes differ");
  DifferenceHistogram h{};
  for (Index i = 0; i < a.pixels.size(); ++i) {
    const Index k = std::lround((a.pixels[i] - b.pixels[i]) * 255.0);
    ++h[static_cast<std::size_t>(std::clamp<Index>(k, -255, 255) + 255)];
  }
  return h;
}

Index difference_support(const DifferenceHistogram& h) {
  Index support = 0;
  for (Index k = -255; k <= 255; ++k) {
    if (h[static_cast<std::size_t>(k + 255)] > 0) support = std::max(support, std::abs(k));
  }
  return support;
}

HistogramReport histogram_report(const LFScene& scene, const AugmentedScene& augmented) {
  if (scene.fs.size() != augmented.fs_m.size()) throw ContractError("histogram_report: stack sizes differ");
  HistogramReport r;
  r.af = pixel_histogram(scene.af);
  r.af_m = pixel_histogram(augmented.af_m);
  for (std::size_t n = 0; n < scene.fs.size(); ++n) {
    accumulate(r.fs, pixel_histogram(scene.fs[n]));
    accumulate(r.fs_m, pixel_histogram(augmented.fs_m[n]));
    accumulate(r.diff_before, difference_histogram(scene.af, scene.fs[n]));
    accumulate(r.diff_after, difference_histogram(augmented.af_m, augmented.fs_m[n]));
  }
  return r;
}

}  // namespace lft

#pragma once

#include "lfsod/tensor.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace lft {

/// Planar float image, channel-major (C×H×W), values in [0, 1].
struct Image {
  Index channels = 1;
  Index height = 0;
  Index width = 0;
  Vector pixels;

  Image() = default;
  Image(Index c, Index h, Index w, double fill = 0.0);

  Index plane_size() const { return height * width; }
  double& at(Index c, Index y, Index x) { return pixels[(c * height + y) * width + x]; }
  double at(Index c, Index y, Index x) const { return pixels[(c * height + y) * width + x]; }

  bool same_size(const Image& other) const { return height == other.height && width == other.width; }
};

bool operator==(const Image& a, const Image& b);

/// C×H×W tensor sharing the pixel layout.
Tensor to_tensor(const Image& img);
/// Inverse of to_tensor; values are clamped into [0, 1].
Image from_tensor(const Tensor& t);

/// Binary PPM (P6) → 3 channels, PGM (P5) → 1 channel, maxval 255 only.
/// Byte value v decodes to v/255.
Image decode_image(std::string_view bytes);
/// P6 for 3 channels, P5 for 1; each pixel is written as round(p·255).
std::string encode_image(const Image& img);

Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

/// Half-pixel bilinear resample of every channel.
Image resize_bilinear(const Image& img, Index out_h, Index out_w);
/// Nearest sample at floor((o + 0.5)·in/out); keeps binary masks binary.
Image resize_nearest(const Image& img, Index out_h, Index out_w);

/// p ≥ 0.5 → 1, else 0.
Image binarize(const Image& img, double threshold = 0.5);

}  // namespace lft

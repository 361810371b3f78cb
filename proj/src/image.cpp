#include "lfsod/image.hpp"

#include "lfsod/autograd.hpp"
#include "lfsod/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace lft {

Image::Image(Index c, Index h, Index w, double fill) : channels(c), height(h), width(w) {
  if (c != 1 && c != 3) throw ContractError("image channels must be 1 or 3, got " + std::to_string(c));
  if (h < 1 || w < 1) throw DimensionError("image size must be positive");
  pixels = Vector::Constant(c * h * w, fill);
}

bool operator==(const Image& a, const Image& b) {
  return a.channels == b.channels && a.height == b.height && a.width == b.width && a.pixels == b.pixels;
}

Tensor to_tensor(const Image& img) { return Tensor({img.channels, img.height, img.width}, img.pixels); }

Image from_tensor(const Tensor& t) {
  if (t.rank() != 3) throw DimensionError("image tensor must be C×H×W, got " + to_string(t.shape));
  Image img(t.dim(0), t.dim(1), t.dim(2));
  img.pixels = t.data.cwiseMax(0.0).cwiseMin(1.0);
  return img;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t last_field() const { return field_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = field_ = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw FormatError(std::string("header ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("expected header ") + what, start);
    return value;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 2;
  std::size_t field_ = 2;
};

}  // namespace

Image decode_image(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("bad magic: expected P5 or P6", 0);
  }
  const Index channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader header(bytes);
  const long width = header.number("width");
  const long height = header.number("height");
  if (width < 1 || height < 1) throw FormatError("zero image dimension", header.last_field());
  const long maxval = header.number("maxval");
  if (maxval != 255) throw FormatError("maxval must be 255, got " + std::to_string(maxval), header.last_field());
  header.single_whitespace();

  const std::size_t start = header.offset();
  const std::size_t count = static_cast<std::size_t>(channels * height * width);
  if (bytes.size() - start < count) {
    throw FormatError("truncated payload: need " + std::to_string(count) + " bytes, have " +
                          std::to_string(bytes.size() - start),
                      bytes.size());
  }
  Image img(channels, height, width);
  // File order is interleaved (y, x, c); storage is planar.
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      for (Index c = 0; c < channels; ++c) {
        const auto v = static_cast<unsigned char>(bytes[start + static_cast<std::size_t>((y * width + x) * channels + c)]);
        img.at(c, y, x) = v / 255.0;
      }
    }
  }
  return img;
}

std::string encode_image(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw ContractError("cannot encode image with " + std::to_string(img.channels) + " channels");
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(img.pixels.size()));
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x) {
      for (Index c = 0; c < img.channels; ++c) {
        const double p = std::clamp(img.at(c, y, x), 0.0, 1.0);
        out[header + static_cast<std::size_t>((y * img.width + x) * img.channels + c)] =
            static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0)));
      }
    }
  }
  return out;
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_image(bytes);
}

void write_image(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = encode_image(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

Image resize_bilinear(const Image& img, Index out_h, Index out_w) {
  if (out_h == img.height && out_w == img.width) return img;
  return from_tensor(bilinear_resize(constant(to_tensor(img)), out_h, out_w).value());
}

Image resize_nearest(const Image& img, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw DimensionError("resize target must be positive");
  Image out(img.channels, out_h, out_w);
  for (Index c = 0; c < img.channels; ++c) {
    for (Index y = 0; y < out_h; ++y) {
      const Index sy = std::min(img.height - 1, (2 * y + 1) * img.height / (2 * out_h));
      for (Index x = 0; x < out_w; ++x) {
        const Index sx = std::min(img.width - 1, (2 * x + 1) * img.width / (2 * out_w));
        out.at(c, y, x) = img.at(c, sy, sx);
      }
    }
  }
  return out;
}

Image binarize(const Image& img, double threshold) {
  Image out = img;
  out.pixels = (img.pixels.array() >= threshold).cast<double>();
  return out;
}

}  // namespace lft

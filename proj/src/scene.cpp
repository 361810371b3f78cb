#include "lfsod/scene.hpp"

#include "lfsod/errors.hpp"
#include "lfsod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace fs = std::filesystem;

namespace lft {

FocalStack normalize_stack(const FocalStack& stack) {
  if (stack.empty()) throw SceneError("focal stack has no slices");
  FocalStack out;
  out.reserve(kStackSize);
  for (Index i = 0; i < kStackSize; ++i) out.push_back(stack[static_cast<std::size_t>(i) % stack.size()]);
  return out;
}

void validate_scene(const LFScene& scene) {
  auto fail = [&](const std::string& what) { throw SceneError("scene '" + scene.name + "': " + what); };
  if (scene.af.channels != 3) fail("af.ppm must have 3 channels");
  if (scene.gt.channels != 1) fail("gt.pgm must have 1 channel");
  if (!scene.gt.same_size(scene.af)) {
    fail("dimension mismatch: gt.pgm is " + std::to_string(scene.gt.height) + "x" + std::to_string(scene.gt.width) +
         " but af.ppm is " + std::to_string(scene.af.height) + "x" + std::to_string(scene.af.width));
  }
  if (scene.fs.size() != static_cast<std::size_t>(kStackSize)) {
    fail("focal stack holds " + std::to_string(scene.fs.size()) + " slices, expected 12");
  }
  for (std::size_t n = 0; n < scene.fs.size(); ++n) {
    if (scene.fs[n].channels != 3 || !scene.fs[n].same_size(scene.af)) {
      fail("dimension mismatch: focal slice " + std::to_string(n) + " does not match af.ppm");
    }
  }
  auto in_range = [](const Image& img) { return (img.pixels.array() >= 0.0).all() && (img.pixels.array() <= 1.0).all(); };
  if (!in_range(scene.af)) fail("af pixels outside [0,1]");
  if (!((scene.gt.pixels.array() == 0.0) || (scene.gt.pixels.array() == 1.0)).all()) fail("gt is not binary");
}

namespace {

std::string slice_filename(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%02zu.ppm", n);
  return buf;
}

Image read_scene_image(const fs::path& path, const std::string& scene) {
  if (!fs::exists(path)) throw SceneError("scene '" + scene + "': missing file " + path.string());
  try {
    return read_image(path);
  } catch (const FormatError& e) {
    throw SceneError("scene '" + scene + "': " + path.string() + ": " + e.what());
  }
}

}  // namespace

LFScene load_scene(const fs::path& dir, std::optional<Index> size) {
  LFScene scene;
  scene.name = dir.filename().string();
  scene.source = SceneSource::loaded;
  scene.af = read_scene_image(dir / "af.ppm", scene.name);
  scene.gt = binarize(read_scene_image(dir / "gt.pgm", scene.name));

  FocalStack raw;
  for (std::size_t n = 0;; ++n) {
    const fs::path p = dir / "fs" / slice_filename(n);
    if (!fs::exists(p)) break;
    raw.push_back(read_scene_image(p, scene.name));
  }
  if (raw.empty()) throw SceneError("scene '" + scene.name + "': no focal slices in " + (dir / "fs").string());
  scene.fs = normalize_stack(raw);
  validate_scene(scene);

  if (size && (scene.height() != *size || scene.width() != *size)) {
    scene.af = resize_bilinear(scene.af, *size, *size);
    for (Image& s : scene.fs) s = resize_bilinear(s, *size, *size);
    scene.gt = resize_nearest(scene.gt, *size, *size);
  }
  return scene;
}

void save_scene(const fs::path& dir, const LFScene& scene) {
  std::error_code ec;
  fs::create_directories(dir / "fs", ec);
  if (ec) throw IoError("cannot create " + (dir / "fs").string() + ": " + ec.message());
  write_image(dir / "af.ppm", scene.af);
  write_image(dir / "gt.pgm", scene.gt);
  for (std::size_t n = 0; n < scene.fs.size(); ++n) write_image(dir / "fs" / slice_filename(n), scene.fs[n]);
}

std::vector<LFScene> load_dataset(const fs::path& root, std::optional<Index> size) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<LFScene> scenes;
  scenes.reserve(dirs.size());
  for (const auto& d : dirs) scenes.push_back(load_scene(d, size));
  return scenes;
}

// ---- synthetic scenes ------------------------------------------------------

SyntheticLayout synthetic_layout(std::uint64_t seed, const SyntheticOptions& o) {
  if (o.size < 16) throw ConfigError("synthetic scene size must be >= 16");
  if (o.num_slices < 1) throw ConfigError("synthetic scene needs at least one slice");
  if (o.num_shapes < 0) throw ConfigError("shape count must be >= 0");
  CounterRng rng = CounterRng(seed).split("layout");

  std::vector<Index> bands(static_cast<std::size_t>(o.num_slices));
  for (Index i = 0; i < o.num_slices; ++i) bands[static_cast<std::size_t>(i)] = i;
  for (Index i = o.num_slices - 1; i > 0; --i) std::swap(bands[static_cast<std::size_t>(i)], bands[static_cast<std::size_t>(rng.uniform_index(i + 1))]);

  SyntheticLayout layout;
  layout.background_depth = o.num_slices;
  const double s = static_cast<double>(o.size);
  for (Index i = 0; i < o.num_shapes; ++i) {
    SyntheticShape shape;
    shape.ellipse = rng.bernoulli(0.5);
    shape.ry = rng.uniform(s / 8, s / 4);
    shape.rx = rng.uniform(s / 8, s / 4);
    shape.cy = rng.uniform(shape.ry, s - shape.ry);
    shape.cx = rng.uniform(shape.rx, s - shape.rx);
    for (double& c : shape.color) c = rng.uniform(0.05, 0.95);
    shape.depth = bands[static_cast<std::size_t>(i % o.num_slices)];
    layout.shapes.push_back(shape);
  }
  return layout;
}

Image shape_mask(const SyntheticShape& shape, Index size) {
  Image mask(1, size, size);
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      const double dy = (y + 0.5 - shape.cy) / shape.ry, dx = (x + 0.5 - shape.cx) / shape.rx;
      const bool inside = shape.ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
      mask.at(0, y, x) = inside ? 1.0 : 0.0;
    }
  }
  return mask;
}

Index blur_radius(Index depth, Index band, double blur_per_band) {
  return static_cast<Index>(std::lround(blur_per_band * static_cast<double>(std::abs(depth - band))));
}

Image box_blur(const Image& img, Index radius) {
  if (radius <= 0) return img;
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);
  Image tmp = img, out = img;
  for (Index c = 0; c < img.channels; ++c) {
    for (Index y = 0; y < img.height; ++y) {
      for (Index x = 0; x < img.width; ++x) {
        double s = 0.0;
        for (Index d = -radius; d <= radius; ++d) s += img.at(c, y, std::clamp<Index>(x + d, 0, img.width - 1));
        tmp.at(c, y, x) = s * norm;
      }
    }
    for (Index y = 0; y < img.height; ++y) {
      for (Index x = 0; x < img.width; ++x) {
        double s = 0.0;
        for (Index d = -radius; d <= radius; ++d) s += tmp.at(c, std::clamp<Index>(y + d, 0, img.height - 1), x);
        out.at(c, y, x) = std::clamp(s * norm, 0.0, 1.0);
      }
    }
  }
  return out;
}

namespace {

Image textured_background(std::uint64_t seed, Index size) {
  CounterRng rng = CounterRng(seed).split("background");
  Image bg(3, size, size);
  const double tau = 2.0 * std::numbers::pi;
  for (Index c = 0; c < 3; ++c) {
    const double base = rng.uniform(0.3, 0.7);
    const double fy = rng.uniform(1.0, 4.0), fx = rng.uniform(1.0, 4.0);
    const double py = rng.uniform(0.0, tau), px = rng.uniform(0.0, tau);
    CounterRng noise = rng.split(static_cast<std::uint64_t>(c));
    for (Index y = 0; y < size; ++y) {
      for (Index x = 0; x < size; ++x) {
        const double u = static_cast<double>(y) / size, v = static_cast<double>(x) / size;
        const double wave = 0.15 * std::sin(tau * fy * u + py) * std::sin(tau * fx * v + px);
        bg.at(c, y, x) = std::clamp(base + wave + noise.uniform(-0.1, 0.1), 0.0, 1.0);
      }
    }
  }
  return bg;
}

/// Background, then shapes far to near, each layer as blur(mask)·colour + (1 − blur(mask))·below.
Image render(const SyntheticLayout& layout, const Image& background, const std::vector<Image>& masks,
             const std::vector<std::size_t>& order, Index band, double blur_per_band, bool sharp) {
  auto radius = [&](Index depth) { return sharp ? Index{0} : blur_radius(depth, band, blur_per_band); };
  Image out = box_blur(background, radius(layout.background_depth));
  const Index plane = out.plane_size();
  for (std::size_t i : order) {
    const SyntheticShape& shape = layout.shapes[i];
    const Image m = box_blur(masks[i], radius(shape.depth));
    for (Index c = 0; c < 3; ++c) {
      auto dst = out.pixels.segment(c * plane, plane).array();
      dst = m.pixels.array() * shape.color[c] + (1.0 - m.pixels.array()) * dst;
    }
  }
  return out;
}

}  // namespace

LFScene generate_synthetic_scene(std::uint64_t seed, const SyntheticOptions& o) {
  const SyntheticLayout layout = synthetic_layout(seed, o);
  const Image background = textured_background(seed, o.size);

  std::vector<Image> masks;
  for (const auto& shape : layout.shapes) masks.push_back(shape_mask(shape, o.size));
  std::vector<std::size_t> order(layout.shapes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return layout.shapes[a].depth > layout.shapes[b].depth; });

  LFScene scene;
  scene.name = "synthetic_" + std::to_string(seed);
  scene.source = SceneSource::synthetic;
  scene.af = render(layout, background, masks, order, 0, o.blur_per_band, true);
  FocalStack raw;
  for (Index n = 0; n < o.num_slices; ++n) raw.push_back(render(layout, background, masks, order, n, o.blur_per_band, false));
  scene.fs = normalize_stack(raw);
  scene.gt = Image(1, o.size, o.size);
  for (const Image& m : masks) scene.gt.pixels = scene.gt.pixels.cwiseMax(m.pixels);
  return scene;
}

}  // namespace lft

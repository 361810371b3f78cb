#include "lfsod/errors.hpp"
#include "lfsod/scene.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace lft;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(std::initializer_list<int> values) {
  std::string s;
  for (int v : values) s.push_back(static_cast<char>(v));
  return s;
}

Image random_image(Index c, Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  Image img(c, h, w);
  for (Index i = 0; i < img.pixels.size(); ++i) img.pixels[i] = dist(gen) / 255.0;
  return img;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lft_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double masked_mad(const Image& a, const Image& b, const Image& mask) {
  double total = 0.0;
  Index count = 0;
  for (Index c = 0; c < a.channels; ++c) {
    for (Index y = 0; y < a.height; ++y) {
      for (Index x = 0; x < a.width; ++x) {
        if (mask.at(0, y, x) == 0.0) continue;
        total += std::abs(a.at(c, y, x) - b.at(c, y, x));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("pnm decoding") {
  SUBCASE("1x1 P5 white") {
    const Image img = decode_image("P5\n1 1\n255\n" + bytes_of({255}));
    CHECK(img.channels == 1);
    CHECK(img.pixels[0] == 1.0);
  }
  SUBCASE("2x1 P6 black and white") {
    const Image img = decode_image("P6 2 1 255\n" + bytes_of({0, 0, 0, 255, 255, 255}));
    CHECK(img.channels == 3);
    CHECK(img.width == 2);
    for (Index c = 0; c < 3; ++c) {
      CHECK(img.at(c, 0, 0) == 0.0);
      CHECK(img.at(c, 0, 1) == 1.0);
    }
  }
  SUBCASE("comments in the header are skipped") {
    const Image img = decode_image("P5\n# made by hand\n1 1\n255\n" + bytes_of({51}));
    CHECK(img.pixels[0] == 51 / 255.0);
  }
  SUBCASE("random 8x8 P6 round-trips bit-exactly") {
    const Image img = random_image(3, 8, 8, 7);
    const std::string bytes = encode_image(img);
    CHECK(encode_image(decode_image(bytes)) == bytes);
    CHECK(decode_image(bytes) == img);
  }
}

TEST_CASE("pnm errors carry the byte offset") {
  try {
    decode_image("P3\n1 1\n255\n0");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
  try {
    decode_image("P5\n1 1\n65535\n");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 7);
    CHECK(std::string(e.what()).find("maxval") != std::string::npos);
  }
  try {
    decode_image("P6\n2 2\n255\n" + bytes_of({1, 2, 3}));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 14);
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("normalize_stack") {
  FocalStack five;
  for (int i = 0; i < 5; ++i) five.push_back(Image(3, 2, 2, i / 10.0));

  SUBCASE("k = 5 cycles in original order") {
    const FocalStack out = normalize_stack(five);
    REQUIRE(out.size() == 12);
    const int expected[12] = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4, 0, 1};
    for (int i = 0; i < 12; ++i) CHECK(out[i] == five[expected[i]]);
  }
  SUBCASE("k = 1 repeats the single slice") {
    const FocalStack out = normalize_stack({five[3]});
    for (const Image& s : out) CHECK(s == five[3]);
  }
  SUBCASE("k = 12 is the identity and normalization is idempotent") {
    const FocalStack twelve = normalize_stack(five);
    CHECK(normalize_stack(twelve) == twelve);
  }
  SUBCASE("k > 12 keeps the first twelve") {
    FocalStack many;
    for (int i = 0; i < 15; ++i) many.push_back(Image(3, 1, 1, i / 20.0));
    const FocalStack out = normalize_stack(many);
    REQUIRE(out.size() == 12);
    CHECK(out[11] == many[11]);
  }
  SUBCASE("empty stack") { CHECK_THROWS_AS(normalize_stack({}), SceneError); }
}

TEST_CASE("resizing") {
  const Image img = random_image(3, 6, 6, 3);
  CHECK(resize_bilinear(img, 6, 6) == img);
  Image mask(1, 4, 4);
  mask.at(0, 1, 1) = 1.0;
  const Image up = resize_nearest(mask, 8, 8);
  CHECK(((up.pixels.array() == 0.0) || (up.pixels.array() == 1.0)).all());
  CHECK(up.pixels.sum() == 4.0);
  CHECK(up.at(0, 2, 2) == 1.0);
  CHECK(up.at(0, 3, 3) == 1.0);
}

TEST_CASE("scene directories") {
  SyntheticOptions opts;
  opts.size = 16;
  LFScene scene = generate_synthetic_scene(5, opts);
  // Quantize so the written bytes reproduce the values exactly.
  auto quantize = [](Image& img) { img.pixels = (img.pixels * 255.0).array().round() / 255.0; };
  quantize(scene.af);
  for (Image& s : scene.fs) quantize(s);

  SUBCASE("save then load is the identity on pixel data") {
    const fs::path dir = scratch_dir("scene_roundtrip") / "s0";
    save_scene(dir, scene);
    const LFScene loaded = load_scene(dir);
    CHECK(loaded.name == "s0");
    CHECK(loaded.af == scene.af);
    CHECK(loaded.gt == scene.gt);
    CHECK(loaded.fs == scene.fs);
  }
  SUBCASE("five slices on disk load as the cyclic twelve") {
    const fs::path dir = scratch_dir("scene_five") / "s5";
    LFScene five = scene;
    five.fs.resize(5);
    save_scene(dir, five);
    const LFScene loaded = load_scene(dir);
    for (int i = 0; i < 12; ++i) CHECK(loaded.fs[i] == scene.fs[i % 5]);
  }
  SUBCASE("gt of another size is a dimension mismatch naming the scene") {
    const fs::path dir = scratch_dir("scene_mismatch") / "bad_scene";
    save_scene(dir, scene);
    write_image(dir / "gt.pgm", Image(1, 8, 8));
    try {
      load_scene(dir);
      FAIL("expected SceneError");
    } catch (const SceneError& e) {
      const std::string what = e.what();
      CHECK(what.find("bad_scene") != std::string::npos);
      CHECK(what.find("dimension mismatch") != std::string::npos);
      CHECK(what.find("gt.pgm") != std::string::npos);
    }
  }
  SUBCASE("missing file and empty stack") {
    const fs::path dir = scratch_dir("scene_missing") / "m";
    save_scene(dir, scene);
    fs::remove(dir / "af.ppm");
    CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("af.ppm"), SceneError);
    save_scene(dir, scene);
    fs::remove_all(dir / "fs");
    CHECK_THROWS_AS(load_scene(dir), SceneError);
  }
  SUBCASE("loading at another size resamples and keeps gt binary") {
    const fs::path dir = scratch_dir("scene_resize") / "r";
    save_scene(dir, scene);
    const LFScene loaded = load_scene(dir, 32);
    CHECK(loaded.af.height == 32);
    CHECK(loaded.fs[7].width == 32);
    CHECK(((loaded.gt.pixels.array() == 0.0) || (loaded.gt.pixels.array() == 1.0)).all());
  }
}

TEST_CASE("synthetic scenes") {
  SUBCASE("same seed gives bit-identical scenes") {
    const LFScene a = generate_synthetic_scene(11), b = generate_synthetic_scene(11);
    CHECK(a.af == b.af);
    CHECK(a.fs == b.fs);
    CHECK(a.gt == b.gt);
    CHECK_FALSE(generate_synthetic_scene(12).af == a.af);
  }
  SUBCASE("no shapes gives an empty mask") {
    SyntheticOptions opts;
    opts.num_shapes = 0;
    CHECK(generate_synthetic_scene(3, opts).gt.pixels.sum() == 0.0);
  }
  SUBCASE("invariants hold") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const LFScene s = generate_synthetic_scene(seed);
      CHECK_NOTHROW(validate_scene(s));
      for (const Image& slice : s.fs) CHECK(((slice.pixels.array() >= 0.0) && (slice.pixels.array() <= 1.0)).all());
    }
  }
  SUBCASE("a shape is sharpest in its own focal band") {
    SyntheticOptions opts;
    opts.num_shapes = 1;
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
      const SyntheticLayout layout = synthetic_layout(seed, opts);
      const LFScene s = generate_synthetic_scene(seed, opts);
      const Index band = layout.shapes[0].depth;
      const Image mask = shape_mask(layout.shapes[0], opts.size);

      // Brute force: radii from the depth gap, MAD per slice inside the shape.
      std::vector<double> mad;
      for (Index n = 0; n < 12; ++n) mad.push_back(masked_mad(s.fs[n], s.af, mask));
      CHECK(mad[band] == 0.0);
      for (Index n = 0; n < 12; ++n) {
        if (n == band) continue;
        CHECK(blur_radius(band, n, opts.blur_per_band) > 0);
        CHECK(mad[n] > 0.0);
      }
      // Blur grows with band distance on each side.
      for (Index n = band + 1; n + 1 < 12; ++n) CHECK(mad[n + 1] >= mad[n]);
      for (Index n = band - 1; n > 0; --n) CHECK(mad[n - 1] >= mad[n]);
    }
  }
}

#include <doctest.h>

#include "weathersense/camera_analysis.hpp"
#include "weathersense/rng.hpp"
#include "weathersense/scene_sim.hpp"  // reuses the blur helper

using namespace weathersense;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
  Image img = Image::filled(w, h, 0, 0, 0);
  Rng rng(seed);
  for (auto& p : img.pixels) p = rng.next_double();
  return img;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.set(img.width - 1 - x, y, img.r(x, y), img.g(x, y), img.b(x, y));
    }
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.set(x, img.height - 1 - y, img.r(x, y), img.g(x, y), img.b(x, y));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("sharpness of constant and ramp images is zero") {
  const Image flat = Image::filled(16, 12, 0.4, 0.4, 0.4);
  CHECK(sharpness(flat) == doctest::Approx(0.0).epsilon(1e-12));

  Image ramp = Image::filled(16, 12, 0, 0, 0);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double v = x / 15.0;
      ramp.set(x, y, v, v, v);
    }
  }
  CHECK(sharpness(ramp) < 1e-24);
}

TEST_CASE("blur strictly decreases sharpness") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Image img = random_image(40, 30, seed);
    Image blurred = img;
    camera_detail::separable_gaussian_blur(blurred, 2.0);
    CHECK(sharpness(blurred) < sharpness(img));
  }
}

TEST_CASE("sharpness ignores a DC offset") {
  Image img = random_image(20, 20, 9);
  for (auto& p : img.pixels) p *= 0.5;  // leave headroom
  Image shifted = img;
  for (auto& p : shifted.pixels) p += 0.25;
  CHECK(sharpness(shifted) == doctest::Approx(sharpness(img)).epsilon(1e-12));
}

TEST_CASE("sharpness needs a kernel interior") {
  const Image tiny = Image::filled(2, 2, 0.5, 0.5, 0.5);
  CHECK_THROWS_AS(sharpness(tiny), DomainError);
}

TEST_CASE("brightness is the mean HSV value") {
  CHECK(brightness(Image::filled(8, 8, 1, 1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(brightness(Image::filled(8, 8, 1, 0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(brightness(Image::filled(8, 8, 0.2, 0.7, 0.3)) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("rms contrast identities") {
  CHECK(rms_contrast(Image::filled(10, 10, 0.3, 0.3, 0.3)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  Image half = Image::filled(10, 10, 0, 0, 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 5; x < 10; ++x) half.set(x, y, 1, 1, 1);
  }
  CHECK(rms_contrast(half) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("luminance scaling laws") {
  const Image img = random_image(24, 18, 4);
  Image scaled = img;
  for (auto& p : scaled.pixels) p *= 0.6;
  CHECK(rms_contrast(scaled) == doctest::Approx(0.6 * rms_contrast(img)).epsilon(1e-9));
  CHECK(brightness(scaled) == doctest::Approx(0.6 * brightness(img)).epsilon(1e-9));
}

TEST_CASE("brightness and contrast are flip invariant") {
  const Image img = random_image(17, 13, 8);
  for (const Image& f : {flip_horizontal(img), flip_vertical(img)}) {
    CHECK(brightness(f) == doctest::Approx(brightness(img)).epsilon(1e-12));
    CHECK(rms_contrast(f) == doctest::Approx(rms_contrast(img)).epsilon(1e-12));
  }
}

TEST_CASE("iou identities") {
  const Box2D a{0, 0, 10, 10};
  const Box2D b{20, 20, 30, 30};
  const Box2D c{5, 5, 15, 15};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, b) == 0.0);
  CHECK(iou(a, c) == doctest::Approx(iou(c, a)));
  CHECK(iou(a, c) == doctest::Approx(25.0 / 175.0));
}

TEST_CASE("proxy detector finds a self-cut template exactly") {
  Image img = random_image(60, 40, 11);
  const Box2D truth{22, 14, 34, 26};
  Image templ = Image::filled(truth.width(), truth.height(), 0, 0, 0);
  for (int y = 0; y < templ.height; ++y) {
    for (int x = 0; x < templ.width; ++x) {
      templ.set(x, y, img.r(truth.x0 + x, truth.y0 + y), img.g(truth.x0 + x, truth.y0 + y),
                img.b(truth.x0 + x, truth.y0 + y));
    }
  }
  const ProxyDetection det = proxy_detect(img, templ, truth);
  CHECK(det.confidence == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(det.iou == doctest::Approx(1.0));
  CHECK(det.detected_box.x0 == truth.x0);
  CHECK(det.detected_box.y0 == truth.y0);
}

TEST_CASE("proxy detector rejects degenerate templates") {
  const Image img = random_image(30, 30, 12);
  const Image flat = Image::filled(5, 5, 0.5, 0.5, 0.5);
  CHECK_THROWS_AS(proxy_detect(img, flat, Box2D{0, 0, 5, 5}), DomainError);
  const Image too_big = Image::filled(40, 40, 0.5, 0.6, 0.7);
  CHECK_THROWS_AS(proxy_detect(img, too_big, Box2D{0, 0, 5, 5}), DomainError);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "weathersense/core_types.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

// RGB raster with channel values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // interleaved r,g,b, row-major
  LightCondition exposure_tag = LightCondition::Day;

  static Image filled(int width, int height, double r, double g, double b) {
    Image img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
    for (int i = 0; i < width * height; ++i) {
      img.pixels[3 * i + 0] = r;
      img.pixels[3 * i + 1] = g;
      img.pixels[3 * i + 2] = b;
    }
    return img;
  }

  std::size_t idx(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }

  void set(int x, int y, double r, double g, double b) {
    const std::size_t i = idx(x, y);
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }

  double r(int x, int y) const { return pixels[idx(x, y)]; }
  double g(int x, int y) const { return pixels[idx(x, y) + 1]; }
  double b(int x, int y) const { return pixels[idx(x, y) + 2]; }

  // Rec.601 luma; the single documented channel policy for the metrics.
  double luminance(int x, int y) const {
    const std::size_t i = idx(x, y);
    return 0.299 * pixels[i] + 0.587 * pixels[i + 1] + 0.114 * pixels[i + 2];
  }

  bool valid() const {
    if (width < 3 || height < 3) return false;
    return pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }
};

// Axis-aligned pixel box, [x0, x1) x [y0, y1).
struct Box2D {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  double area() const { return std::max(0, width()) * std::max(0, height()); }
};

inline double iou(const Box2D& a, const Box2D& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  const double inter =
      std::max(0, ix1 - ix0) * static_cast<double>(std::max(0, iy1 - iy0));
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// ---------------------------------------------------------------------------
// Frame metrics
// ---------------------------------------------------------------------------

// Variance of the 4-neighbor Laplacian response over the luminance channel,
// valid interior only. Zero for constant and linearly ramping images.
inline double sharpness(const Image& img) {
  if (!img.valid()) throw DomainError("sharpness: image smaller than kernel interior");
  double sum = 0.0, sum2 = 0.0;
  const int n = (img.width - 2) * (img.height - 2);
  for (int y = 1; y < img.height - 1; ++y) {
    for (int x = 1; x < img.width - 1; ++x) {
      const double resp = img.luminance(x - 1, y) + img.luminance(x + 1, y) +
                          img.luminance(x, y - 1) + img.luminance(x, y + 1) -
                          4.0 * img.luminance(x, y);
      sum += resp;
      sum2 += resp * resp;
    }
  }
  const double mean = sum / n;
  return sum2 / n - mean * mean;
}

// Mean HSV value channel; V = max(R, G, B).
inline double brightness(const Image& img) {
  if (!img.valid()) throw DomainError("brightness: invalid image");
  double sum = 0.0;
  const int n = img.width * img.height;
  for (int i = 0; i < n; ++i) {
    sum += std::max({img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]});
  }
  return sum / n;
}

// Standard deviation of the luminance values.
inline double rms_contrast(const Image& img) {
  if (!img.valid()) throw DomainError("rms_contrast: invalid image");
  double sum = 0.0, sum2 = 0.0;
  const int n = img.width * img.height;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double l = img.luminance(x, y);
      sum += l;
      sum2 += l * l;
    }
  }
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sum2 / n - mean * mean));
}

struct CameraFeatureVector {
  double sharpness = 0.0;
  double brightness = 0.0;
  double contrast = 0.0;
};

inline CameraFeatureVector camera_features(const Image& img) {
  return {sharpness(img), brightness(img), rms_contrast(img)};
}

// ---------------------------------------------------------------------------
// Proxy object detector
// ---------------------------------------------------------------------------

struct ProxyDetection {
  double confidence = 0.0;  // max NCC, clamped to [0, 1]
  Box2D detected_box;
  double iou = 0.0;  // against the supplied ground-truth box
};

// Normalized cross-correlation of the template over the image luminance.
// Stands in for a learned detector: it degrades with haze, blur and darkness
// the same way a confidence score does, which is all downstream labeling
// consumes.
inline ProxyDetection proxy_detect(const Image& img, const Image& templ, const Box2D& truth_box) {
  if (!img.valid() || !templ.valid()) throw DomainError("proxy_detect: invalid image");
  if (templ.width > img.width || templ.height > img.height) {
    throw DomainError("proxy_detect: template larger than image");
  }
  const int tw = templ.width, th = templ.height;
  const int tn = tw * th;

  std::vector<double> tvals(tn);
  double tmean = 0.0;
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) {
      tvals[y * tw + x] = templ.luminance(x, y);
      tmean += tvals[y * tw + x];
    }
  }
  tmean /= tn;
  double tvar = 0.0;
  for (double v : tvals) tvar += (v - tmean) * (v - tmean);
  if (tvar <= 1e-15) throw DomainError("proxy_detect: zero-variance template");

  std::vector<double> ivals(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) ivals[static_cast<std::size_t>(y) * img.width + x] = img.luminance(x, y);
  }

  // Integral images for window mean/energy.
  const int iw = img.width, ih = img.height;
  std::vector<double> integ((iw + 1) * (ih + 1), 0.0), integ2((iw + 1) * (ih + 1), 0.0);
  for (int y = 0; y < ih; ++y) {
    for (int x = 0; x < iw; ++x) {
      const double v = ivals[static_cast<std::size_t>(y) * iw + x];
      integ[(y + 1) * (iw + 1) + (x + 1)] =
          v + integ[y * (iw + 1) + (x + 1)] + integ[(y + 1) * (iw + 1) + x] - integ[y * (iw + 1) + x];
      integ2[(y + 1) * (iw + 1) + (x + 1)] = v * v + integ2[y * (iw + 1) + (x + 1)] +
                                             integ2[(y + 1) * (iw + 1) + x] -
                                             integ2[y * (iw + 1) + x];
    }
  }
  auto window_sum = [&](const std::vector<double>& s, int x, int y) {
    return s[(y + th) * (iw + 1) + (x + tw)] - s[y * (iw + 1) + (x + tw)] -
           s[(y + th) * (iw + 1) + x] + s[y * (iw + 1) + x];
  };

  double best = -2.0;
  int bx = 0, by = 0;
  for (int y = 0; y + th <= ih; ++y) {
    for (int x = 0; x + tw <= iw; ++x) {
      double cross = 0.0;
      for (int ty = 0; ty < th; ++ty) {
        const double* irow = &ivals[static_cast<std::size_t>(y + ty) * iw + x];
        const double* trow = &tvals[static_cast<std::size_t>(ty) * tw];
        for (int tx = 0; tx < tw; ++tx) cross += irow[tx] * trow[tx];
      }
      const double wsum = window_sum(integ, x, y);
      const double wsum2 = window_sum(integ2, x, y);
      const double wvar = wsum2 - wsum * wsum / tn;
      const double num = cross - tmean * wsum;
      const double den = std::sqrt(std::max(wvar, 0.0) * tvar);
      const double ncc = den > 1e-12 ? num / den : 0.0;
      if (ncc > best) {
        best = ncc;
        bx = x;
        by = y;
      }
    }
  }

  ProxyDetection det;
  det.confidence = clamp01(best);
  det.detected_box = {bx, by, bx + tw, by + th};
  det.iou = iou(det.detected_box, truth_box);
  return det;
}

}  // namespace weathersense

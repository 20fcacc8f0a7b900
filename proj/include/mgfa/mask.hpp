#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mgfa/errors.hpp"
#include "mgfa/image_io.hpp"

namespace mgfa {

enum class RegionClass { vein, contour };

inline std::string region_class_name(RegionClass c) {
  return c == RegionClass::vein ? "vein" : "contour";
}

inline RegionClass parse_region_class(const std::string& token) {
  if (token == "vein") return RegionClass::vein;
  if (token == "contour") return RegionClass::contour;
  throw config_error("unknown region class '" + token + "' (expected vein or contour)");
}

// Axis-aligned box with top-left corner (x, y) and positive extents.
struct RegionBox {
  RegionClass cls;
  double x, y, w, h;

  RegionBox(RegionClass cls_, double x_, double y_, double w_, double h_)
      : cls(cls_), x(x_), y(y_), w(w_), h(h_) {
    if (!(w > 0.0) || !(h > 0.0))
      throw config_error("region box must have positive extents, got " + std::to_string(w) + "x" +
                         std::to_string(h));
  }
};

struct BinaryMask {
  int height = 0, width = 0;
  std::vector<std::uint8_t> bits;  // 1 = inside region

  bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v = true) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
};

inline BinaryMask make_mask(int height, int width) {
  BinaryMask m;
  m.height = height;
  m.width = width;
  m.bits.assign(static_cast<std::size_t>(height) * width, 0);
  return m;
}

// L1-normalized low-resolution attention target. `degenerate` marks maps
// that fell back to uniform because the source mask was empty.
struct GroundTruthMap {
  int height = 0, width = 0;
  std::vector<double> values;
  bool degenerate = false;
};

// Pixel (y, x) is set iff it lies inside at least one box of the requested
// class. Boxes are clamped to the image; a box that clamps to zero area is
// a broken annotation.
inline BinaryMask rasterize_boxes(const std::vector<RegionBox>& boxes, int H, int W,
                                  RegionClass cls) {
  if (H <= 0 || W <= 0) throw config_error("rasterize_boxes: image extents must be positive");
  BinaryMask mask = make_mask(H, W);
  for (const RegionBox& box : boxes) {
    if (box.cls != cls) continue;
    const double x0 = std::max(0.0, box.x);
    const double y0 = std::max(0.0, box.y);
    const double x1 = std::min(static_cast<double>(W), box.x + box.w);
    const double y1 = std::min(static_cast<double>(H), box.y + box.h);
    if (x1 <= x0 || y1 <= y0)
      throw config_error("annotation error: box at (" + std::to_string(box.x) + ", " +
                         std::to_string(box.y) + ") has zero area after clamping");
    for (int y = static_cast<int>(std::ceil(y0)); y < y1; ++y)
      for (int x = static_cast<int>(std::ceil(x0)); x < x1; ++x) mask.set(y, x);
  }
  return mask;
}

inline BinaryMask binarize_image(const GrayImage& gray, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw config_error("binarize threshold must lie in (0, 1), got " + std::to_string(threshold));
  BinaryMask mask = make_mask(gray.height, gray.width);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i)
    mask.bits[i] = gray.pixels[i] >= threshold ? 1 : 0;
  return mask;
}

// Average-pool the 0/1 mask down to h x w, then L1-normalize. An empty mask
// yields the uniform map flagged degenerate so training can proceed while
// the caller can still tell.
inline GroundTruthMap to_ground_truth(const BinaryMask& mask, int h, int w) {
  if (h <= 0 || w <= 0) throw config_error("to_ground_truth: target extents must be positive");
  if (mask.height % h != 0 || mask.width % w != 0)
    throw config_error("to_ground_truth: mask " + std::to_string(mask.height) + "x" +
                       std::to_string(mask.width) + " not divisible by target " +
                       std::to_string(h) + "x" + std::to_string(w) + "; resize the mask first");
  const int wy = mask.height / h;
  const int wx = mask.width / w;
  GroundTruthMap gt;
  gt.height = h;
  gt.width = w;
  gt.values.assign(static_cast<std::size_t>(h) * w, 0.0);
  std::size_t total = 0;
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      std::size_t cell = 0;
      for (int dy = 0; dy < wy; ++dy)
        for (int dx = 0; dx < wx; ++dx) cell += mask.at(cy * wy + dy, cx * wx + dx) ? 1 : 0;
      gt.values[static_cast<std::size_t>(cy) * w + cx] = static_cast<double>(cell);
      total += cell;
    }
  }
  if (total == 0) {
    const double uniform = 1.0 / (static_cast<double>(h) * w);
    for (double& v : gt.values) v = uniform;
    gt.degenerate = true;
  } else {
    for (double& v : gt.values) v /= static_cast<double>(total);
  }
  return gt;
}

inline GrayImage mask_to_image(const BinaryMask& mask) {
  GrayImage img = make_gray(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 1.0 : 0.0;
  return img;
}

inline BinaryMask image_to_mask(const GrayImage& img) { return binarize_image(img, 0.5); }

}  // namespace mgfa

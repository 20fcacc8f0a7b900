#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <array>
#include <cmath>

#include "mgfa/mask.hpp"
#include "mgfa/rng.hpp"

using namespace mgfa;

namespace {

std::vector<RegionBox> vein_boxes(std::initializer_list<std::array<double, 4>> specs) {
  std::vector<RegionBox> out;
  for (const auto& s : specs) out.emplace_back(RegionClass::vein, s[0], s[1], s[2], s[3]);
  return out;
}

}  // namespace

TEST_CASE("rasterize_boxes with no boxes is all false", "[mask]") {
  auto m = rasterize_boxes({}, 4, 4, RegionClass::vein);
  REQUIRE(m.count() == 0);
}

TEST_CASE("rasterize_boxes full cover is all true", "[mask]") {
  auto m = rasterize_boxes(vein_boxes({{0, 0, 4, 4}}), 4, 4, RegionClass::vein);
  REQUIRE(m.count() == 16);
}

TEST_CASE("rasterize_boxes union of two overlapping boxes", "[mask]") {
  auto m = rasterize_boxes(vein_boxes({{0, 0, 2, 2}, {1, 1, 2, 2}}), 4, 4, RegionClass::vein);
  REQUIRE(m.count() == 7);  // 4 + 4 - 1 shared pixel
  REQUIRE(m.at(0, 0));
  REQUIRE(m.at(1, 1));
  REQUIRE(m.at(2, 2));
  REQUIRE_FALSE(m.at(0, 2));
  REQUIRE_FALSE(m.at(3, 3));
}

TEST_CASE("rasterize_boxes filters by class and clamps", "[mask]") {
  std::vector<RegionBox> boxes;
  boxes.emplace_back(RegionClass::contour, 0, 0, 4, 4);
  boxes.emplace_back(RegionClass::vein, 2, 2, 10, 10);
  auto m = rasterize_boxes(boxes, 4, 4, RegionClass::vein);
  REQUIRE(m.count() == 4);  // clamped to the 2x2 bottom-right corner
}

TEST_CASE("rasterize_boxes rejects boxes clamped to nothing", "[mask]") {
  auto boxes = vein_boxes({{10, 10, 2, 2}});
  REQUIRE_THROWS_AS(rasterize_boxes(boxes, 4, 4, RegionClass::vein), config_error);
}

TEST_CASE("region box construction rejects degenerate extents", "[mask]") {
  REQUIRE_THROWS_AS(RegionBox(RegionClass::vein, 0, 0, 0, 2), config_error);
  REQUIRE_THROWS_AS(RegionBox(RegionClass::vein, 0, 0, 2, -1), config_error);
}

TEST_CASE("rasterize_boxes is order independent", "[mask]") {
  Rng rng(77);
  std::vector<RegionBox> boxes;
  for (int i = 0; i < 6; ++i)
    boxes.emplace_back(RegionClass::vein, rng.uniform(0, 12), rng.uniform(0, 12),
                       rng.uniform(1, 5), rng.uniform(1, 5));
  auto base = rasterize_boxes(boxes, 16, 16, RegionClass::vein);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = boxes.size(); i > 1; --i)
      std::swap(boxes[i - 1], boxes[rng.uniform_int(i)]);
    auto permuted = rasterize_boxes(boxes, 16, 16, RegionClass::vein);
    REQUIRE(permuted.bits == base.bits);
  }
}

TEST_CASE("binarize_image saturation cases", "[mask]") {
  auto zeros = make_gray(3, 3, 0.0);
  REQUIRE(binarize_image(zeros, 0.5).count() == 0);
  auto ones = make_gray(3, 3, 1.0);
  REQUIRE(binarize_image(ones, 0.5).count() == 9);
}

TEST_CASE("binarize_image checkerboard", "[mask]") {
  auto img = make_gray(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x) = (x + y) % 2 ? 1.0 : 0.0;
  auto m = binarize_image(img, 0.5);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) REQUIRE(m.at(y, x) == ((x + y) % 2 == 1));
}

TEST_CASE("binarize_image validates threshold", "[mask]") {
  auto img = make_gray(2, 2);
  REQUIRE_THROWS_AS(binarize_image(img, 0.0), config_error);
  REQUIRE_THROWS_AS(binarize_image(img, 1.0), config_error);
}

TEST_CASE("to_ground_truth of full mask is uniform", "[mask]") {
  auto mask = make_mask(4, 4);
  std::fill(mask.bits.begin(), mask.bits.end(), 1);
  auto gt = to_ground_truth(mask, 2, 2);
  REQUIRE_FALSE(gt.degenerate);
  for (double v : gt.values) REQUIRE(v == 0.25);
}

TEST_CASE("to_ground_truth concentrates on occupied quadrant", "[mask]") {
  auto mask = make_mask(4, 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) mask.set(y, x);
  auto gt = to_ground_truth(mask, 2, 2);
  REQUIRE(gt.values == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("to_ground_truth empty mask falls back to uniform and flags it", "[mask]") {
  auto mask = make_mask(4, 4);
  auto gt = to_ground_truth(mask, 2, 2);
  REQUIRE(gt.degenerate);
  for (double v : gt.values) REQUIRE(v == 0.25);
}

TEST_CASE("to_ground_truth rejects indivisible shapes", "[mask]") {
  auto mask = make_mask(5, 4);
  REQUIRE_THROWS_MATCHES(to_ground_truth(mask, 2, 2), config_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("resize")));
}

TEST_CASE("ground truth maps sum to one with no negatives", "[mask]") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    auto mask = make_mask(16, 16);
    for (auto& b : mask.bits) b = rng.bernoulli(0.3) ? 1 : 0;
    auto gt = to_ground_truth(mask, 4, 4);
    double s = 0.0;
    for (double v : gt.values) {
      REQUIRE(v >= 0.0);
      s += v;
    }
    REQUIRE(s == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("to_ground_truth invariant under 2x nearest-neighbor upsampling", "[mask]") {
  Rng rng(103);
  auto mask = make_mask(8, 8);
  for (auto& b : mask.bits) b = rng.bernoulli(0.4) ? 1 : 0;
  auto big = make_mask(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) big.set(y, x, mask.at(y / 2, x / 2));
  auto a = to_ground_truth(mask, 4, 4);
  auto b = to_ground_truth(big, 4, 4);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    REQUIRE(std::abs(a.values[i] - b.values[i]) < 1e-12);
}

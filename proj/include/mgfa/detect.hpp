#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mgfa/errors.hpp"
#include "mgfa/mask.hpp"

namespace mgfa {

struct Detection {
  RegionBox box;
  double confidence;
  std::string image_id;

  Detection(RegionBox b, double conf, std::string id)
      : box(b), confidence(conf), image_id(std::move(id)) {
    if (!(confidence >= 0.0 && confidence <= 1.0))
      throw config_error("detection confidence must lie in [0, 1], got " +
                         std::to_string(conf));
  }
};

struct GtBox {
  RegionBox box;
  std::string image_id;
};

// Intersection area over union area; 0 for disjoint boxes.
inline double iou(const RegionBox& a, const RegionBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

struct ApResult {
  double ap = 0.0;
  // Set when the input made the metric vacuous (no ground truth, or
  // nothing at all).
  bool warning = false;
};

// Average precision with all-point interpolation. Detections are ranked by
// confidence (ties keep insertion order) and greedily matched to the
// highest-IoU unmatched ground-truth box of the same image.
inline ApResult average_precision(const std::vector<Detection>& dets,
                                  const std::vector<GtBox>& gts, double iou_thresh = 0.5) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0))
    throw config_error("IoU threshold must lie in (0, 1], got " + std::to_string(iou_thresh));
  if (gts.empty()) return {dets.empty() ? 1.0 : 0.0, true};

  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<bool> matched(gts.size(), false);
  std::vector<bool> is_tp(order.size(), false);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& det = dets[order[rank]];
    double best = 0.0;
    std::ptrdiff_t best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] || gts[g].image_id != det.image_id) continue;
      const double v = iou(det.box, gts[g].box);
      if (v > best) {
        best = v;
        best_gt = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best_gt >= 0 && best >= iou_thresh) {
      matched[static_cast<std::size_t>(best_gt)] = true;
      is_tp[rank] = true;
    }
  }

  // Precision envelope over recall, integrated over recall increments.
  const double num_gt = static_cast<double>(gts.size());
  std::vector<double> precision(order.size()), recall(order.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (is_tp[rank]) ++tp;
    precision[rank] = static_cast<double>(tp) / static_cast<double>(rank + 1);
    recall[rank] = static_cast<double>(tp) / num_gt;
  }
  double ap = 0.0, envelope = 0.0;
  for (std::size_t i = order.size(); i-- > 0;) {
    envelope = std::max(envelope, precision[i]);
    const double lower = i > 0 ? recall[i - 1] : 0.0;
    if (recall[i] > lower) ap += (recall[i] - lower) * envelope;
  }
  return {ap, false};
}

inline double mean_ap(const std::map<RegionClass, double>& per_class) {
  if (per_class.empty()) throw config_error("mean_ap: no classes");
  double s = 0.0;
  for (const auto& [cls, ap] : per_class) s += ap;
  return s / static_cast<double>(per_class.size());
}

namespace detail {

inline std::vector<std::string> record_tokens(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream is(body);
  std::vector<std::string> tokens;
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

inline double parse_real(const std::string& tok, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw config_error(context + ": '" + tok + "' is not a number");
  }
  if (used != tok.size()) throw config_error(context + ": '" + tok + "' is not a number");
  return v;
}

}  // namespace detail

// Text format: one record per line, `#` comments.
//   detections: image_id class x y w h confidence
//   ground truth: image_id class x y w h
inline std::map<RegionClass, std::vector<Detection>> read_detections(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open detection file " + path.string());
  std::map<RegionClass, std::vector<Detection>> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto tokens = detail::record_tokens(line);
    if (tokens.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(lineno);
    if (tokens.size() != 7)
      throw config_error(context + ": expected 'image_id class x y w h confidence', got " +
                         std::to_string(tokens.size()) + " fields");
    try {
      const RegionClass cls = parse_region_class(tokens[1]);
      RegionBox box(cls, detail::parse_real(tokens[2], context),
                    detail::parse_real(tokens[3], context),
                    detail::parse_real(tokens[4], context),
                    detail::parse_real(tokens[5], context));
      out[cls].emplace_back(box, detail::parse_real(tokens[6], context), tokens[0]);
    } catch (const config_error& e) {
      throw config_error(context + ": " + e.what());
    }
  }
  return out;
}

inline std::map<RegionClass, std::vector<GtBox>> read_gt_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open ground-truth file " + path.string());
  std::map<RegionClass, std::vector<GtBox>> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto tokens = detail::record_tokens(line);
    if (tokens.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(lineno);
    if (tokens.size() != 6)
      throw config_error(context + ": expected 'image_id class x y w h', got " +
                         std::to_string(tokens.size()) + " fields");
    try {
      const RegionClass cls = parse_region_class(tokens[1]);
      RegionBox box(cls, detail::parse_real(tokens[2], context),
                    detail::parse_real(tokens[3], context),
                    detail::parse_real(tokens[4], context),
                    detail::parse_real(tokens[5], context));
      out[cls].push_back({box, tokens[0]});
    } catch (const config_error& e) {
      throw config_error(context + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mgfa

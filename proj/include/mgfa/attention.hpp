#pragma once

#include <cmath>
#include <vector>

#include "mgfa/mask.hpp"
#include "mgfa/ops.hpp"
#include "mgfa/rng.hpp"
#include "mgfa/tensor.hpp"

namespace mgfa {

// Trainable 1x1 convolution over the concatenated (max | mean) channel pair.
struct AttentionHead {
  TensorPtr weight;  // 1 x 2 x 1 x 1
  TensorPtr bias;    // {1}

  static AttentionHead init(Rng& rng) {
    AttentionHead head;
    head.weight = make_tensor({1, 2, 1, 1});
    for (double& v : head.weight->data) v = rng.uniform(-0.5, 0.5);
    head.bias = make_tensor({1});
    return head;
  }
};

struct AttentionMaps {
  TensorPtr vein;
  TensorPtr con;
};

// Convex blend coefficients for the feature augmentation.
struct BlendWeights {
  double alpha, beta, gamma;

  BlendWeights(double a, double b, double g) : alpha(a), beta(b), gamma(g) {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
      throw config_error("blend weights must be non-negative");
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
      throw config_error("blend weights must sum to 1, got " +
                         std::to_string(alpha + beta + gamma));
  }

  static BlendWeights defaults() { return {0.3, 0.5, 0.2}; }
};

struct LossWeights {
  double delta, lambda, mu;

  LossWeights(double d, double l, double m) : delta(d), lambda(l), mu(m) {
    if (delta < 0.0 || lambda < 0.0 || mu < 0.0)
      throw config_error("loss weights must be non-negative");
    if (delta == 0.0 && lambda == 0.0 && mu == 0.0)
      throw config_error("at least one loss weight must be positive");
  }

  static LossWeights defaults() { return {0.1, 0.1, 1.0}; }
};

struct LossBreakdown {
  double ce = 0.0;
  double vein = 0.0;
  double con = 0.0;
  double total = 0.0;
};

// Channel statistics -> 1x1 conv -> spatial softmax. The concatenation
// order is (max | mean).
inline TensorPtr compute_attention(Tape& tape, const TensorPtr& m_img, const AttentionHead& head) {
  auto max_map = channel_reduce(tape, m_img, Reduce::max);
  auto mean_map = channel_reduce(tape, m_img, Reduce::mean);
  auto stacked = concat_channels(tape, max_map, mean_map);
  auto pre = conv2d(tape, stacked, head.weight, head.bias);
  return spatial_softmax(tape, pre);
}

// F_final = alpha * M_img + beta * (M_vein (*) M_img) + gamma * (M_con (*) M_img)
inline TensorPtr blend(Tape& tape, const TensorPtr& m_img, const TensorPtr& vein,
                       const TensorPtr& con, const BlendWeights& w) {
  auto f = scale(tape, m_img, w.alpha);
  f = add(tape, f, scale(tape, broadcast_mul(tape, vein, m_img), w.beta));
  f = add(tape, f, scale(tape, broadcast_mul(tape, con, m_img), w.gamma));
  return f;
}

inline TensorPtr ground_truth_batch_tensor(const std::vector<GroundTruthMap>& maps) {
  if (maps.empty()) throw shape_error("ground truth batch is empty");
  const int h = maps[0].height, w = maps[0].width;
  auto t = make_tensor({static_cast<int>(maps.size()), 1, h, w});
  std::size_t off = 0;
  for (const auto& m : maps) {
    if (m.height != h || m.width != w)
      throw shape_error("ground truth maps in a batch must share one resolution");
    std::copy(m.values.begin(), m.values.end(), t->data.begin() + static_cast<std::ptrdiff_t>(off));
    off += m.values.size();
  }
  return t;
}

// Per sample, mean over the full H x W grid of (gt - fea)^2; then the mean
// over the batch.
inline TensorPtr mse_loss(Tape& tape, const TensorPtr& fea, const std::vector<GroundTruthMap>& gt) {
  if (fea->shape.size() != 4 || fea->shape[1] != 1)
    throw shape_error("mse_loss: feature map must be N x 1 x H x W, got " + shape_str(fea->shape));
  auto target = ground_truth_batch_tensor(gt);
  if (target->shape != fea->shape)
    throw shape_error("mse_loss: resolution mismatch, map " + shape_str(fea->shape) +
                      " vs ground truth " + shape_str(target->shape));
  auto diff = add(tape, fea, scale(tape, target, -1.0));
  return scale(tape, sum(tape, mul(tape, diff, diff)), 1.0 / static_cast<double>(fea->numel()));
}

inline LossBreakdown total_loss(double l_vein, double l_con, double l_ce, const LossWeights& w) {
  if (l_vein < 0.0 || l_con < 0.0 || l_ce < 0.0 || !std::isfinite(l_vein + l_con + l_ce))
    throw numeric_error("loss terms must be finite and non-negative");
  LossBreakdown out;
  out.vein = l_vein;
  out.con = l_con;
  out.ce = l_ce;
  out.total = w.delta * l_vein + w.lambda * l_con + w.mu * l_ce;
  return out;
}

}  // namespace mgfa

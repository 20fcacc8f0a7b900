#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mgfa/tensor.hpp"

namespace mgfa {

enum class Reduce { mean, max };
enum class Pool { avg, max };

// Cross-correlation with square k x k kernels. input N x Cin x H x W,
// weight Cout x Cin x k x k, bias {Cout}. Output spatial size is
// floor((H + 2*pad - k)/stride) + 1.
inline TensorPtr conv2d(Tape& tape, const TensorPtr& input, const TensorPtr& weight,
                        const TensorPtr& bias, int stride = 1, int pad = 0) {
  if (input->shape.size() != 4)
    throw shape_error("conv2d: input must be 4-D, got " + shape_str(input->shape));
  if (weight->shape.size() != 4 || weight->shape[2] != weight->shape[3])
    throw shape_error("conv2d: weight must be Cout x Cin x k x k, got " + shape_str(weight->shape));
  const int N = input->shape[0], Cin = input->shape[1], H = input->shape[2], W = input->shape[3];
  const int Cout = weight->shape[0], k = weight->shape[2];
  if (weight->shape[1] != Cin)
    throw shape_error("conv2d: input channels " + std::to_string(Cin) +
                      " != weight channels " + std::to_string(weight->shape[1]));
  if (bias->shape != std::vector<int>{Cout})
    throw shape_error("conv2d: bias must have length " + std::to_string(Cout) + ", got " +
                      shape_str(bias->shape));
  if (stride < 1 || pad < 0) throw shape_error("conv2d: stride must be >= 1 and pad >= 0");
  if (H + 2 * pad < k || W + 2 * pad < k)
    throw shape_error("conv2d: kernel " + std::to_string(k) + " exceeds padded input " +
                      std::to_string(H + 2 * pad) + "x" + std::to_string(W + 2 * pad));

  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  auto out = make_tensor({N, Cout, Ho, Wo});

  const auto in_at = [=](int n, int c) {
    return (static_cast<std::size_t>(n) * Cin + c) * (static_cast<std::size_t>(H) * W);
  };
  const auto out_at = [=](int n, int c) {
    return (static_cast<std::size_t>(n) * Cout + c) * (static_cast<std::size_t>(Ho) * Wo);
  };

  // Valid output range for a kernel offset: 0 <= oy*stride - pad + ky < H.
  const auto lo = [=](int koff) { return std::max(0, (pad - koff + stride - 1) / stride); };
  const auto hi_h = [=](int koff) { return std::min(Ho, (H - 1 + pad - koff) / stride + 1); };
  const auto hi_w = [=](int koff) { return std::min(Wo, (W - 1 + pad - koff) / stride + 1); };

  for (int n = 0; n < N; ++n) {
    for (int co = 0; co < Cout; ++co) {
      double* op = out->data.data() + out_at(n, co);
      const double b = bias->data[static_cast<std::size_t>(co)];
      for (int i = 0; i < Ho * Wo; ++i) op[i] = b;
      for (int ci = 0; ci < Cin; ++ci) {
        const double* ip = input->data.data() + in_at(n, ci);
        const double* wp =
            weight->data.data() + (static_cast<std::size_t>(co) * Cin + ci) * (k * k);
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const double w = wp[ky * k + kx];
            for (int oy = lo(ky); oy < hi_h(ky); ++oy) {
              const int iy = oy * stride - pad + ky;
              const double* irow = ip + static_cast<std::size_t>(iy) * W - pad + kx;
              double* orow = op + static_cast<std::size_t>(oy) * Wo;
              for (int ox = lo(kx); ox < hi_w(kx); ++ox)
                orow[ox] += w * irow[static_cast<std::size_t>(ox) * stride];
            }
          }
        }
      }
    }
  }

  tape.watch(input);
  tape.watch(weight);
  tape.watch(bias);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*input);
    ensure_grad(*weight);
    ensure_grad(*bias);
    for (int n = 0; n < N; ++n) {
      for (int co = 0; co < Cout; ++co) {
        const double* gop = out->grad.data() + out_at(n, co);
        double gb = 0.0;
        for (int i = 0; i < Ho * Wo; ++i) gb += gop[i];
        bias->grad[static_cast<std::size_t>(co)] += gb;
        for (int ci = 0; ci < Cin; ++ci) {
          const double* ip = input->data.data() + in_at(n, ci);
          double* gip = input->grad.data() + in_at(n, ci);
          const std::size_t wbase = (static_cast<std::size_t>(co) * Cin + ci) * (k * k);
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const double w = weight->data[wbase + ky * k + kx];
              double gw = 0.0;
              for (int oy = lo(ky); oy < hi_h(ky); ++oy) {
                const int iy = oy * stride - pad + ky;
                const std::size_t row = static_cast<std::size_t>(iy) * W - pad + kx;
                const double* gorow = gop + static_cast<std::size_t>(oy) * Wo;
                for (int ox = lo(kx); ox < hi_w(kx); ++ox) {
                  const std::size_t ix = row + static_cast<std::size_t>(ox) * stride;
                  gw += gorow[ox] * ip[ix];
                  gip[ix] += gorow[ox] * w;
                }
              }
              weight->grad[wbase + ky * k + kx] += gw;
            }
          }
        }
      }
    }
  });
  return out;
}

// Per-pixel reduction over channels: Reduce::mean is the channel average,
// Reduce::max takes the largest channel value (adjoint goes to the first
// maximizer on ties).
inline TensorPtr channel_reduce(Tape& tape, const TensorPtr& input, Reduce mode) {
  if (input->shape.size() != 4)
    throw shape_error("channel_reduce: input must be 4-D, got " + shape_str(input->shape));
  const int N = input->shape[0], C = input->shape[1], H = input->shape[2], W = input->shape[3];
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  auto out = make_tensor({N, 1, H, W});
  auto argmax = mode == Reduce::max ? std::make_shared<std::vector<int>>(
                                          static_cast<std::size_t>(N) * hw)
                                    : nullptr;
  for (int n = 0; n < N; ++n) {
    const std::size_t obase = static_cast<std::size_t>(n) * hw;
    const std::size_t ibase = static_cast<std::size_t>(n) * C * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      if (mode == Reduce::mean) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += input->data[ibase + static_cast<std::size_t>(c) * hw + i];
        out->data[obase + i] = s / C;
      } else {
        double best = input->data[ibase + i];
        int arg = 0;
        for (int c = 1; c < C; ++c) {
          const double v = input->data[ibase + static_cast<std::size_t>(c) * hw + i];
          if (v > best) {
            best = v;
            arg = c;
          }
        }
        out->data[obase + i] = best;
        (*argmax)[obase + i] = arg;
      }
    }
  }
  tape.watch(input);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*input);
    for (int n = 0; n < N; ++n) {
      const std::size_t obase = static_cast<std::size_t>(n) * hw;
      const std::size_t ibase = static_cast<std::size_t>(n) * C * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double g = out->grad[obase + i];
        if (mode == Reduce::mean) {
          for (int c = 0; c < C; ++c)
            input->grad[ibase + static_cast<std::size_t>(c) * hw + i] += g / C;
        } else {
          input->grad[ibase + static_cast<std::size_t>((*argmax)[obase + i]) * hw + i] += g;
        }
      }
    }
  });
  return out;
}

// Softmax over all H*W locations of a single-channel map, per sample.
// Max-subtracted, so arbitrary finite inputs are safe.
inline TensorPtr spatial_softmax(Tape& tape, const TensorPtr& input) {
  if (input->shape.size() != 4 || input->shape[1] != 1)
    throw shape_error("spatial_softmax: input must be N x 1 x H x W, got " +
                      shape_str(input->shape));
  const int N = input->shape[0];
  const std::size_t hw =
      static_cast<std::size_t>(input->shape[2]) * static_cast<std::size_t>(input->shape[3]);
  auto out = make_tensor(input->shape);
  for (int n = 0; n < N; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * hw;
    double m = input->data[base];
    for (std::size_t i = 1; i < hw; ++i) m = std::max(m, input->data[base + i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      const double e = std::exp(input->data[base + i] - m);
      out->data[base + i] = e;
      denom += e;
    }
    for (std::size_t i = 0; i < hw; ++i) out->data[base + i] /= denom;
  }
  tape.watch(input);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*input);
    for (int n = 0; n < N; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * hw;
      double dot = 0.0;
      for (std::size_t i = 0; i < hw; ++i) dot += out->grad[base + i] * out->data[base + i];
      for (std::size_t i = 0; i < hw; ++i)
        input->grad[base + i] += out->data[base + i] * (out->grad[base + i] - dot);
    }
  });
  return out;
}

// Spatial pooling with a square window. The non-overlapping case
// (window == stride) additionally requires H and W divisible by the stride.
inline TensorPtr pool2d(Tape& tape, const TensorPtr& input, Pool mode, int window, int stride) {
  if (input->shape.size() != 4)
    throw shape_error("pool2d: input must be 4-D, got " + shape_str(input->shape));
  if (window < 1 || stride < 1) throw shape_error("pool2d: window and stride must be >= 1");
  const int N = input->shape[0], C = input->shape[1], H = input->shape[2], W = input->shape[3];
  if (H < window || W < window)
    throw shape_error("pool2d: window " + std::to_string(window) + " exceeds input " +
                      std::to_string(H) + "x" + std::to_string(W));
  if (window == stride && (H % stride != 0 || W % stride != 0))
    throw shape_error("pool2d: input " + std::to_string(H) + "x" + std::to_string(W) +
                      " not divisible by non-overlapping window " + std::to_string(window) +
                      "; resize first");
  const int Ho = (H - window) / stride + 1;
  const int Wo = (W - window) / stride + 1;
  auto out = make_tensor({N, C, Ho, Wo});
  const std::size_t planes = static_cast<std::size_t>(N) * C;
  auto argmax = mode == Pool::max
                    ? std::make_shared<std::vector<int>>(out->numel())
                    : nullptr;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* ip = input->data.data() + p * (static_cast<std::size_t>(H) * W);
    double* op = out->data.data() + p * (static_cast<std::size_t>(Ho) * Wo);
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        const int y0 = oy * stride, x0 = ox * stride;
        if (mode == Pool::avg) {
          double s = 0.0;
          for (int dy = 0; dy < window; ++dy)
            for (int dx = 0; dx < window; ++dx)
              s += ip[static_cast<std::size_t>(y0 + dy) * W + x0 + dx];
          op[static_cast<std::size_t>(oy) * Wo + ox] = s / (window * window);
        } else {
          double best = ip[static_cast<std::size_t>(y0) * W + x0];
          int arg = y0 * W + x0;
          for (int dy = 0; dy < window; ++dy)
            for (int dx = 0; dx < window; ++dx) {
              const int idx = (y0 + dy) * W + x0 + dx;
              if (ip[idx] > best) {
                best = ip[idx];
                arg = idx;
              }
            }
          op[static_cast<std::size_t>(oy) * Wo + ox] = best;
          (*argmax)[p * (static_cast<std::size_t>(Ho) * Wo) + static_cast<std::size_t>(oy) * Wo +
                    ox] = arg;
        }
      }
    }
  }
  tape.watch(input);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*input);
    for (std::size_t p = 0; p < planes; ++p) {
      double* gip = input->grad.data() + p * (static_cast<std::size_t>(H) * W);
      const double* gop = out->grad.data() + p * (static_cast<std::size_t>(Ho) * Wo);
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          const double g = gop[static_cast<std::size_t>(oy) * Wo + ox];
          if (mode == Pool::avg) {
            const double share = g / (window * window);
            const int y0 = oy * stride, x0 = ox * stride;
            for (int dy = 0; dy < window; ++dy)
              for (int dx = 0; dx < window; ++dx)
                gip[static_cast<std::size_t>(y0 + dy) * W + x0 + dx] += share;
          } else {
            gip[(*argmax)[p * (static_cast<std::size_t>(Ho) * Wo) +
                          static_cast<std::size_t>(oy) * Wo + ox]] += g;
          }
        }
      }
    }
  });
  return out;
}

// Concatenate two feature maps along the channel axis.
inline TensorPtr concat_channels(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape.size() != 4 || b->shape.size() != 4 || a->shape[0] != b->shape[0] ||
      a->shape[2] != b->shape[2] || a->shape[3] != b->shape[3])
    throw shape_error("concat_channels: shapes " + shape_str(a->shape) + " and " +
                      shape_str(b->shape) + " do not agree outside the channel axis");
  const int N = a->shape[0], Ca = a->shape[1], Cb = b->shape[1];
  const std::size_t hw =
      static_cast<std::size_t>(a->shape[2]) * static_cast<std::size_t>(a->shape[3]);
  auto out = make_tensor({N, Ca + Cb, a->shape[2], a->shape[3]});
  for (int n = 0; n < N; ++n) {
    const std::size_t abase = static_cast<std::size_t>(n) * Ca * hw;
    const std::size_t bbase = static_cast<std::size_t>(n) * Cb * hw;
    const std::size_t obase = static_cast<std::size_t>(n) * (Ca + Cb) * hw;
    std::copy_n(a->data.begin() + abase, Ca * hw, out->data.begin() + obase);
    std::copy_n(b->data.begin() + bbase, Cb * hw, out->data.begin() + obase + Ca * hw);
  }
  tape.watch(a);
  tape.watch(b);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*a);
    ensure_grad(*b);
    for (int n = 0; n < N; ++n) {
      const std::size_t abase = static_cast<std::size_t>(n) * Ca * hw;
      const std::size_t bbase = static_cast<std::size_t>(n) * Cb * hw;
      const std::size_t obase = static_cast<std::size_t>(n) * (Ca + Cb) * hw;
      for (std::size_t i = 0; i < Ca * hw; ++i) a->grad[abase + i] += out->grad[obase + i];
      for (std::size_t i = 0; i < Cb * hw; ++i) b->grad[bbase + i] += out->grad[obase + Ca * hw + i];
    }
  });
  return out;
}

inline TensorPtr relu(Tape& tape, const TensorPtr& x) {
  auto out = make_tensor(x->shape);
  const std::size_t n = x->numel();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  tape.watch(x);
  tape.watch(out);
  tape.record([x, out, n] {
    ensure_grad(*x);
    for (std::size_t i = 0; i < n; ++i)
      if (x->data[i] > 0.0) x->grad[i] += out->grad[i];
  });
  return out;
}

// Fully connected layer: x is N x D, weight K x D, bias {K}; output N x K.
inline TensorPtr linear(Tape& tape, const TensorPtr& x, const TensorPtr& weight,
                        const TensorPtr& bias) {
  if (x->shape.size() != 2 || weight->shape.size() != 2 || x->shape[1] != weight->shape[1])
    throw shape_error("linear: input " + shape_str(x->shape) + " incompatible with weight " +
                      shape_str(weight->shape));
  const int N = x->shape[0], D = x->shape[1], K = weight->shape[0];
  if (bias->shape != std::vector<int>{K})
    throw shape_error("linear: bias must have length " + std::to_string(K));
  auto out = make_tensor({N, K});
  for (int n = 0; n < N; ++n) {
    const double* xp = x->data.data() + static_cast<std::size_t>(n) * D;
    for (int k = 0; k < K; ++k) {
      const double* wp = weight->data.data() + static_cast<std::size_t>(k) * D;
      double s = bias->data[static_cast<std::size_t>(k)];
      for (int d = 0; d < D; ++d) s += xp[d] * wp[d];
      out->data[static_cast<std::size_t>(n) * K + k] = s;
    }
  }
  tape.watch(x);
  tape.watch(weight);
  tape.watch(bias);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*x);
    ensure_grad(*weight);
    ensure_grad(*bias);
    for (int n = 0; n < N; ++n) {
      const double* xp = x->data.data() + static_cast<std::size_t>(n) * D;
      double* gxp = x->grad.data() + static_cast<std::size_t>(n) * D;
      for (int k = 0; k < K; ++k) {
        const double g = out->grad[static_cast<std::size_t>(n) * K + k];
        const double* wp = weight->data.data() + static_cast<std::size_t>(k) * D;
        double* gwp = weight->grad.data() + static_cast<std::size_t>(k) * D;
        bias->grad[static_cast<std::size_t>(k)] += g;
        for (int d = 0; d < D; ++d) {
          gxp[d] += g * wp[d];
          gwp[d] += g * xp[d];
        }
      }
    }
  });
  return out;
}

// Mean over the spatial grid per channel: N x C x H x W -> N x C.
inline TensorPtr global_avg_pool(Tape& tape, const TensorPtr& x) {
  if (x->shape.size() != 4)
    throw shape_error("global_avg_pool: input must be 4-D, got " + shape_str(x->shape));
  const int N = x->shape[0], C = x->shape[1];
  const std::size_t hw = static_cast<std::size_t>(x->shape[2]) * static_cast<std::size_t>(x->shape[3]);
  auto out = make_tensor({N, C});
  for (std::size_t p = 0; p < static_cast<std::size_t>(N) * C; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += x->data[p * hw + i];
    out->data[p] = s / static_cast<double>(hw);
  }
  tape.watch(x);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*x);
    for (std::size_t p = 0; p < static_cast<std::size_t>(N) * C; ++p) {
      const double g = out->grad[p] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) x->grad[p * hw + i] += g;
    }
  });
  return out;
}

// Mean over the batch of -log softmax(logits)[label]. Log-sum-exp is
// max-subtracted. logits N x K.
inline TensorPtr cross_entropy(Tape& tape, const TensorPtr& logits, const std::vector<int>& labels) {
  if (logits->shape.size() != 2)
    throw shape_error("cross_entropy: logits must be N x K, got " + shape_str(logits->shape));
  const int N = logits->shape[0], K = logits->shape[1];
  if (static_cast<int>(labels.size()) != N)
    throw shape_error("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                      std::to_string(N));
  for (int lab : labels)
    if (lab < 0 || lab >= K)
      throw config_error("cross_entropy: label " + std::to_string(lab) + " outside [0, " +
                         std::to_string(K) + ")");
  auto probs = std::make_shared<std::vector<double>>(logits->numel());
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const double* lp = logits->data.data() + static_cast<std::size_t>(n) * K;
    double m = lp[0];
    for (int k = 1; k < K; ++k) m = std::max(m, lp[k]);
    double denom = 0.0;
    for (int k = 0; k < K; ++k) denom += std::exp(lp[k] - m);
    const double lse = m + std::log(denom);
    for (int k = 0; k < K; ++k)
      (*probs)[static_cast<std::size_t>(n) * K + k] = std::exp(lp[k] - lse);
    total += lse - lp[labels[static_cast<std::size_t>(n)]];
  }
  auto out = scalar_tensor(total / N);
  tape.watch(logits);
  tape.watch(out);
  tape.record([=] {
    ensure_grad(*logits);
    const double g = out->grad[0] / N;
    for (int n = 0; n < N; ++n)
      for (int k = 0; k < K; ++k) {
        const double p = (*probs)[static_cast<std::size_t>(n) * K + k];
        logits->grad[static_cast<std::size_t>(n) * K + k] +=
            g * (p - (k == labels[static_cast<std::size_t>(n)] ? 1.0 : 0.0));
      }
  });
  return out;
}

}  // namespace mgfa

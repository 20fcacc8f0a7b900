#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mgfa/errors.hpp"

namespace mgfa {

// Dense row-major tensor of doubles with an optional gradient buffer.
// Rank is whatever the shape says; the pipeline uses NCHW for 4-D,
// (N, K) for logits and {n} for vectors/scalars.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches it

  std::size_t numel() const { return data.size(); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

inline TensorPtr make_tensor(std::vector<int> shape, double fill = 0.0) {
  for (int d : shape)
    if (d <= 0) throw shape_error("tensor dimension must be positive, got " + shape_str(shape));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(shape_numel(t->shape), fill);
  return t;
}

inline TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size())
    throw shape_error("value count " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(values);
  return t;
}

inline TensorPtr scalar_tensor(double v) { return make_tensor({1}, std::vector<double>{v}); }

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

inline void ensure_grad(Tensor& t) {
  if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
}

// Records every executed operation so adjoints can be replayed in reverse.
// Single-threaded per instance; independent tapes are independent.
class Tape {
 public:
  // Register a tensor touched by a recorded op. Its grad buffer is zeroed
  // at the start of every backward pass.
  void watch(const TensorPtr& t) { tensors_.push_back(t); }

  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  // Populates grad buffers of everything the tape touched with
  // d(loss)/d(tensor). Grads are zeroed first, so repeated calls do not
  // accumulate.
  void backward(const TensorPtr& loss) {
    if (loss->numel() != 1)
      throw shape_error("backward requires a scalar loss, got shape " + shape_str(loss->shape));
    for (auto& t : tensors_) {
      t->grad.assign(t->data.size(), 0.0);
    }
    ensure_grad(*loss);
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  void clear() {
    nodes_.clear();
    tensors_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
  std::vector<TensorPtr> tensors_;
};

namespace detail {

inline void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw numeric_error(std::string(op) + " produced a non-finite value");
}

}  // namespace detail

// ---- elementwise operations -------------------------------------------

inline TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (!same_shape(*a, *b))
    throw shape_error("add: shapes " + shape_str(a->shape) + " and " + shape_str(b->shape) +
                      " differ");
  auto out = make_tensor(a->shape);
  const std::size_t n = out->numel();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
  tape.watch(a);
  tape.watch(b);
  tape.watch(out);
  tape.record([a, b, out, n] {
    ensure_grad(*a);
    ensure_grad(*b);
    for (std::size_t i = 0; i < n; ++i) {
      a->grad[i] += out->grad[i];
      b->grad[i] += out->grad[i];
    }
  });
  return out;
}

inline TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (!same_shape(*a, *b))
    throw shape_error("mul: shapes " + shape_str(a->shape) + " and " + shape_str(b->shape) +
                      " differ");
  auto out = make_tensor(a->shape);
  const std::size_t n = out->numel();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
  tape.watch(a);
  tape.watch(b);
  tape.watch(out);
  tape.record([a, b, out, n] {
    ensure_grad(*a);
    ensure_grad(*b);
    for (std::size_t i = 0; i < n; ++i) {
      a->grad[i] += out->grad[i] * b->data[i];
      b->grad[i] += out->grad[i] * a->data[i];
    }
  });
  return out;
}

inline TensorPtr scale(Tape& tape, const TensorPtr& a, double c) {
  auto out = make_tensor(a->shape);
  const std::size_t n = out->numel();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = c * a->data[i];
  tape.watch(a);
  tape.watch(out);
  tape.record([a, out, c, n] {
    ensure_grad(*a);
    for (std::size_t i = 0; i < n; ++i) a->grad[i] += c * out->grad[i];
  });
  return out;
}

// map is N x 1 x H x W, features N x C x H x W; the map value multiplies
// every channel at its pixel.
inline TensorPtr broadcast_mul(Tape& tape, const TensorPtr& map, const TensorPtr& features) {
  if (map->shape.size() != 4 || features->shape.size() != 4 || map->shape[1] != 1 ||
      map->shape[0] != features->shape[0] || map->shape[2] != features->shape[2] ||
      map->shape[3] != features->shape[3])
    throw shape_error("broadcast_mul: map " + shape_str(map->shape) +
                      " does not broadcast against features " + shape_str(features->shape));
  const int N = features->shape[0], C = features->shape[1];
  const std::size_t hw = static_cast<std::size_t>(features->shape[2]) *
                         static_cast<std::size_t>(features->shape[3]);
  auto out = make_tensor(features->shape);
  for (int n = 0; n < N; ++n) {
    const double* m = map->data.data() + static_cast<std::size_t>(n) * hw;
    for (int c = 0; c < C; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * C + static_cast<std::size_t>(c)) * hw;
      for (std::size_t i = 0; i < hw; ++i) out->data[base + i] = m[i] * features->data[base + i];
    }
  }
  tape.watch(map);
  tape.watch(features);
  tape.watch(out);
  tape.record([map, features, out, N, C, hw] {
    ensure_grad(*map);
    ensure_grad(*features);
    for (int n = 0; n < N; ++n) {
      const std::size_t mbase = static_cast<std::size_t>(n) * hw;
      for (int c = 0; c < C; ++c) {
        const std::size_t base =
            (static_cast<std::size_t>(n) * C + static_cast<std::size_t>(c)) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          map->grad[mbase + i] += out->grad[base + i] * features->data[base + i];
          features->grad[base + i] += out->grad[base + i] * map->data[mbase + i];
        }
      }
    }
  });
  return out;
}

inline TensorPtr sum(Tape& tape, const TensorPtr& a) {
  double s = 0.0;
  for (double v : a->data) s += v;
  auto out = scalar_tensor(s);
  tape.watch(a);
  tape.watch(out);
  tape.record([a, out] {
    ensure_grad(*a);
    const double g = out->grad[0];
    for (double& gi : a->grad) gi += g;
  });
  return out;
}

// ---- finite-difference verification ------------------------------------

// fn builds a scalar loss from the input on the given tape. Returns the
// max over coordinates of |analytic - central difference| /
// max(1e-12, |analytic| + |central difference|).
inline double grad_check(const std::function<TensorPtr(Tape&, const TensorPtr&)>& fn,
                         const TensorPtr& input, double eps) {
  if (eps <= 0.0) throw config_error("grad_check: eps must be positive");
  Tape tape;
  auto loss = fn(tape, input);
  if (loss->numel() != 1)
    throw shape_error("grad_check: fn must return a scalar, got " + shape_str(loss->shape));
  tape.backward(loss);
  std::vector<double> analytic = input->grad;
  if (analytic.empty()) analytic.assign(input->numel(), 0.0);

  double worst = 0.0;
  for (std::size_t i = 0; i < input->numel(); ++i) {
    const double orig = input->data[i];
    input->data[i] = orig + eps;
    Tape tp;
    const double up = fn(tp, input)->data[0];
    input->data[i] = orig - eps;
    Tape tm;
    const double down = fn(tm, input)->data[0];
    input->data[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max(1e-12, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace mgfa

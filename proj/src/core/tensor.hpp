#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/shape.hpp"

namespace grl {

class Tensor;

namespace detail {

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until gradient flows
  bool requires_grad = false;
  uint64_t seq = 0;  // creation order; a valid topological order for the tape
  std::vector<Tensor> inputs;
  std::function<void(TensorData&)> backward_fn;
};

}  // namespace detail

// Scoped guard disabling graph construction (evaluation, table updates).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// Dense double tensor with reverse-mode autodiff. Value-semantic handle;
// copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double v, bool requires_grad = false);
  static Tensor from_vector(const Shape& shape, std::vector<double> v,
                            bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0,
                      bool requires_grad = false);
  static Tensor rand_uniform(const Shape& shape, Rng& rng, double lo, double hi,
                             bool requires_grad = false);

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int64_t dim(int i) const { return d_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(d_->value.size()); }

  double* data() { return d_->value.data(); }
  const double* data() const { return d_->value.data(); }
  std::vector<double>& values() { return d_->value; }
  const std::vector<double>& values() const { return d_->value; }
  double item() const;
  bool all_finite() const;

  bool requires_grad() const { return d_ && d_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  // Lazily allocated, zero-filled gradient buffer.
  double* grad_data();
  bool has_grad() const { return d_ && !d_->grad.empty(); }
  const std::vector<double>& grad() const { return d_->grad; }
  void zero_grad();

  // Reverse pass from a scalar tensor. Frees the traversed graph afterwards.
  void backward();

  // Value copy detached from any graph.
  Tensor detach() const;

  detail::TensorData* node() const { return d_.get(); }

  // Used by ops: wires inputs and the backward closure when gradients are on.
  static Tensor make_op(Shape shape, std::vector<double> value,
                        std::vector<Tensor> inputs,
                        std::function<void(detail::TensorData&)> backward_fn);

 private:
  std::shared_ptr<detail::TensorData> d_;
};

}  // namespace grl

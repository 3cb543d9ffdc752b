#include "core/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace grl {

namespace {

std::atomic<uint64_t> g_seq{1};
thread_local int g_no_grad_depth = 0;

std::shared_ptr<detail::TensorData> make_data(Shape shape,
                                              std::vector<double> value) {
  auto d = std::make_shared<detail::TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  d->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return d;
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  Tensor t;
  t.d_ = make_data(shape, std::vector<double>(static_cast<size_t>(grl::numel(shape)), 0.0));
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
  Tensor t;
  t.d_ = make_data(shape, std::vector<double>(static_cast<size_t>(grl::numel(shape)), v));
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_vector(const Shape& shape, std::vector<double> v,
                           bool requires_grad) {
  check_shape(static_cast<int64_t>(v.size()) == grl::numel(shape),
              "from_vector: data size " + std::to_string(v.size()) +
                  " does not match shape " + shape_str(shape));
  Tensor t;
  t.d_ = make_data(shape, std::move(v));
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double v) { return from_vector({1}, {v}); }

Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev,
                     bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(grl::numel(shape)));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return from_vector(shape, std::move(v), requires_grad);
}

Tensor Tensor::rand_uniform(const Shape& shape, Rng& rng, double lo, double hi,
                            bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(grl::numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return from_vector(shape, std::move(v), requires_grad);
}

double Tensor::item() const {
  check_shape(numel() == 1, "item() on tensor with " + std::to_string(numel()) +
                                " elements");
  return d_->value[0];
}

bool Tensor::all_finite() const {
  for (double v : d_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor& Tensor::set_requires_grad(bool on) {
  d_->requires_grad = on;
  return *this;
}

double* Tensor::grad_data() {
  if (d_->grad.empty()) d_->grad.assign(d_->value.size(), 0.0);
  return d_->grad.data();
}

void Tensor::zero_grad() {
  if (d_) d_->grad.clear();
}

Tensor Tensor::detach() const {
  Tensor t;
  t.d_ = make_data(d_->shape, d_->value);
  return t;
}

Tensor Tensor::make_op(Shape shape, std::vector<double> value,
                       std::vector<Tensor> inputs,
                       std::function<void(detail::TensorData&)> backward_fn) {
  Tensor out;
  out.d_ = make_data(std::move(shape), std::move(value));
  if (grad_enabled()) {
    bool needs = false;
    for (const Tensor& in : inputs)
      if (in.requires_grad()) needs = true;
    if (needs) {
      out.d_->requires_grad = true;
      out.d_->inputs = std::move(inputs);
      out.d_->backward_fn = std::move(backward_fn);
    }
  }
  return out;
}

void Tensor::backward() {
  check_shape(numel() == 1, "backward() requires a scalar, got " +
                                shape_str(shape()));
  // Reachable subgraph, iteratively to keep the stack shallow. Strong
  // references: tearing down one node's closure can release the last handle
  // on another node that is still queued here.
  std::vector<std::shared_ptr<detail::TensorData>> order;
  std::unordered_set<detail::TensorData*> seen;
  std::vector<std::shared_ptr<detail::TensorData>> stack{d_};
  seen.insert(d_.get());
  while (!stack.empty()) {
    std::shared_ptr<detail::TensorData> n = std::move(stack.back());
    stack.pop_back();
    for (const Tensor& in : n->inputs) {
      if (in.d_->requires_grad && !seen.count(in.d_.get())) {
        seen.insert(in.d_.get());
        stack.push_back(in.d_);
      }
    }
    order.push_back(std::move(n));
  }
  std::sort(order.begin(), order.end(),
            [](const std::shared_ptr<detail::TensorData>& a,
               const std::shared_ptr<detail::TensorData>& b) {
              return a->seq > b->seq;
            });
  grad_data()[0] = 1.0;
  for (const auto& n : order) {
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Release the tape so activations free promptly and reuse is an error.
  // With inputs cleared first, the final releases cannot recurse through
  // long op chains.
  for (const auto& n : order) {
    n->backward_fn = nullptr;
    n->inputs.clear();
  }
}

}  // namespace grl

#include "nn/optim.hpp"

namespace grl {

SgdOptimizer::SgdOptimizer(std::vector<Tensor> params, double lr,
                           double momentum, double weight_decay, bool nesterov)
    : params_(std::move(params)),
      lr_(lr),
      momentum_(momentum),
      weight_decay_(weight_decay),
      nesterov_(nesterov) {
  buffers_.reserve(params_.size());
  for (const Tensor& p : params_)
    buffers_.emplace_back(static_cast<size_t>(p.numel()), 0.0);
}

void SgdOptimizer::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    double* pv = p.data();
    const double* g = p.grad_data();
    std::vector<double>& buf = buffers_[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      double d = g[j] + weight_decay_ * pv[j];
      if (momentum_ != 0.0) {
        buf[static_cast<size_t>(j)] = momentum_ * buf[static_cast<size_t>(j)] + d;
        d = nesterov_ ? d + momentum_ * buf[static_cast<size_t>(j)]
                      : buf[static_cast<size_t>(j)];
      }
      pv[j] -= lr_ * d;
    }
  }
}

void SgdOptimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace grl

#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace grl {

// Elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor abs_val(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Reductions
Tensor sum_all(const Tensor& a);                       // -> [1]
Tensor mean_thw(const Tensor& x);                      // [N,T,C,H,W] -> [N,C]
Tensor mean_time_maps(const Tensor& x);                // [N,T,C,H,W] -> [N,C,H,W]
Tensor gap_hw(const Tensor& x);                        // [B,C,H,W] -> [B,C]
Tensor temporal_pool(const Tensor& x, bool use_max);   // [N,T,C] -> [N,C]

// Structure
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);      // [B,Ca]+[B,Cb]
Tensor concat_channels(const Tensor& a, const Tensor& b);  // [B,Ca,H,W]+[B,Cb,H,W]
Tensor select_time(const Tensor& x, int64_t t);            // [N,T,C,H,W] -> [N,C,H,W]
Tensor stack_time(const std::vector<Tensor>& steps);       // T x [N,C] -> [N,T,C]
Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& rows);
Tensor expand_vector_spatial(const Tensor& v, int64_t t, int64_t h, int64_t w);
Tensor mul_channel(const Tensor& x, const Tensor& s);      // [B,C,H,W] * [B,C]
Tensor mul_map(const Tensor& x, const Tensor& r);          // [B,C,H,W] * [B,1,H,W]

// Dense / conv primitives
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = Tensor());
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, bool training,
                    double momentum = 0.1, double eps = 1e-5);
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-12);

// Fused losses (numerically stable)
Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int64_t>& labels);
Tensor bce_with_logits_mean(const Tensor& logits, const std::vector<double>& targets);

}  // namespace grl

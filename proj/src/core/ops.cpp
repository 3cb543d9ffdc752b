#include "core/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace grl {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

// nullptr when the input does not take gradient.
double* maybe_grad(Tensor& t) {
  return t.requires_grad() ? t.grad_data() : nullptr;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check_shape(a.shape() == b.shape(),
              std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                  " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.values());
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += pb[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b},
                         [ta, tb](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i];
                           if (double* gb = maybe_grad(tb))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               gb[i] += o.grad[i];
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.values());
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b},
                         [ta, tb](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i];
                           if (double* gb = maybe_grad(tb))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               gb[i] -= o.grad[i];
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.values());
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
  Tensor ta = a, tb = b;
  return Tensor::make_op(a.shape(), std::move(out), {a, b},
                         [ta, tb](detail::TensorData& o) mutable {
                           const double* va = ta.data();
                           const double* vb = tb.data();
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i] * vb[i];
                           if (double* gb = maybe_grad(tb))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               gb[i] += o.grad[i] * va[i];
                         });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (double& v : out) v += s;
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i];
                         });
}

Tensor mul_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= s;
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta, s](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i] * s;
                         });
}

Tensor square(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= v;
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta)) {
                             const double* va = ta.data();
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += 2.0 * va[i] * o.grad[i];
                           }
                         });
}

Tensor abs_val(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = std::fabs(v);
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta)) {
                             const double* va = ta.data();
                             for (size_t i = 0; i < o.grad.size(); ++i) {
                               if (va[i] > 0.0)
                                 ga[i] += o.grad[i];
                               else if (va[i] < 0.0)
                                 ga[i] -= o.grad[i];
                             }
                           }
                         });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  Tensor ta = a;
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta)) {
                             const double* va = ta.data();
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               if (va[i] > 0.0) ga[i] += o.grad[i];
                           }
                         });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  Tensor ta = a;
  std::vector<double> saved(out);
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [ta, saved = std::move(saved)](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i] * saved[i] * (1.0 - saved[i]);
                         });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor ta = a;
  return Tensor::make_op({1}, {s}, {a}, [ta](detail::TensorData& o) mutable {
    if (double* ga = maybe_grad(ta)) {
      double g = o.grad[0];
      for (int64_t i = 0; i < ta.numel(); ++i) ga[i] += g;
    }
  });
}

Tensor mean_thw(const Tensor& x) {
  check_shape(x.ndim() == 5, "mean_thw expects [N,T,C,H,W], got " +
                                 shape_str(x.shape()));
  const int64_t n = x.dim(0), t = x.dim(1), c = x.dim(2), h = x.dim(3),
                w = x.dim(4);
  check_shape(t >= 1, "mean_thw: empty temporal axis");
  const int64_t hw = h * w;
  std::vector<double> out(static_cast<size_t>(n * c), 0.0);
  const double* px = x.data();
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ci = 0; ci < c; ++ci) {
        const double* p = px + ((ni * t + ti) * c + ci) * hw;
        double s = 0.0;
        for (int64_t i = 0; i < hw; ++i) s += p[i];
        out[static_cast<size_t>(ni * c + ci)] += s;
      }
  const double inv = 1.0 / static_cast<double>(t * hw);
  for (double& v : out) v *= inv;
  Tensor tx = x;
  return Tensor::make_op(
      {n, c}, std::move(out), {x},
      [tx, n, t, c, hw, inv](detail::TensorData& o) mutable {
        if (double* gx = maybe_grad(tx)) {
          for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t ti = 0; ti < t; ++ti)
              for (int64_t ci = 0; ci < c; ++ci) {
                double g = o.grad[static_cast<size_t>(ni * c + ci)] * inv;
                double* p = gx + ((ni * t + ti) * c + ci) * hw;
                for (int64_t i = 0; i < hw; ++i) p[i] += g;
              }
        }
      });
}

Tensor mean_time_maps(const Tensor& x) {
  check_shape(x.ndim() == 5, "mean_time_maps expects [N,T,C,H,W], got " +
                                 shape_str(x.shape()));
  const int64_t n = x.dim(0), t = x.dim(1), c = x.dim(2), h = x.dim(3),
                w = x.dim(4);
  check_shape(t >= 1, "mean_time_maps: empty temporal axis");
  const int64_t chw = c * h * w;
  std::vector<double> out(static_cast<size_t>(n * chw), 0.0);
  const double* px = x.data();
  for (int64_t ni = 0; ni < n; ++ni) {
    double* po = out.data() + ni * chw;
    for (int64_t ti = 0; ti < t; ++ti) {
      const double* p = px + (ni * t + ti) * chw;
      for (int64_t i = 0; i < chw; ++i) po[i] += p[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(t);
  for (double& v : out) v *= inv;
  Tensor tx = x;
  return Tensor::make_op({n, c, h, w}, std::move(out), {x},
                         [tx, n, t, chw, inv](detail::TensorData& o) mutable {
                           if (double* gx = maybe_grad(tx)) {
                             for (int64_t ni = 0; ni < n; ++ni) {
                               const double* po = o.grad.data() + ni * chw;
                               for (int64_t ti = 0; ti < t; ++ti) {
                                 double* p = gx + (ni * t + ti) * chw;
                                 for (int64_t i = 0; i < chw; ++i)
                                   p[i] += po[i] * inv;
                               }
                             }
                           }
                         });
}

Tensor gap_hw(const Tensor& x) {
  check_shape(x.ndim() == 4, "gap_hw expects [B,C,H,W], got " +
                                 shape_str(x.shape()));
  const int64_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  std::vector<double> out(static_cast<size_t>(b * c));
  const double* px = x.data();
  const double inv = 1.0 / static_cast<double>(hw);
  for (int64_t i = 0; i < b * c; ++i) {
    const double* p = px + i * hw;
    double s = 0.0;
    for (int64_t j = 0; j < hw; ++j) s += p[j];
    out[static_cast<size_t>(i)] = s * inv;
  }
  Tensor tx = x;
  return Tensor::make_op({b, c}, std::move(out), {x},
                         [tx, b, c, hw, inv](detail::TensorData& o) mutable {
                           if (double* gx = maybe_grad(tx)) {
                             for (int64_t i = 0; i < b * c; ++i) {
                               double g = o.grad[static_cast<size_t>(i)] * inv;
                               double* p = gx + i * hw;
                               for (int64_t j = 0; j < hw; ++j) p[j] += g;
                             }
                           }
                         });
}

Tensor temporal_pool(const Tensor& x, bool use_max) {
  check_shape(x.ndim() == 3, "temporal_pool expects [N,T,C], got " +
                                 shape_str(x.shape()));
  const int64_t n = x.dim(0), t = x.dim(1), c = x.dim(2);
  check_shape(t >= 1, "temporal_pool: empty temporal axis");
  std::vector<double> out(static_cast<size_t>(n * c));
  std::vector<int64_t> argmax;
  const double* px = x.data();
  if (use_max) {
    argmax.assign(static_cast<size_t>(n * c), 0);
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t ci = 0; ci < c; ++ci) {
        double best = -std::numeric_limits<double>::infinity();
        int64_t bi = 0;
        for (int64_t ti = 0; ti < t; ++ti) {
          double v = px[(ni * t + ti) * c + ci];
          if (v > best) {
            best = v;
            bi = ti;
          }
        }
        out[static_cast<size_t>(ni * c + ci)] = best;
        argmax[static_cast<size_t>(ni * c + ci)] = bi;
      }
  } else {
    const double inv = 1.0 / static_cast<double>(t);
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t ci = 0; ci < c; ++ci) {
        double s = 0.0;
        for (int64_t ti = 0; ti < t; ++ti) s += px[(ni * t + ti) * c + ci];
        out[static_cast<size_t>(ni * c + ci)] = s * inv;
      }
  }
  Tensor tx = x;
  return Tensor::make_op(
      {n, c}, std::move(out), {x},
      [tx, n, t, c, use_max, argmax = std::move(argmax)](detail::TensorData& o) mutable {
        if (double* gx = maybe_grad(tx)) {
          if (use_max) {
            for (int64_t i = 0; i < n * c; ++i) {
              int64_t ni = i / c, ci = i % c;
              gx[(ni * t + argmax[static_cast<size_t>(i)]) * c + ci] +=
                  o.grad[static_cast<size_t>(i)];
            }
          } else {
            const double inv = 1.0 / static_cast<double>(t);
            for (int64_t ni = 0; ni < n; ++ni)
              for (int64_t ci = 0; ci < c; ++ci) {
                double g = o.grad[static_cast<size_t>(ni * c + ci)] * inv;
                for (int64_t ti = 0; ti < t; ++ti)
                  gx[(ni * t + ti) * c + ci] += g;
              }
          }
        }
      });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  check_shape(numel(shape) == a.numel(),
              "reshape: cannot view " + shape_str(a.shape()) + " as " +
                  shape_str(shape));
  Tensor ta = a;
  return Tensor::make_op(shape, a.values(), {a},
                         [ta](detail::TensorData& o) mutable {
                           if (double* ga = maybe_grad(ta))
                             for (size_t i = 0; i < o.grad.size(); ++i)
                               ga[i] += o.grad[i];
                         });
}

namespace {

// Concatenate along axis 1 for tensors whose trailing axes agree.
Tensor concat_axis1(const Tensor& a, const Tensor& b, const char* op) {
  check_shape(a.ndim() == b.ndim() && a.ndim() >= 2,
              std::string(op) + ": rank mismatch");
  check_shape(a.dim(0) == b.dim(0), std::string(op) + ": batch mismatch");
  int64_t inner_a = 1, inner_b = 1;
  for (int i = 1; i < a.ndim(); ++i) inner_a *= a.dim(i);
  for (int i = 1; i < b.ndim(); ++i) inner_b *= b.dim(i);
  int64_t tail = 1;
  for (int i = 2; i < a.ndim(); ++i) {
    check_shape(a.dim(i) == b.dim(i), std::string(op) + ": trailing dim mismatch");
    tail *= a.dim(i);
  }
  const int64_t batch = a.dim(0);
  Shape out_shape = a.shape();
  out_shape[1] = a.dim(1) + b.dim(1);
  std::vector<double> out(static_cast<size_t>(batch * (inner_a + inner_b)));
  const double* pa = a.data();
  const double* pb = b.data();
  for (int64_t i = 0; i < batch; ++i) {
    std::memcpy(out.data() + i * (inner_a + inner_b), pa + i * inner_a,
                static_cast<size_t>(inner_a) * sizeof(double));
    std::memcpy(out.data() + i * (inner_a + inner_b) + inner_a, pb + i * inner_b,
                static_cast<size_t>(inner_b) * sizeof(double));
  }
  (void)tail;
  Tensor ta = a, tb = b;
  return Tensor::make_op(
      out_shape, std::move(out), {a, b},
      [ta, tb, batch, inner_a, inner_b](detail::TensorData& o) mutable {
        double* ga = maybe_grad(ta);
        double* gb = maybe_grad(tb);
        for (int64_t i = 0; i < batch; ++i) {
          const double* g = o.grad.data() + i * (inner_a + inner_b);
          if (ga)
            for (int64_t j = 0; j < inner_a; ++j) ga[i * inner_a + j] += g[j];
          if (gb)
            for (int64_t j = 0; j < inner_b; ++j)
              gb[i * inner_b + j] += g[inner_a + j];
        }
      });
}

}  // namespace

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_shape(a.ndim() == 2 && b.ndim() == 2, "concat_cols expects rank-2");
  return concat_axis1(a, b, "concat_cols");
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check_shape(a.ndim() == 4 && b.ndim() == 4, "concat_channels expects rank-4");
  return concat_axis1(a, b, "concat_channels");
}

Tensor select_time(const Tensor& x, int64_t t) {
  check_shape(x.ndim() >= 2, "select_time expects rank >= 2");
  const int64_t n = x.dim(0), steps = x.dim(1);
  check_shape(t >= 0 && t < steps, "select_time: index " + std::to_string(t) +
                                       " out of range [0," +
                                       std::to_string(steps) + ")");
  int64_t inner = 1;
  Shape out_shape{n};
  for (int i = 2; i < x.ndim(); ++i) {
    inner *= x.dim(i);
    out_shape.push_back(x.dim(i));
  }
  std::vector<double> out(static_cast<size_t>(n * inner));
  const double* px = x.data();
  for (int64_t ni = 0; ni < n; ++ni)
    std::memcpy(out.data() + ni * inner, px + (ni * steps + t) * inner,
                static_cast<size_t>(inner) * sizeof(double));
  Tensor tx = x;
  return Tensor::make_op(out_shape, std::move(out), {x},
                         [tx, n, steps, t, inner](detail::TensorData& o) mutable {
                           if (double* gx = maybe_grad(tx)) {
                             for (int64_t ni = 0; ni < n; ++ni) {
                               double* p = gx + (ni * steps + t) * inner;
                               const double* g = o.grad.data() + ni * inner;
                               for (int64_t i = 0; i < inner; ++i) p[i] += g[i];
                             }
                           }
                         });
}

Tensor stack_time(const std::vector<Tensor>& steps) {
  check_shape(!steps.empty(), "stack_time: empty input");
  const int64_t t = static_cast<int64_t>(steps.size());
  const int64_t n = steps[0].dim(0), c = steps[0].dim(1);
  for (const Tensor& s : steps)
    check_shape(s.ndim() == 2 && s.dim(0) == n && s.dim(1) == c,
                "stack_time: inconsistent step shapes");
  std::vector<double> out(static_cast<size_t>(n * t * c));
  for (int64_t ti = 0; ti < t; ++ti) {
    const double* p = steps[static_cast<size_t>(ti)].data();
    for (int64_t ni = 0; ni < n; ++ni)
      std::memcpy(out.data() + (ni * t + ti) * c, p + ni * c,
                  static_cast<size_t>(c) * sizeof(double));
  }
  std::vector<Tensor> inputs(steps.begin(), steps.end());
  return Tensor::make_op(
      {n, t, c}, std::move(out), std::move(inputs),
      [n, t, c](detail::TensorData& o) mutable {
        for (int64_t ti = 0; ti < t; ++ti) {
          Tensor in = o.inputs[static_cast<size_t>(ti)];
          if (double* g = maybe_grad(in)) {
            for (int64_t ni = 0; ni < n; ++ni) {
              const double* go = o.grad.data() + (ni * t + ti) * c;
              for (int64_t ci = 0; ci < c; ++ci) g[ni * c + ci] += go[ci];
            }
          }
        }
      });
}

Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& rows) {
  check_shape(x.ndim() == 2, "gather_rows expects [B,C]");
  const int64_t b = x.dim(0), c = x.dim(1);
  for (int64_t r : rows)
    check_shape(r >= 0 && r < b, "gather_rows: row index out of range");
  const int64_t j = static_cast<int64_t>(rows.size());
  std::vector<double> out(static_cast<size_t>(j * c));
  const double* px = x.data();
  for (int64_t i = 0; i < j; ++i)
    std::memcpy(out.data() + i * c, px + rows[static_cast<size_t>(i)] * c,
                static_cast<size_t>(c) * sizeof(double));
  Tensor tx = x;
  return Tensor::make_op({j, c}, std::move(out), {x},
                         [tx, rows, c](detail::TensorData& o) mutable {
                           if (double* gx = maybe_grad(tx)) {
                             for (size_t i = 0; i < rows.size(); ++i) {
                               const double* g = o.grad.data() + static_cast<int64_t>(i) * c;
                               double* p = gx + rows[i] * c;
                               for (int64_t ci = 0; ci < c; ++ci) p[ci] += g[ci];
                             }
                           }
                         });
}

Tensor expand_vector_spatial(const Tensor& v, int64_t t, int64_t h, int64_t w) {
  check_shape(v.ndim() == 2, "expand_vector_spatial expects [N,C]");
  const int64_t n = v.dim(0), c = v.dim(1), hw = h * w;
  std::vector<double> out(static_cast<size_t>(n * t * c * hw));
  const double* pv = v.data();
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ci = 0; ci < c; ++ci) {
        double val = pv[ni * c + ci];
        double* p = out.data() + ((ni * t + ti) * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] = val;
      }
  Tensor tv = v;
  return Tensor::make_op(
      {n * t, c, h, w}, std::move(out), {v},
      [tv, n, t, c, hw](detail::TensorData& o) mutable {
        if (double* gv = maybe_grad(tv)) {
          for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t ti = 0; ti < t; ++ti)
              for (int64_t ci = 0; ci < c; ++ci) {
                const double* g = o.grad.data() + ((ni * t + ti) * c + ci) * hw;
                double s = 0.0;
                for (int64_t i = 0; i < hw; ++i) s += g[i];
                gv[ni * c + ci] += s;
              }
        }
      });
}

Tensor mul_channel(const Tensor& x, const Tensor& s) {
  check_shape(x.ndim() == 4 && s.ndim() == 2 && x.dim(0) == s.dim(0) &&
                  x.dim(1) == s.dim(1),
              "mul_channel: expected [B,C,H,W] x [B,C], got " +
                  shape_str(x.shape()) + " x " + shape_str(s.shape()));
  const int64_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  std::vector<double> out(x.values());
  const double* ps = s.data();
  for (int64_t i = 0; i < b * c; ++i) {
    double f = ps[i];
    double* p = out.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) p[j] *= f;
  }
  Tensor tx = x, ts = s;
  return Tensor::make_op(
      x.shape(), std::move(out), {x, s},
      [tx, ts, b, c, hw](detail::TensorData& o) mutable {
        const double* vx = tx.data();
        const double* vs = ts.data();
        double* gx = maybe_grad(tx);
        double* gs = maybe_grad(ts);
        for (int64_t i = 0; i < b * c; ++i) {
          const double* g = o.grad.data() + i * hw;
          if (gx) {
            double f = vs[i];
            double* p = gx + i * hw;
            for (int64_t j = 0; j < hw; ++j) p[j] += g[j] * f;
          }
          if (gs) {
            const double* p = vx + i * hw;
            double acc = 0.0;
            for (int64_t j = 0; j < hw; ++j) acc += g[j] * p[j];
            gs[i] += acc;
          }
        }
      });
}

Tensor mul_map(const Tensor& x, const Tensor& r) {
  check_shape(x.ndim() == 4 && r.ndim() == 4 && r.dim(1) == 1 &&
                  x.dim(0) == r.dim(0) && x.dim(2) == r.dim(2) &&
                  x.dim(3) == r.dim(3),
              "mul_map: expected [B,C,H,W] x [B,1,H,W], got " +
                  shape_str(x.shape()) + " x " + shape_str(r.shape()));
  const int64_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  std::vector<double> out(x.values());
  const double* pr = r.data();
  for (int64_t bi = 0; bi < b; ++bi) {
    const double* m = pr + bi * hw;
    for (int64_t ci = 0; ci < c; ++ci) {
      double* p = out.data() + (bi * c + ci) * hw;
      for (int64_t j = 0; j < hw; ++j) p[j] *= m[j];
    }
  }
  Tensor tx = x, tr = r;
  return Tensor::make_op(
      x.shape(), std::move(out), {x, r},
      [tx, tr, b, c, hw](detail::TensorData& o) mutable {
        const double* vx = tx.data();
        const double* vr = tr.data();
        double* gx = maybe_grad(tx);
        double* gr = maybe_grad(tr);
        for (int64_t bi = 0; bi < b; ++bi) {
          const double* m = vr + bi * hw;
          for (int64_t ci = 0; ci < c; ++ci) {
            const double* g = o.grad.data() + (bi * c + ci) * hw;
            if (gx) {
              double* p = gx + (bi * c + ci) * hw;
              for (int64_t j = 0; j < hw; ++j) p[j] += g[j] * m[j];
            }
            if (gr) {
              const double* p = vx + (bi * c + ci) * hw;
              double* q = gr + bi * hw;
              for (int64_t j = 0; j < hw; ++j) q[j] += g[j] * p[j];
            }
          }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_shape(x.ndim() == 2 && w.ndim() == 2, "linear expects [B,in] and [out,in]");
  const int64_t batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  check_shape(w.dim(1) == in, "linear: input width " + std::to_string(in) +
                                  " does not match weight " +
                                  shape_str(w.shape()));
  if (b.defined())
    check_shape(b.numel() == out_dim, "linear: bias size mismatch");
  std::vector<double> out(static_cast<size_t>(batch * out_dim));
  {
    ConstMatMap mx(x.data(), batch, in);
    ConstMatMap mw(w.data(), out_dim, in);
    MatMap mo(out.data(), batch, out_dim);
    mo.noalias() = mx * mw.transpose();
    if (b.defined()) {
      ConstMatMap mb(b.data(), 1, out_dim);
      mo.rowwise() += mb.row(0);
    }
  }
  Tensor tx = x, tw = w, tb = b;
  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return Tensor::make_op(
      {batch, out_dim}, std::move(out), std::move(inputs),
      [tx, tw, tb, batch, in, out_dim](detail::TensorData& o) mutable {
        ConstMatMap go(o.grad.data(), batch, out_dim);
        if (tx.requires_grad()) {
          MatMap gx(tx.grad_data(), batch, in);
          ConstMatMap mw(tw.data(), out_dim, in);
          gx.noalias() += go * mw;
        }
        if (tw.requires_grad()) {
          MatMap gw(tw.grad_data(), out_dim, in);
          ConstMatMap mx(tx.data(), batch, in);
          gw.noalias() += go.transpose() * mx;
        }
        if (tb.defined() && tb.requires_grad()) {
          double* gb = tb.grad_data();
          for (int64_t j = 0; j < out_dim; ++j) gb[j] += go.col(j).sum();
        }
      });
}

namespace {

struct ConvDims {
  int64_t batch, cin, h, w, cout, kh, kw, ho, wo, k;
  int stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  check_shape(x.ndim() == 4 && w.ndim() == 4,
              "conv2d expects [B,Cin,H,W] and [Cout,Cin,kh,kw]");
  ConvDims d;
  d.batch = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  check_shape(w.dim(1) == d.cin, "conv2d: channel mismatch, input " +
                                     shape_str(x.shape()) + " vs weight " +
                                     shape_str(w.shape()));
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  check_shape(d.ho >= 1 && d.wo >= 1, "conv2d: kernel larger than padded input");
  d.k = d.cin * d.kh * d.kw;
  return d;
}

void im2col(const double* img, const ConvDims& d, double* col) {
  // col is [K, Ho*Wo]
  const int64_t hw_out = d.ho * d.wo;
  for (int64_t c = 0; c < d.cin; ++c) {
    const double* plane = img + c * d.h * d.w;
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        double* row = col + ((c * d.kh + ki) * d.kw + kj) * hw_out;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) {
            for (int64_t ox = 0; ox < d.wo; ++ox) row[oy * d.wo + ox] = 0.0;
            continue;
          }
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kj;
            row[oy * d.wo + ox] =
                (ix >= 0 && ix < d.w) ? plane[iy * d.w + ix] : 0.0;
          }
        }
      }
  }
}

void col2im_accum(const double* col, const ConvDims& d, double* img) {
  const int64_t hw_out = d.ho * d.wo;
  for (int64_t c = 0; c < d.cin; ++c) {
    double* plane = img + c * d.h * d.w;
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        const double* row = col + ((c * d.kh + ki) * d.kw + kj) * hw_out;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kj;
            if (ix >= 0 && ix < d.w) plane[iy * d.w + ix] += row[oy * d.wo + ox];
          }
        }
      }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  const ConvDims d = conv_dims(x, w, stride, pad);
  const int64_t hw_out = d.ho * d.wo;
  const bool pointwise = (d.kh == 1 && d.kw == 1 && stride == 1 && pad == 0);
  std::vector<double> out(static_cast<size_t>(d.batch * d.cout * hw_out));
  std::vector<double> col;
  if (!pointwise) col.resize(static_cast<size_t>(d.k * hw_out));
  ConstMatMap mw(w.data(), d.cout, d.k);
  for (int64_t bi = 0; bi < d.batch; ++bi) {
    const double* img = x.data() + bi * d.cin * d.h * d.w;
    const double* cols = img;
    if (!pointwise) {
      im2col(img, d, col.data());
      cols = col.data();
    }
    ConstMatMap mc(cols, d.k, hw_out);
    MatMap mo(out.data() + bi * d.cout * hw_out, d.cout, hw_out);
    mo.noalias() = mw * mc;
  }
  if (b.defined()) {
    check_shape(b.numel() == d.cout, "conv2d: bias size mismatch");
    const double* pb = b.data();
    for (int64_t bi = 0; bi < d.batch; ++bi)
      for (int64_t c = 0; c < d.cout; ++c) {
        double* p = out.data() + (bi * d.cout + c) * hw_out;
        for (int64_t j = 0; j < hw_out; ++j) p[j] += pb[c];
      }
  }
  Tensor tx = x, tw = w, tb = b;
  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return Tensor::make_op(
      {d.batch, d.cout, d.ho, d.wo}, std::move(out), std::move(inputs),
      [tx, tw, tb, d, hw_out, pointwise](detail::TensorData& o) mutable {
        ConstMatMap mw(tw.data(), d.cout, d.k);
        double* gx = maybe_grad(tx);
        double* gw = maybe_grad(tw);
        std::vector<double> col, dcol;
        if (!pointwise) col.resize(static_cast<size_t>(d.k * hw_out));
        if (gx && !pointwise) dcol.resize(static_cast<size_t>(d.k * hw_out));
        for (int64_t bi = 0; bi < d.batch; ++bi) {
          ConstMatMap go(o.grad.data() + bi * d.cout * hw_out, d.cout, hw_out);
          if (gw) {
            const double* img = tx.data() + bi * d.cin * d.h * d.w;
            const double* cols = img;
            if (!pointwise) {
              im2col(img, d, col.data());
              cols = col.data();
            }
            ConstMatMap mc(cols, d.k, hw_out);
            MatMap mgw(gw, d.cout, d.k);
            mgw.noalias() += go * mc.transpose();
          }
          if (gx) {
            if (pointwise) {
              MatMap mgx(gx + bi * d.cin * d.h * d.w, d.k, hw_out);
              mgx.noalias() += mw.transpose() * go;
            } else {
              MatMap mdc(dcol.data(), d.k, hw_out);
              mdc.noalias() = mw.transpose() * go;
              col2im_accum(dcol.data(), d, gx + bi * d.cin * d.h * d.w);
            }
          }
        }
        if (tb.defined() && tb.requires_grad()) {
          double* gb = tb.grad_data();
          for (int64_t bi = 0; bi < d.batch; ++bi)
            for (int64_t c = 0; c < d.cout; ++c) {
              const double* g = o.grad.data() + (bi * d.cout + c) * hw_out;
              double acc = 0.0;
              for (int64_t j = 0; j < hw_out; ++j) acc += g[j];
              gb[c] += acc;
            }
        }
      });
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, bool training,
                    double momentum, double eps) {
  check_shape(x.ndim() == 4, "batch_norm2d expects [B,C,H,W]");
  const int64_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  check_shape(gamma.numel() == c && beta.numel() == c &&
                  running_mean.numel() == c && running_var.numel() == c,
              "batch_norm2d: channel parameter mismatch");
  const int64_t m = b * hw;
  std::vector<double> mean(static_cast<size_t>(c)), inv_std(static_cast<size_t>(c));
  const double* px = x.data();
  if (training) {
    for (int64_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (int64_t bi = 0; bi < b; ++bi) {
        const double* p = px + (bi * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) s += p[j];
      }
      mean[static_cast<size_t>(ci)] = s / static_cast<double>(m);
    }
    for (int64_t ci = 0; ci < c; ++ci) {
      double mu = mean[static_cast<size_t>(ci)], s = 0.0;
      for (int64_t bi = 0; bi < b; ++bi) {
        const double* p = px + (bi * c + ci) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          double d = p[j] - mu;
          s += d * d;
        }
      }
      double var = s / static_cast<double>(m);
      inv_std[static_cast<size_t>(ci)] = 1.0 / std::sqrt(var + eps);
      running_mean.data()[ci] = (1.0 - momentum) * running_mean.data()[ci] + momentum * mu;
      running_var.data()[ci] = (1.0 - momentum) * running_var.data()[ci] + momentum * var;
    }
  } else {
    for (int64_t ci = 0; ci < c; ++ci) {
      mean[static_cast<size_t>(ci)] = running_mean.data()[ci];
      inv_std[static_cast<size_t>(ci)] =
          1.0 / std::sqrt(running_var.data()[ci] + eps);
    }
  }
  std::vector<double> out(static_cast<size_t>(b * c * hw));
  const double* pg = gamma.data();
  const double* pbeta = beta.data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* p = px + (bi * c + ci) * hw;
      double* q = out.data() + (bi * c + ci) * hw;
      double mu = mean[static_cast<size_t>(ci)], is = inv_std[static_cast<size_t>(ci)];
      double g = pg[ci], be = pbeta[ci];
      for (int64_t j = 0; j < hw; ++j) q[j] = (p[j] - mu) * is * g + be;
    }
  Tensor tx = x, tg = gamma, tb = beta;
  return Tensor::make_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [tx, tg, tb, b, c, hw, m, training, mean = std::move(mean),
       inv_std = std::move(inv_std)](detail::TensorData& o) mutable {
        const double* px = tx.data();
        const double* pg = tg.data();
        double* gx = maybe_grad(tx);
        double* gg = maybe_grad(tg);
        double* gb = maybe_grad(tb);
        for (int64_t ci = 0; ci < c; ++ci) {
          const double mu = mean[static_cast<size_t>(ci)];
          const double is = inv_std[static_cast<size_t>(ci)];
          // Accumulate per-channel sums of dy and dy*xhat.
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t bi = 0; bi < b; ++bi) {
            const double* g = o.grad.data() + (bi * c + ci) * hw;
            const double* p = px + (bi * c + ci) * hw;
            for (int64_t j = 0; j < hw; ++j) {
              sum_dy += g[j];
              sum_dy_xhat += g[j] * (p[j] - mu) * is;
            }
          }
          if (gb) gb[ci] += sum_dy;
          if (gg) gg[ci] += sum_dy_xhat;
          if (gx) {
            const double gamma_is = pg[ci] * is;
            if (training) {
              const double inv_m = 1.0 / static_cast<double>(m);
              for (int64_t bi = 0; bi < b; ++bi) {
                const double* g = o.grad.data() + (bi * c + ci) * hw;
                const double* p = px + (bi * c + ci) * hw;
                double* q = gx + (bi * c + ci) * hw;
                for (int64_t j = 0; j < hw; ++j) {
                  double xhat = (p[j] - mu) * is;
                  q[j] += gamma_is *
                          (g[j] - inv_m * sum_dy - inv_m * xhat * sum_dy_xhat);
                }
              }
            } else {
              for (int64_t bi = 0; bi < b; ++bi) {
                const double* g = o.grad.data() + (bi * c + ci) * hw;
                double* q = gx + (bi * c + ci) * hw;
                for (int64_t j = 0; j < hw; ++j) q[j] += gamma_is * g[j];
              }
            }
          }
        }
      });
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
  check_shape(x.ndim() == 2, "l2_normalize_rows expects [B,C]");
  const int64_t b = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.values());
  std::vector<double> norms(static_cast<size_t>(b));
  for (int64_t i = 0; i < b; ++i) {
    double* p = out.data() + i * c;
    double s = 0.0;
    for (int64_t j = 0; j < c; ++j) s += p[j] * p[j];
    double n = std::max(std::sqrt(s), eps);
    norms[static_cast<size_t>(i)] = n;
    for (int64_t j = 0; j < c; ++j) p[j] /= n;
  }
  Tensor tx = x;
  std::vector<double> saved(out);
  return Tensor::make_op(
      {b, c}, std::move(out), {x},
      [tx, b, c, norms = std::move(norms), saved = std::move(saved)](
          detail::TensorData& o) mutable {
        if (double* gx = maybe_grad(tx)) {
          for (int64_t i = 0; i < b; ++i) {
            const double* g = o.grad.data() + i * c;
            const double* y = saved.data() + i * c;
            double dot = 0.0;
            for (int64_t j = 0; j < c; ++j) dot += g[j] * y[j];
            double inv_n = 1.0 / norms[static_cast<size_t>(i)];
            double* q = gx + i * c;
            for (int64_t j = 0; j < c; ++j)
              q[j] += (g[j] - y[j] * dot) * inv_n;
          }
        }
      });
}

Tensor cross_entropy_mean(const Tensor& logits,
                          const std::vector<int64_t>& labels) {
  check_shape(logits.ndim() == 2, "cross_entropy_mean expects [B,I]");
  const int64_t b = logits.dim(0), k = logits.dim(1);
  check_shape(static_cast<int64_t>(labels.size()) == b,
              "cross_entropy_mean: label count mismatch");
  for (int64_t l : labels)
    check_shape(l >= 0 && l < k, "cross_entropy_mean: label " +
                                     std::to_string(l) + " out of range [0," +
                                     std::to_string(k) + ")");
  const double* pz = logits.data();
  std::vector<double> softmax(static_cast<size_t>(b * k));
  double loss = 0.0;
  for (int64_t i = 0; i < b; ++i) {
    const double* z = pz + i * k;
    double mx = z[0];
    for (int64_t j = 1; j < k; ++j) mx = std::max(mx, z[j]);
    double se = 0.0;
    for (int64_t j = 0; j < k; ++j) se += std::exp(z[j] - mx);
    double lse = mx + std::log(se);
    loss += lse - z[labels[static_cast<size_t>(i)]];
    for (int64_t j = 0; j < k; ++j)
      softmax[static_cast<size_t>(i * k + j)] = std::exp(z[j] - lse);
  }
  loss /= static_cast<double>(b);
  Tensor tz = logits;
  return Tensor::make_op(
      {1}, {loss}, {logits},
      [tz, b, k, labels, softmax = std::move(softmax)](detail::TensorData& o) mutable {
        if (double* gz = maybe_grad(tz)) {
          const double g = o.grad[0] / static_cast<double>(b);
          for (int64_t i = 0; i < b; ++i) {
            for (int64_t j = 0; j < k; ++j)
              gz[i * k + j] += g * softmax[static_cast<size_t>(i * k + j)];
            gz[i * k + labels[static_cast<size_t>(i)]] -= g;
          }
        }
      });
}

Tensor bce_with_logits_mean(const Tensor& logits,
                            const std::vector<double>& targets) {
  const int64_t j = logits.numel();
  check_shape(static_cast<int64_t>(targets.size()) == j,
              "bce_with_logits_mean: target count mismatch");
  const double* pz = logits.data();
  double loss = 0.0;
  for (int64_t i = 0; i < j; ++i) {
    double z = pz[i], y = targets[static_cast<size_t>(i)];
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
  }
  loss /= static_cast<double>(j);
  Tensor tz = logits;
  return Tensor::make_op({1}, {loss}, {logits},
                         [tz, j, targets](detail::TensorData& o) mutable {
                           if (double* gz = maybe_grad(tz)) {
                             const double* pz = tz.data();
                             const double g = o.grad[0] / static_cast<double>(j);
                             for (int64_t i = 0; i < j; ++i) {
                               double s = 1.0 / (1.0 + std::exp(-pz[i]));
                               gz[i] += g * (s - targets[static_cast<size_t>(i)]);
                             }
                           }
                         });
}

}  // namespace grl

#include <cmath>
#include <numeric>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"
#include "model/gce.hpp"
#include "testutil.hpp"

using namespace grl;

namespace {

// Straight-line reimplementation of the correlation head with explicit
// loops: project descriptor, broadcast, concat (global half first), 1x1
// conv, BN (batch or running statistics), ReLU, 1x1 conv, sigmoid.
std::vector<double> corr_oracle(const GceModule& m, const Tensor& stack,
                                const Tensor& g, bool training) {
  const int64_t n = stack.dim(0), t = stack.dim(1), c = stack.dim(2),
                h = stack.dim(3), w = stack.dim(4);
  const int64_t cr = m.hidden_channels();
  Tensor pw = testutil::find_param(m, "proj/weight");
  Tensor pb = testutil::find_param(m, "proj/bias");
  Tensor c1w = testutil::find_param(m, "conv1/weight");
  Tensor c1b = testutil::find_param(m, "conv1/bias");
  Tensor gamma = testutil::find_param(m, "bn/gamma");
  Tensor beta = testutil::find_param(m, "bn/beta");
  Tensor rmean = testutil::find_buffer(m, "bn/running_mean");
  Tensor rvar = testutil::find_buffer(m, "bn/running_var");
  Tensor c2w = testutil::find_param(m, "conv2/weight");
  Tensor c2b = testutil::find_param(m, "conv2/bias");

  // Projected descriptor per video.
  std::vector<double> guide(static_cast<size_t>(n * c));
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci) {
      double acc = pb.data()[ci];
      for (int64_t k = 0; k < c; ++k)
        acc += pw.data()[ci * c + k] * g.data()[ni * c + k];
      guide[static_cast<size_t>(ni * c + ci)] = acc;
    }
  // Hidden pre-normalization activations for every frame pixel.
  std::vector<double> hidden(static_cast<size_t>(n * t * cr * h * w));
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t r = 0; r < cr; ++r)
        for (int64_t hi = 0; hi < h; ++hi)
          for (int64_t wi = 0; wi < w; ++wi) {
            double acc = c1b.data()[r];
            for (int64_t ci = 0; ci < 2 * c; ++ci) {
              double v = ci < c
                             ? guide[static_cast<size_t>(ni * c + ci)]
                             : stack.data()[(((ni * t + ti) * c + ci - c) * h + hi) * w + wi];
              acc += c1w.data()[r * 2 * c + ci] * v;
            }
            hidden[static_cast<size_t>((((ni * t + ti) * cr + r) * h + hi) * w + wi)] = acc;
          }
  // Normalization statistics per hidden channel.
  std::vector<double> mean(static_cast<size_t>(cr)), var(static_cast<size_t>(cr));
  const int64_t samples = n * t * h * w;
  for (int64_t r = 0; r < cr; ++r) {
    if (training) {
      double s = 0.0;
      for (int64_t b = 0; b < n * t; ++b)
        for (int64_t i = 0; i < h * w; ++i)
          s += hidden[static_cast<size_t>((b * cr + r) * h * w + i)];
      mean[static_cast<size_t>(r)] = s / samples;
      double v = 0.0;
      for (int64_t b = 0; b < n * t; ++b)
        for (int64_t i = 0; i < h * w; ++i) {
          double d = hidden[static_cast<size_t>((b * cr + r) * h * w + i)] -
                     mean[static_cast<size_t>(r)];
          v += d * d;
        }
      var[static_cast<size_t>(r)] = v / samples;
    } else {
      mean[static_cast<size_t>(r)] = rmean.data()[r];
      var[static_cast<size_t>(r)] = rvar.data()[r];
    }
  }
  // Normalize, rectify, project to one channel, squash.
  std::vector<double> out(static_cast<size_t>(n * t * h * w));
  for (int64_t b = 0; b < n * t; ++b)
    for (int64_t i = 0; i < h * w; ++i) {
      double acc = c2b.data()[0];
      for (int64_t r = 0; r < cr; ++r) {
        double x = hidden[static_cast<size_t>((b * cr + r) * h * w + i)];
        double xh = (x - mean[static_cast<size_t>(r)]) /
                    std::sqrt(var[static_cast<size_t>(r)] + 1e-5);
        double act = xh * gamma.data()[r] + beta.data()[r];
        if (act > 0.0) acc += c2w.data()[r] * act;
      }
      out[static_cast<size_t>(b * h * w + i)] = 1.0 / (1.0 + std::exp(-acc));
    }
  return out;
}

}  // namespace

TEST_CASE("global descriptor is the exact spatio-temporal mean") {
  Tensor tiny = Tensor::from_vector({1, 2, 1, 1, 1}, {2.0, 4.0});
  CHECK(compute_global_descriptor(tiny).item() == doctest::Approx(3.0));

  Tensor ones = Tensor::full({2, 3, 4, 2, 2}, 1.0);
  Tensor g1 = compute_global_descriptor(ones);
  for (int64_t i = 0; i < g1.numel(); ++i)
    CHECK(g1.data()[i] == doctest::Approx(1.0));

  Rng rng(17);
  Tensor x = Tensor::rand_uniform({1, 3, 2, 2, 2}, rng, -1.0, 1.0);
  Tensor g = compute_global_descriptor(x);
  for (int64_t c = 0; c < 2; ++c) {
    double s = 0.0;
    for (int64_t t = 0; t < 3; ++t)
      for (int64_t i = 0; i < 4; ++i)
        s += x.data()[(t * 2 + c) * 4 + i];
    CHECK(g.data()[c] == doctest::Approx(s / 12.0).epsilon(1e-12));
  }
}

TEST_CASE("zero-parameter correlation head emits exactly one half") {
  Rng rng(7);
  GceModule m(rng, 4);
  testutil::zero_params(m);
  Tensor stack = Tensor::rand_uniform({2, 3, 4, 2, 2}, rng, -2.0, 2.0);
  Tensor g = compute_global_descriptor(stack);
  for (bool training : {true, false}) {
    m.set_training(training);
    Tensor r = m.estimate_correlation(stack, g);
    CHECK(r.shape() == Shape{2, 3, 1, 2, 2});
    for (int64_t i = 0; i < r.numel(); ++i) CHECK(r.data()[i] == 0.5);
  }
}

TEST_CASE("correlation output lies strictly inside (0,1)") {
  Rng rng(8);
  GceModule m(rng, 8);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor stack = Tensor::rand_uniform({1, 4, 8, 3, 2}, rng, -5.0, 5.0);
    Tensor r = m.estimate_correlation(stack, compute_global_descriptor(stack));
    for (int64_t i = 0; i < r.numel(); ++i) {
      CHECK(r.data()[i] > 0.0);
      CHECK(r.data()[i] < 1.0);
    }
  }
}

TEST_CASE("correlation head matches the loop oracle in both modes") {
  Rng rng(9);
  GceModule m(rng, 4);
  Tensor stack = Tensor::rand_uniform({2, 3, 4, 2, 2}, rng, -1.5, 1.5);
  Tensor g = compute_global_descriptor(stack);

  m.set_training(true);
  Tensor r_train = m.estimate_correlation(stack, g);
  std::vector<double> oracle_train = corr_oracle(m, stack, g, true);
  for (int64_t i = 0; i < r_train.numel(); ++i)
    CHECK(r_train.data()[i] == doctest::Approx(oracle_train[static_cast<size_t>(i)]).epsilon(1e-10));

  // The training call above moved the running statistics; eval must use them.
  m.set_training(false);
  Tensor r_eval = m.estimate_correlation(stack, g);
  std::vector<double> oracle_eval = corr_oracle(m, stack, g, false);
  for (int64_t i = 0; i < r_eval.numel(); ++i)
    CHECK(r_eval.data()[i] == doctest::Approx(oracle_eval[static_cast<size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("correlation head rejects descriptor and stack mismatches") {
  Rng rng(10);
  GceModule m(rng, 4);
  Tensor stack = Tensor::zeros({1, 2, 4, 2, 2});
  CHECK_THROWS_AS(m.estimate_correlation(stack, Tensor::zeros({1, 3})), ShapeError);
  CHECK_THROWS_AS(m.estimate_correlation(stack, Tensor::zeros({2, 4})), ShapeError);
}

TEST_CASE("disentanglement splits and reconstructs") {
  Tensor stack = Tensor::full({1, 1, 1, 1, 1}, 2.0);
  Tensor corr = Tensor::full({1, 1, 1, 1, 1}, 0.25);
  DisentangledFeatures d = disentangle(stack, corr);
  CHECK(d.high.item() == doctest::Approx(0.5));
  CHECK(d.low.item() == doctest::Approx(1.5));

  Rng rng(11);
  Tensor x = Tensor::rand_uniform({2, 3, 4, 2, 2}, rng, -2.0, 2.0);
  Tensor half = Tensor::full({2, 3, 1, 2, 2}, 0.5);
  DisentangledFeatures dh = disentangle(x, half);
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(dh.high.data()[i] == doctest::Approx(x.data()[i] / 2));
    CHECK(dh.high.data()[i] == dh.low.data()[i]);
  }

  Tensor r = Tensor::rand_uniform({2, 3, 1, 2, 2}, rng, 0.01, 0.99);
  DisentangledFeatures dr = disentangle(x, r);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(std::fabs(dr.high.data()[i] + dr.low.data()[i] - x.data()[i]) < 1e-6);
}

TEST_CASE("frame permutation fixes the descriptor and permutes the maps") {
  Rng rng(12);
  GceModule m(rng, 4);
  m.set_training(false);
  const int64_t t_len = 4;
  Tensor x = Tensor::rand_uniform({1, t_len, 4, 2, 2}, rng, -1.0, 1.0);
  const std::vector<int64_t> perm = {2, 0, 3, 1};
  std::vector<double> pv(x.values().size());
  const int64_t frame = 4 * 2 * 2;
  for (int64_t t = 0; t < t_len; ++t)
    std::copy(x.data() + perm[static_cast<size_t>(t)] * frame,
              x.data() + (perm[static_cast<size_t>(t)] + 1) * frame,
              pv.begin() + t * frame);
  Tensor xp = Tensor::from_vector(x.shape(), std::move(pv));

  Tensor g = compute_global_descriptor(x);
  Tensor gp = compute_global_descriptor(xp);
  for (int64_t i = 0; i < g.numel(); ++i)
    CHECK(g.data()[i] == doctest::Approx(gp.data()[i]).epsilon(1e-12));

  Tensor r = m.estimate_correlation(x, g);
  Tensor rp = m.estimate_correlation(xp, gp);
  const int64_t map = 2 * 2;
  for (int64_t t = 0; t < t_len; ++t)
    for (int64_t i = 0; i < map; ++i)
      CHECK(rp.data()[t * map + i] ==
            doctest::Approx(r.data()[perm[static_cast<size_t>(t)] * map + i]).epsilon(1e-10));
}

TEST_CASE("gradients through correlation and disentanglement match finite differences") {
  Rng rng(13);
  GceModule m(rng, 4);
  Tensor stack = Tensor::rand_uniform({1, 2, 4, 2, 2}, rng, -1.0, 1.0);
  std::vector<Tensor> leaves = m.parameters();
  leaves.push_back(stack);
  double err = testutil::max_grad_rel_error(
      [&] {
        Tensor r = m.estimate_correlation(stack, compute_global_descriptor(stack));
        DisentangledFeatures d = disentangle(stack, r);
        return add(sum_all(square(d.high)),
                   mul_scalar(sum_all(square(d.low)), 0.7));
      },
      leaves);
  CHECK(err < 1e-4);
}

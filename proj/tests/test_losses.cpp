#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "model/losses.hpp"
#include "testutil.hpp"

using namespace grl;

TEST_CASE("oim loss reproduces the hand-computed softmax values") {
  OimTable table(2, 2, 0.5, 1.0);
  table.entries().data()[0] = 1.0;  // row 0 = e1
  table.entries().data()[3] = 1.0;  // row 1 = e2
  Tensor f = Tensor::from_vector({1, 2}, {1.0, 0.0});
  double loss = table.loss(f, {0}).item();
  CHECK(loss == doctest::Approx(0.31326).epsilon(1e-5));

  // Feature orthogonal to every row: uniform logits, loss = log I.
  OimTable t3(3, 4, 0.5, 1.0);
  t3.entries().data()[0 * 4 + 0] = 1.0;
  t3.entries().data()[1 * 4 + 1] = 1.0;
  t3.entries().data()[2 * 4 + 2] = 1.0;
  Tensor orth = Tensor::from_vector({1, 4}, {0, 0, 0, 1});
  CHECK(t3.loss(orth, {1}).item() == doctest::Approx(std::log(3.0)).epsilon(1e-10));

  // Mean over a batch equals the mean of per-sample losses.
  Tensor pair = Tensor::from_vector({2, 2}, {1.0, 0.0, 0.0, 1.0});
  double l0 = table.loss(Tensor::from_vector({1, 2}, {1.0, 0.0}), {0}).item();
  double l1 = table.loss(Tensor::from_vector({1, 2}, {0.0, 1.0}), {1}).item();
  CHECK(table.loss(pair, {0, 1}).item() == doctest::Approx((l0 + l1) / 2));
}

TEST_CASE("oim loss sends gradients to features, never the table") {
  OimTable table(3, 4, 0.5, 1.0 / 30.0);
  Rng rng(40);
  for (int64_t i = 0; i < 3; ++i) {
    // Unit-norm random rows.
    double n = 0.0;
    for (int64_t j = 0; j < 4; ++j) {
      table.entries().data()[i * 4 + j] = rng.normal();
      n += table.entries().data()[i * 4 + j] * table.entries().data()[i * 4 + j];
    }
    for (int64_t j = 0; j < 4; ++j) table.entries().data()[i * 4 + j] /= std::sqrt(n);
  }
  Tensor f = Tensor::rand_uniform({2, 4}, rng, -1.0, 1.0);
  f.set_requires_grad(true);
  Tensor loss = table.loss(f, {0, 2});
  loss.backward();
  CHECK(f.has_grad());
  CHECK_FALSE(table.entries().requires_grad());
  CHECK_FALSE(table.entries().has_grad());

  Tensor f2 = Tensor::rand_uniform({2, 4}, rng, -1.0, 1.0);
  double err = testutil::max_grad_rel_error(
      [&] { return table.loss(f2, {1, 2}); }, {f2});
  CHECK(err < 1e-4);
}

TEST_CASE("oim loss rejects out-of-range labels") {
  OimTable table(2, 2);
  Tensor f = Tensor::from_vector({1, 2}, {1.0, 0.0});
  CHECK_THROWS_AS(table.loss(f, {2}), ShapeError);
  CHECK_THROWS_AS(table.loss(f, {-1}), ShapeError);
}

TEST_CASE("oim update follows the momentum rule") {
  OimTable table(2, 2, 0.5, 1.0);
  table.entries().data()[0] = 1.0;  // w = [1, 0]
  table.update(Tensor::from_vector({1, 2}, {0.0, 1.0}), {0});
  const double r = std::sqrt(2.0) / 2.0;
  CHECK(table.entries().data()[0] == doctest::Approx(r).epsilon(1e-5));
  CHECK(table.entries().data()[1] == doctest::Approx(r).epsilon(1e-5));
  // Untouched row stays zero.
  CHECK(table.entries().data()[2] == 0.0);
  CHECK(table.entries().data()[3] == 0.0);

  OimTable frozen(2, 2, 0.0, 1.0);
  frozen.entries().data()[0] = 1.0;
  frozen.update(Tensor::from_vector({1, 2}, {0.0, 1.0}), {0});
  CHECK(frozen.entries().data()[0] == 1.0);
  CHECK(frozen.entries().data()[1] == 0.0);

  OimTable replace(2, 2, 1.0, 1.0);
  replace.entries().data()[0] = 1.0;
  replace.update(Tensor::from_vector({1, 2}, {0.0, 2.0}), {0});
  CHECK(replace.entries().data()[0] == doctest::Approx(0.0));
  CHECK(replace.entries().data()[1] == doctest::Approx(1.0));
}

TEST_CASE("oim update skips zero features and keeps rows unit-norm") {
  OimTable table(4, 3);
  table.update(Tensor::zeros({1, 3}), {1});
  CHECK(table.skipped_samples() == 1);
  for (int64_t j = 0; j < 3; ++j) CHECK(table.entries().data()[1 * 3 + j] == 0.0);

  Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    Tensor f = Tensor::randn({2, 3}, rng);
    table.update(f, {rng.uniform_int(4), rng.uniform_int(4)});
  }
  for (int64_t i = 0; i < 4; ++i) {
    double n = 0.0;
    for (int64_t j = 0; j < 3; ++j) {
      double v = table.entries().data()[i * 3 + j];
      n += v * v;
    }
    CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-6);
  }
}

TEST_CASE("verification loss matches hand-computed binary cross entropy") {
  Rng rng(42);
  SimilarityHead head(rng, 1);
  // Zeroed head: similarity is exactly one half everywhere.
  testutil::zero_params(head);
  Tensor p = Tensor::from_vector({1, 1}, {0.3});
  Tensor g = Tensor::from_vector({1, 1}, {0.9});
  CHECK(verification_loss(p, g, {1.0}, head).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Calibrated head: similarities 0.8 and 0.3 for the two pairs.
  const double bias = std::log(0.3 / 0.7);
  testutil::fill(testutil::find_param(head, "fc/weight"), 1.0);
  testutil::fill(testutil::find_param(head, "fc/bias"), bias);
  const double d1 = std::log(0.8 / 0.2) - bias;  // |p-g| giving logit ln 4
  Tensor probe = Tensor::from_vector({2, 1}, {d1, 0.0});
  Tensor gallery = Tensor::from_vector({2, 1}, {0.0, 0.0});
  double loss = verification_loss(probe, gallery, {1.0, 0.0}, head).item();
  CHECK(loss == doctest::Approx((-std::log(0.8) - std::log(0.7)) / 2).epsilon(1e-9));
  CHECK(loss == doctest::Approx(0.28990).epsilon(1e-4));

  // Confident correct prediction drives the loss toward zero.
  testutil::fill(testutil::find_param(head, "fc/bias"), 0.0);
  Tensor far = Tensor::from_vector({1, 1}, {20.0});
  Tensor zero = Tensor::from_vector({1, 1}, {0.0});
  CHECK(verification_loss(far, zero, {1.0}, head).item() < 1e-6);
}

TEST_CASE("similarity head is symmetric and bounded") {
  Rng rng(43);
  SimilarityHead head(rng, 6);
  Tensor a = Tensor::rand_uniform({4, 6}, rng, -2.0, 2.0);
  Tensor b = Tensor::rand_uniform({4, 6}, rng, -2.0, 2.0);
  Tensor sab = head.similarity(a, b);
  Tensor sba = head.similarity(b, a);
  CHECK(sab.values() == sba.values());
  for (int64_t i = 0; i < sab.numel(); ++i) {
    CHECK(sab.data()[i] > 0.0);
    CHECK(sab.data()[i] < 1.0);
  }
  std::vector<double> y = {1.0, 0.0, 1.0, 0.0};
  CHECK(verification_loss(a, b, y, head).item() ==
        verification_loss(b, a, y, head).item());
}

TEST_CASE("verification loss gradient matches finite differences") {
  Rng rng(44);
  SimilarityHead head(rng, 4);
  Tensor p = Tensor::rand_uniform({3, 4}, rng, -1.0, 1.0);
  Tensor g = Tensor::rand_uniform({3, 4}, rng, -1.0, 1.0);
  std::vector<Tensor> leaves = head.parameters();
  leaves.push_back(p);
  leaves.push_back(g);
  double err = testutil::max_grad_rel_error(
      [&] { return verification_loss(p, g, {1.0, 0.0, 1.0}, head); }, leaves);
  CHECK(err < 1e-4);
}

TEST_CASE("total loss combines weighted components and validates weights") {
  Tensor lf = Tensor::scalar(0.3);
  Tensor lv = Tensor::scalar(0.5);
  Tensor lveri = Tensor::scalar(0.7);
  CHECK(total_loss(lf, lv, lveri, {1, 1, 1}).item() == doctest::Approx(1.5));
  CHECK(total_loss(lf, lv, lveri, {2, 0, 0}).item() == doctest::Approx(0.6));
  CHECK(total_loss(Tensor(), lv, Tensor(), {1, 1, 1}).item() == doctest::Approx(0.5));
  CHECK_THROWS_AS(total_loss(lf, lv, lveri, {0, 0, 0}), ConfigError);
  CHECK_THROWS_AS(total_loss(lf, lv, lveri, {-1, 1, 1}), ConfigError);
}

TEST_CASE("logit shifts leave the softmax loss unchanged") {
  Rng rng(45);
  Tensor z = Tensor::rand_uniform({3, 5}, rng, -2.0, 2.0);
  std::vector<int64_t> labels = {0, 4, 2};
  double base = cross_entropy_mean(z, labels).item();
  Tensor shifted = add_scalar(z, 13.75);
  CHECK(std::fabs(cross_entropy_mean(shifted, labels).item() - base) < 1e-8);
}

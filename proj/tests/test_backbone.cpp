#include "core/rng.hpp"
#include "doctest.h"
#include "model/backbone.hpp"
#include "testutil.hpp"

using namespace grl;

TEST_CASE("backbone output geometry follows the stride-16 layout") {
  Rng rng(1);
  DeskBackbone net(rng);
  CHECK(net.out_channels() == 128);
  Tensor big = Tensor::zeros({1, 3, 256, 128});
  Tensor y = net.forward(big);
  CHECK(y.shape() == Shape{1, 128, 16, 8});
  Tensor small = Tensor::zeros({2, 3, 64, 32});
  CHECK(net.forward(small).shape() == Shape{2, 128, 4, 2});
}

TEST_CASE("backbone rejects inputs that are not 3-channel images") {
  Rng rng(1);
  DeskBackbone net(rng, {8, 8, 8, 8});
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 1, 16, 16})), ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({3, 16, 16})), ShapeError);
  CHECK_THROWS_AS(DeskBackbone(rng, {8, 8, 8}), ShapeError);
}

TEST_CASE("zero input with a zeroed output projection yields zero maps") {
  Rng rng(2);
  DeskBackbone net(rng, {8, 8, 8, 8});
  testutil::fill(testutil::find_param(net, "proj/weight"), 0.0);
  testutil::fill(testutil::find_param(net, "proj/bias"), 0.0);
  Tensor y = net.forward(Tensor::zeros({1, 3, 32, 16}));
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("backbone evaluation mode is bitwise deterministic") {
  Rng rng(3);
  DeskBackbone net(rng, {8, 8, 16, 16});
  net.set_training(false);
  Tensor x = Tensor::rand_uniform({2, 3, 32, 16}, rng, -1.0, 1.0);
  Tensor a = net.forward(x);
  Tensor b = net.forward(x);
  CHECK(a.values() == b.values());
}

TEST_CASE("identical frames in a sequence produce identical feature maps") {
  Rng rng(4);
  DeskBackbone net(rng, {8, 8, 16, 16});
  net.set_training(false);
  Tensor frame = Tensor::rand_uniform({1, 1, 3, 32, 16}, rng, -1.0, 1.0);
  std::vector<double> two(frame.values());
  two.insert(two.end(), frame.values().begin(), frame.values().end());
  // [1,2,3,32,16] holding the same frame twice.
  Tensor seq = Tensor::from_vector({1, 2, 3, 32, 16}, std::move(two));
  Tensor maps = extract_features(net, seq);
  const int64_t half = maps.numel() / 2;
  for (int64_t i = 0; i < half; ++i)
    CHECK(maps.data()[i] == maps.data()[half + i]);
}

TEST_CASE("backbone input gradient matches finite differences on a small probe") {
  Rng rng(5);
  DeskBackbone net(rng, {4, 4, 4, 4});
  Tensor x = Tensor::rand_uniform({2, 3, 4, 4}, rng, -1.0, 1.0);
  double err = testutil::max_grad_rel_error(
      [&] { return sum_all(square(net.forward(x))); }, {x});
  CHECK(err < 1e-4);
}

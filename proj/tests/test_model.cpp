#include <algorithm>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "model/grl_model.hpp"
#include "testutil.hpp"

using namespace grl;

namespace {

ModelOptions small_options() {
  ModelOptions o;
  o.backbone_widths = {4, 4, 8, 8};
  return o;
}

bool any_param_starts_with(const Module& m, const std::string& prefix) {
  for (const auto& p : m.named_parameters())
    if (p.name.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST_CASE("full model exposes every architectural parameter subtree") {
  Rng rng(50);
  GrlModel m(rng, small_options());
  CHECK(any_param_starts_with(m, "backbone/"));
  CHECK(any_param_starts_with(m, "gce/"));
  CHECK(any_param_starts_with(m, "trl/fwd/"));
  CHECK(any_param_starts_with(m, "trl/bwd/"));
  CHECK(any_param_starts_with(m, "trl/integrate/"));
  CHECK(any_param_starts_with(m, "veri/"));
}

TEST_CASE("baseline model reduces to the backbone alone") {
  Rng rng(51);
  ModelOptions o = small_options();
  o.gce = false;
  o.trl = false;
  GrlModel m(rng, o);
  for (const auto& p : m.named_parameters())
    CHECK(p.name.rfind("backbone/", 0) == 0);
  CHECK(m.embedding_dim() == 8);
}

TEST_CASE("recurrence without the correlation module is rejected") {
  Rng rng(52);
  ModelOptions o = small_options();
  o.gce = false;
  o.trl = true;
  CHECK_THROWS_AS(GrlModel(rng, o), ConfigError);
}

TEST_CASE("tied weights drop the second chain's parameters") {
  Rng rng(53);
  ModelOptions o = small_options();
  GrlModel untied(rng, o);
  Rng rng2(53);
  o.trl_opts.tied_weights = true;
  GrlModel tied(rng2, o);
  CHECK_FALSE(any_param_starts_with(tied, "trl/bwd/"));
  CHECK(tied.parameter_count() < untied.parameter_count());
}

TEST_CASE("forward emits consistently shaped streams per configuration") {
  Rng rng(54);
  Tensor seq = Tensor::rand_uniform({2, 3, 3, 32, 16}, rng, -1.0, 1.0);

  GrlModel full(rng, small_options());
  GrlModel::ForwardResult r = full.forward(seq);
  CHECK(r.frame_vectors.shape() == Shape{2, 3, 8});
  CHECK(r.video_vector.shape() == Shape{2, 8});
  CHECK(r.joint.shape() == Shape{2, 16});

  ModelOptions no_trl = small_options();
  no_trl.trl = false;
  GrlModel mid(rng, no_trl);
  GrlModel::ForwardResult rm = mid.forward(seq);
  CHECK(rm.frame_vectors.shape() == Shape{2, 3, 8});
  CHECK(rm.joint.shape() == Shape{2, 16});

  ModelOptions base = small_options();
  base.gce = false;
  base.trl = false;
  GrlModel b(rng, base);
  GrlModel::ForwardResult rb = b.forward(seq);
  CHECK_FALSE(rb.frame_vectors.defined());
  CHECK(rb.video_vector.shape() == Shape{2, 8});
  CHECK(rb.joint.shape() == Shape{2, 8});
}

TEST_CASE("evaluation-mode forward is bitwise repeatable") {
  Rng rng(55);
  GrlModel m(rng, small_options());
  m.set_training(false);
  Tensor seq = Tensor::rand_uniform({1, 2, 3, 32, 16}, rng, -1.0, 1.0);
  NoGradGuard guard;
  Tensor a = m.forward(seq).joint;
  Tensor b = m.forward(seq).joint;
  CHECK(a.values() == b.values());
}

TEST_CASE("activation export carries maps for every frame") {
  Rng rng(56);
  GrlModel m(rng, small_options());
  m.set_training(false);
  NoGradGuard guard;
  Tensor seq = Tensor::rand_uniform({1, 4, 3, 32, 16}, rng, -1.0, 1.0);
  GrlModel::Activations acts = m.activations(seq);
  CHECK(acts.correlation.shape() == Shape{1, 4, 1, 2, 1});
  CHECK(acts.memory_fwd.size() == 4);
  CHECK(acts.memory_bwd.size() == 4);
  for (const Tensor& t : acts.memory_fwd) CHECK(t.shape() == Shape{1, 8, 2, 1});

  ModelOptions base = small_options();
  base.gce = false;
  base.trl = false;
  GrlModel bm(rng, base);
  CHECK_THROWS_AS(bm.activations(seq), ConfigError);
}

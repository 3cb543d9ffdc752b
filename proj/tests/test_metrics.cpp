#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "metrics/metrics.hpp"
#include "testutil.hpp"

using namespace grl;

namespace {

// Straight-line reference evaluation, kept independent of the library code.
struct OracleResult {
  std::vector<double> cmc;
  double map = 0.0;
  int64_t evaluated = 0;
};

OracleResult oracle_eval(const std::vector<std::vector<double>>& dist,
                         const std::vector<InstanceMeta>& qm,
                         const std::vector<InstanceMeta>& gm, int64_t max_rank) {
  OracleResult out;
  out.cmc.assign(max_rank, 0.0);
  double ap_sum = 0.0;
  for (size_t qi = 0; qi < qm.size(); ++qi) {
    std::vector<std::pair<double, int64_t>> ranked;
    int64_t n_pos = 0;
    for (size_t gi = 0; gi < gm.size(); ++gi) {
      if (gm[gi].identity == qm[qi].identity && gm[gi].camera == qm[qi].camera) continue;
      ranked.push_back({dist[qi][gi], static_cast<int64_t>(gi)});
      if (gm[gi].identity == qm[qi].identity) ++n_pos;
    }
    if (n_pos == 0) continue;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    int64_t seen = 0;
    int64_t first = -1;
    double ap = 0.0;
    for (size_t pos = 0; pos < ranked.size(); ++pos) {
      if (gm[ranked[pos].second].identity != qm[qi].identity) continue;
      ++seen;
      if (first < 0) first = static_cast<int64_t>(pos);
      ap += static_cast<double>(seen) / static_cast<double>(pos + 1);
    }
    ap /= static_cast<double>(n_pos);
    ap_sum += ap;
    for (int64_t k = first; k < max_rank; ++k) out.cmc[k] += 1.0;
    ++out.evaluated;
  }
  for (double& v : out.cmc) v /= static_cast<double>(out.evaluated);
  out.map = ap_sum / static_cast<double>(out.evaluated);
  return out;
}

}  // namespace

TEST_CASE("pairwise distances match hand values") {
  Tensor q = Tensor::from_vector({1, 2}, {1.0, 0.0});
  Tensor g = Tensor::from_vector({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const DistanceMatrix d = pairwise_distances(q, g);
  CHECK(d.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d.at(0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  Tensor bad = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(pairwise_distances(q, bad), ShapeError);
}

TEST_CASE("average precision hand case: single positive at rank two") {
  DistanceMatrix d;
  d.queries = 1;
  d.gallery = 3;
  d.values = {0.1, 0.2, 0.3};
  const std::vector<InstanceMeta> qm = {{1, 0}};
  const std::vector<InstanceMeta> gm = {{2, 1}, {1, 1}, {3, 1}};
  const EvalResult r = evaluate_ranking(d, qm, gm, 3);
  REQUIRE(r.per_query_ap.size() == 1);
  CHECK(std::fabs(r.per_query_ap[0] - 0.5) < 1e-9);
  CHECK(std::fabs(r.map - 0.5) < 1e-9);
  CHECK(r.cmc[0] == 0.0);
  CHECK(r.cmc[1] == 1.0);
  CHECK(r.cmc[2] == 1.0);
}

TEST_CASE("gallery entries sharing identity and camera are excluded") {
  DistanceMatrix d;
  d.queries = 1;
  d.gallery = 3;
  d.values = {0.01, 0.5, 0.3};
  const std::vector<InstanceMeta> qm = {{1, 0}};
  // The nearest entry is the query's own camera: it must not count as a hit.
  const std::vector<InstanceMeta> gm = {{1, 0}, {1, 1}, {2, 1}};
  const EvalResult r = evaluate_ranking(d, qm, gm, 2);
  CHECK(r.cmc[0] == 0.0);
  CHECK(r.cmc[1] == 1.0);
  CHECK(std::fabs(r.map - 0.5) < 1e-12);
}

TEST_CASE("ties rank by gallery order") {
  DistanceMatrix d;
  d.queries = 1;
  d.gallery = 2;
  d.values = {0.5, 0.5};
  const std::vector<InstanceMeta> qm = {{1, 0}};
  const std::vector<InstanceMeta> neg_first = {{2, 1}, {1, 1}};
  CHECK(evaluate_ranking(d, qm, neg_first, 2).cmc[0] == 0.0);
  const std::vector<InstanceMeta> pos_first = {{1, 1}, {2, 1}};
  CHECK(evaluate_ranking(d, qm, pos_first, 2).cmc[0] == 1.0);
}

TEST_CASE("queries without a valid positive are dropped") {
  DistanceMatrix d;
  d.queries = 2;
  d.gallery = 2;
  d.values = {0.1, 0.2, 0.3, 0.4};
  const std::vector<InstanceMeta> qm = {{1, 0}, {9, 0}};  // identity 9 never matches
  const std::vector<InstanceMeta> gm = {{1, 1}, {2, 1}};
  const EvalResult r = evaluate_ranking(d, qm, gm, 2);
  CHECK(r.queries_evaluated == 1);
  CHECK(r.queries_dropped == 1);
  CHECK(r.cmc[0] == 1.0);

  const std::vector<InstanceMeta> qm_bad = {{8, 0}, {9, 0}};
  CHECK_THROWS_AS(evaluate_ranking(d, qm_bad, gm, 2), DataError);
}

TEST_CASE("evaluation rejects degenerate inputs") {
  DistanceMatrix d;
  d.queries = 1;
  d.gallery = 1;
  d.values = {0.5};
  const std::vector<InstanceMeta> qm = {{1, 0}};
  const std::vector<InstanceMeta> gm = {{1, 1}};
  CHECK_THROWS_AS(evaluate_ranking(d, qm, gm, 0), ConfigError);
  CHECK_THROWS_AS(evaluate_ranking(d, {}, gm, 2), ShapeError);
  DistanceMatrix empty;
  CHECK_THROWS_AS(evaluate_ranking(empty, {}, {}, 2), DataError);
}

TEST_CASE("ranking agrees with the brute-force reference on random instances") {
  Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const int64_t nq = 1 + rng.uniform_int(10);
    const int64_t ng = 2 + rng.uniform_int(19);
    const int64_t ids = 2 + rng.uniform_int(4);
    const int64_t cams = 2 + rng.uniform_int(2);
    std::vector<InstanceMeta> qm(nq), gm(ng);
    for (auto& m : qm) m = {rng.uniform_int(ids), rng.uniform_int(cams)};
    for (auto& m : gm) m = {rng.uniform_int(ids), rng.uniform_int(cams)};

    DistanceMatrix d;
    d.queries = nq;
    d.gallery = ng;
    d.values.resize(nq * ng);
    std::vector<std::vector<double>> dist(nq, std::vector<double>(ng));
    for (int64_t i = 0; i < nq; ++i) {
      for (int64_t j = 0; j < ng; ++j) {
        const double v = rng.uniform();  // continuous draws: ties have measure zero
        d.values[i * ng + j] = v;
        dist[i][j] = v;
      }
    }

    const int64_t max_rank = 1 + rng.uniform_int(ng);
    const OracleResult expect = oracle_eval(dist, qm, gm, max_rank);
    if (expect.evaluated == 0) {
      CHECK_THROWS_AS(evaluate_ranking(d, qm, gm, max_rank), DataError);
      continue;
    }
    const EvalResult got = evaluate_ranking(d, qm, gm, max_rank);
    CHECK(got.queries_evaluated == expect.evaluated);
    REQUIRE(got.cmc.size() == expect.cmc.size());
    for (size_t k = 0; k < expect.cmc.size(); ++k) CHECK(got.cmc[k] == expect.cmc[k]);
    CHECK(got.map == expect.map);
    for (size_t k = 1; k < got.cmc.size(); ++k) CHECK(got.cmc[k] >= got.cmc[k - 1]);
  }
}

TEST_CASE("metrics are invariant under a common gallery permutation") {
  Rng rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    const int64_t nq = 3;
    const int64_t ng = 12;
    std::vector<InstanceMeta> qm(nq), gm(ng);
    for (int64_t i = 0; i < nq; ++i) qm[i] = {i % 3, 0};
    for (int64_t j = 0; j < ng; ++j) gm[j] = {j % 3, 1 + j % 2};
    DistanceMatrix d;
    d.queries = nq;
    d.gallery = ng;
    d.values.resize(nq * ng);
    for (double& v : d.values) v = rng.uniform();

    std::vector<int64_t> perm(ng);
    for (int64_t j = 0; j < ng; ++j) perm[j] = j;
    for (int64_t j = ng - 1; j > 0; --j) {
      std::swap(perm[j], perm[rng.uniform_int(j + 1)]);
    }
    DistanceMatrix pd = d;
    std::vector<InstanceMeta> pgm(ng);
    for (int64_t j = 0; j < ng; ++j) {
      pgm[j] = gm[perm[j]];
      for (int64_t i = 0; i < nq; ++i) pd.values[i * ng + j] = d.at(i, perm[j]);
    }
    const EvalResult a = evaluate_ranking(d, qm, gm, 5);
    const EvalResult b = evaluate_ranking(pd, qm, pgm, 5);
    for (size_t k = 0; k < a.cmc.size(); ++k) CHECK(a.cmc[k] == b.cmc[k]);
    CHECK(a.map == doctest::Approx(b.map).epsilon(1e-12));
  }
}

TEST_CASE("evaluation text report lists every metric") {
  DistanceMatrix d;
  d.queries = 1;
  d.gallery = 2;
  d.values = {0.1, 0.2};
  const std::vector<InstanceMeta> qm = {{1, 0}};
  const std::vector<InstanceMeta> gm = {{1, 1}, {2, 1}};
  const EvalResult r = evaluate_ranking(d, qm, gm, 2);
  const std::string text = r.to_text();
  CHECK(text.find("rank1 1") != std::string::npos);
  CHECK(text.find("map 1") != std::string::npos);
  CHECK(text.find("queries_evaluated 1") != std::string::npos);
}

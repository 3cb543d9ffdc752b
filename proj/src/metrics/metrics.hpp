#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace grl {

// Row-major [queries x gallery] Euclidean distance matrix.
struct DistanceMatrix {
  int64_t queries = 0;
  int64_t gallery = 0;
  std::vector<double> values;

  double at(int64_t q, int64_t g) const { return values[q * gallery + g]; }
};

// Euclidean distances between all row pairs of [Q, D] and [G, D] matrices.
// On L2-normalized rows the values land in [0, 2].
DistanceMatrix pairwise_distances(const Tensor& query, const Tensor& gallery);

struct InstanceMeta {
  int64_t identity = 0;
  int64_t camera = 0;
};

struct EvalResult {
  std::vector<double> cmc;           // cmc[k] = hit rate within the top k+1
  double map = 0.0;
  std::vector<double> per_query_ap;  // for evaluated queries, in query order
  int64_t queries_evaluated = 0;
  int64_t queries_dropped = 0;       // queries with no valid positive

  std::string to_text() const;       // key-value lines, one metric per line
};

// Ranks the gallery for every query and accumulates CMC and mAP. Gallery
// entries sharing both identity and camera with the query are excluded from
// that query's ranking; queries left without any positive are dropped, and
// an evaluation where every query is dropped is an error. Ties rank by
// gallery order.
EvalResult evaluate_ranking(const DistanceMatrix& dist,
                            const std::vector<InstanceMeta>& query_meta,
                            const std::vector<InstanceMeta>& gallery_meta, int64_t max_rank);

}  // namespace grl

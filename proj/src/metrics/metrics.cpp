#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace grl {

DistanceMatrix pairwise_distances(const Tensor& query, const Tensor& gallery) {
  check_shape(query.shape().size() == 2 && gallery.shape().size() == 2,
              "embeddings must be [rows, dim] matrices");
  check_shape(query.shape()[1] == gallery.shape()[1],
              "query and gallery dimensions differ: " + shape_str(query.shape()) + " vs " +
                  shape_str(gallery.shape()));
  DistanceMatrix out;
  out.queries = query.shape()[0];
  out.gallery = gallery.shape()[0];
  out.values.resize(out.queries * out.gallery);
  const int64_t dim = query.shape()[1];
  const double* q = query.data();
  const double* g = gallery.data();
  for (int64_t i = 0; i < out.queries; ++i) {
    for (int64_t j = 0; j < out.gallery; ++j) {
      double acc = 0.0;
      for (int64_t d = 0; d < dim; ++d) {
        const double diff = q[i * dim + d] - g[j * dim + d];
        acc += diff * diff;
      }
      out.values[i * out.gallery + j] = std::sqrt(acc);
    }
  }
  return out;
}

std::string EvalResult::to_text() const {
  std::ostringstream out;
  out.precision(10);
  for (size_t k = 0; k < cmc.size(); ++k) {
    out << "rank" << (k + 1) << " " << cmc[k] << "\n";
  }
  out << "map " << map << "\n";
  out << "queries_evaluated " << queries_evaluated << "\n";
  out << "queries_dropped " << queries_dropped << "\n";
  return out.str();
}

EvalResult evaluate_ranking(const DistanceMatrix& dist,
                            const std::vector<InstanceMeta>& query_meta,
                            const std::vector<InstanceMeta>& gallery_meta, int64_t max_rank) {
  check_shape(dist.queries == static_cast<int64_t>(query_meta.size()),
              "distance matrix rows do not match query metadata");
  check_shape(dist.gallery == static_cast<int64_t>(gallery_meta.size()),
              "distance matrix columns do not match gallery metadata");
  if (dist.queries == 0 || dist.gallery == 0) {
    throw DataError("ranking evaluation needs at least one query and one gallery entry");
  }
  if (max_rank <= 0) throw ConfigError("max_rank must be positive");

  EvalResult result;
  result.cmc.assign(max_rank, 0.0);
  double ap_sum = 0.0;

  for (int64_t qi = 0; qi < dist.queries; ++qi) {
    const InstanceMeta& q = query_meta[qi];
    std::vector<int64_t> order;  // valid gallery entries for this query
    bool has_positive = false;
    for (int64_t gi = 0; gi < dist.gallery; ++gi) {
      const InstanceMeta& g = gallery_meta[gi];
      if (g.identity == q.identity && g.camera == q.camera) continue;
      order.push_back(gi);
      has_positive = has_positive || g.identity == q.identity;
    }
    if (!has_positive) {
      ++result.queries_dropped;
      continue;
    }
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      return dist.at(qi, a) < dist.at(qi, b);
    });

    int64_t hits = 0;
    int64_t first_hit = -1;
    double ap = 0.0;
    for (size_t pos = 0; pos < order.size(); ++pos) {
      if (gallery_meta[order[pos]].identity != q.identity) continue;
      ++hits;
      if (first_hit < 0) first_hit = static_cast<int64_t>(pos);
      ap += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
    ap /= static_cast<double>(hits);
    for (int64_t k = first_hit; k < max_rank; ++k) result.cmc[k] += 1.0;
    result.per_query_ap.push_back(ap);
    ap_sum += ap;
    ++result.queries_evaluated;
  }

  if (result.queries_evaluated == 0) {
    throw DataError("every query lacked a valid cross-camera positive");
  }
  for (double& v : result.cmc) v /= static_cast<double>(result.queries_evaluated);
  result.map = ap_sum / static_cast<double>(result.queries_evaluated);
  return result;
}

}  // namespace grl

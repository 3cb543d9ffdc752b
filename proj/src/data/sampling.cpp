#include "data/sampling.hpp"

#include <map>

#include "core/errors.hpp"
#include "core/shape.hpp"

namespace grl {

std::vector<int64_t> rrs_sample(int64_t length, int64_t t, bool train, Rng& rng) {
  if (length <= 0) throw DataError("cannot sample from an empty sequence");
  if (t <= 0) throw ConfigError("sequence length must be positive");

  std::vector<int64_t> out;
  out.reserve(t);
  if (length < t) {
    for (int64_t i = 0; i < t; ++i) out.push_back(i % length);
    return out;
  }
  const int64_t base = length / t;
  for (int64_t i = 0; i < t; ++i) {
    const int64_t start = i * base;
    const int64_t size = (i == t - 1) ? base + length % t : base;
    out.push_back(train ? start + rng.uniform_int(size) : start);
  }
  return out;
}

PairBatch mine_pairs(const TrackletIndex& index, int64_t batch_size, Rng& rng) {
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw ConfigError("batch size must be a positive even number, got " +
                      std::to_string(batch_size));
  }
  const std::vector<int64_t> train = index.records_of(Split::kTrain);
  if (train.empty()) throw DataError("train split is empty; cannot mine pairs");

  PairBatch batch;
  const int64_t pairs = batch_size / 2;
  int64_t attempts = 0;
  while (static_cast<int64_t>(batch.probes.size()) < pairs) {
    if (++attempts > 100 + pairs) {
      throw DataError("pair mining failed: could not find a cross-camera partner "
                      "after 100 retries");
    }
    const int64_t probe = train[rng.uniform_int(static_cast<int64_t>(train.size()))];
    const TrackletRecord& p = index.records[probe];
    std::vector<int64_t> partners;
    for (int64_t r : train) {
      const TrackletRecord& g = index.records[r];
      if (g.identity == p.identity && g.camera != p.camera) partners.push_back(r);
    }
    if (partners.empty()) continue;  // single-camera identity: redraw
    batch.probes.push_back(probe);
    batch.galleries.push_back(partners[rng.uniform_int(static_cast<int64_t>(partners.size()))]);
  }
  return batch;
}

std::vector<int64_t> batch_record_order(const PairBatch& batch) {
  check_shape(batch.probes.size() == batch.galleries.size(),
              "pair batch has mismatched probe/gallery counts");
  std::vector<int64_t> order;
  order.reserve(batch.probes.size() * 2);
  for (size_t i = 0; i < batch.probes.size(); ++i) {
    order.push_back(batch.probes[i]);
    order.push_back(batch.galleries[i]);
  }
  return order;
}

std::vector<VeriPair> build_verification_pairs(const std::vector<int64_t>& identities) {
  check_shape(identities.size() % 2 == 0, "batch must hold an even number of sequences");
  const int64_t pairs = static_cast<int64_t>(identities.size()) / 2;
  std::vector<VeriPair> out;
  for (int64_t i = 0; i < pairs; ++i) {
    out.push_back({2 * i, 2 * i + 1, 1.0});
  }
  for (int64_t i = 0; i < pairs; ++i) {
    for (int64_t off = 1; off < pairs; ++off) {
      const int64_t j = (i + off) % pairs;
      if (identities[2 * j + 1] != identities[2 * i]) {
        out.push_back({2 * i, 2 * j + 1, 0.0});
        break;
      }
    }
  }
  return out;
}

}  // namespace grl

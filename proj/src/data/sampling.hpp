#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "data/dataset.hpp"

namespace grl {

// Restricted random sampling: the sequence is divided into `t` chunks of
// floor(length/t) frames with the remainder appended to the last chunk.
// Training draws one frame uniformly per chunk; evaluation takes each
// chunk's first frame. Sequences shorter than `t` cycle (i mod length).
// Always returns exactly `t` indices.
std::vector<int64_t> rrs_sample(int64_t length, int64_t t, bool train, Rng& rng);

// One mined batch: batch_size/2 cross-camera positive pairs. Sequence i of
// the assembled batch is probes[i/2] when i is even and galleries[i/2] when
// i is odd, so pairs sit at adjacent positions.
struct PairBatch {
  std::vector<int64_t> probes;     // indices into index.records
  std::vector<int64_t> galleries;  // same length; same identity, other camera
};

// Draws batch_size/2 probe tracklets uniformly from the train split and a
// same-identity different-camera partner for each. Probes hitting a
// single-camera identity are redrawn, up to 100 attempts in total.
PairBatch mine_pairs(const TrackletIndex& index, int64_t batch_size, Rng& rng);

// Flattens a PairBatch into the batch sequence order [p0, g0, p1, g1, ...].
std::vector<int64_t> batch_record_order(const PairBatch& batch);

struct VeriPair {
  int64_t probe = 0;    // position in the assembled batch
  int64_t gallery = 0;  // position in the assembled batch
  double label = 0.0;   // 1 = same identity
};

// Builds the verification pair list for a batch laid out as [p0, g0, ...]:
// every mined pair contributes a positive, and every probe is additionally
// paired round-robin with the next gallery of a different identity. Probes
// with no different-identity gallery available contribute no negative.
std::vector<VeriPair> build_verification_pairs(const std::vector<int64_t>& identities);

}  // namespace grl

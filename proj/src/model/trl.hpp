#pragma once

#include <memory>
#include <vector>

#include "nn/layers.hpp"

namespace grl {

enum class Direction { kForward, kBackward, kBidirectional };
enum class MemoryMode { kResidual, kIdentity, kOff };

struct TrlOptions {
  Direction direction = Direction::kBidirectional;
  bool enhancement = true;
  MemoryMode memory = MemoryMode::kResidual;
  // Share one cell between both temporal orders; exists to make the
  // reversal-symmetry property directly testable.
  bool tied_weights = false;
};

// One recurrence step: gates the high-correlation features by how much they
// differ from the accumulated memory (squared difference -> spatial mean ->
// channel attention in (1,2)), and folds the low-correlation features into
// the memory through a residual block.
class EmuCell : public Module {
 public:
  EmuCell(Rng& rng, int64_t channels, bool enhancement, MemoryMode memory);

  struct StepResult {
    Tensor enhanced;  // [N,C,H,W]
    Tensor memory;    // [N,C,H,W]
  };
  StepResult step(const Tensor& high_t, const Tensor& low_t,
                  const Tensor& memory);

 private:
  bool enhancement_;
  MemoryMode memory_mode_;
  std::unique_ptr<Conv2d> diff_frame_;  // 1x1 conv before rectification
  std::unique_ptr<Conv2d> diff_mem_;
  std::unique_ptr<Linear> attn_;        // channel attention, C -> C
  std::unique_ptr<ResidualBlock> res_;
};

// Runs EMU chains over the disentangled stacks in one or both temporal
// orders and fuses them into per-step high-correlation vectors and one
// final low-correlation vector.
class TrlModule : public Module {
 public:
  TrlModule(Rng& rng, int64_t channels, const TrlOptions& opts);

  struct DirectionRun {
    Tensor per_step;      // [N,T,C], stored in original frame order
    Tensor final_memory;  // [N,C,H,W]
    std::vector<Tensor> memory_trace;  // per original frame, when requested
  };
  DirectionRun run_direction(const Tensor& high, const Tensor& low,
                             bool reverse, bool want_trace = false);

  struct Output {
    Tensor per_step_fused;  // [N,T,C]
    Tensor low_final;       // [N,C]
  };
  Output forward(const Tensor& high, const Tensor& low);

  const TrlOptions& options() const { return opts_; }
  int64_t out_channels() const { return channels_; }

 private:
  class IntegrateHead : public Module {
   public:
    IntegrateHead(Rng& rng, int64_t in, int64_t out)
        : high_(rng, in, out), low_(rng, in, out) {
      register_child("high", high_);
      register_child("low", low_);
    }
    Linear high_, low_;
  };

  EmuCell& cell_for(bool reverse);

  int64_t channels_;
  TrlOptions opts_;
  std::unique_ptr<EmuCell> fwd_, bwd_;
  IntegrateHead integrate_;
};

struct VideoEmbedding {
  Tensor high;   // pooled over time        [N,C]
  Tensor low;    // final-memory vector     [N,C]
  Tensor joint;  // concat(high, low)       [N,2C]
};

// Retrieval embedding: temporal pooling of the fused per-step vectors,
// concatenated with the final low-correlation vector, high half first.
VideoEmbedding test_time_embedding(const Tensor& per_step_fused,
                                   const Tensor& low_final,
                                   bool max_pool = false);

}  // namespace grl

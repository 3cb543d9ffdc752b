#include "model/trl.hpp"

#include "core/errors.hpp"

namespace grl {

EmuCell::EmuCell(Rng& rng, int64_t channels, bool enhancement, MemoryMode memory)
    : enhancement_(enhancement), memory_mode_(memory) {
  if (enhancement_) {
    diff_frame_ = std::make_unique<Conv2d>(rng, channels, channels, 1, 1, 0, true);
    diff_mem_ = std::make_unique<Conv2d>(rng, channels, channels, 1, 1, 0, true);
    attn_ = std::make_unique<Linear>(rng, channels, channels);
    register_child("diff_frame", *diff_frame_);
    register_child("diff_mem", *diff_mem_);
    register_child("attn", *attn_);
  }
  if (memory_mode_ == MemoryMode::kResidual) {
    res_ = std::make_unique<ResidualBlock>(rng, channels, channels, 1);
    register_child("res", *res_);
  }
}

EmuCell::StepResult EmuCell::step(const Tensor& high_t, const Tensor& low_t,
                                  const Tensor& memory) {
  check_shape(high_t.shape() == low_t.shape() && high_t.shape() == memory.shape(),
              "emu step: mismatched shapes " + shape_str(high_t.shape()) +
                  " / " + shape_str(low_t.shape()) + " / " +
                  shape_str(memory.shape()));
  if (!memory.all_finite())
    throw NumericError("emu step: memory contains non-finite entries");
  Tensor enhanced = high_t;
  if (enhancement_) {
    Tensor diff = sub(relu(diff_mem_->forward(memory)),
                      relu(diff_frame_->forward(high_t)));
    Tensor gate = sigmoid(attn_->forward(gap_hw(square(diff))));
    // Multiplier (1 + gate) stays in (1, 2): selection only amplifies.
    enhanced = mul_channel(high_t, add_scalar(gate, 1.0));
  }
  Tensor next;
  switch (memory_mode_) {
    case MemoryMode::kResidual:
      next = res_->forward(add(memory, low_t));
      break;
    case MemoryMode::kIdentity:
      next = add(memory, low_t);
      break;
    case MemoryMode::kOff:
      next = memory;
      break;
  }
  return {enhanced, next};
}

TrlModule::TrlModule(Rng& rng, int64_t channels, const TrlOptions& opts)
    : channels_(channels),
      opts_(opts),
      integrate_(rng, channels * (opts.direction == Direction::kBidirectional ? 2 : 1),
                 channels) {
  if (opts_.direction != Direction::kBackward) {
    fwd_ = std::make_unique<EmuCell>(rng, channels, opts_.enhancement, opts_.memory);
    register_child("fwd", *fwd_);
  }
  if (opts_.direction != Direction::kForward) {
    if (opts_.direction == Direction::kBidirectional && opts_.tied_weights) {
      // Both orders traverse the same cell; no second parameter set.
    } else {
      bwd_ = std::make_unique<EmuCell>(rng, channels, opts_.enhancement, opts_.memory);
      register_child("bwd", *bwd_);
    }
  }
  register_child("integrate", integrate_);
}

EmuCell& TrlModule::cell_for(bool reverse) {
  if (!reverse) {
    check_shape(fwd_ != nullptr, "trl: forward chain not configured");
    return *fwd_;
  }
  if (bwd_) return *bwd_;
  check_shape(fwd_ != nullptr, "trl: backward chain not configured");
  return *fwd_;  // tied weights
}

TrlModule::DirectionRun TrlModule::run_direction(const Tensor& high,
                                                 const Tensor& low, bool reverse,
                                                 bool want_trace) {
  check_shape(high.ndim() == 5 && high.shape() == low.shape(),
              "run_direction: stacks must share [N,T,C,H,W], got " +
                  shape_str(high.shape()) + " vs " + shape_str(low.shape()));
  check_shape(high.dim(2) == channels_, "run_direction: channel mismatch");
  const int64_t t_len = high.dim(1);
  EmuCell& cell = cell_for(reverse);
  DirectionRun out;
  Tensor memory = mean_time_maps(low);  // M_0
  std::vector<Tensor> vecs(static_cast<size_t>(t_len));
  if (want_trace) out.memory_trace.resize(static_cast<size_t>(t_len));
  for (int64_t i = 0; i < t_len; ++i) {
    const int64_t t = reverse ? t_len - 1 - i : i;
    EmuCell::StepResult step =
        cell.step(select_time(high, t), select_time(low, t), memory);
    memory = step.memory;
    vecs[static_cast<size_t>(t)] = gap_hw(step.enhanced);
    if (want_trace) out.memory_trace[static_cast<size_t>(t)] = memory;
  }
  out.per_step = stack_time(vecs);
  out.final_memory = memory;
  return out;
}

TrlModule::Output TrlModule::forward(const Tensor& high, const Tensor& low) {
  const int64_t n = high.dim(0), t = high.dim(1);
  Tensor steps_in, mem_in;
  if (opts_.direction == Direction::kBidirectional) {
    DirectionRun f = run_direction(high, low, false);
    DirectionRun b = run_direction(high, low, true);
    steps_in = concat_cols(reshape(f.per_step, {n * t, channels_}),
                           reshape(b.per_step, {n * t, channels_}));
    mem_in = concat_cols(gap_hw(f.final_memory), gap_hw(b.final_memory));
  } else {
    DirectionRun r =
        run_direction(high, low, opts_.direction == Direction::kBackward);
    steps_in = reshape(r.per_step, {n * t, channels_});
    mem_in = gap_hw(r.final_memory);
  }
  Output out;
  out.per_step_fused = reshape(integrate_.high_.forward(steps_in), {n, t, channels_});
  out.low_final = integrate_.low_.forward(mem_in);
  return out;
}

VideoEmbedding test_time_embedding(const Tensor& per_step_fused,
                                   const Tensor& low_final, bool max_pool) {
  check_shape(per_step_fused.ndim() == 3 && low_final.ndim() == 2 &&
                  per_step_fused.dim(0) == low_final.dim(0) &&
                  per_step_fused.dim(2) == low_final.dim(1),
              "test_time_embedding: fused " + shape_str(per_step_fused.shape()) +
                  " vs low " + shape_str(low_final.shape()));
  VideoEmbedding e;
  e.high = temporal_pool(per_step_fused, max_pool);
  e.low = low_final;
  e.joint = concat_cols(e.high, e.low);
  return e;
}

}  // namespace grl

#include "harness/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "core/errors.hpp"
#include "core/ops.hpp"
#include "data/augment.hpp"
#include "data/sampling.hpp"
#include "harness/evaluate.hpp"

namespace fs = std::filesystem;

namespace grl {

namespace {

constexpr uint64_t kEpochStream = 0x65706f6368ULL;  // per-epoch data sampling
constexpr uint64_t kTrainStream = 0x747261696eULL;  // reserved trainer stream

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Trainer::Trainer(const Config& cfg, const TrackletIndex& index, std::string out_dir)
    : cfg_(cfg), index_(index), out_dir_(std::move(out_dir)) {
  cfg_.validate();
  session_ = std::make_unique<Session>(cfg_, static_cast<int64_t>(index.train_identities.size()));
}

TrainResult Trainer::run() {
  fs::create_directories(out_dir_);
  const std::string ckpt_path = (fs::path(out_dir_) / "last.ckpt").string();

  GrlModel& model = session_->model();
  SgdOptimizer opt(model.parameters(), cfg_.lr, cfg_.momentum, cfg_.weight_decay,
                   cfg_.nesterov);
  Rng train_rng(mix64(cfg_.seed, kTrainStream));

  int64_t start_epoch = 0;
  const bool resuming = !cfg_.resume.empty();
  if (resuming) {
    const CheckpointData data = load_checkpoint(cfg_.resume);
    session_->restore(data, &opt);
    train_rng.set_state(data.get_string("rng/train"));
    start_epoch = Session::stored_epochs(data);
    if (start_epoch > cfg_.epochs) {
      throw ConfigError("checkpoint has already completed " + std::to_string(start_epoch) +
                        " epochs, config asks for " + std::to_string(cfg_.epochs));
    }
  }

  std::ofstream log(fs::path(out_dir_) / "train.log",
                    resuming ? std::ios::app : std::ios::trunc);
  std::ofstream csv(fs::path(out_dir_) / "epoch_losses.csv",
                    resuming ? std::ios::app : std::ios::trunc);
  if (!log || !csv) throw IoError("cannot write training logs under " + out_dir_);
  if (!resuming) csv << "epoch,loss,frame,video,veri,lr\n";

  const std::vector<int64_t> train_records = index_.records_of(Split::kTrain);
  const int64_t steps = cfg_.steps_per_epoch > 0
                            ? cfg_.steps_per_epoch
                            : std::max<int64_t>(
                                  1, static_cast<int64_t>(train_records.size()) / cfg_.batch_size);
  const AugmentOptions aug = cfg_.augment_options();
  const LossWeights weights = cfg_.loss_weights();
  const int64_t n = cfg_.batch_size;
  const int64_t t = cfg_.seq_len;
  const int64_t c = model.feature_channels();

  TrainResult result;
  result.checkpoint_path = ckpt_path;
  result.epochs_completed = start_epoch;
  model.set_training(true);

  const auto save = [&](int64_t epochs_done) {
    save_checkpoint(ckpt_path, session_->snapshot(epochs_done, &opt, train_rng.state()));
  };
  // Always leave a rollback point, even if the very first epoch diverges.
  if (!resuming) save(start_epoch);

  for (int64_t epoch = start_epoch; epoch < cfg_.epochs; ++epoch) {
    const double lr_now =
        cfg_.lr * std::pow(cfg_.lr_decay_factor, static_cast<double>(epoch / cfg_.lr_decay_every));
    opt.set_lr(lr_now);
    Rng data_rng(mix64(cfg_.seed, kEpochStream, static_cast<uint64_t>(epoch)));

    double sum_total = 0, sum_frame = 0, sum_video = 0, sum_veri = 0;
    for (int64_t step = 0; step < steps; ++step) {
      const double t0 = now_ms();
      const PairBatch mined = mine_pairs(index_, n, data_rng);
      const std::vector<int64_t> order = batch_record_order(mined);

      Tensor batch = Tensor::zeros({n, t, 3, aug.height, aug.width});
      std::vector<int64_t> labels(n);
      const int64_t clip_size = t * 3 * aug.height * aug.width;
      for (int64_t i = 0; i < n; ++i) {
        const TrackletRecord& rec = index_.records[order[i]];
        const auto indices =
            rrs_sample(static_cast<int64_t>(rec.frames.size()), t, true, data_rng);
        Tensor clip = load_clip(rec, indices, true, aug, data_rng);
        std::copy(clip.data(), clip.data() + clip_size, batch.data() + i * clip_size);
        labels[i] = index_.train_label.at(rec.identity);
      }

      const GrlModel::ForwardResult fwd = model.forward(batch);

      Tensor frame_loss, veri_loss;
      Tensor frame_rows;
      std::vector<int64_t> frame_labels;
      if (fwd.frame_vectors.defined()) {
        frame_rows = reshape(fwd.frame_vectors, {n * t, c});
        frame_labels.reserve(n * t);
        for (int64_t i = 0; i < n; ++i) {
          frame_labels.insert(frame_labels.end(), t, labels[i]);
        }
        frame_loss = session_->frame_table()->loss(frame_rows, frame_labels);
      }
      Tensor video_loss = session_->video_table().loss(fwd.video_vector, labels);
      if (model.verification_head()) {
        const auto pairs = build_verification_pairs(labels);
        if (!pairs.empty()) {
          std::vector<int64_t> probe_at, gallery_at;
          std::vector<double> targets;
          for (const VeriPair& p : pairs) {
            probe_at.push_back(p.probe);
            gallery_at.push_back(p.gallery);
            targets.push_back(p.label);
          }
          veri_loss = verification_loss(gather_rows(fwd.joint, probe_at),
                                        gather_rows(fwd.joint, gallery_at), targets,
                                        *model.verification_head());
        }
      }
      Tensor total = total_loss(frame_loss, video_loss, veri_loss, weights);

      const double loss_val = total.item();
      const double frame_val = frame_loss.defined() ? frame_loss.item() : 0.0;
      const double video_val = video_loss.item();
      const double veri_val = veri_loss.defined() ? veri_loss.item() : 0.0;
      if (!std::isfinite(loss_val)) {
        log << "event=abort epoch=" << epoch << " step=" << step
            << " reason=non_finite_loss loss=" << fmt(loss_val) << "\n";
        log.flush();
        throw NumericError("loss became non-finite at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step) +
                           "; last completed-epoch checkpoint kept at " + ckpt_path);
      }

      opt.zero_grad();
      total.backward();
      opt.step();
      session_->video_table().update(fwd.video_vector, labels);
      if (frame_rows.defined()) session_->frame_table()->update(frame_rows, frame_labels);

      sum_total += loss_val;
      sum_frame += frame_val;
      sum_video += video_val;
      sum_veri += veri_val;
      log << "event=step epoch=" << epoch << " step=" << step << " loss=" << fmt(loss_val)
          << " frame=" << fmt(frame_val) << " video=" << fmt(video_val)
          << " veri=" << fmt(veri_val) << " lr=" << fmt(lr_now)
          << " wall_ms=" << fmt(now_ms() - t0) << "\n";
      result.final_loss = loss_val;
    }

    const double inv = 1.0 / static_cast<double>(steps);
    csv << epoch << ',' << fmt(sum_total * inv) << ',' << fmt(sum_frame * inv) << ','
        << fmt(sum_video * inv) << ',' << fmt(sum_veri * inv) << ',' << fmt(lr_now) << "\n";
    csv.flush();
    log << "event=epoch epoch=" << epoch << " loss=" << fmt(sum_total * inv)
        << " lr=" << fmt(lr_now) << "\n";
    log.flush();
    result.epochs_completed = epoch + 1;

    bool stop = false;
    if (cfg_.eval_every > 0 && (epoch + 1) % cfg_.eval_every == 0) {
      const EvalOutput eval = evaluate_model(model, index_, cfg_);
      result.last_rank1 = eval.result.cmc.empty() ? 0.0 : eval.result.cmc[0];
      result.last_map = eval.result.map;
      log << "event=eval epoch=" << epoch << " rank1=" << fmt(result.last_rank1)
          << " map=" << fmt(result.last_map) << "\n";
      log.flush();
      if (cfg_.early_stop_rank1 > 0 && result.last_rank1 >= cfg_.early_stop_rank1) {
        result.early_stopped = true;
        stop = true;
      }
    }
    if (stop || (cfg_.save_every > 0 && (epoch + 1) % cfg_.save_every == 0) ||
        epoch + 1 == cfg_.epochs) {
      save(epoch + 1);
    }
    if (stop) break;
  }
  if (resuming && cfg_.epochs == start_epoch) save(start_epoch);  // re-emit final state
  return result;
}

}  // namespace grl

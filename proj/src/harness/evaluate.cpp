#include "harness/evaluate.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/ops.hpp"
#include "data/augment.hpp"
#include "data/sampling.hpp"
#include "harness/session.hpp"

namespace grl {

namespace {

// Embeds one tracklet as a [1, D] row of the requested feature.
Tensor embed_record(GrlModel& model, const TrackletRecord& rec, const Config& cfg,
                    const AugmentOptions& aug) {
  Rng unused(0);  // evaluation draws nothing from it
  const auto indices =
      rrs_sample(static_cast<int64_t>(rec.frames.size()), cfg.seq_len, false, unused);
  Tensor clip = load_clip(rec, indices, false, aug, unused);
  Tensor batch = reshape(clip, {1, cfg.seq_len, 3, aug.height, aug.width});
  const GrlModel::ForwardResult fwd = model.forward(batch);

  Tensor joint = fwd.joint;
  if (cfg.eval_feature == "joint") return joint;
  const int64_t c = model.feature_channels();
  const int64_t lo = cfg.eval_feature == "high" ? 0 : c;
  Tensor slice = Tensor::zeros({1, c});
  std::copy(joint.data() + lo, joint.data() + lo + c, slice.data());
  return slice;
}

}  // namespace

EvalOutput evaluate_model(GrlModel& model, const TrackletIndex& index, const Config& cfg) {
  cfg.validate();
  const std::vector<int64_t> queries = index.records_of(Split::kQuery);
  const std::vector<int64_t> gallery = index.records_of(Split::kGallery);
  if (queries.empty() || gallery.empty()) {
    throw DataError("evaluation needs non-empty query and gallery splits (" +
                    std::to_string(queries.size()) + " queries, " +
                    std::to_string(gallery.size()) + " gallery)");
  }

  const bool was_training = model.training();
  model.set_training(false);
  const AugmentOptions aug = cfg.augment_options();

  EvalOutput out;
  out.feature = cfg.eval_feature;
  out.num_queries = static_cast<int64_t>(queries.size());
  out.num_gallery = static_cast<int64_t>(gallery.size());

  Tensor query_rows, gallery_rows;
  std::vector<InstanceMeta> query_meta, gallery_meta;
  {
    NoGradGuard guard;
    const auto embed_all = [&](const std::vector<int64_t>& records,
                               std::vector<InstanceMeta>* meta) {
      Tensor rows;
      for (size_t i = 0; i < records.size(); ++i) {
        const TrackletRecord& rec = index.records[records[i]];
        Tensor row = embed_record(model, rec, cfg, aug);
        if (!rows.defined()) {
          rows = Tensor::zeros({static_cast<int64_t>(records.size()), row.shape()[1]});
        }
        std::copy(row.data(), row.data() + row.shape()[1],
                  rows.data() + static_cast<int64_t>(i) * row.shape()[1]);
        meta->push_back({rec.identity, rec.camera});
      }
      return l2_normalize_rows(rows);
    };
    query_rows = embed_all(queries, &query_meta);
    gallery_rows = embed_all(gallery, &gallery_meta);
  }
  model.set_training(was_training);

  out.embedding_dim = query_rows.shape()[1];
  const DistanceMatrix dist = pairwise_distances(query_rows, gallery_rows);
  out.result = evaluate_ranking(dist, query_meta, gallery_meta, cfg.eval_max_rank);
  return out;
}

EvalOutput evaluate_checkpoint(const Config& cfg, const std::string& checkpoint_path,
                               const TrackletIndex& index) {
  const CheckpointData data = load_checkpoint(checkpoint_path);
  Session session(cfg, data.get_int("train_identities"));
  session.restore(data, nullptr);
  return evaluate_model(session.model(), index, cfg);
}

void write_eval_report(const std::string& out_dir, const EvalOutput& out, const Config& cfg) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream txt(std::filesystem::path(out_dir) / "report.txt");
    if (!txt) throw IoError("cannot write evaluation report under " + out_dir);
    txt << "feature " << out.feature << "\n"
        << "embedding_dim " << out.embedding_dim << "\n"
        << "queries " << out.num_queries << "\n"
        << "gallery " << out.num_gallery << "\n"
        << out.result.to_text();
  }
  nlohmann::json j;
  j["feature"] = out.feature;
  j["embedding_dim"] = out.embedding_dim;
  j["queries"] = out.num_queries;
  j["gallery"] = out.num_gallery;
  j["cmc"] = out.result.cmc;
  j["map"] = out.result.map;
  j["per_query_ap"] = out.result.per_query_ap;
  j["queries_evaluated"] = out.result.queries_evaluated;
  j["queries_dropped"] = out.result.queries_dropped;
  j["config"] = cfg.to_text();
  std::ofstream js(std::filesystem::path(out_dir) / "report.json");
  if (!js) throw IoError("cannot write evaluation report under " + out_dir);
  js << j.dump(2) << "\n";
}

}  // namespace grl

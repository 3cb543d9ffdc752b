#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace grl {

enum class Split { kTrain, kQuery, kGallery };

std::string split_name(Split s);
Split parse_split(const std::string& name);

struct TrackletRecord {
  int64_t identity = 0;
  int64_t camera = 0;
  int64_t tracklet = 0;
  Split split = Split::kTrain;
  std::vector<std::string> frames;  // absolute paths, ordered
};

struct LoadReport {
  int64_t dropped_empty = 0;
  std::vector<std::string> warnings;
};

// Full dataset index. Records are sorted by (identity, camera, tracklet)
// and the (identity, camera, tracklet) triple is unique.
struct TrackletIndex {
  std::vector<TrackletRecord> records;
  LoadReport report;

  // Distinct training identities in ascending order, and their dense labels
  // for the classification tables.
  std::vector<int64_t> train_identities;
  std::map<int64_t, int64_t> train_label;

  std::vector<int64_t> records_of(Split s) const;  // indices into records
};

// Loads a dataset from `root`. When root/manifest.txt exists it drives the
// index (line format: identity,camera,tracklet,split,relative_path_glob);
// otherwise the directory tree root/<identity>/<camera>/<tracklet>/*.png is
// scanned and the default split rule applies: identities are halved by
// sorted id into train and test, and each test identity's lowest camera
// provides the queries while its other cameras form the gallery.
TrackletIndex load_dataset_index(const std::string& root);

}  // namespace grl

#include "data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace fs = std::filesystem;

namespace grl {

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kQuery: return "query";
    case Split::kGallery: return "gallery";
  }
  throw ConfigError("unknown split value");
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "query") return Split::kQuery;
  if (name == "gallery") return Split::kGallery;
  throw DataError("unknown split name: " + name);
}

std::vector<int64_t> TrackletIndex::records_of(Split s) const {
  std::vector<int64_t> out;
  for (int64_t i = 0; i < static_cast<int64_t>(records.size()); ++i) {
    if (records[i].split == s) out.push_back(i);
  }
  return out;
}

namespace {

bool parse_int(const std::string& s, int64_t* out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  try {
    *out = std::stoll(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Wildcard match supporting '*' only (no '?', no character classes).
bool wildcard_match(const std::string& text, const std::string& pat) {
  size_t t = 0, p = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pat.size() && (pat[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::vector<std::string> list_frames(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> expand_glob(const fs::path& root, const std::string& glob) {
  const size_t slash = glob.find_last_of('/');
  const std::string dir_part = slash == std::string::npos ? "" : glob.substr(0, slash);
  const std::string file_pat = slash == std::string::npos ? glob : glob.substr(slash + 1);
  if (dir_part.find('*') != std::string::npos) {
    throw DataError("manifest glob may use '*' only in the file name: " + glob);
  }
  const fs::path dir = root / dir_part;
  std::vector<std::string> out;
  for (const auto& path : list_frames(dir)) {
    if (wildcard_match(fs::path(path).filename().string(), file_pat)) out.push_back(path);
  }
  return out;
}

void load_from_manifest(const fs::path& root, const fs::path& manifest, TrackletIndex* index) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest: " + manifest.string());
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected identity,camera,tracklet,split,glob");
    }
    TrackletRecord rec;
    if (!parse_int(fields[0], &rec.identity) || !parse_int(fields[1], &rec.camera) ||
        !parse_int(fields[2], &rec.tracklet)) {
      throw DataError("manifest line " + std::to_string(line_no) + ": non-numeric id field");
    }
    rec.split = parse_split(fields[3]);
    rec.frames = expand_glob(root, fields[4]);
    if (rec.frames.empty()) {
      ++index->report.dropped_empty;
      index->report.warnings.push_back("dropped empty tracklet (manifest line " +
                                       std::to_string(line_no) + "): " + fields[4]);
      continue;
    }
    index->records.push_back(std::move(rec));
  }
}

void load_from_tree(const fs::path& root, TrackletIndex* index) {
  struct RawRecord {
    int64_t identity, camera, tracklet;
    std::vector<std::string> frames;
  };
  std::vector<RawRecord> raw;
  for (const auto& id_entry : fs::directory_iterator(root)) {
    if (!id_entry.is_directory()) continue;
    int64_t identity = 0;
    if (!parse_int(id_entry.path().filename().string(), &identity)) {
      index->report.warnings.push_back("skipped non-numeric directory: " +
                                       id_entry.path().string());
      continue;
    }
    for (const auto& cam_entry : fs::directory_iterator(id_entry.path())) {
      if (!cam_entry.is_directory()) continue;
      int64_t camera = 0;
      if (!parse_int(cam_entry.path().filename().string(), &camera)) {
        index->report.warnings.push_back("skipped non-numeric directory: " +
                                         cam_entry.path().string());
        continue;
      }
      for (const auto& tr_entry : fs::directory_iterator(cam_entry.path())) {
        if (!tr_entry.is_directory()) continue;
        int64_t tracklet = 0;
        if (!parse_int(tr_entry.path().filename().string(), &tracklet)) {
          index->report.warnings.push_back("skipped non-numeric directory: " +
                                           tr_entry.path().string());
          continue;
        }
        RawRecord rec{identity, camera, tracklet, list_frames(tr_entry.path())};
        if (rec.frames.empty()) {
          ++index->report.dropped_empty;
          index->report.warnings.push_back("dropped empty tracklet: " + tr_entry.path().string());
          continue;
        }
        raw.push_back(std::move(rec));
      }
    }
  }

  // Default split: identities are halved by sorted id; for each test identity
  // the lowest camera holds the queries and the rest form the gallery.
  std::set<int64_t> ids;
  for (const auto& r : raw) ids.insert(r.identity);
  std::vector<int64_t> sorted_ids(ids.begin(), ids.end());
  const size_t n_train = (sorted_ids.size() + 1) / 2;
  std::set<int64_t> train_ids(sorted_ids.begin(), sorted_ids.begin() + n_train);
  std::map<int64_t, int64_t> lowest_camera;
  for (const auto& r : raw) {
    auto it = lowest_camera.find(r.identity);
    if (it == lowest_camera.end() || r.camera < it->second) lowest_camera[r.identity] = r.camera;
  }
  for (auto& r : raw) {
    TrackletRecord rec;
    rec.identity = r.identity;
    rec.camera = r.camera;
    rec.tracklet = r.tracklet;
    rec.frames = std::move(r.frames);
    if (train_ids.count(r.identity)) {
      rec.split = Split::kTrain;
    } else if (r.camera == lowest_camera[r.identity]) {
      rec.split = Split::kQuery;
    } else {
      rec.split = Split::kGallery;
    }
    index->records.push_back(std::move(rec));
  }
}

}  // namespace

TrackletIndex load_dataset_index(const std::string& root) {
  const fs::path root_path(root);
  if (!fs::is_directory(root_path)) throw DataError("dataset root is not a directory: " + root);

  TrackletIndex index;
  const fs::path manifest = root_path / "manifest.txt";
  if (fs::is_regular_file(manifest)) {
    load_from_manifest(root_path, manifest, &index);
  } else {
    load_from_tree(root_path, &index);
  }

  std::sort(index.records.begin(), index.records.end(),
            [](const TrackletRecord& a, const TrackletRecord& b) {
              return std::tie(a.identity, a.camera, a.tracklet) <
                     std::tie(b.identity, b.camera, b.tracklet);
            });
  for (size_t i = 1; i < index.records.size(); ++i) {
    const auto& a = index.records[i - 1];
    const auto& b = index.records[i];
    if (a.identity == b.identity && a.camera == b.camera && a.tracklet == b.tracklet) {
      throw DataError("duplicate tracklet " + std::to_string(a.identity) + "/" +
                      std::to_string(a.camera) + "/" + std::to_string(a.tracklet));
    }
  }

  std::map<int64_t, std::set<int64_t>> train_cameras;
  for (const auto& r : index.records) {
    if (r.split == Split::kTrain) train_cameras[r.identity].insert(r.camera);
  }
  for (const auto& [id, cams] : train_cameras) {
    if (cams.size() < 2) {
      index.report.warnings.push_back("training identity " + std::to_string(id) +
                                      " appears under a single camera; positive pairs "
                                      "cannot be mined from it");
    }
    index.train_identities.push_back(id);
  }
  for (size_t i = 0; i < index.train_identities.size(); ++i) {
    index.train_label[index.train_identities[i]] = static_cast<int64_t>(i);
  }
  if (index.train_identities.empty()) {
    throw DataError("dataset has no usable training tracklets under " + root);
  }
  return index;
}

}  // namespace grl

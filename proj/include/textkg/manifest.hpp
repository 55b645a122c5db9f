#pragma once

#include <string>
#include <vector>

namespace textkg {

// One detected salient region. Features come either inline or from a file;
// `frame` groups detections so the top-N_r-per-frame cut can be applied.
struct RegionEntry {
  std::vector<double> feature;  // inline row; empty when feature_path is set
  std::string feature_path;
  std::string category;
  double confidence = 0.0;
  int frame = 0;
};

struct ClipSample {
  std::string clip_id;
  std::string appearance_path;  // empty → no video frames
  std::string motion_path;
  std::vector<RegionEntry> regions;
  std::vector<std::string> transcript;
  std::vector<std::vector<std::string>> captions;  // reference caption(s)
};

struct VideoEntry {
  std::string video_id;
  std::vector<ClipSample> clips;
};

struct DatasetManifest {
  std::string base_dir;  // directory of the manifest file; relative paths resolve here
  std::vector<VideoEntry> videos;

  std::size_t clip_count() const {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.clips.size();
    return n;
  }
  std::string resolve(const std::string& path) const;
};

// Parses and validates. Dangling file references are collected and reported
// in one error; confidences must be non-increasing within a frame group.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

}  // namespace textkg

#include "textkg/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace textkg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string DatasetManifest::resolve(const std::string& path) const {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / path).string();
}

namespace {

std::vector<std::string> word_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error("manifest: " + where + " must be a word array");
  std::vector<std::string> out;
  for (const auto& w : j) out.push_back(w.get<std::string>());
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest: " + path + " is not valid JSON: " + e.what());
  }

  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();

  std::vector<std::string> dangling;
  auto check_file = [&](const std::string& p) {
    if (p.empty()) return;
    if (!fs::exists(m.resolve(p))) dangling.push_back(p);
  };

  std::set<std::string> video_ids;
  for (const auto& jv : root.value("videos", json::array())) {
    VideoEntry video;
    video.video_id = jv.at("video_id").get<std::string>();
    if (!video_ids.insert(video.video_id).second)
      throw std::runtime_error("manifest: duplicate video_id " + video.video_id);
    std::set<std::string> clip_ids;
    for (const auto& jc : jv.value("clips", json::array())) {
      ClipSample clip;
      clip.clip_id = jc.at("clip_id").get<std::string>();
      if (!clip_ids.insert(clip.clip_id).second)
        throw std::runtime_error("manifest: duplicate clip_id " + clip.clip_id + " in video " +
                                 video.video_id);
      clip.appearance_path = jc.value("appearance", "");
      clip.motion_path = jc.value("motion", "");
      check_file(clip.appearance_path);
      check_file(clip.motion_path);
      for (const auto& jr : jc.value("regions", json::array())) {
        RegionEntry r;
        r.category = jr.at("category").get<std::string>();
        r.confidence = jr.value("confidence", 0.0);
        r.frame = jr.value("frame", 0);
        if (jr.contains("feature")) {
          for (const auto& v : jr.at("feature")) r.feature.push_back(v.get<double>());
        } else if (jr.contains("feature_path")) {
          r.feature_path = jr.at("feature_path").get<std::string>();
          check_file(r.feature_path);
        } else {
          throw std::runtime_error("manifest: region without feature or feature_path in clip " +
                                   clip.clip_id);
        }
        clip.regions.push_back(std::move(r));
      }
      // confidences non-increasing within each frame group
      std::map<int, double> last;
      for (const auto& r : clip.regions) {
        auto it = last.find(r.frame);
        if (it != last.end() && r.confidence > it->second + 1e-12)
          throw std::runtime_error("manifest: clip " + clip.clip_id + " frame " +
                                   std::to_string(r.frame) +
                                   " has region confidences out of descending order");
        last[r.frame] = r.confidence;
      }
      if (jc.contains("transcript")) clip.transcript = word_list(jc["transcript"], "transcript");
      for (const auto& jcap : jc.value("captions", json::array()))
        clip.captions.push_back(word_list(jcap, "caption"));
      video.clips.push_back(std::move(clip));
    }
    m.videos.push_back(std::move(video));
  }

  if (!dangling.empty()) {
    std::string msg = "manifest: missing referenced files:";
    for (const auto& d : dangling) msg += " " + d;
    throw std::runtime_error(msg);
  }
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  json root;
  root["videos"] = json::array();
  for (const auto& v : m.videos) {
    json jv;
    jv["video_id"] = v.video_id;
    jv["clips"] = json::array();
    for (const auto& c : v.clips) {
      json jc;
      jc["clip_id"] = c.clip_id;
      if (!c.appearance_path.empty()) jc["appearance"] = c.appearance_path;
      if (!c.motion_path.empty()) jc["motion"] = c.motion_path;
      jc["regions"] = json::array();
      for (const auto& r : c.regions) {
        json jr;
        jr["category"] = r.category;
        jr["confidence"] = r.confidence;
        jr["frame"] = r.frame;
        if (!r.feature_path.empty())
          jr["feature_path"] = r.feature_path;
        else
          jr["feature"] = r.feature;
        jc["regions"].push_back(std::move(jr));
      }
      jc["transcript"] = c.transcript;
      jc["captions"] = c.captions;
      jv["clips"].push_back(std::move(jc));
    }
    root["videos"].push_back(std::move(jv));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << root.dump(2) << '\n';
}

}  // namespace textkg

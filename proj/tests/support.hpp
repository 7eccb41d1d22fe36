#ifndef EGOSOCIAL_TESTS_SUPPORT_HPP
#define EGOSOCIAL_TESTS_SUPPORT_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "egosocial/ingest.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("egosocial-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline egosocial::FrameObservation face(egosocial::FrameId frame, egosocial::TrackId track, double height = 80.0) {
  egosocial::FrameObservation o;
  o.frame_id = frame;
  o.track_id = track;
  o.face_height = height;
  o.x_pos = 0.5;
  o.expression = {1, 0, 0, 0, 0, 0, 0, 0};
  return o;
}

// `frames` frames, every listed track visible in every frame.
inline egosocial::SequenceRecord sequence(const std::string& id, int frames, const std::vector<egosocial::TrackId>& tracks) {
  egosocial::SequenceRecord s;
  s.sequence_id = id;
  for (int t = 0; t < frames; ++t) {
    egosocial::FrameEntry f;
    f.frame_id = t;
    for (auto track : tracks) f.faces.push_back(face(t, track));
    s.frames.push_back(std::move(f));
  }
  return s;
}

// Writes the sequences plus a manifest into `dir`; returns the manifest path.
inline fs::path write_corpus(const fs::path& dir, const std::vector<egosocial::SequenceRecord>& seqs, int days = 1,
                             egosocial::DescriptorStorage storage = egosocial::DescriptorStorage::Sidecar) {
  fs::create_directories(dir / "seq");
  egosocial::DatasetManifest m;
  m.observation_days = days;
  for (const auto& s : seqs) {
    const auto p = dir / "seq" / (s.sequence_id + ".jsonl");
    egosocial::write_sequence_file(s, p, storage);
    m.sequence_files.push_back(p);
  }
  const auto path = dir / "manifest.json";
  egosocial::write_manifest(m, path);
  return path;
}

}  // namespace testing

#endif

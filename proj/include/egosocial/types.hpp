#ifndef EGOSOCIAL_TYPES_HPP
#define EGOSOCIAL_TYPES_HPP

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "egosocial/error.hpp"

namespace egosocial {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using FrameId = std::int64_t;
using TrackId = std::int64_t;

inline constexpr std::size_t kExpressionCount = 8;

/// Order: neutral, happiness, surprise, sadness, anger, disgust, fear, contempt.
using ExpressionProbs = std::array<double, kExpressionCount>;

inline constexpr std::array<std::string_view, kExpressionCount> kExpressionNames = {
    "neutral", "happiness", "surprise", "sadness", "anger", "disgust", "fear", "contempt"};

inline constexpr double kDistributionTolerance = 1e-6;

enum class Category { Formal, Informal };

inline constexpr std::string_view to_string(Category c) {
  return c == Category::Formal ? "formal" : "informal";
}

inline Category parse_category(std::string_view text) {
  if (text == "formal") return Category::Formal;
  if (text == "informal") return Category::Informal;
  throw Error(ErrorCode::ParseError, "unknown category '" + std::string(text) + "'");
}

/// One tracked face in one frame.
struct FrameObservation {
  FrameId frame_id = 0;
  TrackId track_id = 0;
  double face_height = 0.0;  // pixels
  double x_pos = 0.5;        // normalized horizontal position, carried only
  double yaw = 0.0;          // degrees
  double pitch = 0.0;
  double roll = 0.0;
  ExpressionProbs expression{1.0, 0, 0, 0, 0, 0, 0, 0};
  std::vector<double> embedding;  // empty when absent

  bool operator==(const FrameObservation&) const = default;
};

struct FrameEntry {
  FrameId frame_id = 0;
  std::optional<double> timestamp_s;  // seconds since midnight of the sequence's day
  std::optional<std::vector<float>> descriptor;
  std::vector<FrameObservation> faces;

  bool operator==(const FrameEntry&) const = default;
};

struct SequenceLabels {
  std::map<TrackId, bool> interacting;
  std::optional<Category> category;
  std::map<TrackId, std::string> persons;  // ground-truth identities, optional

  bool operator==(const SequenceLabels&) const = default;
};

/// One candidate social event.
struct SequenceRecord {
  std::string sequence_id;
  int day_index = 0;
  double frame_interval_s = 30.0;
  std::vector<FrameEntry> frames;
  std::optional<SequenceLabels> labels;

  bool operator==(const SequenceRecord&) const = default;
};

/// The time-ordered observations of one tracked person within one sequence.
struct Prototype {
  std::string sequence_id;
  TrackId track_id = 0;
  std::vector<FrameId> sequence_frames;  // every frame of the owning sequence
  std::vector<FrameObservation> observations;
  std::optional<bool> interacting;
};

enum class FeatureSetting { SID1, SID2, SID3, SID4, SIC1, SIC2, SIC3 };

inline constexpr std::string_view to_string(FeatureSetting s) {
  switch (s) {
    case FeatureSetting::SID1: return "SID1";
    case FeatureSetting::SID2: return "SID2";
    case FeatureSetting::SID3: return "SID3";
    case FeatureSetting::SID4: return "SID4";
    case FeatureSetting::SIC1: return "SIC1";
    case FeatureSetting::SIC2: return "SIC2";
    case FeatureSetting::SIC3: return "SIC3";
  }
  return "?";
}

inline FeatureSetting parse_setting(std::string_view text) {
  std::string upper(text);
  for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto s : {FeatureSetting::SID1, FeatureSetting::SID2, FeatureSetting::SID3, FeatureSetting::SID4,
                 FeatureSetting::SIC1, FeatureSetting::SIC2, FeatureSetting::SIC3}) {
    if (upper == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature setting '" + std::string(text) + "'");
}

inline constexpr bool is_detection(FeatureSetting s) {
  return s == FeatureSetting::SID1 || s == FeatureSetting::SID2 || s == FeatureSetting::SID3 ||
         s == FeatureSetting::SID4;
}

enum class Task { Detection, Categorization };

inline constexpr std::string_view to_string(Task t) {
  return t == Task::Detection ? "detection" : "categorization";
}

inline constexpr Task task_of(FeatureSetting s) {
  return is_detection(s) ? Task::Detection : Task::Categorization;
}

struct SeriesProvenance {
  std::string source_id;
  int copy_index = 0;
  std::uint64_t seed = 0;

  bool operator==(const SeriesProvenance&) const = default;
};

/// Per-frame feature matrix [timesteps x dim] under a named feature setting.
/// Label: interacting (detection) or formal (categorization).
struct TimeSeries {
  FeatureSetting setting = FeatureSetting::SID4;
  Matrix values;
  std::string sequence_id;
  std::optional<TrackId> track_id;
  std::optional<bool> label;
  std::optional<SeriesProvenance> provenance;

  Eigen::Index steps() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }

  std::string id() const {
    return track_id ? sequence_id + "#" + std::to_string(*track_id) : sequence_id;
  }
};

}  // namespace egosocial

#endif

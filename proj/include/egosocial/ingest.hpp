#ifndef EGOSOCIAL_INGEST_HPP
#define EGOSOCIAL_INGEST_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "egosocial/error.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr std::string_view kSchemaVersion = "1";
inline constexpr int kWarnMinFrames = 20;
inline constexpr int kWarnMaxFrames = 60;

struct DatasetManifest {
  std::string schema_version{kSchemaVersion};
  int observation_days = 1;
  std::vector<fs::path> sequence_files;  // absolute after load_manifest
  std::optional<fs::path> calibration;
  std::vector<FeatureSetting> feature_settings;
  fs::path source;  // the manifest file itself
};

struct DatasetLoad {
  std::vector<SequenceRecord> sequences;  // sorted by sequence_id
  std::vector<std::string> warnings;
};

enum class DescriptorStorage { Sidecar, Inline };

namespace detail {

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline std::size_t line_of_token(const std::string& text, const std::string& token) {
  const auto quoted = "\"" + token + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

inline Json parse_json(const std::string& text, const fs::path& path, std::size_t line_offset = 0) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t line = line_offset + line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

inline float load_le_float(const unsigned char* bytes) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | bytes[i];
  float value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

inline void store_le_float(float value, unsigned char* bytes) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<unsigned char>(bits & 0xffU);
    bits >>= 8;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Manifest

inline DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const std::string text = detail::read_text(path);
  const Json doc = detail::parse_json(text, path);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, detail::where(path, 1) + ": manifest must be an object");

  DatasetManifest m;
  m.source = fs::absolute(path).lexically_normal();
  const fs::path base = m.source.parent_path();

  if (!doc.contains("schema_version"))
    throw Error(ErrorCode::ParseError, detail::where(path, 1) + ": missing schema_version");
  const Json& version = doc.at("schema_version");
  m.schema_version = version.is_string() ? version.get<std::string>() : version.dump();
  if (m.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::UnknownSchema, detail::where(path, detail::line_of_token(text, "schema_version")) +
                                              ": schema_version '" + m.schema_version + "'");
  }

  try {
    m.observation_days = doc.value("observation_days", 1);
    for (const auto& entry : doc.at("sequences")) {
      const auto rel = entry.get<std::string>();
      const fs::path resolved = (base / rel).lexically_normal();
      if (!fs::exists(resolved)) {
        throw Error(ErrorCode::DanglingReference,
                    detail::where(path, detail::line_of_token(text, rel)) + ": " + resolved.string());
      }
      m.sequence_files.push_back(resolved);
    }
    if (doc.contains("calibration") && !doc.at("calibration").is_null()) {
      const auto rel = doc.at("calibration").get<std::string>();
      const fs::path resolved = (base / rel).lexically_normal();
      if (!fs::exists(resolved)) {
        throw Error(ErrorCode::DanglingReference,
                    detail::where(path, detail::line_of_token(text, rel)) + ": " + resolved.string());
      }
      m.calibration = resolved;
    }
    for (const auto& s : doc.value("feature_settings", Json::array())) {
      m.feature_settings.push_back(parse_setting(s.get<std::string>()));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (m.observation_days < 1) {
    throw Error(ErrorCode::ParseError,
                detail::where(path, detail::line_of_token(text, "observation_days")) + ": observation_days < 1");
  }
  return m;
}

/// Writes paths relative to the manifest's directory.
inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  Json doc;
  doc["schema_version"] = m.schema_version;
  doc["observation_days"] = m.observation_days;
  Json seqs = Json::array();
  for (const auto& p : m.sequence_files) seqs.push_back(fs::absolute(p).lexically_relative(base).generic_string());
  doc["sequences"] = seqs;
  if (m.calibration) doc["calibration"] = fs::absolute(*m.calibration).lexically_relative(base).generic_string();
  Json settings = Json::array();
  for (auto s : m.feature_settings) settings.push_back(std::string(to_string(s)));
  doc["feature_settings"] = settings;
  detail::write_text(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_distribution(const ExpressionProbs& probs, const std::string& context) {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw Error(ErrorCode::InvalidDistribution, context + ": probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    std::ostringstream msg;
    msg << context << ": probabilities sum to " << sum;
    throw Error(ErrorCode::InvalidDistribution, msg.str());
  }
}

inline void validate_observation(const FrameObservation& o, const std::string& context) {
  validate_distribution(o.expression, context);
  if (!(o.face_height > 0.0) || !std::isfinite(o.face_height))
    throw Error(ErrorCode::MalformedRecord, context + ": face_height must be > 0");
  for (double angle : {o.yaw, o.pitch, o.roll}) {
    if (!std::isfinite(angle) || angle < -90.0 || angle > 90.0)
      throw Error(ErrorCode::MalformedRecord, context + ": angle outside [-90, 90]");
  }
  if (!(o.x_pos >= 0.0 && o.x_pos <= 1.0)) throw Error(ErrorCode::MalformedRecord, context + ": x_pos outside [0,1]");
  if (!o.embedding.empty()) {
    double norm2 = 0.0;
    for (double v : o.embedding) norm2 += v * v;
    if (std::abs(std::sqrt(norm2) - 1.0) > kDistributionTolerance)
      throw Error(ErrorCode::MalformedRecord, context + ": embedding is not unit norm");
  }
}

/// Throws on invariant violations; returns non-fatal warnings.
inline std::vector<std::string> validate_sequence(const SequenceRecord& seq) {
  std::vector<std::string> warnings;
  const std::string& sid = seq.sequence_id;
  if (sid.empty()) throw Error(ErrorCode::MalformedRecord, "empty sequence_id");
  if (!(seq.frame_interval_s > 0.0)) throw Error(ErrorCode::MalformedRecord, sid + ": frame_interval_s must be > 0");

  std::optional<std::size_t> descriptor_dim;
  std::set<TrackId> tracks;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const FrameEntry& frame = seq.frames[i];
    const std::string ctx = "sequence " + sid + " frame " + std::to_string(frame.frame_id);
    if (i > 0 && frame.frame_id <= seq.frames[i - 1].frame_id)
      throw Error(ErrorCode::MalformedRecord, ctx + ": frames not strictly ordered");
    if (frame.descriptor) {
      if (descriptor_dim && *descriptor_dim != frame.descriptor->size())
        throw Error(ErrorCode::MalformedRecord, ctx + ": descriptor length differs within sequence");
      descriptor_dim = frame.descriptor->size();
    }
    std::set<TrackId> in_frame;
    for (const auto& face : frame.faces) {
      const std::string fctx = ctx + " track " + std::to_string(face.track_id);
      if (face.frame_id != frame.frame_id) throw Error(ErrorCode::MalformedRecord, fctx + ": frame_id mismatch");
      if (!in_frame.insert(face.track_id).second)
        throw Error(ErrorCode::MalformedRecord, fctx + ": track appears twice in one frame");
      validate_observation(face, fctx);
      tracks.insert(face.track_id);
    }
  }
  if (seq.labels) {
    for (const auto& [track, value] : seq.labels->interacting) {
      (void)value;
      if (!tracks.count(track))
        throw Error(ErrorCode::UnknownReference, sid + ": label for absent track " + std::to_string(track));
    }
  }
  const auto n = static_cast<int>(seq.frames.size());
  if (n < kWarnMinFrames || n > kWarnMaxFrames) {
    warnings.push_back(sid + ": " + std::to_string(n) + " frames, outside the nominal 20-60 range");
  }
  return warnings;
}

// ---------------------------------------------------------------------------
// Sequence records (one JSON document per line)

namespace detail {

inline Json observation_to_json(const FrameObservation& o) {
  Json j;
  j["track_id"] = o.track_id;
  j["face_height"] = o.face_height;
  j["x_pos"] = o.x_pos;
  j["yaw"] = o.yaw;
  j["pitch"] = o.pitch;
  j["roll"] = o.roll;
  j["expression"] = o.expression;
  if (!o.embedding.empty()) j["embedding"] = o.embedding;
  return j;
}

inline FrameObservation observation_from_json(const Json& j, FrameId frame_id) {
  FrameObservation o;
  o.frame_id = frame_id;
  o.track_id = j.at("track_id").get<TrackId>();
  o.face_height = j.at("face_height").get<double>();
  o.x_pos = j.value("x_pos", 0.5);
  o.yaw = j.at("yaw").get<double>();
  o.pitch = j.at("pitch").get<double>();
  o.roll = j.at("roll").get<double>();
  const auto& e = j.at("expression");
  if (!e.is_array() || e.size() != kExpressionCount)
    throw Error(ErrorCode::MalformedRecord, "expression must hold 8 probabilities");
  for (std::size_t k = 0; k < kExpressionCount; ++k) o.expression[k] = e[k].get<double>();
  if (j.contains("embedding")) o.embedding = j.at("embedding").get<std::vector<double>>();
  return o;
}

inline Json labels_to_json(const SequenceLabels& labels) {
  Json j = Json::object();
  Json interacting = Json::object();
  for (const auto& [track, value] : labels.interacting) interacting[std::to_string(track)] = value;
  j["interacting"] = interacting;
  if (labels.category) j["category"] = std::string(to_string(*labels.category));
  if (!labels.persons.empty()) {
    Json persons = Json::object();
    for (const auto& [track, person] : labels.persons) persons[std::to_string(track)] = person;
    j["persons"] = persons;
  }
  return j;
}

inline SequenceLabels labels_from_json(const Json& j) {
  SequenceLabels labels;
  const Json interacting = j.value("interacting", Json::object());
  for (const auto& [key, value] : interacting.items()) labels.interacting[std::stoll(key)] = value.get<bool>();
  if (j.contains("category") && !j.at("category").is_null())
    labels.category = parse_category(j.at("category").get<std::string>());
  const Json persons = j.value("persons", Json::object());
  for (const auto& [key, value] : persons.items()) labels.persons[std::stoll(key)] = value.get<std::string>();
  return labels;
}

}  // namespace detail

/// Reads a little-endian float32 sidecar [rows x dim] plus its text index
/// of "frame_id row" lines.
inline std::map<FrameId, std::vector<float>> read_descriptor_sidecar(const fs::path& data_path,
                                                                     const fs::path& index_path,
                                                                     std::size_t dim) {
  if (!fs::exists(data_path)) throw Error(ErrorCode::DanglingReference, data_path.string());
  if (!fs::exists(index_path)) throw Error(ErrorCode::DanglingReference, index_path.string());
  const std::string bytes = detail::read_text(data_path);
  if (dim == 0 || bytes.size() % (dim * 4) != 0)
    throw Error(ErrorCode::MalformedRecord, data_path.string() + ": size is not a multiple of dim * 4");
  const std::size_t rows = bytes.size() / (dim * 4);

  std::map<FrameId, std::vector<float>> out;
  std::istringstream index(detail::read_text(index_path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    FrameId frame = 0;
    std::size_t row = 0;
    if (!(fields >> frame >> row) || row >= rows)
      throw Error(ErrorCode::MalformedRecord, detail::where(index_path, line_no) + ": bad index entry");
    std::vector<float> values(dim);
    const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) + row * dim * 4;
    for (std::size_t k = 0; k < dim; ++k) values[k] = detail::load_le_float(base + 4 * k);
    out.emplace(frame, std::move(values));
  }
  return out;
}

inline SequenceRecord read_sequence_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  SequenceRecord seq;
  bool have_header = false;
  std::optional<std::map<FrameId, std::vector<float>>> sidecar;
  std::string line;
  std::size_t line_no = 0;
  FrameId current_frame = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = detail::parse_json(line, path, line_no - 1);
    try {
      const auto kind = j.at("record").get<std::string>();
      if (kind == "sequence") {
        if (have_header) throw Error(ErrorCode::MalformedRecord, "second sequence header");
        have_header = true;
        seq.sequence_id = j.at("sequence_id").get<std::string>();
        seq.day_index = j.value("day_index", 0);
        seq.frame_interval_s = j.value("frame_interval_s", 30.0);
        if (j.contains("labels") && !j.at("labels").is_null()) seq.labels = detail::labels_from_json(j.at("labels"));
        if (j.contains("descriptors")) {
          const auto& d = j.at("descriptors");
          const fs::path dir = path.parent_path();
          sidecar = read_descriptor_sidecar(dir / d.at("data").get<std::string>(),
                                            dir / d.at("index").get<std::string>(), d.at("dim").get<std::size_t>());
        }
      } else if (kind == "frame") {
        if (!have_header) throw Error(ErrorCode::MalformedRecord, "frame before sequence header");
        FrameEntry frame;
        frame.frame_id = j.at("frame_id").get<FrameId>();
        current_frame = frame.frame_id;
        if (j.contains("timestamp_s")) frame.timestamp_s = j.at("timestamp_s").get<double>();
        if (j.contains("descriptor")) frame.descriptor = j.at("descriptor").get<std::vector<float>>();
        for (const auto& face : j.value("faces", Json::array()))
          frame.faces.push_back(detail::observation_from_json(face, frame.frame_id));
        seq.frames.push_back(std::move(frame));
      } else {
        throw Error(ErrorCode::MalformedRecord, "unknown record kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, detail::where(path, line_no) + ": sequence " + seq.sequence_id +
                                                  " frame " + std::to_string(current_frame) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedRecord && e.code() != ErrorCode::ParseError) throw;
      throw Error(e.code(), detail::where(path, line_no) + ": sequence " + seq.sequence_id + " frame " +
                                std::to_string(current_frame) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::MalformedRecord, path.string() + ": no sequence header");
  if (sidecar) {
    for (auto& frame : seq.frames) {
      auto it = sidecar->find(frame.frame_id);
      if (it != sidecar->end()) frame.descriptor = std::move(it->second);
    }
  }
  return seq;
}

/// Canonical writer: keys sorted, one frame per line. Sidecar storage puts
/// descriptors in <stem>.f32 / <stem>.idx next to the record file.
inline void write_sequence_file(const SequenceRecord& seq, const fs::path& path,
                                DescriptorStorage storage = DescriptorStorage::Sidecar) {
  std::size_t dim = 0;
  for (const auto& f : seq.frames)
    if (f.descriptor) dim = f.descriptor->size();
  const bool use_sidecar = storage == DescriptorStorage::Sidecar && dim > 0;

  Json header;
  header["record"] = "sequence";
  header["sequence_id"] = seq.sequence_id;
  header["day_index"] = seq.day_index;
  header["frame_interval_s"] = seq.frame_interval_s;
  if (seq.labels) header["labels"] = detail::labels_to_json(*seq.labels);

  const std::string stem = path.stem().string();
  if (use_sidecar) header["descriptors"] = Json{{"data", stem + ".f32"}, {"index", stem + ".idx"}, {"dim", dim}};

  std::string text = header.dump() + "\n";
  std::string binary;
  std::string index;
  std::size_t row = 0;
  for (const auto& frame : seq.frames) {
    Json j;
    j["record"] = "frame";
    j["frame_id"] = frame.frame_id;
    if (frame.timestamp_s) j["timestamp_s"] = *frame.timestamp_s;
    Json faces = Json::array();
    for (const auto& face : frame.faces) faces.push_back(detail::observation_to_json(face));
    j["faces"] = faces;
    if (frame.descriptor) {
      if (use_sidecar) {
        const std::size_t offset = binary.size();
        binary.resize(offset + 4 * frame.descriptor->size());
        auto* out = reinterpret_cast<unsigned char*>(binary.data()) + offset;
        for (std::size_t k = 0; k < frame.descriptor->size(); ++k) detail::store_le_float((*frame.descriptor)[k], out + 4 * k);
        index += std::to_string(frame.frame_id) + " " + std::to_string(row++) + "\n";
      } else {
        j["descriptor"] = *frame.descriptor;
      }
    }
    text += j.dump() + "\n";
  }
  detail::write_text(path, text);
  if (use_sidecar) {
    detail::write_text(path.parent_path() / (stem + ".f32"), binary);
    detail::write_text(path.parent_path() / (stem + ".idx"), index);
  }
}

/// Loads and validates every sequence; the result is sorted by sequence_id
/// so file order in the manifest does not matter.
inline DatasetLoad load_sequences(const DatasetManifest& manifest) {
  DatasetLoad out;
  for (const auto& path : manifest.sequence_files) {
    SequenceRecord seq = read_sequence_file(path);
    auto warnings = validate_sequence(seq);
    out.warnings.insert(out.warnings.end(), warnings.begin(), warnings.end());
    out.sequences.push_back(std::move(seq));
  }
  std::sort(out.sequences.begin(), out.sequences.end(),
            [](const SequenceRecord& a, const SequenceRecord& b) { return a.sequence_id < b.sequence_id; });
  for (std::size_t i = 1; i < out.sequences.size(); ++i) {
    if (out.sequences[i].sequence_id == out.sequences[i - 1].sequence_id)
      throw Error(ErrorCode::MalformedRecord, "duplicate sequence_id " + out.sequences[i].sequence_id);
  }
  std::sort(out.warnings.begin(), out.warnings.end());
  return out;
}

/// One prototype per distinct track, in track order; observations in frame order.
inline std::vector<Prototype> extract_prototypes(const SequenceRecord& seq) {
  std::map<TrackId, Prototype> by_track;
  std::vector<FrameId> frame_ids;
  frame_ids.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) {
    frame_ids.push_back(frame.frame_id);
    for (const auto& face : frame.faces) {
      auto& proto = by_track[face.track_id];
      proto.track_id = face.track_id;
      proto.observations.push_back(face);
    }
  }
  std::vector<Prototype> out;
  out.reserve(by_track.size());
  for (auto& [track, proto] : by_track) {
    proto.sequence_id = seq.sequence_id;
    proto.sequence_frames = frame_ids;
    if (seq.labels) {
      auto it = seq.labels->interacting.find(track);
      if (it != seq.labels->interacting.end()) proto.interacting = it->second;
    }
    out.push_back(std::move(proto));
  }
  return out;
}

}  // namespace egosocial

#endif

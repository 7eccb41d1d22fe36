#ifndef EGOSOCIAL_SERIALIZE_HPP
#define EGOSOCIAL_SERIALIZE_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "egosocial/augment.hpp"
#include "egosocial/cluster.hpp"
#include "egosocial/ingest.hpp"
#include "egosocial/lstm.hpp"
#include "egosocial/patterns.hpp"
#include "egosocial/signals.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

namespace detail {

template <class Derived>
Json vector_to_json(const Eigen::MatrixBase<Derived>& v) {
  return std::vector<double>(v.derived().data(), v.derived().data() + v.size());
}

inline Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Json matrix_to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::MalformedRecord, "matrix data size");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

inline Json rows_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
  return rows;
}

inline Matrix rows_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::MalformedRecord, "series values must be a non-empty array of rows");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    require(static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::MalformedRecord, "ragged series rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <class T>
Json optional_to_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Models

inline Json to_json(const QuadraticDistanceModel& m) {
  return Json{{"a", m.a}, {"b", m.b}, {"c", m.c}, {"rms_residual", m.rms_residual}, {"min_height", m.min_height},
              {"max_height", m.max_height}, {"extrapolation_margin", m.extrapolation_margin}};
}

inline QuadraticDistanceModel distance_model_from_json(const Json& j) {
  QuadraticDistanceModel m;
  m.a = j.at("a").get<double>();
  m.b = j.at("b").get<double>();
  m.c = j.at("c").get<double>();
  m.rms_residual = j.value("rms_residual", 0.0);
  m.min_height = j.value("min_height", 0.0);
  m.max_height = j.value("max_height", 0.0);
  m.extrapolation_margin = j.value("extrapolation_margin", 0.25);
  return m;
}

inline Json to_json(const PcaModel& m) {
  return Json{{"mean", detail::vector_to_json(m.mean)},
              {"components", detail::matrix_to_json(m.components)},
              {"variances", detail::vector_to_json(m.variances)},
              {"total_variance", m.total_variance},
              {"retained_fraction", m.retained_fraction},
              {"threshold", m.threshold}};
}

inline PcaModel pca_from_json(const Json& j) {
  PcaModel m;
  m.mean = detail::vector_from_json(j.at("mean"));
  m.components = detail::matrix_from_json(j.at("components"));
  m.variances = detail::vector_from_json(j.at("variances"));
  m.total_variance = j.at("total_variance").get<double>();
  m.retained_fraction = j.at("retained_fraction").get<double>();
  m.threshold = j.value("threshold", 0.95);
  return m;
}

inline Json to_json(const NetworkConfig& c) {
  return Json{{"input_dim", c.input_dim},         {"cell_count", c.cell_count}, {"dropout_rate", c.dropout_rate},
              {"learning_rate", c.learning_rate}, {"momentum", c.momentum},     {"batch_size", c.batch_size},
              {"epochs", c.epochs},               {"rng_seed", c.rng_seed},     {"init_scale", c.init_scale}};
}

inline NetworkConfig config_from_json(const Json& j) {
  NetworkConfig c;
  c.input_dim = j.at("input_dim").get<int>();
  c.cell_count = j.at("cell_count").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.init_scale = j.value("init_scale", 0.08);
  return c;
}

inline Json to_json(const LstmParameters& p) {
  return Json{{"input_weights", detail::matrix_to_json(p.input_weights)},
              {"recurrent_weights", detail::matrix_to_json(p.recurrent_weights)},
              {"bias", detail::vector_to_json(p.bias)},
              {"peep_input", detail::vector_to_json(p.peep_input)},
              {"peep_forget", detail::vector_to_json(p.peep_forget)},
              {"peep_output", detail::vector_to_json(p.peep_output)},
              {"output_weights", detail::vector_to_json(p.output_weights)},
              {"output_bias", p.output_bias}};
}

inline LstmParameters parameters_from_json(const Json& j) {
  LstmParameters p;
  p.input_weights = detail::matrix_from_json(j.at("input_weights"));
  p.recurrent_weights = detail::matrix_from_json(j.at("recurrent_weights"));
  p.bias = detail::vector_from_json(j.at("bias"));
  p.peep_input = detail::vector_from_json(j.at("peep_input"));
  p.peep_forget = detail::vector_from_json(j.at("peep_forget"));
  p.peep_output = detail::vector_from_json(j.at("peep_output"));
  p.output_weights = detail::vector_from_json(j.at("output_weights"));
  p.output_bias = j.at("output_bias").get<double>();
  const auto h = p.peep_input.size();
  require(p.input_weights.rows() == 4 * h && p.recurrent_weights.rows() == 4 * h && p.recurrent_weights.cols() == h &&
              p.bias.size() == 4 * h && p.peep_forget.size() == h && p.peep_output.size() == h &&
              p.output_weights.size() == h,
          ErrorCode::MalformedRecord, "inconsistent weight shapes");
  return p;
}

inline Json to_json(const FeatureScaling& s) {
  if (s.empty()) return nullptr;
  return Json{{"mean", detail::vector_to_json(s.mean)}, {"scale", detail::vector_to_json(s.scale)}};
}

inline FeatureScaling scaling_from_json(const Json& j) {
  FeatureScaling s;
  if (j.is_null()) return s;
  s.mean = detail::vector_from_json(j.at("mean"));
  s.scale = detail::vector_from_json(j.at("scale"));
  return s;
}

/// Everything needed to classify raw sequences for one task.
struct ModelBundle {
  Task task = Task::Detection;
  FeatureSetting setting = FeatureSetting::SID4;
  Network network;
  std::optional<QuadraticDistanceModel> distance_model;
  std::optional<PcaModel> pca;
  int q = 15;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kBundleSchema = "1";

inline Json to_json(const ModelBundle& b) {
  Json j;
  j["schema_version"] = kBundleSchema;
  j["task"] = std::string(to_string(b.task));
  j["setting"] = std::string(to_string(b.setting));
  j["seed"] = b.seed;
  j["q"] = b.q;
  j["config"] = to_json(b.network.config);
  j["scaling"] = to_json(b.network.scaling);
  j["weights"] = to_json(b.network.params);
  j["distance_model"] = b.distance_model ? to_json(*b.distance_model) : Json(nullptr);
  j["pca"] = b.pca ? to_json(*b.pca) : Json(nullptr);
  return j;
}

inline ModelBundle bundle_from_json(const Json& j) {
  if (j.value("schema_version", std::string{}) != kBundleSchema)
    throw Error(ErrorCode::UnknownSchema, "model bundle schema_version");
  ModelBundle b;
  const auto task = j.at("task").get<std::string>();
  require(task == "detection" || task == "categorization", ErrorCode::MalformedRecord, "unknown task " + task);
  b.task = task == "detection" ? Task::Detection : Task::Categorization;
  b.setting = parse_setting(j.at("setting").get<std::string>());
  require(task_of(b.setting) == b.task, ErrorCode::MalformedRecord, "setting does not match task");
  b.seed = j.value("seed", std::uint64_t{0});
  b.q = j.value("q", 15);
  b.network.config = config_from_json(j.at("config"));
  b.network.scaling = scaling_from_json(j.value("scaling", Json(nullptr)));
  b.network.params = parameters_from_json(j.at("weights"));
  if (j.contains("distance_model") && !j.at("distance_model").is_null())
    b.distance_model = distance_model_from_json(j.at("distance_model"));
  if (j.contains("pca") && !j.at("pca").is_null()) b.pca = pca_from_json(j.at("pca"));
  return b;
}

inline void write_json(const Json& j, const fs::path& path) { detail::write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const fs::path& path) {
  return detail::parse_json(detail::read_text(path), path);
}

inline ModelBundle load_bundle(const fs::path& path) {
  try {
    return bundle_from_json(read_json(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Series sets (one series per line)

inline Json to_json(const TimeSeries& s) {
  Json j;
  j["setting"] = std::string(to_string(s.setting));
  j["sequence_id"] = s.sequence_id;
  j["track_id"] = detail::optional_to_json(s.track_id);
  j["label"] = detail::optional_to_json(s.label);
  j["values"] = detail::rows_to_json(s.values);
  if (s.provenance)
    j["provenance"] = Json{{"source", s.provenance->source_id}, {"copy", s.provenance->copy_index},
                           {"seed", s.provenance->seed}};
  return j;
}

inline TimeSeries series_from_json(const Json& j) {
  TimeSeries s;
  s.setting = parse_setting(j.at("setting").get<std::string>());
  s.sequence_id = j.at("sequence_id").get<std::string>();
  if (!j.at("track_id").is_null()) s.track_id = j.at("track_id").get<TrackId>();
  if (!j.at("label").is_null()) s.label = j.at("label").get<bool>();
  s.values = detail::rows_from_json(j.at("values"));
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    s.provenance = SeriesProvenance{p.at("source").get<std::string>(), p.at("copy").get<int>(),
                                    p.at("seed").get<std::uint64_t>()};
  }
  return s;
}

inline void write_series_file(std::span<const TimeSeries> set, const fs::path& path) {
  std::string text;
  for (const auto& s : set) text += to_json(s).dump() + "\n";
  detail::write_text(path, text);
}

inline std::vector<TimeSeries> read_series_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<TimeSeries> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(series_from_json(detail::parse_json(line, path, line_no - 1)));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, detail::where(path, line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const Metrics& m) {
  return Json{{"tp", m.tp},
              {"fp", m.fp},
              {"tn", m.tn},
              {"fn", m.fn},
              {"precision", m.precision},
              {"recall", m.recall},
              {"accuracy", m.accuracy}};
}

inline Json to_json(const TrainReport& r) {
  return Json{{"epoch_loss", r.epoch_loss}, {"train_accuracy", r.train_accuracy}, {"rng_seed", r.rng_seed}};
}

inline Json to_json(const GridSearchResult& g) {
  Json rows = Json::array();
  for (const auto& row : g.table)
    rows.push_back(Json{{"config", to_json(row.config)}, {"fold_accuracy", row.fold_accuracy},
                        {"mean_accuracy", row.mean_accuracy}});
  return Json{{"best", to_json(g.best)}, {"table", rows}};
}

inline Json to_json(const ClusterResult& r) {
  Json clusters = Json::array();
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    Json members = Json::array();
    for (const auto& id : r.clusters[c]) members.push_back(Json{{"sequence_id", id.sequence_id}, {"track_id", id.track_id}});
    clusters.push_back(Json{{"cluster", c}, {"members", members}});
  }
  Json merges = Json::array();
  for (const auto& m : r.dendrogram)
    merges.push_back(Json{{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  return Json{{"cutoff", r.cutoff}, {"linkage", std::string(to_string(r.linkage))}, {"clusters", clusters},
              {"dendrogram", merges}};
}

inline ClusterResult cluster_result_from_json(const Json& j) {
  ClusterResult r;
  r.cutoff = j.at("cutoff").get<double>();
  r.linkage = parse_linkage(j.at("linkage").get<std::string>());
  for (const auto& c : j.at("clusters")) {
    std::vector<FaceSetId> members;
    for (const auto& m : c.at("members"))
      members.push_back({m.at("sequence_id").get<std::string>(), m.at("track_id").get<TrackId>()});
    r.clusters.push_back(std::move(members));
  }
  for (const auto& m : j.value("dendrogram", Json::array()))
    r.dendrogram.push_back({m.at("left").get<std::size_t>(), m.at("right").get<std::size_t>(),
                            m.at("height").get<double>(), m.at("size").get<std::size_t>()});
  return r;
}

inline Json to_json(std::span<const PersonReport> reports) {
  Json out = Json::array();
  for (const auto& r : reports) {
    Json members = Json::array();
    for (const auto& m : r.members) {
      Json jm{{"sequence_id", m.id.sequence_id}, {"track_id", m.id.track_id}, {"faces", m.faces}};
      if (m.interacting) jm["interacting"] = *m.interacting;
      if (m.category) jm["category"] = std::string(to_string(*m.category));
      members.push_back(jm);
    }
    Json jr{{"cluster", r.cluster},         {"cardinality", r.cardinality}, {"face_count", r.face_count},
            {"sequence_count", r.sequence_count}, {"members", members}};
    if (std::any_of(r.members.begin(), r.members.end(), [](const ClusterMember& m) { return m.category.has_value(); })) {
      jr["formal_count"] = r.formal_count;
      jr["informal_count"] = r.informal_count;
    }
    if (std::any_of(r.members.begin(), r.members.end(), [](const ClusterMember& m) { return m.interacting.has_value(); }))
      jr["interacting_count"] = r.interacting_count;
    out.push_back(jr);
  }
  return out;
}

inline Json to_json(const InteractionEvent& e) {
  Json j{{"sequence_id", e.sequence_id}, {"day_index", e.day_index},       {"start_frame", e.start_frame},
         {"end_frame", e.end_frame},     {"frame_count", e.frame_count},   {"participants", e.participants},
         {"frame_interval_s", e.frame_interval_s}};
  j["category"] = e.category ? Json(std::string(to_string(*e.category))) : Json(nullptr);
  j["start_time_s"] = detail::optional_to_json(e.start_time_s);
  return j;
}

inline InteractionEvent event_from_json(const Json& j) {
  InteractionEvent e;
  e.sequence_id = j.at("sequence_id").get<std::string>();
  e.day_index = j.value("day_index", 0);
  e.start_frame = j.value("start_frame", FrameId{0});
  e.frame_count = j.at("frame_count").get<std::size_t>();
  e.end_frame = j.value("end_frame", e.start_frame + static_cast<FrameId>(e.frame_count) - 1);
  if (j.contains("category") && !j.at("category").is_null()) e.category = parse_category(j.at("category").get<std::string>());
  e.participants = j.value("participants", std::vector<std::size_t>{});
  e.frame_interval_s = j.value("frame_interval_s", 30.0);
  if (j.contains("start_time_s") && !j.at("start_time_s").is_null()) e.start_time_s = j.at("start_time_s").get<double>();
  return e;
}

/// Events document: {"observation_days": N, "events": [...]}.
struct EventLog {
  int observation_days = 1;
  std::vector<InteractionEvent> events;
};

inline Json to_json(const EventLog& log) {
  Json events = Json::array();
  for (const auto& e : log.events) events.push_back(to_json(e));
  return Json{{"observation_days", log.observation_days}, {"events", events}};
}

inline EventLog event_log_from_json(const Json& j) {
  EventLog log;
  log.observation_days = j.value("observation_days", 1);
  for (const auto& e : j.at("events")) log.events.push_back(event_from_json(e));
  return log;
}

inline Json to_json(const DurationStats& d) {
  return Json{{"mean_min", d.mean}, {"median_min", d.median}, {"stddev_min", d.stddev},
              {"std_error_min", d.std_error}, {"count", d.count}};
}

/// Mirrors the columns of the published profile table.
inline Json to_json(const SocialProfile& p) {
  Json j;
  j["scope"] = p.person ? Json("person") : Json("generic");
  j["person"] = detail::optional_to_json(p.person);
  j["observation_days"] = p.observation_days;
  j["event_count"] = p.event_count;
  j["F_formal"] = p.f_formal;
  j["F_informal"] = p.f_informal;
  j["A_formal"] = detail::optional_to_json(p.a_formal);
  j["A_informal"] = detail::optional_to_json(p.a_informal);
  j["D"] = detail::optional_to_json(p.diversity);
  j["duration"] = p.duration ? to_json(*p.duration) : Json(nullptr);
  return j;
}

inline Json to_json(const TemporalMap& map) {
  Json days = Json::array();
  for (const auto& day : map.days) {
    Json intervals = Json::array();
    for (const auto& iv : day.intervals) {
      Json lanes = Json::array();
      for (const auto& lane : iv.lanes)
        lanes.push_back(Json{{"cluster", lane.cluster}, {"color_index", lane.color_index}, {"lane", lane.lane}});
      intervals.push_back(Json{{"sequence_id", iv.sequence_id},
                               {"start_s", iv.start_s},
                               {"end_s", iv.end_s},
                               {"category", iv.category ? Json(std::string(to_string(*iv.category))) : Json(nullptr)},
                               {"marker", iv.marker},
                               {"lanes", lanes}});
    }
    days.push_back(Json{{"day_index", day.day_index}, {"intervals", intervals}});
  }
  return Json{{"week", map.week}, {"palette", map.palette}, {"days", days}};
}

}  // namespace egosocial

#endif

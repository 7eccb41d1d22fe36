#ifndef EGOSOCIAL_PIPELINE_HPP
#define EGOSOCIAL_PIPELINE_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egosocial/serialize.hpp"

namespace egosocial {

/// Per-task feature extraction state: the distance model for detection,
/// the quantization factor and PCA model for categorization.
struct FeatureExtractor {
  FeatureSetting setting = FeatureSetting::SID4;
  int q = 15;
  std::optional<QuadraticDistanceModel> distance_model;
  std::optional<PcaModel> pca;
};

inline Json to_json(const FeatureExtractor& f) {
  return Json{{"setting", std::string(to_string(f.setting))},
              {"q", f.q},
              {"distance_model", f.distance_model ? to_json(*f.distance_model) : Json(nullptr)},
              {"pca", f.pca ? to_json(*f.pca) : Json(nullptr)}};
}

inline FeatureExtractor features_from_json(const Json& j) {
  FeatureExtractor f;
  f.setting = parse_setting(j.at("setting").get<std::string>());
  f.q = j.value("q", 15);
  if (j.contains("distance_model") && !j.at("distance_model").is_null())
    f.distance_model = distance_model_from_json(j.at("distance_model"));
  if (j.contains("pca") && !j.at("pca").is_null()) f.pca = pca_from_json(j.at("pca"));
  return f;
}

inline FeatureExtractor features_of(const ModelBundle& b) { return {b.setting, b.q, b.distance_model, b.pca}; }

/// A sequence enters categorization when it is unlabeled or when at least
/// one of its tracks is labeled as interacting.
inline bool categorization_scope(const SequenceRecord& seq) {
  if (!seq.labels || seq.labels->interacting.empty()) return true;
  for (const auto& [track, value] : seq.labels->interacting)
    if (value) return true;
  return false;
}

inline std::vector<SequenceRecord> social_sequences(std::span<const SequenceRecord> seqs) {
  std::vector<SequenceRecord> out;
  for (const auto& s : seqs)
    if (categorization_scope(s)) out.push_back(s);
  return out;
}

inline QuadraticDistanceModel distance_model_for(const DatasetManifest& manifest) {
  if (!manifest.calibration)
    throw Error(ErrorCode::MissingFile, manifest.source.string() + ": no calibration table declared");
  return fit_distance_model(read_calibration(*manifest.calibration));
}

inline FeatureExtractor fit_features(const DatasetManifest& manifest, std::span<const SequenceRecord> seqs,
                                     FeatureSetting setting, int q = 15, double variance = 0.95) {
  FeatureExtractor f;
  f.setting = setting;
  f.q = q;
  if (is_detection(setting)) {
    f.distance_model = distance_model_for(manifest);
  } else {
    const auto scope = social_sequences(seqs);
    f.pca = fit_pca(quantized_corpus(scope, q), variance);
  }
  return f;
}

struct SeriesSet {
  std::vector<TimeSeries> series;
  SeriesWarnings warnings;
};

/// Detection: one series per prototype. Categorization: one per sequence in
/// scope.
inline SeriesSet build_series_set(std::span<const SequenceRecord> seqs, const FeatureExtractor& f) {
  SeriesSet out;
  if (is_detection(f.setting)) {
    if (!f.distance_model) throw Error(ErrorCode::InvalidArgument, "detection features need a distance model");
    for (const auto& seq : seqs)
      for (const auto& proto : extract_prototypes(seq))
        out.series.push_back(build_detection_series(proto, *f.distance_model, f.setting, &out.warnings));
  } else {
    if (!f.pca) throw Error(ErrorCode::InvalidArgument, "categorization features need a PCA model");
    for (const auto& seq : seqs)
      if (categorization_scope(seq)) out.series.push_back(build_categorization_series(seq, *f.pca, f.q, f.setting));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predictions

struct SeriesPrediction {
  std::string sequence_id;
  std::optional<TrackId> track_id;
  double probability = 0.5;
  bool label = false;
  std::optional<bool> truth;
};

inline std::vector<SeriesPrediction> predict_all(const Network& net, std::span<const TimeSeries> set) {
  std::vector<SeriesPrediction> out;
  for (const auto& s : set) {
    const auto p = predict(net, s);
    out.push_back({s.sequence_id, s.track_id, p.probability, p.label, s.label});
  }
  return out;
}

inline Json predictions_to_json(Task task, FeatureSetting setting, std::span<const SeriesPrediction> preds) {
  Json rows = Json::array();
  for (const auto& p : preds) {
    Json r{{"sequence_id", p.sequence_id}, {"probability", p.probability}};
    if (task == Task::Detection) {
      r["track_id"] = p.track_id ? Json(*p.track_id) : Json(nullptr);
      r["interacting"] = p.label;
    } else {
      r["category"] = std::string(to_string(p.label ? Category::Formal : Category::Informal));
    }
    rows.push_back(r);
  }
  Json doc{{"task", std::string(to_string(task))}, {"setting", std::string(to_string(setting))}, {"predictions", rows}};
  std::vector<bool> predicted, truth;
  for (const auto& p : preds)
    if (p.truth) {
      predicted.push_back(p.label);
      truth.push_back(*p.truth);
    }
  if (!preds.empty() && truth.size() == preds.size()) doc["metrics"] = to_json(score_predictions(predicted, truth));
  return doc;
}

/// Per-sequence outcomes from the ground truth, overridden by prediction
/// documents when given. A sequence is interacting when any of its
/// prototypes is.
inline std::map<std::string, SequenceOutcome> sequence_outcomes(std::span<const SequenceRecord> seqs,
                                                                const Json* detections = nullptr,
                                                                const Json* categories = nullptr) {
  std::map<std::string, SequenceOutcome> out;
  for (const auto& seq : seqs) {
    SequenceOutcome o;
    if (seq.labels) {
      if (!seq.labels->interacting.empty()) {
        bool any = false;
        for (const auto& [track, value] : seq.labels->interacting) any = any || value;
        o.interacting = any;
      }
      o.category = seq.labels->category;
    }
    out[seq.sequence_id] = o;
  }
  auto check = [](const Json& doc, Task task) {
    require(doc.value("task", std::string{}) == to_string(task), ErrorCode::MalformedRecord,
            std::string("expected a ") + std::string(to_string(task)) + " prediction document");
  };
  if (detections) {
    check(*detections, Task::Detection);
    for (auto& [id, o] : out) o.interacting = false;
    for (const auto& p : detections->at("predictions")) {
      const auto id = p.at("sequence_id").get<std::string>();
      auto it = out.find(id);
      if (it == out.end()) throw Error(ErrorCode::UnknownReference, "prediction for unknown sequence " + id);
      it->second.interacting = *it->second.interacting || p.at("interacting").get<bool>();
    }
  }
  if (categories) {
    check(*categories, Task::Categorization);
    for (const auto& p : categories->at("predictions")) {
      const auto id = p.at("sequence_id").get<std::string>();
      auto it = out.find(id);
      if (it == out.end()) throw Error(ErrorCode::UnknownReference, "prediction for unknown sequence " + id);
      it->second.category = parse_category(p.at("category").get<std::string>());
    }
  }
  return out;
}

}  // namespace egosocial

#endif

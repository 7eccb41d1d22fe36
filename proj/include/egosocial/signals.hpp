#ifndef EGOSOCIAL_SIGNALS_HPP
#define EGOSOCIAL_SIGNALS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egosocial/error.hpp"
#include "egosocial/ingest.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

// ---------------------------------------------------------------------------
// Face height -> distance

struct CalibrationPoint {
  double height_px = 0.0;
  double distance_cm = 0.0;
};

/// d = a*h^2 + b*h + c, distance in cm, h in pixels.
struct QuadraticDistanceModel {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rms_residual = 0.0;
  double min_height = 0.0;
  double max_height = 0.0;
  double extrapolation_margin = 0.25;  // fraction of the fitted height range

  double evaluate(double h) const { return (a * h + b) * h + c; }

  bool in_range(double h) const {
    const double span = (max_height - min_height) * extrapolation_margin;
    return h >= min_height - span && h <= max_height + span;
  }
};

struct DistanceEstimate {
  double distance_cm = 0.0;
  bool extrapolated = false;  // height outside fitted range +- margin
  bool clamped = false;       // raw polynomial was negative
};

inline std::vector<CalibrationPoint> read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<CalibrationPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    CalibrationPoint p;
    if (!(fields >> p.height_px)) continue;
    if (!(fields >> p.distance_cm))
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected two numbers");
    points.push_back(p);
  }
  return points;
}

inline void write_calibration(std::span<const CalibrationPoint> points, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "# height_px distance_cm\n";
  for (const auto& p : points) out << p.height_px << ' ' << p.distance_cm << '\n';
  detail::write_text(path, out.str());
}

/// Least-squares quadratic; heights are rescaled internally for conditioning.
inline QuadraticDistanceModel fit_distance_model(std::span<const CalibrationPoint> points) {
  if (points.size() < 3) throw Error(ErrorCode::FitDegenerate, "need at least 3 calibration points");
  std::set<double> distinct;
  double scale = 0.0;
  for (const auto& p : points) {
    if (!std::isfinite(p.height_px) || !std::isfinite(p.distance_cm))
      throw Error(ErrorCode::InvalidArgument, "non-finite calibration point");
    distinct.insert(p.height_px);
    scale = std::max(scale, std::abs(p.height_px));
  }
  if (distinct.size() < 3) throw Error(ErrorCode::FitDegenerate, "fewer than 3 distinct heights");

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = points[static_cast<std::size_t>(i)].height_px / scale;
    design(i, 0) = t * t;
    design(i, 1) = t;
    design(i, 2) = 1.0;
    target(i) = points[static_cast<std::size_t>(i)].distance_cm;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw Error(ErrorCode::FitDegenerate, "rank-deficient calibration design");
  const Eigen::Vector3d coef = qr.solve(target);

  QuadraticDistanceModel model;
  model.a = coef(0) / (scale * scale);
  model.b = coef(1) / scale;
  model.c = coef(2);
  double sq = 0.0;
  for (const auto& p : points) {
    const double r = model.evaluate(p.height_px) - p.distance_cm;
    sq += r * r;
  }
  model.rms_residual = std::sqrt(sq / static_cast<double>(n));
  model.min_height = *distinct.begin();
  model.max_height = *distinct.rbegin();
  return model;
}

inline DistanceEstimate estimate_distance(const QuadraticDistanceModel& model, double face_height_px) {
  if (!(face_height_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "face height must be > 0");
  DistanceEstimate est;
  est.distance_cm = model.evaluate(face_height_px);
  est.extrapolated = !model.in_range(face_height_px);
  if (est.distance_cm < 0.0) {
    est.distance_cm = 0.0;
    est.clamped = true;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Expressions

/// 1-based index of the most probable expression (1 = neutral); ties go to
/// the lowest index.
inline int dominant_expression(const ExpressionProbs& probs) {
  validate_distribution(probs, "dominant_expression");
  std::size_t best = 0;
  for (std::size_t k = 1; k < kExpressionCount; ++k)
    if (probs[k] > probs[best]) best = k;
  return static_cast<int>(best) + 1;
}

/// Componentwise mean over the faces of one frame; no faces -> neutral one-hot.
inline ExpressionProbs mean_expression(std::span<const FrameObservation> faces) {
  ExpressionProbs out{};
  if (faces.empty()) {
    out[0] = 1.0;
    return out;
  }
  for (const auto& face : faces)
    for (std::size_t k = 0; k < kExpressionCount; ++k) out[k] += face.expression[k];
  for (auto& v : out) v /= static_cast<double>(faces.size());
  return out;
}

// ---------------------------------------------------------------------------
// Feature settings

enum DetectionColumn : int { kDistance = 0, kRoll = 1, kPitch = 2, kYaw = 3, kExpression = 4 };
inline constexpr int kDetectionDim = 5;

/// Columns of the canonical 5-wide detection row used by a setting.
inline std::vector<int> detection_columns(FeatureSetting setting) {
  switch (setting) {
    case FeatureSetting::SID1: return {kDistance, kYaw};
    case FeatureSetting::SID2: return {kDistance, kRoll, kPitch, kYaw};
    case FeatureSetting::SID3: return {kDistance, kYaw, kExpression};
    case FeatureSetting::SID4: return {kDistance, kRoll, kPitch, kYaw, kExpression};
    default: throw Error(ErrorCode::InvalidArgument, std::string(to_string(setting)) + " is not a detection setting");
  }
}

inline Eigen::Index setting_dim(FeatureSetting setting, Eigen::Index pca_dim = 0) {
  if (is_detection(setting)) return static_cast<Eigen::Index>(detection_columns(setting).size());
  return setting == FeatureSetting::SIC3 ? pca_dim + static_cast<Eigen::Index>(kExpressionCount) : pca_dim;
}

/// Columns that hold discrete or probability values: left out of
/// standardization and frozen during augmentation.
inline std::vector<int> raw_columns(FeatureSetting setting, Eigen::Index dim) {
  if (is_detection(setting)) {
    const auto cols = detection_columns(setting);
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == kExpression) return {static_cast<int>(i)};
    return {};
  }
  if (setting == FeatureSetting::SIC3) {
    std::vector<int> out;
    for (Eigen::Index c = dim - static_cast<Eigen::Index>(kExpressionCount); c < dim; ++c) out.push_back(static_cast<int>(c));
    return out;
  }
  return {};
}

/// Derives a sub-setting series by column selection from the maximal one
/// (SID4 -> SID1..SID3, SIC3 -> SIC1/SIC2).
inline TimeSeries select_setting(const TimeSeries& series, FeatureSetting target) {
  TimeSeries out = series;
  out.setting = target;
  if (is_detection(series.setting)) {
    require(is_detection(target), ErrorCode::InvalidArgument, "cannot project detection series to categorization");
    const auto source_cols = detection_columns(series.setting);
    const auto target_cols = detection_columns(target);
    out.values.resize(series.steps(), static_cast<Eigen::Index>(target_cols.size()));
    for (std::size_t j = 0; j < target_cols.size(); ++j) {
      auto it = std::find(source_cols.begin(), source_cols.end(), target_cols[j]);
      require(it != source_cols.end(), ErrorCode::InvalidArgument,
              std::string(to_string(series.setting)) + " lacks a column needed by " + std::string(to_string(target)));
      out.values.col(static_cast<Eigen::Index>(j)) = series.values.col(it - source_cols.begin());
    }
    return out;
  }
  require(!is_detection(target), ErrorCode::InvalidArgument, "cannot project categorization series to detection");
  if (target == series.setting) return out;
  require(series.setting == FeatureSetting::SIC3 && target != FeatureSetting::SIC3, ErrorCode::InvalidArgument,
          "only SIC3 can be projected to SIC1/SIC2");
  const Eigen::Index pca_dim = series.dim() - static_cast<Eigen::Index>(kExpressionCount);
  out.values = series.values.leftCols(pca_dim);
  return out;
}

// ---------------------------------------------------------------------------
// Detection series

struct SeriesWarnings {
  std::size_t extrapolated = 0;
  std::size_t clamped = 0;
};

/// One row per frame of the owning sequence. Frames where the track is not
/// visible repeat the last observed row; leading gaps take the first one.
inline TimeSeries build_detection_series(const Prototype& proto, const QuadraticDistanceModel& model,
                                         FeatureSetting setting, SeriesWarnings* warnings = nullptr) {
  const auto cols = detection_columns(setting);
  if (proto.observations.empty())
    throw Error(ErrorCode::EmptyInput, "prototype " + proto.sequence_id + "#" + std::to_string(proto.track_id) + " is empty");

  auto full_row = [&](const FrameObservation& o) {
    std::array<double, kDetectionDim> row{};
    const auto est = estimate_distance(model, o.face_height);
    if (warnings) {
      warnings->extrapolated += est.extrapolated ? 1 : 0;
      warnings->clamped += est.clamped ? 1 : 0;
    }
    row[kDistance] = est.distance_cm;
    row[kRoll] = o.roll;
    row[kPitch] = o.pitch;
    row[kYaw] = o.yaw;
    row[kExpression] = dominant_expression(o.expression);
    return row;
  };

  std::vector<FrameId> frames = proto.sequence_frames;
  if (frames.empty())
    for (const auto& o : proto.observations) frames.push_back(o.frame_id);

  TimeSeries out;
  out.setting = setting;
  out.sequence_id = proto.sequence_id;
  out.track_id = proto.track_id;
  out.label = proto.interacting;
  out.values.resize(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(cols.size()));

  std::size_t next_obs = 0;
  std::array<double, kDetectionDim> current = full_row(proto.observations.front());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    while (next_obs < proto.observations.size() && proto.observations[next_obs].frame_id < frames[t]) ++next_obs;
    if (next_obs < proto.observations.size() && proto.observations[next_obs].frame_id == frames[t]) {
      current = full_row(proto.observations[next_obs]);
      ++next_obs;
    }
    for (std::size_t j = 0; j < cols.size(); ++j)
      out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = current[static_cast<std::size_t>(cols[j])];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global descriptors

/// w_k = floor(Q * f_k) on the L2-normalized input.
template <class T>
std::vector<int> quantize_descriptor(std::span<const T> descriptor, int q) {
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "quantization factor must be >= 2");
  double norm2 = 0.0;
  for (T v : descriptor) norm2 += static_cast<double>(v) * static_cast<double>(v);
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw Error(ErrorCode::InvalidArgument, "zero or non-finite descriptor");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<int> out(descriptor.size());
  for (std::size_t k = 0; k < descriptor.size(); ++k)
    out[k] = static_cast<int>(std::floor(static_cast<double>(q) * (static_cast<double>(descriptor[k]) * inv)));
  return out;
}

inline std::vector<int> quantize_descriptor(const std::vector<double>& d, int q) {
  return quantize_descriptor(std::span<const double>(d), q);
}

inline std::vector<int> quantize_descriptor(const std::vector<float>& d, int q) {
  return quantize_descriptor(std::span<const float>(d), q);
}

struct PcaModel {
  Vector mean;
  Matrix components;  // [output_dim x input_dim], rows orthonormal
  Vector variances;   // per retained component, descending
  double total_variance = 0.0;
  double retained_fraction = 0.0;
  double threshold = 0.95;

  Eigen::Index input_dim() const { return components.cols(); }
  Eigen::Index output_dim() const { return components.rows(); }

  Vector project(const Eigen::Ref<const Vector>& row) const {
    require(row.size() == input_dim(), ErrorCode::DimensionMismatch, "PCA input dimension");
    return components * (row - mean);
  }

  Vector reconstruct(const Eigen::Ref<const Vector>& code) const {
    require(code.size() == output_dim(), ErrorCode::DimensionMismatch, "PCA code dimension");
    return mean + components.transpose() * code;
  }

  Matrix project_rows(const Matrix& rows) const {
    require(rows.cols() == input_dim(), ErrorCode::DimensionMismatch, "PCA input dimension");
    return (rows.rowwise() - mean.transpose()) * components.transpose();
  }
};

namespace detail {

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
template <class Mat>
void fix_signs(Mat& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      if (std::abs(columns(i, j)) > best) {
        best = std::abs(columns(i, j));
        arg = i;
      }
    }
    if (columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

/// Descending eigenpairs of the sample covariance of `rows`, with the fixed
/// sign convention. Uses the thin SVD when rows are fewer than columns.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> covariance_eigen(const Matrix& rows, const Vector& mean) {
  const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  const double denom = static_cast<double>(rows.rows() - 1);
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  if (rows.rows() - 1 < rows.cols()) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    vectors = svd.matrixV();
    values = svd.singularValues().array().square() / denom;
  } else {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigendecomposition failed");
    vectors = solver.eigenvectors().rowwise().reverse();
    values = solver.eigenvalues().reverse().cwiseMax(0.0);
  }
  fix_signs(vectors);
  return {vectors, values};
}

}  // namespace detail

/// Keeps the smallest number of components whose cumulative share of the
/// total variance reaches `retained_variance`.
inline PcaModel fit_pca(const Matrix& rows, double retained_variance = 0.95) {
  if (rows.rows() < 2) throw Error(ErrorCode::InsufficientData, "PCA needs at least 2 rows");
  if (!(retained_variance > 0.0 && retained_variance <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "retained variance must be in (0, 1]");
  PcaModel model;
  model.threshold = retained_variance;
  model.mean = rows.colwise().mean().transpose();
  auto [vectors, values] = detail::covariance_eigen(rows, model.mean);
  model.total_variance = values.sum();
  if (!(model.total_variance > 0.0)) throw Error(ErrorCode::FitDegenerate, "data has zero total variance");

  Eigen::Index keep = 0;
  double cumulative = 0.0;
  while (keep < values.size()) {
    cumulative += values(keep);
    ++keep;
    if (cumulative / model.total_variance >= retained_variance - 1e-12) break;
  }
  model.components = vectors.leftCols(keep).transpose();
  model.variances = values.head(keep);
  model.retained_fraction = cumulative / model.total_variance;
  return model;
}

/// Quantized words of every descriptor in the given sequences, one row per frame.
inline Matrix quantized_corpus(std::span<const SequenceRecord> sequences, int q) {
  std::vector<std::vector<int>> words;
  for (const auto& seq : sequences) {
    for (const auto& frame : seq.frames) {
      if (!frame.descriptor)
        throw Error(ErrorCode::MissingDescriptor,
                    "sequence " + seq.sequence_id + " frame " + std::to_string(frame.frame_id));
      words.push_back(quantize_descriptor(*frame.descriptor, q));
    }
  }
  if (words.empty()) throw Error(ErrorCode::EmptyInput, "no descriptors");
  Matrix out(static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(words.front().size()));
  for (std::size_t i = 0; i < words.size(); ++i) {
    require(words[i].size() == words.front().size(), ErrorCode::DimensionMismatch, "descriptor lengths differ");
    for (std::size_t k = 0; k < words[i].size(); ++k)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = words[i][k];
  }
  return out;
}

inline TimeSeries build_categorization_series(const SequenceRecord& seq, const PcaModel& pca, int q,
                                              FeatureSetting setting) {
  require(!is_detection(setting), ErrorCode::InvalidArgument,
          std::string(to_string(setting)) + " is not a categorization setting");
  if (seq.frames.empty()) throw Error(ErrorCode::EmptyInput, "sequence " + seq.sequence_id + " has no frames");
  const Eigen::Index pdim = pca.output_dim();
  const Eigen::Index dim = setting_dim(setting, pdim);

  TimeSeries out;
  out.setting = setting;
  out.sequence_id = seq.sequence_id;
  if (seq.labels && seq.labels->category) out.label = *seq.labels->category == Category::Formal;
  out.values.resize(static_cast<Eigen::Index>(seq.frames.size()), dim);

  Vector word(pca.input_dim());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& frame = seq.frames[t];
    if (!frame.descriptor)
      throw Error(ErrorCode::MissingDescriptor, "sequence " + seq.sequence_id + " frame " + std::to_string(frame.frame_id));
    const auto w = quantize_descriptor(*frame.descriptor, q);
    require(static_cast<Eigen::Index>(w.size()) == pca.input_dim(), ErrorCode::DimensionMismatch,
            "descriptor length does not match the PCA model");
    for (std::size_t k = 0; k < w.size(); ++k) word(static_cast<Eigen::Index>(k)) = w[k];
    const auto row = static_cast<Eigen::Index>(t);
    out.values.row(row).head(pdim) = pca.project(word).transpose();
    if (setting == FeatureSetting::SIC3) {
      const auto expr = mean_expression(frame.faces);
      for (std::size_t k = 0; k < kExpressionCount; ++k) out.values(row, pdim + static_cast<Eigen::Index>(k)) = expr[k];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

/// Per-column z-scoring fitted on training frames. Raw columns pass through
/// unchanged (mean 0, scale 1).
struct FeatureScaling {
  Vector mean;
  Vector scale;

  bool empty() const { return mean.size() == 0; }

  Matrix apply(const Matrix& values) const {
    if (empty()) return values;
    require(values.cols() == mean.size(), ErrorCode::DimensionMismatch, "scaling dimension");
    return (values.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
};

inline FeatureScaling fit_scaling(std::span<const TimeSeries> series, const std::vector<int>& raw) {
  if (series.empty()) throw Error(ErrorCode::EmptyInput, "no series to fit scaling");
  const Eigen::Index dim = series.front().dim();
  Vector sum = Vector::Zero(dim);
  Vector sum2 = Vector::Zero(dim);
  double count = 0.0;
  for (const auto& s : series) {
    require(s.dim() == dim, ErrorCode::DimensionMismatch, "series dimensions differ");
    sum += s.values.colwise().sum().transpose();
    count += static_cast<double>(s.steps());
  }
  FeatureScaling out;
  out.mean = sum / count;
  for (const auto& s : series) sum2 += (s.values.rowwise() - out.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  out.scale = (sum2 / std::max(1.0, count - 1.0)).cwiseSqrt();
  for (Eigen::Index c = 0; c < dim; ++c)
    if (!(out.scale(c) > 1e-12)) out.scale(c) = 1.0;
  for (int c : raw) {
    require(c >= 0 && c < dim, ErrorCode::DimensionMismatch, "raw column " + std::to_string(c) + " outside series dimension");
    out.mean(c) = 0.0;
    out.scale(c) = 1.0;
  }
  return out;
}

}  // namespace egosocial

#endif

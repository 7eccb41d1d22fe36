#ifndef EGOSOCIAL_SYNTH_HPP
#define EGOSOCIAL_SYNTH_HPP

#include <algorithm>
#include <array>
#include <numeric>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "egosocial/error.hpp"
#include "egosocial/ingest.hpp"
#include "egosocial/random.hpp"
#include "egosocial/signals.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

/// Dirichlet regime centred on `target`; larger concentration, less spread.
struct ExpressionRegime {
  ExpressionProbs target{};
  double concentration = 10.0;
};

inline ExpressionRegime formal_regime() { return {{0.80, 0.07, 0.02, 0.04, 0.02, 0.01, 0.01, 0.03}, 60.0}; }
inline ExpressionRegime informal_regime() { return {{0.28, 0.46, 0.16, 0.03, 0.02, 0.01, 0.02, 0.02}, 4.0}; }
inline ExpressionRegime bystander_regime() { return {{0.86, 0.04, 0.02, 0.03, 0.02, 0.01, 0.01, 0.01}, 40.0}; }

/// Camera used by the generator: d = 0.01 h^2 - 4.4 h + 514, monotone on
/// h in [10, 220] px, covering 30..470 cm.
inline QuadraticDistanceModel synthetic_camera() {
  QuadraticDistanceModel m;
  m.a = 0.01;
  m.b = -4.4;
  m.c = 514.0;
  m.min_height = 10.0;
  m.max_height = 220.0;
  return m;
}

/// Inverse of the camera model on its decreasing branch.
inline double height_for_distance(const QuadraticDistanceModel& m, double distance_cm) {
  const double vertex_h = -m.b / (2.0 * m.a);
  const double d_min = m.evaluate(vertex_h);
  const double d_max = m.evaluate(m.min_height);
  const double d = std::clamp(distance_cm, d_min, d_max);
  const double disc = std::max(0.0, m.b * m.b - 4.0 * m.a * (m.c - d));
  return (-m.b - std::sqrt(disc)) / (2.0 * m.a);
}

struct SceneSpec {
  int person_count = 3;
  double interacting_fraction = 2.0 / 3.0;
  double ospace_radius_min = 50.0;  // cm
  double ospace_radius_max = 100.0;
  double bystander_radius_min = 180.0;
  double bystander_radius_max = 420.0;
  int length_min = 20;
  int length_max = 60;
  double height_noise_px = 1.5;
  double angle_noise_deg = 6.0;
  double expression_drift = 0.15;  // per-frame mixing weight of a fresh draw
  double position_jitter_cm = 6.0;
  double frame_dropout = 0.05;
  double frame_interval_s = 30.0;
  Category category = Category::Informal;
  ExpressionRegime formal = formal_regime();
  ExpressionRegime informal = informal_regime();
  ExpressionRegime bystander = bystander_regime();
  /// Bystanders placed and oriented like group members, so only their
  /// expressions (and not distance/yaw) tell them apart.
  bool adversarial_bystanders = false;
  QuadraticDistanceModel camera = synthetic_camera();

  void validate() const {
    require(person_count >= 0, ErrorCode::InvalidArgument, "person count must be >= 0");
    require(interacting_fraction >= 0.0 && interacting_fraction <= 1.0 && frame_dropout >= 0.0 && frame_dropout <= 1.0,
            ErrorCode::InvalidArgument, "fractions must be in [0, 1]");
    require(length_min >= 1 && length_max <= 200 && length_min <= length_max, ErrorCode::InvalidArgument,
            "sequence lengths must lie in [1, 200]");
    require(ospace_radius_min >= 0.0 && ospace_radius_max >= ospace_radius_min, ErrorCode::InvalidArgument,
            "invalid o-space radius range");
    require(bystander_radius_max >= bystander_radius_min && bystander_radius_min > 0.0, ErrorCode::InvalidArgument,
            "invalid bystander radius range");
  }

  int interacting_count() const { return static_cast<int>(std::lround(person_count * interacting_fraction)); }
};

/// Latent identity vectors plus the noise model used to draw face examples.
struct IdentityPool {
  Matrix identities;  // [people x dim], unit rows
  double event_drift = 0.6;
  double face_noise = 0.5;

  int size() const { return static_cast<int>(identities.rows()); }
};

inline std::string person_name(int index) {
  std::string s = std::to_string(index);
  return "p" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

inline IdentityPool make_identity_pool(int people, int dim, std::uint64_t seed, double drift = 0.6, double noise = 0.5) {
  require(people >= 1 && dim >= 2, ErrorCode::InvalidArgument, "identity pool needs people >= 1 and dim >= 2");
  IdentityPool pool;
  pool.event_drift = drift;
  pool.face_noise = noise;
  pool.identities.resize(people, dim);
  Rng rng(derive_seed(seed, 0x1d));
  for (int p = 0; p < people; ++p) {
    for (int k = 0; k < dim; ++k) pool.identities(p, k) = rng.normal();
    pool.identities.row(p).normalize();
  }
  return pool;
}

/// Face examples of one person in one event: identity + per-event drift +
/// per-face noise, normalized. Both offsets have expected norm as configured.
inline Matrix sample_face_examples(const IdentityPool& pool, int person, int faces, Rng& rng) {
  const Eigen::Index dim = pool.identities.cols();
  const double per_dim = 1.0 / std::sqrt(static_cast<double>(dim));
  Vector drift(dim);
  for (Eigen::Index k = 0; k < dim; ++k) drift(k) = pool.event_drift * per_dim * rng.normal();
  Matrix out(faces, dim);
  for (int f = 0; f < faces; ++f) {
    for (Eigen::Index k = 0; k < dim; ++k)
      out(f, k) = pool.identities(person, k) + drift(k) + pool.face_noise * per_dim * rng.normal();
    out.row(f).normalize();
  }
  return out;
}

/// Category templates for global scene descriptors.
struct DescriptorWorld {
  Vector formal;
  Vector informal;
  Vector shared;
  double separation = 0.8;  // weight of the category template

  Eigen::Index dim() const { return formal.size(); }
};

inline Vector sparse_template(Eigen::Index dim, double density, Rng& rng) {
  Vector v = Vector::Zero(dim);
  for (Eigen::Index k = 0; k < dim; ++k)
    if (rng.bernoulli(density)) v(k) = rng.uniform(0.5, 1.5);
  return v;
}

inline DescriptorWorld make_descriptor_world(int dim, double separation, std::uint64_t seed) {
  require(dim >= 8, ErrorCode::InvalidArgument, "descriptor dim must be >= 8");
  Rng rng(derive_seed(seed, 0xd5));
  DescriptorWorld w;
  w.formal = sparse_template(dim, 0.08, rng);
  w.informal = sparse_template(dim, 0.08, rng);
  w.shared = sparse_template(dim, 0.08, rng);
  w.separation = separation;
  return w;
}

struct AgentTruth {
  TrackId track_id = 0;
  bool interacting = false;
  std::optional<std::string> person;
  double x = 0.0, y = 0.0;       // cm, camera at origin looking along +y
  double facing_deg = 0.0;       // heading in the ground plane
  double ospace_x = 0.0, ospace_y = 0.0, ospace_radius = 0.0;
};

struct SyntheticSequence {
  SequenceRecord record;
  std::vector<AgentTruth> agents;  // nominal (noise-free) placement
};

struct SequenceContext {
  std::string sequence_id = "s0000";
  int day_index = 0;
  const DescriptorWorld* world = nullptr;  // no descriptors when null
  const IdentityPool* pool = nullptr;      // no embeddings when null
};

namespace detail {

inline ExpressionProbs draw_expression(const ExpressionRegime& regime, Rng& rng) {
  ExpressionProbs out{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kExpressionCount; ++k) {
    out[k] = rng.gamma(std::max(1e-3, regime.concentration * regime.target[k]));
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
  return out;
}

inline ExpressionProbs normalized(ExpressionProbs p) {
  double sum = 0.0;
  for (double v : p) sum += v;
  for (auto& v : p) v /= sum;
  return p;
}

inline double wrap_deg(double a) {
  while (a > 180.0) a -= 360.0;
  while (a <= -180.0) a += 360.0;
  return a;
}

inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Face yaw seen by the camera: signed angle between the agent's heading and
/// the direction from the agent back to the camera.
inline double yaw_toward_camera(double x, double y, double facing_deg) {
  const double to_camera = deg(std::atan2(-y, -x));
  return wrap_deg(facing_deg - to_camera);
}

}  // namespace detail

/// One labeled sequence: an F-formation that includes the camera wearer plus
/// bystanders, observed for 20-60 frames with sensor noise.
inline SyntheticSequence generate_sequence(const SceneSpec& spec, std::uint64_t seed, const SequenceContext& ctx = {}) {
  spec.validate();
  const int k_inter = spec.interacting_count();
  if (k_inter > 1 && spec.ospace_radius_max <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "infeasible geometry: zero o-space radius with several interacting agents");

  Rng rng(seed);
  SyntheticSequence out;
  SequenceRecord& rec = out.record;
  rec.sequence_id = ctx.sequence_id;
  rec.day_index = ctx.day_index;
  rec.frame_interval_s = spec.frame_interval_s;
  SequenceLabels labels;
  if (k_inter > 0) labels.category = spec.category;

  const int length = static_cast<int>(rng.uniform_int(spec.length_min, spec.length_max));
  const double radius = rng.uniform(spec.ospace_radius_min, spec.ospace_radius_max);
  const double cx = 0.0, cy = radius;  // the camera sits on the o-space circle

  std::vector<int> people;
  if (ctx.pool) {
    std::vector<int> all(static_cast<std::size_t>(ctx.pool->size()));
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    people.assign(all.begin(), all.begin() + std::min<std::ptrdiff_t>(spec.person_count, ctx.pool->size()));
  }

  const ExpressionRegime& group_regime = spec.category == Category::Formal ? spec.formal : spec.informal;
  struct AgentState {
    AgentTruth truth;
    double pitch = 0.0, roll = 0.0;
    ExpressionProbs base{};
    const ExpressionRegime* regime = nullptr;
    Matrix faces;
  };
  std::vector<AgentState> agents;
  for (int a = 0; a < spec.person_count; ++a) {
    AgentState s;
    s.truth.track_id = a + 1;
    s.truth.interacting = a < k_inter;
    s.truth.ospace_x = cx;
    s.truth.ospace_y = cy;
    s.truth.ospace_radius = radius;
    if (s.truth.interacting) {
      const double theta = -90.0 + 360.0 * (a + 1) / (k_inter + 1);
      s.truth.x = cx + radius * std::cos(detail::rad(theta));
      s.truth.y = cy + radius * std::sin(detail::rad(theta));
      s.truth.facing_deg = detail::deg(std::atan2(cy - s.truth.y, cx - s.truth.x));
      s.pitch = rng.normal(0.0, 4.0);
      s.roll = rng.normal(0.0, 3.0);
      s.regime = &group_regime;
    } else if (spec.adversarial_bystanders) {
      const double dist = rng.uniform(1.6 * spec.ospace_radius_min, 1.8 * std::max(spec.ospace_radius_max, 1.0));
      const double bearing = rng.uniform(-30.0, 30.0);
      s.truth.x = dist * std::sin(detail::rad(bearing));
      s.truth.y = dist * std::cos(detail::rad(bearing));
      const double yaw = rng.uniform(-35.0, 35.0);
      s.truth.facing_deg = detail::wrap_deg(detail::deg(std::atan2(-s.truth.y, -s.truth.x)) + yaw);
      s.pitch = rng.normal(0.0, 4.0);
      s.roll = rng.normal(0.0, 3.0);
      s.regime = &spec.bystander;
    } else {
      const double dist = rng.uniform(spec.bystander_radius_min, spec.bystander_radius_max);
      const double bearing = rng.uniform(-35.0, 35.0);
      s.truth.x = dist * std::sin(detail::rad(bearing));
      s.truth.y = dist * std::cos(detail::rad(bearing));
      const double yaw = rng.uniform(-85.0, 85.0);
      s.truth.facing_deg = detail::wrap_deg(detail::deg(std::atan2(-s.truth.y, -s.truth.x)) + yaw);
      s.pitch = rng.uniform(-35.0, 15.0);
      s.roll = rng.uniform(-20.0, 20.0);
      s.regime = &spec.bystander;
    }
    s.base = detail::draw_expression(*s.regime, rng);
    if (ctx.pool && a < static_cast<int>(people.size())) {
      s.truth.person = person_name(people[static_cast<std::size_t>(a)]);
      s.faces = sample_face_examples(*ctx.pool, people[static_cast<std::size_t>(a)], length, rng);
      labels.persons[s.truth.track_id] = *s.truth.person;
    }
    labels.interacting[s.truth.track_id] = s.truth.interacting;
    agents.push_back(std::move(s));
  }

  std::optional<Vector> scene;
  if (ctx.world) {
    const DescriptorWorld& w = *ctx.world;
    const Vector& category_template =
        k_inter == 0 ? w.shared : (spec.category == Category::Formal ? w.formal : w.informal);
    scene = w.separation * category_template + (1.0 - w.separation) * w.shared +
            0.5 * sparse_template(w.dim(), 0.04, rng);
  }

  // Each agent is visible in its first frame; later frames drop out at random.
  std::vector<std::vector<bool>> visible(agents.size(), std::vector<bool>(static_cast<std::size_t>(length), true));
  for (auto& v : visible)
    for (int t = 1; t < length; ++t) v[static_cast<std::size_t>(t)] = !rng.bernoulli(spec.frame_dropout);

  const double start_s = std::round(rng.uniform(8.0 * 3600.0, 20.0 * 3600.0));
  for (int t = 0; t < length; ++t) {
    FrameEntry frame;
    frame.frame_id = t;
    frame.timestamp_s = start_s + t * spec.frame_interval_s;
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const AgentState& s = agents[a];
      const double x = s.truth.x + spec.position_jitter_cm * rng.normal();
      const double y = s.truth.y + spec.position_jitter_cm * rng.normal();
      const double distance = std::hypot(x, y);
      FrameObservation o;
      o.frame_id = t;
      o.track_id = s.truth.track_id;
      o.face_height = std::max(5.0, height_for_distance(spec.camera, distance) + spec.height_noise_px * rng.normal());
      o.x_pos = std::clamp(0.5 + detail::deg(std::atan2(x, y)) / 70.0, 0.0, 1.0);
      o.yaw = std::clamp(detail::yaw_toward_camera(s.truth.x, s.truth.y, s.truth.facing_deg) +
                             spec.angle_noise_deg * rng.normal(), -90.0, 90.0);
      o.pitch = std::clamp(s.pitch + spec.angle_noise_deg * rng.normal(), -90.0, 90.0);
      o.roll = std::clamp(s.roll + spec.angle_noise_deg * rng.normal(), -90.0, 90.0);
      const ExpressionProbs fresh = detail::draw_expression(*s.regime, rng);
      ExpressionProbs mix{};
      for (std::size_t k = 0; k < kExpressionCount; ++k)
        mix[k] = (1.0 - spec.expression_drift) * s.base[k] + spec.expression_drift * fresh[k];
      o.expression = detail::normalized(mix);
      if (s.faces.size() > 0) {
        o.embedding.assign(s.faces.row(t).data(), s.faces.row(t).data() + s.faces.cols());
      }
      if (visible[a][static_cast<std::size_t>(t)]) frame.faces.push_back(std::move(o));
    }
    if (scene) {
      std::vector<float> d(static_cast<std::size_t>(scene->size()));
      for (Eigen::Index k = 0; k < scene->size(); ++k) {
        double v = (*scene)(k);
        if (rng.bernoulli(0.05)) v += std::abs(rng.normal(0.0, 0.3));
        d[static_cast<std::size_t>(k)] = static_cast<float>(v * rng.uniform(0.9, 1.1));
      }
      frame.descriptor = std::move(d);
    }
    rec.frames.push_back(std::move(frame));
  }
  rec.labels = std::move(labels);
  for (auto& s : agents) out.agents.push_back(s.truth);
  return out;
}

struct DatasetSpec {
  SceneSpec scene;
  int interacting = 50;
  int non_interacting = 50;
  int formal = 25;  // among the interacting sequences
  int observation_days = 30;
  bool descriptors = true;
  int descriptor_dim = 256;
  double descriptor_separation = 0.8;
  bool embeddings = true;
  int identities = 40;
  int embedding_dim = 64;
  double embedding_drift = 0.6;
  double embedding_noise = 0.5;
  int calibration_persons = 3;
  double calibration_noise_px = 1.0;
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
};

struct SyntheticDataset {
  std::vector<SequenceRecord> sequences;  // sorted by id
  std::vector<CalibrationPoint> calibration;
  int observation_days = 1;
};

inline constexpr std::array<double, 7> kCalibrationDistances = {30, 50, 70, 100, 150, 200, 250};

/// Calibration table: each person stands at the seven reference distances.
inline std::vector<CalibrationPoint> synthetic_calibration(const QuadraticDistanceModel& camera, int persons,
                                                           double noise_px, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xca));
  std::vector<CalibrationPoint> out;
  for (int p = 0; p < persons; ++p)
    for (double d : kCalibrationDistances)
      out.push_back({height_for_distance(camera, d) + noise_px * rng.normal(), d});
  return out;
}

inline SyntheticDataset generate_dataset(const DatasetSpec& spec) {
  require(spec.interacting >= 0 && spec.non_interacting >= 0 && spec.interacting + spec.non_interacting >= 1,
          ErrorCode::InvalidArgument, "sequence counts must be >= 1 in total");
  require(spec.formal >= 0 && spec.formal <= spec.interacting, ErrorCode::InvalidArgument,
          "formal count must not exceed the interacting count");
  require(spec.observation_days >= 1, ErrorCode::InvalidArgument, "observation days must be >= 1");

  std::optional<DescriptorWorld> world;
  if (spec.descriptors) world = make_descriptor_world(spec.descriptor_dim, spec.descriptor_separation, spec.seed);
  std::optional<IdentityPool> pool;
  if (spec.embeddings)
    pool = make_identity_pool(std::max(spec.identities, spec.scene.person_count), spec.embedding_dim, spec.seed,
                              spec.embedding_drift, spec.embedding_noise);

  const int total = spec.interacting + spec.non_interacting;
  std::vector<int> slots(static_cast<std::size_t>(total));
  std::iota(slots.begin(), slots.end(), 0);
  Rng rng(derive_seed(spec.seed, 0x5e));
  rng.shuffle(slots);

  SyntheticDataset out;
  out.observation_days = spec.observation_days;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(total).size()));
  for (int i = 0; i < total; ++i) {
    SceneSpec scene = spec.scene;
    if (i >= spec.interacting) scene.interacting_fraction = 0.0;
    scene.category = i < spec.formal ? Category::Formal : Category::Informal;
    std::string number = std::to_string(slots[static_cast<std::size_t>(i)]);
    SequenceContext ctx;
    ctx.sequence_id = spec.id_prefix + std::string(static_cast<std::size_t>(width) - number.size(), '0') + number;
    ctx.day_index = static_cast<int>(derive_seed(spec.seed, 0xda00 + static_cast<std::uint64_t>(i)) %
                                     static_cast<std::uint64_t>(spec.observation_days));
    ctx.world = world ? &*world : nullptr;
    ctx.pool = pool ? &*pool : nullptr;
    out.sequences.push_back(generate_sequence(scene, derive_seed(spec.seed, static_cast<std::uint64_t>(i) + 1), ctx).record);
  }
  std::sort(out.sequences.begin(), out.sequences.end(),
            [](const SequenceRecord& a, const SequenceRecord& b) { return a.sequence_id < b.sequence_id; });
  out.calibration = synthetic_calibration(spec.scene.camera, spec.calibration_persons, spec.calibration_noise_px, spec.seed);
  return out;
}

/// Writes <dir>/manifest.json, <dir>/calibration.txt and one record file
/// (plus descriptor sidecar) per sequence under <dir>/sequences.
inline fs::path write_dataset(const SyntheticDataset& data, const fs::path& dir,
                              DescriptorStorage storage = DescriptorStorage::Sidecar) {
  fs::create_directories(dir / "sequences");
  DatasetManifest manifest;
  manifest.observation_days = data.observation_days;
  for (const auto& seq : data.sequences) {
    const fs::path path = dir / "sequences" / (seq.sequence_id + ".jsonl");
    write_sequence_file(seq, path, storage);
    manifest.sequence_files.push_back(path);
  }
  const fs::path calibration = dir / "calibration.txt";
  write_calibration(data.calibration, calibration);
  manifest.calibration = calibration;
  manifest.feature_settings = {FeatureSetting::SID4, FeatureSetting::SIC3};
  const fs::path manifest_path = dir / "manifest.json";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace egosocial

#endif

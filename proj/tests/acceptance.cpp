// One PASS/FAIL line per acceptance criterion. Optional argument: a
// substring selecting which criteria to run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "egosocial/augment.hpp"
#include "egosocial/cluster.hpp"
#include "egosocial/lstm.hpp"
#include "egosocial/patterns.hpp"
#include "egosocial/pipeline.hpp"
#include "egosocial/signals.hpp"
#include "egosocial/synth.hpp"
#include "facesets.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"
#include "profile_fixture.hpp"

using namespace egosocial;

namespace {

// Pinned thresholds.
constexpr double kGradTolerance = 1e-5;
constexpr double kGradSeconds = 30.0;
constexpr double kDetectionAccuracy = 0.90;
constexpr double kDetectionSeconds = 300.0;
constexpr double kCategorizationAccuracy = 0.90;
constexpr double kTableTolerance = 1e-4;
constexpr double kDiversityTolerance = 5e-3;
constexpr double kOrthonormality = 1e-8;
constexpr double kDiagonality = 1e-6;
constexpr double kOracleAgreement = 1e-8;
constexpr double kClusterF = 0.9;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---------------------------------------------------------------------------

void gradient(Verdict& v) {
  const auto start = Clock::now();
  double worst = 0.0;
  std::set<std::string> blocks;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    auto [net, s] = gradcheck::random_case(1000 + seed, 1 + static_cast<int>(seed % 5), 4, 10);
    const auto r = gradcheck::check(net, s, seed % 2 == 0);
    worst = std::max(worst, r.max_relative_error);
  }
  const double t = seconds_since(start);
  v.detail << "24 networks (10 steps, 4 cells), max relative error " << worst << ", " << t << " s";
  v.require(worst < kGradTolerance, "relative error");
  v.require(t < kGradSeconds, "runtime");
}

// ---------------------------------------------------------------------------
// End-to-end pipelines on synthetic corpora

DatasetSpec corpus_spec(int interacting, int non_interacting, std::uint64_t seed) {
  DatasetSpec d;
  d.interacting = interacting;
  d.non_interacting = non_interacting;
  d.formal = interacting / 2;
  d.embeddings = false;
  d.seed = seed;
  return d;
}

struct Split {
  SyntheticDataset train, test;
};

// Every third sequence (by id) goes to the test side, 300 -> 200 / 100.
Split split(const SyntheticDataset& all) {
  Split s;
  s.train.calibration = s.test.calibration = all.calibration;
  for (std::size_t k = 0; k < all.sequences.size(); ++k) (k % 3 == 2 ? s.test : s.train).sequences.push_back(all.sequences[k]);
  return s;
}

// Adversarial bystanders stand and face like group members; only their
// expressions differ, so groups are informal there.
Split detection_corpus(bool adversarial) {
  auto spec = corpus_spec(150, 150, adversarial ? 13 : 11);
  spec.descriptors = false;
  spec.scene.adversarial_bystanders = adversarial;
  if (adversarial) spec.formal = 0;
  return split(generate_dataset(spec));
}

double detection_accuracy(const Split& data, FeatureSetting setting, std::uint64_t seed, int threads = 1) {
  FeatureExtractor f;
  f.setting = setting;
  f.distance_model = fit_distance_model(data.train.calibration);
  const auto train = build_series_set(data.train.sequences, f).series;
  const auto test = build_series_set(data.test.sequences, f).series;
  auto config = preset_config(setting, static_cast<int>(train.front().dim()));
  config.rng_seed = seed;
  const auto model = train_classifier(train, config, true, {threads});
  return evaluate(model.network, test).accuracy;
}

void detection(Verdict& v) {
  const auto start = Clock::now();
  const auto data = detection_corpus(false);
  const double acc = detection_accuracy(data, FeatureSetting::SID4, 1);
  const double t = seconds_since(start);
  v.detail << "SID4 preset, 200/100 sequences: test accuracy " << acc << ", " << t << " s";
  v.require(acc >= kDetectionAccuracy, "accuracy");
  v.require(t < kDetectionSeconds, "runtime");
}

void detection_ordering(Verdict& v) {
  const auto data = detection_corpus(true);
  const double sid1 = detection_accuracy(data, FeatureSetting::SID1, 1);
  const double sid4 = detection_accuracy(data, FeatureSetting::SID4, 1);
  v.detail << "adversarial bystanders: SID1 " << sid1 << " < SID4 " << sid4;
  v.require(sid1 < sid4, "ordering");
}

struct CategorizationRun {
  double sic1 = 0.0, sic3 = 0.0;
  std::size_t train = 0, test = 0;
};

CategorizationRun run_categorization() {
  const auto data = split(generate_dataset(corpus_spec(300, 0, 21)));
  const auto& train_data = data.train;
  const auto& test_data = data.test;
  CategorizationRun run;
  for (auto setting : {FeatureSetting::SIC1, FeatureSetting::SIC3}) {
    FeatureExtractor f;
    f.setting = setting;
    f.pca = fit_pca(quantized_corpus(social_sequences(train_data.sequences), f.q), 0.95);
    const auto train = build_series_set(train_data.sequences, f).series;
    const auto test = build_series_set(test_data.sequences, f).series;
    auto config = preset_config(setting, static_cast<int>(train.front().dim()));
    config.rng_seed = 3;
    const auto model = train_classifier(train, config);
    (setting == FeatureSetting::SIC1 ? run.sic1 : run.sic3) = evaluate(model.network, test).accuracy;
    run.train = train.size();
    run.test = test.size();
  }
  return run;
}

void categorization(Verdict& v) {
  const auto start = Clock::now();
  const auto r = run_categorization();
  v.detail << r.train << "/" << r.test << " sequences: SIC3 " << r.sic3 << ", SIC1 " << r.sic1 << ", "
           << seconds_since(start) << " s";
  v.require(r.sic3 >= kCategorizationAccuracy, "SIC3 accuracy");
  v.require(r.sic3 >= r.sic1, "SIC3 >= SIC1");
}

// ---------------------------------------------------------------------------

void profile_arithmetic(Verdict& v) {
  const auto p = build_profile(profile_fixture::events(), profile_fixture::kDays);
  v.detail << "F = (" << p.f_formal << ", " << p.f_informal << "), A = (" << *p.a_formal << ", " << *p.a_informal
           << "), D = " << *p.diversity;
  v.require(std::abs(p.f_formal - 0.8333) <= kTableTolerance, "F formal");
  v.require(std::abs(p.f_informal - 2.50) <= kTableTolerance, "F informal");
  v.require(std::abs(*p.a_formal - 0.25) <= kTableTolerance, "A formal");
  v.require(std::abs(*p.a_informal - 0.75) <= kTableTolerance, "A informal");
  v.require(std::abs(*p.diversity - 0.8774) <= kDiversityTolerance, "D");
}

void diversity_properties(Verdict& v) {
  v.require(diversity(0.5, 0.5) == 1.0, "D(0.5, 0.5) == 1");
  double lo = 1.0, hi = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double a = k / 1000.0;
    const double d = diversity(a, 1.0 - a);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    v.require(d == diversity(1.0 - a, a), "symmetry at " + std::to_string(a));
  }
  v.detail << "1001-point sweep range [" << lo << ", " << hi << "]";
  v.require(lo >= 0.5 && hi <= 1.0, "range");
}

void quantization(Verdict& v) {
  const auto w = quantize_descriptor(std::vector<double>{0.7, 0.3}, 2);
  v.require(w == std::vector<int>{1, 0}, "Q=2 on (0.7, 0.3)");
  const auto n = quantize_descriptor(std::vector<double>{0.7 / std::hypot(0.7, 0.3), 0.3 / std::hypot(0.7, 0.3)}, 2);
  v.require(n == std::vector<int>{1, 0}, "Q=2 on normalized input");
  const auto e = quantize_descriptor(std::vector<double>{0.5, 0.5, 0.5, 0.5}, 2);
  v.require(e == std::vector<int>{1, 1, 1, 1}, "Q=2 at the 0.5 boundary");
  const auto below = quantize_descriptor(std::vector<double>{0.49, 0.87}, 2);
  v.require(below[0] == 0, "Q=2 just below 0.5");

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double zeros15 = 0.0, zeros100 = 0.0, total = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(4096);
    for (auto& x : d) x = u(gen) * u(gen) * u(gen);
    const auto a = quantize_descriptor(d, 15), b = quantize_descriptor(d, 100);
    for (std::size_t k = 0; k < d.size(); ++k) {
      zeros15 += a[k] == 0;
      zeros100 += b[k] == 0;
      total += 1;
    }
  }
  v.detail << "sparsity Q=15 " << zeros15 / total << " > Q=100 " << zeros100 / total;
  v.require(zeros15 > zeros100, "sparsity ordering");
}

void pca(Verdict& v) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix rows(300, 12);
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index c = 0; c < rows.cols(); ++c) rows(r, c) = z(gen) * (1.0 + 2.0 * std::exp(-0.5 * c)) + 0.3 * rows(r, 0);
  const auto m = fit_pca(rows, 0.95);
  const double ortho = (m.components * m.components.transpose() - Matrix::Identity(m.output_dim(), m.output_dim()))
                           .cwiseAbs()
                           .maxCoeff();
  const Matrix proj = m.project_rows(rows);
  const Matrix centered = proj.rowwise() - proj.colwise().mean();
  Matrix cov = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  double off = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j)
      if (i != j) off = std::max(off, std::abs(cov(i, j)));

  oracle::Mat o;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    o.emplace_back();
    for (Eigen::Index c = 0; c < rows.cols(); ++c) o.back().push_back(rows(r, c));
  }
  const auto ref = oracle::jacobi(oracle::covariance(o));
  double agree = 0.0;
  for (Eigen::Index k = 0; k < m.output_dim(); ++k) {
    agree = std::max(agree, std::abs(m.variances(k) - ref.values[static_cast<std::size_t>(k)]) / ref.values[0]);
    double dot = 0.0;
    for (Eigen::Index i = 0; i < m.input_dim(); ++i) dot += m.components(k, i) * ref.vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    agree = std::max(agree, std::abs(std::abs(dot) - 1.0));
  }
  v.detail << m.output_dim() << " of 12 components, retained " << m.retained_fraction << ", orthonormality " << ortho
           << ", off-diagonal " << off << ", oracle gap " << agree;
  v.require(ortho <= kOrthonormality, "orthonormality");
  v.require(m.retained_fraction >= 0.95, "retained variance");
  v.require(off <= kDiagonality, "diagonal covariance");
  v.require(agree <= kOracleAgreement, "oracle agreement");
}

void augmentation(Verdict& v) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<TimeSeries> set;
  for (int n = 0; n < 20; ++n) {
    TimeSeries s;
    s.setting = FeatureSetting::SID4;
    s.sequence_id = "a" + std::to_string(n);
    s.label = n % 2 == 0;
    s.values.resize(20 + n, 5);
    for (Eigen::Index t = 0; t < s.values.rows(); ++t) {
      for (int c = 0; c < 4; ++c) s.values(t, c) = z(gen) * (c + 1);
      s.values(t, 4) = 1 + static_cast<int>(t % 8);
    }
    set.push_back(s);
  }
  const std::vector<int> frozen{4};
  const auto basis = fit_eigenbasis(set, frozen);
  const auto out = augment(set, basis, {.multiplier = 5, .noise_sigma = 0.01, .frozen_dims = frozen, .rng_seed = 3});
  v.require(out.size() == 5 * set.size(), "cardinality");
  bool frozen_equal = true;
  for (std::size_t k = 0; k < out.size(); ++k) frozen_equal = frozen_equal && out[k].values.col(4) == set[k / 5].values.col(4);
  v.require(frozen_equal, "frozen columns");
  const auto still = augment(set, basis, {.multiplier = 3, .noise_sigma = 0.0, .frozen_dims = frozen, .rng_seed = 3});
  bool identity = true;
  for (std::size_t k = 0; k < still.size(); ++k) identity = identity && still[k].values == set[k / 3].values;
  v.require(identity, "zero sigma");

  // 10^4 perturbation draws per column
  std::vector<TimeSeries> one{set[0]};
  const auto many = augment(one, basis, {.multiplier = 501, .noise_sigma = 0.01, .frozen_dims = frozen, .rng_seed = 4});
  double worst = 0.0;
  for (int c = 0; c < 4; ++c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < many.size(); ++k)
      for (Eigen::Index t = 0; t < set[0].steps(); ++t) d.push_back(many[k].values(t, c) - set[0].values(t, c));
    double mean = 0.0, sq = 0.0;
    for (double x : d) mean += x / static_cast<double>(d.size());
    for (double x : d) sq += (x - mean) * (x - mean);
    const double bound = 3.0 * std::sqrt(sq / static_cast<double>(d.size() - 1)) / std::sqrt(static_cast<double>(d.size()));
    worst = std::max(worst, std::abs(mean) / bound);
  }
  v.detail << "Δ·N = " << out.size() << ", zero-mean |mean| / (3σ/√n) max " << worst << " over 10000 draws";
  v.require(worst < 1.0, "zero mean");
}

void clustering(Verdict& v) {
  bool agree = true;
  for (std::uint64_t seed : {1, 2}) {
    auto sets = facesets::corpus(10, 5, seed, 32);  // 50 face-sets
    std::sort(sets.begin(), sets.end(), [](const FaceSet& a, const FaceSet& b) { return a.id < b.id; });
    const auto d = facesets::oracle_dissimilarities(sets);
    const double cutoff = calibrate_cutoff(sets);
    const auto r = agglomerate(sets, cutoff);
    std::map<FaceSetId, std::size_t> pos;
    for (std::size_t k = 0; k < sets.size(); ++k) pos[sets[k].id] = k;
    std::vector<std::vector<std::size_t>> mine;
    for (const auto& c : r.clusters) {
      mine.emplace_back();
      for (const auto& id : c) mine.back().push_back(pos[id]);
    }
    std::sort(mine.begin(), mine.end());
    agree = agree && mine == oracle::agglomerate(d, cutoff, oracle::Link::Single);
  }
  v.require(agree, "oracle agreement");

  const auto learning = facesets::corpus(40, 8, 101);
  const auto test = facesets::corpus(40, 8, 202);
  const double cutoff = calibrate_cutoff(learning);
  const auto result = agglomerate(test, cutoff);
  const auto score = pairwise_score(result, test);
  v.require(score.f_score >= kClusterF, "F-score");

  bool monotone = true;
  std::size_t previous = test.size() + 1;
  for (double c = 0.0; c <= 0.6; c += 0.01) {
    const auto n = agglomerate(test, c).clusters.size();
    monotone = monotone && n <= previous;
    previous = n;
  }
  v.require(monotone, "monotonicity");
  v.detail << "oracle agreement on 50 face-sets; 40 identities / " << test.size() << " face-sets -> "
           << result.clusters.size() << " clusters, pairwise F " << score.f_score << " (P " << score.precision
           << ", R " << score.recall << ") at calibrated cutoff " << cutoff;
}

void determinism(Verdict& v) {
  testing::TempDir a, b;
  DatasetSpec spec;
  spec.interacting = 12;
  spec.non_interacting = 8;
  spec.formal = 6;
  spec.descriptor_dim = 64;
  spec.identities = 8;
  spec.seed = 77;
  const auto ma = write_dataset(generate_dataset(spec), a.path());
  write_dataset(generate_dataset(spec), b.path());
  bool same = true;
  for (const auto& e : fs::directory_iterator(a.path() / "sequences"))
    same = same && testing::slurp(e.path()) == testing::slurp(b.path() / "sequences" / e.path().filename());
  v.require(same, "synth files");

  const auto manifest = load_manifest(ma);
  const auto seqs = load_sequences(manifest).sequences;
  std::vector<std::string> docs;
  for (auto setting : {FeatureSetting::SID4, FeatureSetting::SIC3}) {
    const auto f = fit_features(manifest, seqs, setting);
    const auto series = build_series_set(seqs, f).series;
    auto spec_aug = AugmentSpec{.multiplier = 3, .noise_sigma = 0.01, .frozen_dims = raw_columns(setting, series.front().dim()), .rng_seed = 5};
    const auto augmented = augment(series, fit_eigenbasis(series, spec_aug.frozen_dims), spec_aug);
    auto config = preset_config(setting, static_cast<int>(series.front().dim()));
    config.epochs = 3;
    config.cell_count = 12;
    config.dropout_rate = 0.3;
    config.batch_size = 7;
    config.rng_seed = 8;
    std::string ref;
    for (int threads : {1, 1, 8}) {
      const auto r = train_classifier(augmented, config, true, {threads});
      std::ostringstream doc;
      ModelBundle bundle{task_of(setting), setting, r.network, f.distance_model, f.pca, f.q, 8};
      doc << to_json(bundle).dump() << to_json(r.report).dump();
      for (const auto& s : augmented) doc << to_json(s).dump();
      if (ref.empty()) ref = doc.str();
      v.require(doc.str() == ref, std::string(to_string(setting)) + " threads " + std::to_string(threads));
    }
    docs.push_back(ref);
  }
  const auto sets = face_sets_from_sequences(seqs);
  const auto c1 = to_json(agglomerate(sets, calibrate_cutoff(sets))).dump();
  auto shuffled = sets;
  std::reverse(shuffled.begin(), shuffled.end());
  v.require(to_json(agglomerate(shuffled, calibrate_cutoff(shuffled))).dump() == c1, "clustering");
  const auto f = fit_features(manifest, seqs, FeatureSetting::SID1);
  const auto series = build_series_set(seqs, f).series;
  auto base = preset_config(FeatureSetting::SID1, 2);
  SearchSpace tiny;
  tiny.learning_rate.values = {0.01};
  tiny.momentum.values = {0.5};
  tiny.dropout.values = {0.0, 0.2};
  tiny.batch_size.values = {8};
  tiny.epochs.values = {2};
  tiny.cells.values = {5};
  const auto g1 = to_json(grid_search(series, tiny, base, 3, true, {1})).dump();
  const auto g8 = to_json(grid_search(series, tiny, base, 3, true, {8})).dump();
  v.require(g1 == g8, "grid search");
  v.detail << "synth files, series, augmentation, training (SID4, SIC3), clustering, grid search: identical across runs and 1 vs 8 threads";
}

struct Criterion {
  std::string name;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria{
      {"gradient-check", gradient},
      {"detection-sid4", detection},
      {"detection-ordering", detection_ordering},
      {"categorization", categorization},
      {"profile-table", profile_arithmetic},
      {"diversity", diversity_properties},
      {"quantization", quantization},
      {"pca", pca},
      {"augmentation", augmentation},
      {"clustering", clustering},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    Verdict v;
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", c.name.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

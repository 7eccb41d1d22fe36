#ifndef EGOSOCIAL_CLI_HPP
#define EGOSOCIAL_CLI_HPP

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "egosocial/pipeline.hpp"
#include "egosocial/synth.hpp"

namespace egosocial::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Every flag of every subcommand. Unset optionals mean "not given".
struct RunConfig {
  std::string manifest;
  std::string calibration;
  std::string series;
  std::string features;
  std::string features_out;
  std::string setting;
  std::string preset;
  std::string model;
  std::string out;
  std::string report;
  std::string svg;
  std::string events;
  std::string clusters;
  std::string detections;
  std::string categories;
  std::string learning_manifest;
  std::string linkage = "single";
  std::uint64_t seed = 42;
  int threads = 1;
  int q = 15;
  double variance = 0.95;
  std::optional<double> cutoff;
  int delta = 1;
  double sigma = 0.01;
  std::vector<int> frozen;
  bool frozen_given = false;
  bool no_standardize = false;
  bool interacting_only = false;
  std::optional<double> learning_rate;
  std::optional<double> momentum;
  std::optional<double> dropout;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<int> cells;
  int samples = 2;
  int folds = 3;
  std::optional<int> days;
  int week = 0;
  // synth
  int interacting = 50;
  int non_interacting = 50;
  int formal = 25;
  int synth_days = 30;
  int identities = 40;
  int persons = 3;
  int descriptor_dim = 256;
  double separation = 0.8;
  bool adversarial = false;
  bool inline_descriptors = false;
  bool quiet = false;
};

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::vector<std::string> setting_names() { return {"SID1", "SID2", "SID3", "SID4", "SIC1", "SIC2", "SIC3"}; }

inline FeatureSetting setting_or(const RunConfig& c, FeatureSetting fallback) {
  return c.setting.empty() ? fallback : parse_setting(c.setting);
}

struct Dataset {
  DatasetManifest manifest;
  DatasetLoad load;
};

inline Dataset load_dataset(const std::string& path) {
  Dataset d;
  d.manifest = load_manifest(path);
  d.load = load_sequences(d.manifest);
  return d;
}

inline NetworkConfig network_config(const RunConfig& c, FeatureSetting setting, int input_dim) {
  NetworkConfig cfg = preset_config(c.preset.empty() ? setting : parse_setting(c.preset), input_dim);
  if (c.learning_rate) cfg.learning_rate = *c.learning_rate;
  if (c.momentum) cfg.momentum = *c.momentum;
  if (c.dropout) cfg.dropout_rate = *c.dropout;
  if (c.batch_size) cfg.batch_size = *c.batch_size;
  if (c.epochs) cfg.epochs = *c.epochs;
  if (c.cells) cfg.cell_count = *c.cells;
  cfg.rng_seed = c.seed;
  cfg.validate();
  return cfg;
}

/// Training or evaluation input: a series file (optionally with its feature
/// extractor) or a manifest, from which features are fitted or taken from
/// `given`.
struct SeriesInput {
  std::vector<TimeSeries> series;
  std::optional<FeatureExtractor> features;
  FeatureSetting setting = FeatureSetting::SID4;
  SeriesWarnings warnings;
};

inline SeriesInput series_input(const RunConfig& c, const std::optional<FeatureExtractor>& given) {
  SeriesInput in;
  if (!c.series.empty()) {
    in.series = read_series_file(c.series);
    if (in.series.empty()) throw Error(ErrorCode::EmptyInput, c.series + ": no series");
    in.setting = in.series.front().setting;
    for (const auto& s : in.series)
      require(s.setting == in.setting, ErrorCode::MalformedRecord, c.series + ": mixed feature settings");
    if (!c.setting.empty()) {
      const auto target = parse_setting(c.setting);
      for (auto& s : in.series) s = select_setting(s, target);
      in.setting = target;
    }
    if (given) in.features = given;
    else if (!c.features.empty()) in.features = features_from_json(read_json(c.features));
    if (in.features) in.features->setting = in.setting;
    return in;
  }
  const auto data = load_dataset(c.manifest);
  if (given) {
    in.features = given;
    if (!c.setting.empty()) in.features->setting = parse_setting(c.setting);
  } else {
    if (c.setting.empty()) throw Error(ErrorCode::InvalidArgument, "--setting is required with --manifest");
    in.features = fit_features(data.manifest, data.load.sequences, parse_setting(c.setting), c.q, c.variance);
  }
  in.setting = in.features->setting;
  auto built = build_series_set(data.load.sequences, *in.features);
  in.series = std::move(built.series);
  in.warnings = built.warnings;
  if (in.series.empty()) throw Error(ErrorCode::EmptyInput, c.manifest + ": no series for " + std::string(to_string(in.setting)));
  return in;
}

inline std::vector<int> frozen_columns(const RunConfig& c, const TimeSeries& sample) {
  if (c.frozen_given) return c.frozen;
  return raw_columns(sample.setting, sample.dim());
}

inline void print_metrics(std::ostream& out, const Metrics& m) {
  out << "precision " << fixed(m.precision) << "  recall " << fixed(m.recall) << "  accuracy " << fixed(m.accuracy)
      << "  (tp " << m.tp << ", fp " << m.fp << ", tn " << m.tn << ", fn " << m.fn << ")\n";
}

inline std::vector<InteractionEvent> events_input(const RunConfig& c, int& days) {
  if (!c.events.empty()) {
    auto log = event_log_from_json(read_json(c.events));
    days = c.days.value_or(log.observation_days);
    return log.events;
  }
  const auto data = load_dataset(c.manifest);
  days = c.days.value_or(data.manifest.observation_days);
  std::optional<Json> det, cat;
  if (!c.detections.empty()) det = read_json(c.detections);
  if (!c.categories.empty()) cat = read_json(c.categories);
  const auto outcomes = sequence_outcomes(data.load.sequences, det ? &*det : nullptr, cat ? &*cat : nullptr);
  std::optional<std::map<FaceSetId, std::size_t>> assignment;
  if (!c.clusters.empty()) assignment = cluster_result_from_json(read_json(c.clusters)).assignment();
  return events_from_sequences(data.load.sequences, &outcomes, assignment ? &*assignment : nullptr);
}

}  // namespace detail

class Cli {
 public:
  Cli() : app_(std::make_unique<CLI::App>("Social-pattern analysis of egocentric photo-stream features")) { build(); }

  CLI::App& app() { return *app_; }
  const RunConfig& config() const { return cfg_; }

  int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
      app_->parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      const auto subs = app_->get_subcommands();
      out << (subs.empty() ? app_->help() : subs.front()->help());
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app_->help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      const auto subs = app_->get_subcommands();
      err << (subs.empty() ? app_->help() : subs.front()->help());
      return kExitUsage;
    }
    const auto subs = app_->get_subcommands();
    if (subs.empty()) {
      err << app_->help();
      return kExitUsage;
    }
    const std::string name = subs.front()->get_name();
    try {
      dispatch(name, out, err);
      return kExitOk;
    } catch (const Error& e) {
      err << name << ": " << e.what() << "\n";
      return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitData;
    } catch (const Json::exception& e) {
      err << name << ": malformed document: " << e.what() << "\n";
      return kExitData;
    } catch (const std::exception& e) {
      err << name << ": " << e.what() << "\n";
      return kExitData;
    }
  }

 private:
  std::unique_ptr<CLI::App> app_;
  RunConfig cfg_;

  void build() {
    CLI::App& app = *app_;
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");
    auto settings = CLI::IsMember(detail::setting_names(), CLI::ignore_case);
    auto presets = CLI::IsMember(detail::setting_names(), CLI::ignore_case);

    auto manifest = [&](CLI::App* s, bool required) {
      auto* o = s->add_option("--manifest", cfg_.manifest, "Dataset manifest (JSON)")->check(CLI::ExistingFile);
      if (required) o->required();
      return o;
    };
    auto out_file = [&](CLI::App* s, const std::string& what) {
      return s->add_option("--out", cfg_.out, what)->required();
    };
    auto seed = [&](CLI::App* s) { s->add_option("--seed", cfg_.seed, "Random seed")->capture_default_str(); };
    auto threads = [&](CLI::App* s) {
      s->add_option("--threads", cfg_.threads, "Worker threads for gradient computation")->capture_default_str()
          ->check(CLI::Range(1, 256));
    };
    auto quant = [&](CLI::App* s) {
      s->add_option("--q", cfg_.q, "Descriptor quantization factor")->capture_default_str()->check(CLI::Range(2, 1000000));
      s->add_option("--variance", cfg_.variance, "Variance fraction retained by PCA")->capture_default_str()
          ->check(CLI::Range(1e-6, 1.0));
    };
    auto setting = [&](CLI::App* s, const std::string& what) {
      return s->add_option("--setting", cfg_.setting, what)->transform(settings);
    };
    auto quiet = [&](CLI::App* s) { s->add_flag("--quiet", cfg_.quiet, "Suppress the human-readable summary"); };
    auto augmentation = [&](CLI::App* s) {
      s->add_option("--delta", cfg_.delta, "Augmentation multiplier (output size = delta x input size)")->capture_default_str()
          ->check(CLI::Range(1, 1000));
      s->add_option("--sigma", cfg_.sigma, "Standard deviation of the eigen-perturbation weights")->capture_default_str()
          ->check(CLI::NonNegativeNumber);
      s->add_option("--frozen", cfg_.frozen, "Columns copied unchanged (default: expression columns)")
          ->each([&](const std::string&) { cfg_.frozen_given = true; });
    };
    auto series_or_manifest = [&](CLI::App* s) {
      auto* m = manifest(s, false);
      auto* ser = s->add_option("--series", cfg_.series, "Series file (JSON lines) instead of a manifest")
                      ->check(CLI::ExistingFile);
      m->excludes(ser);
      s->add_option("--features", cfg_.features, "Feature extractor document accompanying --series")
          ->check(CLI::ExistingFile)
          ->needs(ser);
    };
    auto event_source = [&](CLI::App* s) {
      auto* m = manifest(s, false);
      auto* e = s->add_option("--events", cfg_.events, "Event document instead of a manifest")->check(CLI::ExistingFile);
      m->excludes(e);
      s->add_option("--clusters", cfg_.clusters, "Cluster document giving event participants")
          ->check(CLI::ExistingFile)
          ->needs(m);
      s->add_option("--detections", cfg_.detections, "Detection predictions overriding ground-truth interaction")
          ->check(CLI::ExistingFile)
          ->needs(m);
      s->add_option("--categories", cfg_.categories, "Categorization predictions overriding ground-truth category")
          ->check(CLI::ExistingFile)
          ->needs(m);
      s->add_option("--days", cfg_.days, "Observation days (default: from the input)")->check(CLI::PositiveNumber);
    };
    auto hyper = [&](CLI::App* s) {
      s->add_option("--preset", cfg_.preset, "Published hyperparameter preset (default: that of --setting)")
          ->transform(presets);
      s->add_option("--learning-rate", cfg_.learning_rate, "Override the learning rate")->check(CLI::NonNegativeNumber);
      s->add_option("--momentum", cfg_.momentum, "Override the momentum")->check(CLI::Range(0.0, 1.0));
      s->add_option("--dropout", cfg_.dropout, "Override the dropout rate")->check(CLI::Range(0.0, 0.9));
      s->add_option("--batch-size", cfg_.batch_size, "Override the batch size")->check(CLI::PositiveNumber);
      s->add_option("--epochs", cfg_.epochs, "Override the epoch count")->check(CLI::NonNegativeNumber);
      s->add_option("--cells", cfg_.cells, "Override the number of memory cells")->check(CLI::PositiveNumber);
      s->add_flag("--no-standardize", cfg_.no_standardize, "Feed inputs without z-scoring");
    };

    auto* s = app.add_subcommand("validate", "Load and validate a dataset");
    manifest(s, true);
    s->add_option("--out", cfg_.out, "Validation report (JSON)");
    quiet(s);

    s = app.add_subcommand("fit-distance", "Fit the face-height to distance model");
    auto* m = manifest(s, false);
    auto* cal = s->add_option("--calibration", cfg_.calibration, "Calibration table (height distance per line)")
                    ->check(CLI::ExistingFile);
    m->excludes(cal);
    out_file(s, "Distance model (JSON)");
    quiet(s);

    s = app.add_subcommand("build-series", "Build feature time-series from a dataset");
    manifest(s, true);
    setting(s, "Feature setting")->required();
    s->add_option("--features", cfg_.features, "Reuse a feature extractor instead of fitting one")
        ->check(CLI::ExistingFile);
    s->add_option("--features-out", cfg_.features_out, "Write the fitted feature extractor (JSON)");
    quant(s);
    out_file(s, "Series file (JSON lines)");
    quiet(s);

    s = app.add_subcommand("augment", "Eigen-perturbation augmentation of a series file");
    s->add_option("--series", cfg_.series, "Input series file")->required()->check(CLI::ExistingFile);
    augmentation(s);
    seed(s);
    out_file(s, "Augmented series file (JSON lines)");
    quiet(s);

    s = app.add_subcommand("train", "Train a classifier and write a model bundle");
    series_or_manifest(s);
    setting(s, "Feature setting (required with --manifest; selects columns of --series)");
    hyper(s);
    augmentation(s);
    quant(s);
    seed(s);
    threads(s);
    s->add_option("--report", cfg_.report, "Training report (JSON)");
    out_file(s, "Model bundle (JSON)");
    quiet(s);

    s = app.add_subcommand("grid-search", "Cross-validated hyperparameter search");
    series_or_manifest(s);
    setting(s, "Feature setting (required with --manifest; selects columns of --series)");
    s->add_option("--samples", cfg_.samples, "Sampled values per hyperparameter axis")->capture_default_str()->check(CLI::Range(1, 10));
    s->add_option("--folds", cfg_.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 20));
    s->add_flag("--no-standardize", cfg_.no_standardize, "Feed inputs without z-scoring");
    quant(s);
    seed(s);
    threads(s);
    out_file(s, "Search results (JSON)");
    quiet(s);

    s = app.add_subcommand("evaluate", "Score a model bundle on labeled data");
    s->add_option("--model", cfg_.model, "Model bundle")->required()->check(CLI::ExistingFile);
    series_or_manifest(s);
    out_file(s, "Metric report (JSON)");
    quiet(s);

    for (const auto& [name, what] : {std::pair<std::string, std::string>{"detect", "Classify prototypes as interacting or not"},
                                     {"categorize", "Classify social sequences as formal or informal"}}) {
      s = app.add_subcommand(name, what);
      s->add_option("--model", cfg_.model, "Model bundle for this task")->required()->check(CLI::ExistingFile);
      manifest(s, true);
      out_file(s, "Prediction document (JSON)");
      quiet(s);
    }

    s = app.add_subcommand("cluster", "Group face-sets into recurring people");
    manifest(s, true);
    s->add_option("--cutoff", cfg_.cutoff, "Merge cutoff (default: calibrated on labeled face-sets)")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--learning-manifest", cfg_.learning_manifest, "Labeled dataset used to calibrate the cutoff")
        ->check(CLI::ExistingFile);
    s->add_option("--linkage", cfg_.linkage, "Linkage rule")->capture_default_str()
        ->check(CLI::IsMember({"single", "average", "complete"}));
    s->add_flag("--interacting-only", cfg_.interacting_only, "Only face-sets of tracks labeled interacting");
    s->add_option("--detections", cfg_.detections, "Detection predictions for the report")->check(CLI::ExistingFile);
    s->add_option("--categories", cfg_.categories, "Categorization predictions for the report")
        ->check(CLI::ExistingFile);
    out_file(s, "Cluster document (JSON)");
    quiet(s);

    s = app.add_subcommand("profile", "Generic and person-specific social profiles");
    event_source(s);
    s->add_option("--events-out", cfg_.features_out, "Write the derived event document (JSON)");
    out_file(s, "Profile document (JSON)");
    quiet(s);

    s = app.add_subcommand("temporal-map", "Weekly temporal interaction map");
    event_source(s);
    s->add_option("--week", cfg_.week, "Week index (days 7w to 7w+6)")->capture_default_str()->check(CLI::NonNegativeNumber);
    s->add_option("--svg", cfg_.svg, "Also render the map as SVG");
    out_file(s, "Map document (JSON)");
    quiet(s);

    s = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    s->add_option("--out", cfg_.out, "Output directory")->required();
    seed(s);
    s->add_option("--interacting", cfg_.interacting, "Sequences with an interacting group")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    s->add_option("--non-interacting", cfg_.non_interacting, "Bystander-only sequences")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    s->add_option("--formal", cfg_.formal, "Formal sequences among the interacting ones")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    s->add_option("--days", cfg_.synth_days, "Observation days")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--identities", cfg_.identities, "Distinct synthetic people")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--persons", cfg_.persons, "People per sequence")->capture_default_str()->check(CLI::Range(1, 20));
    s->add_option("--descriptor-dim", cfg_.descriptor_dim, "Global descriptor length")->capture_default_str()
        ->check(CLI::Range(8, 65536));
    s->add_option("--separation", cfg_.separation, "Category separation of global descriptors")->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    s->add_flag("--adversarial", cfg_.adversarial, "Place bystanders like group members");
    s->add_flag("--inline", cfg_.inline_descriptors, "Store descriptors inline instead of in sidecar files");
    quiet(s);
  }

  void dispatch(const std::string& name, std::ostream& out, std::ostream& err) {
    std::ostringstream summary;
    if (name == "validate") validate(summary, err);
    else if (name == "fit-distance") fit_distance(summary);
    else if (name == "build-series") build_series(summary, err);
    else if (name == "augment") augment_cmd(summary);
    else if (name == "train") train_cmd(summary, err);
    else if (name == "grid-search") grid_search_cmd(summary);
    else if (name == "evaluate") evaluate_cmd(summary);
    else if (name == "detect") classify_cmd(summary, Task::Detection);
    else if (name == "categorize") classify_cmd(summary, Task::Categorization);
    else if (name == "cluster") cluster_cmd(summary);
    else if (name == "profile") profile_cmd(summary);
    else if (name == "temporal-map") map_cmd(summary);
    else if (name == "synth") synth_cmd(summary);
    if (!cfg_.quiet) out << summary.str();
  }

  void warn(std::ostream& err, const SeriesWarnings& w) const {
    if (w.extrapolated || w.clamped)
      err << "warning: " << w.extrapolated << " distance estimates extrapolated, " << w.clamped << " clamped\n";
  }

  void validate(std::ostream& out, std::ostream& err) {
    const auto data = detail::load_dataset(cfg_.manifest);
    std::size_t prototypes = 0, frames = 0, labeled = 0;
    for (const auto& seq : data.load.sequences) {
      prototypes += extract_prototypes(seq).size();
      frames += seq.frames.size();
      labeled += seq.labels ? 1 : 0;
    }
    for (const auto& w : data.load.warnings) err << "warning: " << w << "\n";
    if (!cfg_.out.empty())
      write_json(Json{{"sequences", data.load.sequences.size()},
                      {"prototypes", prototypes},
                      {"frames", frames},
                      {"labeled_sequences", labeled},
                      {"observation_days", data.manifest.observation_days},
                      {"warnings", data.load.warnings}},
                 cfg_.out);
    out << "ok: " << data.load.sequences.size() << " sequences, " << prototypes << " prototypes, " << frames
        << " frames, " << data.load.warnings.size() << " warnings\n";
  }

  void fit_distance(std::ostream& out) {
    std::vector<CalibrationPoint> points;
    if (!cfg_.calibration.empty()) {
      points = read_calibration(cfg_.calibration);
    } else {
      if (cfg_.manifest.empty()) throw Error(ErrorCode::InvalidArgument, "give --manifest or --calibration");
      const auto manifest = load_manifest(cfg_.manifest);
      if (!manifest.calibration) throw Error(ErrorCode::MissingFile, cfg_.manifest + ": no calibration table declared");
      points = read_calibration(*manifest.calibration);
    }
    const auto model = fit_distance_model(points);
    write_json(to_json(model), cfg_.out);
    out << "d = " << model.a << " h^2 + " << model.b << " h + " << model.c << "  (rms " << detail::fixed(model.rms_residual)
        << " cm over " << points.size() << " points)\n";
  }

  void build_series(std::ostream& out, std::ostream& err) {
    const auto data = detail::load_dataset(cfg_.manifest);
    const auto setting = parse_setting(cfg_.setting);
    FeatureExtractor f;
    if (!cfg_.features.empty()) {
      f = features_from_json(read_json(cfg_.features));
      require(is_detection(f.setting) == is_detection(setting), ErrorCode::InvalidArgument,
              "feature extractor is for the other task");
      f.setting = setting;
    } else {
      f = fit_features(data.manifest, data.load.sequences, setting, cfg_.q, cfg_.variance);
    }
    const auto built = build_series_set(data.load.sequences, f);
    warn(err, built.warnings);
    write_series_file(built.series, cfg_.out);
    if (!cfg_.features_out.empty()) write_json(to_json(f), cfg_.features_out);
    out << built.series.size() << " " << to_string(setting) << " series of dimension "
        << (built.series.empty() ? 0 : built.series.front().dim()) << "\n";
  }

  std::vector<TimeSeries> maybe_augment(const std::vector<TimeSeries>& set) const {
    if (cfg_.delta <= 1 && !cfg_.frozen_given) return set;
    AugmentSpec spec;
    spec.multiplier = cfg_.delta;
    spec.noise_sigma = cfg_.sigma;
    spec.frozen_dims = detail::frozen_columns(cfg_, set.front());
    spec.rng_seed = derive_seed(cfg_.seed, 0xa0);
    return augment(set, fit_eigenbasis(set, spec.frozen_dims), spec);
  }

  void augment_cmd(std::ostream& out) {
    const auto set = read_series_file(cfg_.series);
    if (set.empty()) throw Error(ErrorCode::EmptyInput, cfg_.series + ": no series");
    AugmentSpec spec;
    spec.multiplier = cfg_.delta;
    spec.noise_sigma = cfg_.sigma;
    spec.frozen_dims = detail::frozen_columns(cfg_, set.front());
    spec.rng_seed = derive_seed(cfg_.seed, 0xa0);
    const auto basis = fit_eigenbasis(set, spec.frozen_dims);
    const auto result = augment(set, basis, spec);
    write_series_file(result, cfg_.out);
    out << set.size() << " series -> " << result.size() << " (K = " << basis.active_dims.size() << ", sigma "
        << cfg_.sigma << ")\n";
  }

  void train_cmd(std::ostream& out, std::ostream& err) {
    require(!cfg_.series.empty() || !cfg_.manifest.empty(), ErrorCode::InvalidArgument, "give --manifest or --series");
    auto in = detail::series_input(cfg_, std::nullopt);
    warn(err, in.warnings);
    require_labels(in.series);
    const auto set = maybe_augment(in.series);
    auto config = detail::network_config(cfg_, in.setting, static_cast<int>(set.front().dim()));
    const auto result = train_classifier(set, config, !cfg_.no_standardize, TrainOptions{cfg_.threads});

    ModelBundle bundle;
    bundle.task = task_of(in.setting);
    bundle.setting = in.setting;
    bundle.network = result.network;
    bundle.seed = cfg_.seed;
    if (in.features) {
      bundle.q = in.features->q;
      bundle.distance_model = in.features->distance_model;
      bundle.pca = in.features->pca;
    }
    write_json(to_json(bundle), cfg_.out);
    if (!cfg_.report.empty()) write_json(to_json(result.report), cfg_.report);
    const auto& r = result.report;
    out << "trained " << to_string(in.setting) << " on " << set.size() << " series: " << config.epochs << " epochs, "
        << config.cell_count << " cells, final loss "
        << detail::fixed(r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << ", training accuracy "
        << detail::fixed(r.train_accuracy) << ", " << detail::fixed(r.wall_clock_s, 1) << " s\n";
  }

  void grid_search_cmd(std::ostream& out) {
    require(!cfg_.series.empty() || !cfg_.manifest.empty(), ErrorCode::InvalidArgument, "give --manifest or --series");
    const auto in = detail::series_input(cfg_, std::nullopt);
    require_labels(in.series);
    SearchSpace space;
    space.samples_per_axis = cfg_.samples;
    space.seed = cfg_.seed;
    NetworkConfig base = preset_config(in.setting, static_cast<int>(in.series.front().dim()));
    base.rng_seed = cfg_.seed;
    const auto result = grid_search(in.series, space, base, cfg_.folds, !cfg_.no_standardize, TrainOptions{cfg_.threads});
    write_json(to_json(result), cfg_.out);
    const auto& b = result.best;
    out << result.table.size() << " candidates; best: lr " << b.learning_rate << ", momentum " << b.momentum
        << ", dropout " << b.dropout_rate << ", batch " << b.batch_size << ", epochs " << b.epochs << ", cells "
        << b.cell_count << "\n";
  }

  void evaluate_cmd(std::ostream& out) {
    require(!cfg_.series.empty() || !cfg_.manifest.empty(), ErrorCode::InvalidArgument, "give --manifest or --series");
    const auto bundle = load_bundle(cfg_.model);
    const auto in = detail::series_input(cfg_, cfg_.series.empty() ? std::optional(features_of(bundle)) : std::nullopt);
    require(in.setting == bundle.setting, ErrorCode::InvalidArgument,
            "series setting " + std::string(to_string(in.setting)) + " does not match the model's " +
                std::string(to_string(bundle.setting)));
    const auto metrics = evaluate(bundle.network, in.series);
    Json doc = to_json(metrics);
    doc["task"] = std::string(to_string(bundle.task));
    doc["setting"] = std::string(to_string(bundle.setting));
    doc["series"] = in.series.size();
    write_json(doc, cfg_.out);
    out << to_string(bundle.setting) << " on " << in.series.size() << " series: ";
    detail::print_metrics(out, metrics);
  }

  void classify_cmd(std::ostream& out, Task task) {
    const auto bundle = load_bundle(cfg_.model);
    if (bundle.task != task)
      throw Error(ErrorCode::WrongTask, cfg_.model + " is a " + std::string(to_string(bundle.task)) +
                                            " model; this command needs a " + std::string(to_string(task)) + " model");
    const auto data = detail::load_dataset(cfg_.manifest);
    const auto built = build_series_set(data.load.sequences, features_of(bundle));
    const auto preds = predict_all(bundle.network, built.series);
    const Json doc = predictions_to_json(task, bundle.setting, preds);
    write_json(doc, cfg_.out);
    std::size_t positive = 0;
    for (const auto& p : preds) positive += p.label ? 1 : 0;
    out << preds.size() << (task == Task::Detection ? " prototypes, " : " sequences, ") << positive
        << (task == Task::Detection ? " interacting\n" : " formal\n");
    if (doc.contains("metrics")) {
      const auto& m = doc["metrics"];
      out << "against labels: accuracy " << detail::fixed(m["accuracy"].get<double>()) << "\n";
    }
  }

  void cluster_cmd(std::ostream& out) {
    const auto data = detail::load_dataset(cfg_.manifest);
    const auto sets = face_sets_from_sequences(data.load.sequences, cfg_.interacting_only);
    if (sets.empty()) throw Error(ErrorCode::EmptyInput, cfg_.manifest + ": no face embeddings");
    double cutoff = 0.0;
    if (cfg_.cutoff) {
      cutoff = *cfg_.cutoff;
    } else if (!cfg_.learning_manifest.empty()) {
      const auto learning = detail::load_dataset(cfg_.learning_manifest);
      cutoff = calibrate_cutoff(face_sets_from_sequences(learning.load.sequences, cfg_.interacting_only));
    } else {
      cutoff = calibrate_cutoff(sets);
    }
    const auto result = agglomerate(sets, cutoff, parse_linkage(cfg_.linkage));
    std::optional<Json> det, cat;
    if (!cfg_.detections.empty()) det = read_json(cfg_.detections);
    if (!cfg_.categories.empty()) cat = read_json(cfg_.categories);
    const auto outcomes = sequence_outcomes(data.load.sequences, det ? &*det : nullptr, cat ? &*cat : nullptr);
    const auto reports = cluster_report(result, sets, outcomes);
    Json doc = to_json(result);
    doc["people"] = to_json(std::span<const PersonReport>(reports));
    const bool labeled = std::all_of(sets.begin(), sets.end(), [](const FaceSet& s) { return s.person.has_value(); });
    std::optional<PairScore> score;
    if (labeled) {
      score = pairwise_score(result, sets);
      doc["pairwise"] = Json{{"precision", score->precision}, {"recall", score->recall}, {"f_score", score->f_score}};
    }
    write_json(doc, cfg_.out);
    out << sets.size() << " face-sets -> " << result.clusters.size() << " clusters (" << cfg_.linkage << " linkage, cutoff "
        << detail::fixed(cutoff) << ")\n";
    if (score) out << "pairwise F-score " << detail::fixed(score->f_score) << "\n";
  }

  void profile_cmd(std::ostream& out) {
    require(!cfg_.events.empty() || !cfg_.manifest.empty(), ErrorCode::InvalidArgument, "give --manifest or --events");
    int days = 1;
    const auto events = detail::events_input(cfg_, days);
    if (!cfg_.features_out.empty()) write_json(to_json(EventLog{days, events}), cfg_.features_out);
    const auto generic = build_profile(events, days);
    const auto persons = person_profiles(events, days);
    Json people = Json::array();
    for (const auto& p : persons) people.push_back(to_json(p));
    write_json(Json{{"generic", to_json(generic)}, {"persons", people}}, cfg_.out);

    auto opt = [](const std::optional<double>& v, int digits) { return v ? detail::fixed(*v, digits) : std::string("-"); };
    out << "scope        events  F_formal  F_informal  A_formal  A_informal  D       L_mean(min)\n";
    auto row = [&](const std::string& scope, const SocialProfile& p) {
      out << std::left << std::setw(13) << scope << std::setw(8) << p.event_count << std::setw(10)
          << detail::fixed(p.f_formal) << std::setw(12) << detail::fixed(p.f_informal) << std::setw(10)
          << opt(p.a_formal, 4) << std::setw(12) << opt(p.a_informal, 4) << std::setw(8) << opt(p.diversity, 4)
          << (p.duration ? detail::fixed(p.duration->mean, 1) : std::string("-")) << "\n";
    };
    row("generic", generic);
    for (const auto& p : persons) row("person " + std::to_string(*p.person), p);
  }

  void map_cmd(std::ostream& out) {
    require(!cfg_.events.empty() || !cfg_.manifest.empty(), ErrorCode::InvalidArgument, "give --manifest or --events");
    int days = 1;
    const auto events = detail::events_input(cfg_, days);
    const auto map = temporal_map(events, cfg_.week);
    write_json(to_json(map), cfg_.out);
    if (!cfg_.svg.empty()) egosocial::detail::write_text(cfg_.svg, render_svg(map));
    std::size_t intervals = 0;
    for (const auto& d : map.days) intervals += d.intervals.size();
    out << "week " << cfg_.week << ": " << intervals << " events, " << map.palette.size() << " people\n";
  }

  void synth_cmd(std::ostream& out) {
    DatasetSpec spec;
    spec.seed = cfg_.seed;
    spec.interacting = cfg_.interacting;
    spec.non_interacting = cfg_.non_interacting;
    spec.formal = cfg_.formal;
    spec.observation_days = cfg_.synth_days;
    spec.identities = cfg_.identities;
    spec.descriptor_dim = cfg_.descriptor_dim;
    spec.descriptor_separation = cfg_.separation;
    spec.scene.person_count = cfg_.persons;
    spec.scene.adversarial_bystanders = cfg_.adversarial;
    const auto data = generate_dataset(spec);
    const auto path =
        write_dataset(data, cfg_.out, cfg_.inline_descriptors ? DescriptorStorage::Inline : DescriptorStorage::Sidecar);
    out << "wrote " << data.sequences.size() << " sequences to " << path.string() << "\n";
  }
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Cli cli;
  return cli.run(argc, argv, out, err);
}

}  // namespace egosocial::cli

#endif

#ifndef EGOSOCIAL_PATTERNS_HPP
#define EGOSOCIAL_PATTERNS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "egosocial/cluster.hpp"
#include "egosocial/error.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

struct InteractionEvent {
  std::string sequence_id;
  int day_index = 0;
  FrameId start_frame = 0;
  FrameId end_frame = 0;
  std::size_t frame_count = 0;
  std::optional<Category> category;
  std::vector<std::size_t> participants;  // cluster ids
  double frame_interval_s = 30.0;
  std::optional<double> start_time_s;     // seconds since midnight, when known

  /// Minutes: frames times the capture interval.
  double duration_min() const { return static_cast<double>(frame_count) * frame_interval_s / 60.0; }
};

inline void validate_event(const InteractionEvent& e) {
  require(e.end_frame >= e.start_frame, ErrorCode::InvalidArgument, e.sequence_id + ": end frame before start");
  require(e.frame_interval_s > 0.0, ErrorCode::InvalidArgument, e.sequence_id + ": frame interval must be > 0");
}

inline std::size_t count_category(std::span<const InteractionEvent> events, Category category) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                [&](const InteractionEvent& e) { return e.category == category; }));
}

/// Events of `category` per observation day.
inline double frequency(std::span<const InteractionEvent> events, int days, Category category) {
  require(days >= 1, ErrorCode::InvalidArgument, "observation days must be >= 1");
  return static_cast<double>(count_category(events, category)) / static_cast<double>(days);
}

/// Share of all events that fall in `category`.
inline double social_trend(std::span<const InteractionEvent> events, Category category) {
  require(!events.empty(), ErrorCode::EmptyInput, "social trend of an empty event list is undefined");
  return static_cast<double>(count_category(events, category)) / static_cast<double>(events.size());
}

/// Half the exponential of the natural-log Shannon entropy of the two
/// shares, with 0 ln 0 = 0. Ranges over [0.5, 1].
inline double diversity(double a_formal, double a_informal) {
  require(a_formal >= 0.0 && a_informal >= 0.0 && std::abs(a_formal + a_informal - 1.0) <= 1e-9,
          ErrorCode::InvalidDistribution, "shares must be non-negative and sum to 1");
  double entropy = 0.0;
  for (double a : {a_formal, a_informal})
    if (a > 0.0) entropy -= a * std::log(a);
  return 0.5 * std::exp(entropy);
}

struct DurationStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;     // sample standard deviation, 0 for a single event
  double std_error = 0.0;  // stddev / sqrt(n)
  std::size_t count = 0;
};

inline DurationStats duration_stats(std::span<const InteractionEvent> events) {
  require(!events.empty(), ErrorCode::EmptyInput, "duration statistics of an empty event list");
  std::vector<double> minutes;
  for (const auto& e : events) minutes.push_back(e.duration_min());
  DurationStats s;
  s.count = minutes.size();
  double sum = 0.0;
  for (double m : minutes) sum += m;
  s.mean = sum / static_cast<double>(s.count);
  s.median = median(minutes);
  if (s.count > 1) {
    double sq = 0.0;
    for (double m : minutes) sq += (m - s.mean) * (m - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  s.std_error = s.stddev / std::sqrt(static_cast<double>(s.count));
  return s;
}

struct SocialProfile {
  std::optional<std::size_t> person;  // cluster id; empty for the generic profile
  int observation_days = 1;
  std::size_t event_count = 0;
  double f_formal = 0.0;
  double f_informal = 0.0;
  std::optional<double> a_formal;
  std::optional<double> a_informal;
  std::optional<double> diversity;
  std::optional<DurationStats> duration;
};

/// Generic profile when `person` is empty; otherwise restricted to events
/// whose participants include that cluster. Only categorized events count.
inline SocialProfile build_profile(std::span<const InteractionEvent> events, int days,
                                   std::optional<std::size_t> person = std::nullopt) {
  std::vector<InteractionEvent> scoped;
  for (const auto& e : events) {
    validate_event(e);
    if (!e.category) continue;
    if (person && std::find(e.participants.begin(), e.participants.end(), *person) == e.participants.end()) continue;
    scoped.push_back(e);
  }
  SocialProfile p;
  p.person = person;
  p.observation_days = days;
  p.event_count = scoped.size();
  p.f_formal = frequency(scoped, days, Category::Formal);
  p.f_informal = frequency(scoped, days, Category::Informal);
  if (!scoped.empty()) {
    p.a_formal = social_trend(scoped, Category::Formal);
    p.a_informal = social_trend(scoped, Category::Informal);
    p.diversity = diversity(*p.a_formal, *p.a_informal);
    p.duration = duration_stats(scoped);
  }
  return p;
}

inline std::vector<SocialProfile> person_profiles(std::span<const InteractionEvent> events, int days) {
  std::set<std::size_t> people;
  for (const auto& e : events) people.insert(e.participants.begin(), e.participants.end());
  std::vector<SocialProfile> out;
  for (auto person : people) out.push_back(build_profile(events, days, person));
  return out;
}

/// One event per sequence judged social. `outcomes` overrides the ground
/// truth; `assignment` maps face-sets to person clusters.
inline std::vector<InteractionEvent> events_from_sequences(
    std::span<const SequenceRecord> sequences, const std::map<std::string, SequenceOutcome>* outcomes = nullptr,
    const std::map<FaceSetId, std::size_t>* assignment = nullptr) {
  std::vector<InteractionEvent> out;
  for (const auto& seq : sequences) {
    if (seq.frames.empty()) continue;
    SequenceOutcome outcome;
    if (outcomes) {
      auto it = outcomes->find(seq.sequence_id);
      if (it == outcomes->end()) continue;
      outcome = it->second;
    } else if (seq.labels) {
      bool any = false;
      for (const auto& [track, value] : seq.labels->interacting) any = any || value;
      outcome.interacting = any;
      outcome.category = seq.labels->category;
    }
    if (!outcome.interacting.value_or(false)) continue;
    InteractionEvent e;
    e.sequence_id = seq.sequence_id;
    e.day_index = seq.day_index;
    e.start_frame = seq.frames.front().frame_id;
    e.end_frame = seq.frames.back().frame_id;
    e.frame_count = seq.frames.size();
    e.category = outcome.category;
    e.frame_interval_s = seq.frame_interval_s;
    e.start_time_s = seq.frames.front().timestamp_s;
    if (assignment) {
      std::set<std::size_t> people;
      for (const auto& [id, cluster] : *assignment)
        if (id.sequence_id == seq.sequence_id) people.insert(cluster);
      e.participants.assign(people.begin(), people.end());
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temporal interaction map

struct MapLane {
  std::size_t cluster = 0;
  int color_index = 0;
  int lane = 0;
};

struct MapInterval {
  std::string sequence_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<Category> category;
  std::string marker;  // "square" formal, "circle" informal, "none"
  std::vector<MapLane> lanes;
};

struct MapDay {
  int day_index = 0;
  std::vector<MapInterval> intervals;
};

struct TemporalMap {
  int week = 0;
  std::vector<MapDay> days;         // seven consecutive days
  std::vector<std::size_t> palette;  // color index -> cluster id
};

/// Events of days [7*week, 7*week + 7). Time of day comes from frame
/// timestamps when present, else from the frame offset within the day.
inline TemporalMap temporal_map(std::span<const InteractionEvent> events, int week) {
  TemporalMap map;
  map.week = week;
  const int first_day = 7 * week;
  std::set<std::size_t> clusters;
  for (const auto& e : events)
    if (e.day_index >= first_day && e.day_index < first_day + 7) clusters.insert(e.participants.begin(), e.participants.end());
  map.palette.assign(clusters.begin(), clusters.end());
  auto color_of = [&](std::size_t cluster) {
    return static_cast<int>(std::lower_bound(map.palette.begin(), map.palette.end(), cluster) - map.palette.begin());
  };

  for (int d = 0; d < 7; ++d) map.days.push_back({first_day + d, {}});
  for (const auto& e : events) {
    if (e.day_index < first_day || e.day_index >= first_day + 7) continue;
    validate_event(e);
    MapInterval interval;
    interval.sequence_id = e.sequence_id;
    interval.start_s = e.start_time_s.value_or(static_cast<double>(e.start_frame) * e.frame_interval_s);
    interval.end_s = interval.start_s + e.duration_min() * 60.0;
    interval.category = e.category;
    interval.marker = !e.category ? "none" : (*e.category == Category::Formal ? "square" : "circle");
    std::vector<std::size_t> people = e.participants;
    std::sort(people.begin(), people.end());
    for (std::size_t k = 0; k < people.size(); ++k)
      interval.lanes.push_back({people[k], color_of(people[k]), static_cast<int>(k)});
    map.days[static_cast<std::size_t>(e.day_index - first_day)].intervals.push_back(std::move(interval));
  }
  for (auto& day : map.days)
    std::sort(day.intervals.begin(), day.intervals.end(), [](const MapInterval& a, const MapInterval& b) {
      return std::tie(a.start_s, a.sequence_id) < std::tie(b.start_s, b.sequence_id);
    });
  return map;
}

/// Static SVG: one row per day, hours on the x axis, one colored line per
/// participant, square end markers for formal and circles for informal.
inline std::string render_svg(const TemporalMap& map) {
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double kLeft = 70.0, kTop = 30.0, kWidth = 720.0, kRow = 60.0;
  const double height = kTop + kRow * static_cast<double>(map.days.size()) + 30.0;
  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kWidth + 20 << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int h = 0; h <= 24; h += 3) {
    const double x = kLeft + kWidth * h / 24.0;
    svg << "<line x1=\"" << x << "\" y1=\"" << kTop - 5 << "\" x2=\"" << x << "\" y2=\"" << height - 25
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << kTop - 10 << "\" text-anchor=\"middle\">" << h << ":00</text>\n";
  }
  for (std::size_t d = 0; d < map.days.size(); ++d) {
    const double y0 = kTop + kRow * static_cast<double>(d);
    svg << "<text x=\"5\" y=\"" << y0 + kRow / 2 << "\">day " << map.days[d].day_index << "</text>\n";
    for (const auto& iv : map.days[d].intervals) {
      const double x0 = kLeft + kWidth * std::clamp(iv.start_s / 86400.0, 0.0, 1.0);
      const double x1 = kLeft + kWidth * std::clamp(iv.end_s / 86400.0, 0.0, 1.0);
      const std::size_t lanes = std::max<std::size_t>(1, iv.lanes.size());
      for (std::size_t k = 0; k < lanes; ++k) {
        const double y = y0 + 12.0 + (kRow - 24.0) * (lanes == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(lanes - 1));
        const char* color = iv.lanes.empty() ? "#444444" : kColors[iv.lanes[k].color_index % 10];
        svg << "<line x1=\"" << x0 << "\" y1=\"" << y << "\" x2=\"" << x1 << "\" y2=\"" << y << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
      }
      const double ym = y0 + kRow / 2;
      for (double x : {x0, x1}) {
        if (iv.marker == "square")
          svg << "<rect x=\"" << x - 4 << "\" y=\"" << ym - 4 << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"black\"/>\n";
        else if (iv.marker == "circle")
          svg << "<circle cx=\"" << x << "\" cy=\"" << ym << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace egosocial

#endif

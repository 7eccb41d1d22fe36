#include <catch_amalgamated.hpp>

#include <cmath>

#include "egosocial/patterns.hpp"
#include "oracles.hpp"
#include "profile_fixture.hpp"

using namespace egosocial;
using Catch::Matchers::WithinAbs;

namespace {

InteractionEvent event(const std::string& id, Category c, std::size_t frames, int day = 0,
                       std::vector<std::size_t> people = {}) {
  InteractionEvent e;
  e.sequence_id = id;
  e.day_index = day;
  e.frame_count = frames;
  e.end_frame = static_cast<FrameId>(frames - 1);
  e.category = c;
  e.participants = std::move(people);
  return e;
}

}  // namespace

TEST_CASE("frequency", "[patterns]") {
  const auto ev = profile_fixture::events();
  CHECK_THAT(frequency(ev, 30, Category::Formal), WithinAbs(25.0 / 30.0, 1e-15));
  CHECK_THAT(frequency(ev, 30, Category::Informal), WithinAbs(2.5, 1e-15));
  CHECK(frequency({}, 30, Category::Formal) == 0.0);
  CHECK_THROWS_AS(frequency(ev, 0, Category::Formal), Error);
  CHECK_THAT(frequency(ev, 60, Category::Informal), WithinAbs(0.5 * frequency(ev, 30, Category::Informal), 1e-15));
}

TEST_CASE("social trend", "[patterns]") {
  const auto ev = profile_fixture::events();
  CHECK_THAT(social_trend(ev, Category::Formal), WithinAbs(0.25, 1e-15));
  std::vector<InteractionEvent> formal{event("a", Category::Formal, 3)};
  CHECK(social_trend(formal, Category::Formal) == 1.0);
  std::vector<InteractionEvent> five;
  for (int k = 0; k < 5; ++k) five.push_back(event("e" + std::to_string(k), k ? Category::Informal : Category::Formal, 3));
  CHECK_THAT(social_trend(five, Category::Formal), WithinAbs(0.2, 1e-15));
  CHECK_THROWS_AS(social_trend({}, Category::Formal), Error);
}

TEST_CASE("diversity", "[patterns]") {
  CHECK_THAT(diversity(0.5, 0.5), WithinAbs(1.0, 1e-15));
  CHECK_THAT(diversity(0.25, 0.75), WithinAbs(0.8774, 5e-5));
  CHECK_THAT(diversity(0.2, 0.8), WithinAbs(0.8247, 5e-5));
  CHECK(diversity(1.0, 0.0) == 0.5);
  CHECK(diversity(0.0, 1.0) == 0.5);
  CHECK_THROWS_AS(diversity(0.5, 0.6), Error);
  CHECK_THROWS_AS(diversity(-0.1, 1.1), Error);
  for (int k = 0; k <= 1000; ++k) {
    const double a = k / 1000.0;
    const double d = diversity(a, 1.0 - a);
    CHECK(d >= 0.5);
    CHECK(d <= 1.0);
    CHECK(d == diversity(1.0 - a, a));
    CHECK_THAT(d, WithinAbs(0.5 * std::exp(oracle::entropy({a, 1.0 - a})), 1e-14));
  }
}

TEST_CASE("durations", "[patterns]") {
  std::vector<InteractionEvent> one{event("a", Category::Formal, 50)};
  auto s = duration_stats(one);
  CHECK(s.mean == 25.0);
  CHECK(s.stddev == 0.0);
  std::vector<InteractionEvent> three{event("a", Category::Formal, 20), event("b", Category::Formal, 40),
                                      event("c", Category::Formal, 60)};
  s = duration_stats(three);
  CHECK_THAT(s.mean, WithinAbs(20.0, 1e-12));
  CHECK_THAT(s.median, WithinAbs(20.0, 1e-12));
  CHECK_THAT(s.stddev, WithinAbs(10.0, 1e-12));

  const auto ev = profile_fixture::events();
  s = duration_stats(ev);
  std::vector<double> minutes;
  double sum = 0.0;
  for (const auto& e : ev) {
    minutes.push_back(e.frame_count * 0.5);
    sum += e.frame_count * 0.5;
  }
  const double mean = sum / minutes.size();
  double sq = 0.0;
  for (double m : minutes) sq += (m - mean) * (m - mean);
  CHECK_THAT(s.mean, WithinAbs(mean, 1e-9));
  CHECK_THAT(s.median, WithinAbs(oracle::median_by_sort(minutes), 1e-9));
  CHECK_THAT(s.stddev, WithinAbs(std::sqrt(sq / (minutes.size() - 1)), 1e-9));
  CHECK_THAT(s.std_error, WithinAbs(s.stddev / 10.0, 1e-12));
  CHECK_THROWS_AS(duration_stats({}), Error);
}

TEST_CASE("generic and person profiles for the table fixture", "[patterns]") {
  const auto ev = profile_fixture::events();
  auto g = build_profile(ev, profile_fixture::kDays);
  CHECK(!g.person);
  CHECK(g.event_count == 100);
  CHECK_THAT(g.f_formal, WithinAbs(0.8333, 5e-5));
  CHECK_THAT(g.f_informal, WithinAbs(2.50, 1e-12));
  CHECK_THAT(*g.a_formal, WithinAbs(0.25, 1e-12));
  CHECK_THAT(*g.a_informal, WithinAbs(0.75, 1e-12));
  CHECK_THAT(*g.diversity, WithinAbs(0.8774, 5e-5));
  CHECK_THAT(g.f_formal / (g.f_formal + g.f_informal), WithinAbs(*g.a_formal, 1e-9));

  auto p = build_profile(ev, profile_fixture::kDays, 0);
  CHECK(p.event_count == 5);
  CHECK_THAT(*p.a_formal, WithinAbs(0.2, 1e-12));
  CHECK_THAT(*p.a_informal, WithinAbs(0.8, 1e-12));
  CHECK_THAT(*p.diversity, WithinAbs(0.8247, 5e-5));

  auto all = person_profiles(ev, profile_fixture::kDays);
  REQUIRE(all.size() == 2);
  CHECK(all[0].event_count + all[1].event_count >= g.event_count);
}

TEST_CASE("single informal event", "[patterns]") {
  std::vector<InteractionEvent> ev{event("a", Category::Informal, 10)};
  auto p = build_profile(ev, 3);
  CHECK(*p.a_formal == 0.0);
  CHECK(*p.a_informal == 1.0);
  CHECK(*p.diversity == 0.5);
  CHECK(p.f_formal == 0.0);
}

TEST_CASE("profile without events and uncategorized events", "[patterns]") {
  auto p = build_profile({}, 4);
  CHECK(p.event_count == 0);
  CHECK(!p.a_formal);
  CHECK(!p.diversity);
  auto e = event("u", Category::Formal, 4);
  e.category.reset();
  std::vector<InteractionEvent> ev{e};
  CHECK(build_profile(ev, 4).event_count == 0);
  e.end_frame = 0;
  e.start_frame = 5;
  ev = {e};
  CHECK_THROWS_AS(build_profile(ev, 4), Error);
}

TEST_CASE("co-participants are counted for each person", "[patterns]") {
  std::vector<InteractionEvent> ev{event("a", Category::Formal, 5, 0, {0, 1}), event("b", Category::Informal, 5, 1, {1})};
  auto all = person_profiles(ev, 2);
  REQUIRE(all.size() == 2);
  CHECK(all[0].event_count == 1);
  CHECK(all[1].event_count == 2);
}

TEST_CASE("events from sequences", "[patterns]") {
  SequenceRecord seq;
  seq.sequence_id = "s";
  seq.day_index = 2;
  for (FrameId f = 10; f < 14; ++f) {
    FrameEntry fr;
    fr.frame_id = f;
    seq.frames.push_back(fr);
  }
  SequenceLabels l;
  l.interacting = {{1, false}, {2, true}};
  l.category = Category::Informal;
  seq.labels = l;
  SequenceRecord quiet = seq;
  quiet.sequence_id = "q";
  quiet.labels->interacting = {{1, false}};
  std::vector<SequenceRecord> seqs{seq, quiet};
  auto ev = events_from_sequences(seqs);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].start_frame == 10);
  CHECK(ev[0].end_frame == 13);
  CHECK(ev[0].frame_count == 4);
  CHECK(ev[0].duration_min() == 2.0);
  CHECK(ev[0].category == Category::Informal);

  std::map<std::string, SequenceOutcome> outcomes{{"q", {true, Category::Formal}}};
  std::map<FaceSetId, std::size_t> assignment{{{"q", 1}, 4}, {{"q", 2}, 7}, {{"s", 2}, 4}};
  ev = events_from_sequences(seqs, &outcomes, &assignment);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].sequence_id == "q");
  CHECK(ev[0].participants == std::vector<std::size_t>{4, 7});
}

TEST_CASE("temporal map", "[patterns]") {
  auto empty = temporal_map({}, 0);
  CHECK(empty.days.size() == 7);
  for (const auto& d : empty.days) CHECK(d.intervals.empty());
  const auto svg = render_svg(empty);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  auto shared = event("m", Category::Formal, 20, 8, {5, 2});
  shared.start_time_s = 9 * 3600.0;
  auto later = event("n", Category::Informal, 10, 9, {2});
  auto other_week = event("o", Category::Informal, 10, 20, {9});
  std::vector<InteractionEvent> ev{shared, later, other_week};
  auto map = temporal_map(ev, 1);
  CHECK(map.days.front().day_index == 7);
  CHECK(map.palette == std::vector<std::size_t>{2, 5});
  const auto& iv = map.days[1].intervals;
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].marker == "square");
  CHECK(iv[0].start_s == 9 * 3600.0);
  CHECK(iv[0].end_s == 9 * 3600.0 + 600.0);
  REQUIRE(iv[0].lanes.size() == 2);
  CHECK(iv[0].lanes[0].lane != iv[0].lanes[1].lane);
  CHECK(iv[0].lanes[0].color_index != iv[0].lanes[1].color_index);
  REQUIRE(map.days[2].intervals.size() == 1);
  CHECK(map.days[2].intervals[0].marker == "circle");
  CHECK(map.days[2].intervals[0].start_s == 0.0);
  const auto drawn = render_svg(map);
  CHECK(drawn.find("<rect x=") != std::string::npos);
  CHECK(drawn.find("<circle") != std::string::npos);
}

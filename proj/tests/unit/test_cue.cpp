#include <doctest.h>

#include <algorithm>
#include <random>

#include "djmix/cue.hpp"
#include "djmix/error.hpp"

using namespace djmix;

namespace {

BeatGrid regular_grid(std::size_t n, double interval = 0.5) {
  BeatGrid g;
  for (std::size_t i = 0; i < n; ++i) g.beat_times.push_back(interval * static_cast<double>(i));
  g.tempo_bpm = 60.0 / interval;
  return g;
}

void extend(WarpingPath& p, char step, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) {
    const auto last = p.back();
    if (step == 'd') p.push_back({last.track_beat + 1, last.mix_beat + 1});
    if (step == 'v') p.push_back({last.track_beat + 1, last.mix_beat});
    if (step == 'h') p.push_back({last.track_beat, last.mix_beat + 1});
  }
}

CuePoints cues_at(std::string id, std::size_t in, std::size_t out, const BeatGrid& g) {
  CuePoints c;
  c.track_id = std::move(id);
  c.cue_in_mix_beat = in;
  c.cue_out_mix_beat = out;
  c.cue_in_sec = g.beat_times[in];
  c.cue_out_sec = g.beat_times[out];
  return c;
}

TransitionRecord transition(double out, double in, double mid) {
  TransitionRecord t;
  t.prev_track_id = "a";
  t.next_track_id = "b";
  t.cue_out_sec = out;
  t.cue_in_sec = in;
  t.cue_mid_sec = mid;
  return t;
}

}  // namespace

TEST_CASE("a fully diagonal path is one run") {
  WarpingPath p{{0, 10}};
  extend(p, 'd', 100);
  const auto g = regular_grid(200);
  const auto c = extract_cues(p, g, 32, "t");
  CHECK(c.track_id == "t");
  CHECK(c.cue_in_mix_beat == 10);
  CHECK(c.cue_out_mix_beat == 110);
  CHECK(c.cue_in_track_beat == 0);
  CHECK(c.cue_out_track_beat == 100);
  CHECK(c.cue_in_sec == g.beat_times[10]);
  CHECK(c.cue_out_sec == g.beat_times[110]);
}

TEST_CASE("cue-in starts after leading mix skips") {
  WarpingPath p{{0, 10}};
  extend(p, 'h', 10);
  extend(p, 'd', 80);
  const auto c = extract_cues(p, regular_grid(200));
  CHECK(c.cue_in_mix_beat == 20);
  CHECK(c.cue_out_mix_beat == 100);
}

TEST_CASE("cue-out is the last point preceded by a full run") {
  WarpingPath p{{0, 0}};
  extend(p, 'v', 3);
  extend(p, 'd', 40);
  extend(p, 'h', 2);
  extend(p, 'd', 10);
  extend(p, 'v', 4);
  const auto c = extract_cues(p, regular_grid(100));
  CHECK(c.cue_in_mix_beat == 0);
  CHECK(c.cue_in_track_beat == 3);
  CHECK(c.cue_out_mix_beat == 40);
  CHECK(c.cue_out_track_beat == 43);
  CHECK(c.cue_in_mix_beat <= c.cue_out_mix_beat);
}

TEST_CASE("a 31-step run is not stable at run length 32") {
  WarpingPath p{{0, 0}};
  extend(p, 'd', 31);
  extend(p, 'v', 1);
  extend(p, 'd', 31);
  try {
    extract_cues(p, regular_grid(100), 32);
    FAIL("expected NoStableRun");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoStableRun);
  }
  CHECK_NOTHROW(extract_cues(p, regular_grid(100), 31));
}

TEST_CASE("run length 1 succeeds whenever a diagonal step exists") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    WarpingPath p{{0, 0}};
    bool diag = false;
    for (int k = 0; k < 12; ++k) {
      const char s = "dvh"[rng() % 3];
      extend(p, s, 1);
      diag = diag || s == 'd';
    }
    if (diag) CHECK_NOTHROW(extract_cues(p, regular_grid(40), 1));
    else CHECK_THROWS_AS(extract_cues(p, regular_grid(40), 1), Error);
  }
}

TEST_CASE("beat position interpolates and extrapolates") {
  BeatGrid g{{1.0, 1.5, 2.5}, 120.0};
  CHECK(beat_position(g, 1.0) == 0.0);
  CHECK(beat_position(g, 1.25) == 0.5);
  CHECK(beat_position(g, 2.0) == 1.5);
  CHECK(beat_position(g, 3.5) == 3.0);
  CHECK(beat_position(g, 0.5) == -1.0);
}

TEST_CASE("transition length between beats 2310 and 2324") {
  const auto g = regular_grid(2400);
  const auto t = build_transitions({cues_at("a", 2000, 2310, g), cues_at("b", 2324, 2390, g)}, g);
  REQUIRE(t.size() == 1);
  CHECK(t[0].length_beats == 14);
  CHECK_FALSE(t[0].overlapping);
  CHECK(t[0].prev_track_id == "a");
  CHECK(t[0].next_track_id == "b");
  CHECK(t[0].cue_mid_mix_beat == 2317);
}

TEST_CASE("cue-mid is the midpoint and rounds half up on the grid") {
  const auto g = regular_grid(400, 5.0);
  const auto t = build_transitions({cues_at("a", 0, 20, g), cues_at("b", 22, 60, g)}, g);
  CHECK(t[0].cue_out_sec == 100.0);
  CHECK(t[0].cue_in_sec == 110.0);
  CHECK(t[0].cue_mid_sec == 105.0);
  CHECK(t[0].length_sec == 10.0);
  const auto odd = build_transitions({cues_at("a", 0, 20, g), cues_at("b", 23, 60, g)}, g);
  CHECK(odd[0].cue_mid_mix_beat == 22);
}

TEST_CASE("overlapping detections give negative lengths") {
  const auto g = regular_grid(100);
  const auto t = build_transitions({cues_at("a", 0, 50, g), cues_at("b", 40, 90, g)}, g);
  CHECK(t[0].length_beats == -10);
  CHECK(t[0].overlapping);
  CHECK(build_transitions({}, g).empty());
  CHECK(build_transitions({cues_at("a", 0, 50, g)}, g).empty());
}

TEST_CASE("segmentation: one hit and one miss") {
  const auto r = evaluate_segmentation({transition(50, 65, 57.5), transition(190, 200, 195)}, {60, 180}, {15});
  REQUIRE(r.cue_in_hit_rates.size() == 1);
  CHECK(r.cue_in_hit_rates[0] == 0.5);
}

TEST_CASE("segmentation: estimates equal to the boundary") {
  const auto r = evaluate_segmentation({transition(60, 60, 60), transition(180, 180, 180)}, {60, 180});
  CHECK(r.median_abs_out_sec == 0.0);
  CHECK(r.median_abs_in_sec == 0.0);
  CHECK(r.median_abs_mid_sec == 0.0);
  CHECK(r.median_best_sec == 0.0);
  for (const auto& h : r.cue_in_hit_rates) CHECK(h == 1.0);
  CHECK(r.closest_in == 2);
}

TEST_CASE("segmentation: cue-best and closest type") {
  const auto r = evaluate_segmentation({transition(92, 103, 105)}, {100});
  CHECK(r.rows[0].best_abs_sec == doctest::Approx(3.0));
  CHECK(r.rows[0].closest == CueType::In);
  const auto out = evaluate_segmentation({transition(99, 103, 105)}, {100});
  CHECK(out.rows[0].closest == CueType::Out);
  const auto mid = evaluate_segmentation({transition(90, 110, 101)}, {100});
  CHECK(mid.rows[0].closest == CueType::Mid);
  const auto tie = evaluate_segmentation({transition(97, 103, 100)}, {100});
  CHECK(tie.rows[0].closest == CueType::Mid);
  const auto tie_in = evaluate_segmentation({transition(97, 103, 97)}, {100});
  CHECK(tie_in.rows[0].closest == CueType::In);
}

TEST_CASE("segmentation reports beat differences when a grid is supplied") {
  const auto g = regular_grid(400);
  const auto r = evaluate_segmentation({transition(40, 50, 45)}, {49}, kDefaultTolerances, &g);
  CHECK(*r.rows[0].diff_in_beats == doctest::Approx(2.0));
  CHECK(*r.rows[0].diff_out_beats == doctest::Approx(-18.0));
  CHECK(*r.rows[0].diff_mid_beats == doctest::Approx(-8.0));
  const auto j = to_json(r);
  CHECK(j.at("closest_type_counts").at("cue_in") == 1);
  CHECK(j.at("transitions").size() == 1);
}

TEST_CASE("segmentation errors and empty input") {
  CHECK_THROWS_AS(evaluate_segmentation({transition(1, 2, 1.5)}, {}), Error);
  CHECK_THROWS_AS(evaluate_segmentation({}, {}, {-1.0}), Error);
  const auto r = evaluate_segmentation({}, {});
  CHECK(r.rows.empty());
  CHECK_FALSE(r.median_best_sec.has_value());
  CHECK_FALSE(r.cue_in_hit_rates[0].has_value());
}

TEST_CASE("segmentation report invariants on random input") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TransitionRecord> ts;
    std::vector<double> bs;
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t k = 0; k < n; ++k) {
      const double b = 300.0 * static_cast<double>(k + 1);
      const double out = b + u(rng), in = b + u(rng);
      ts.push_back(transition(out, in, 0.5 * (out + in)));
      bs.push_back(b);
    }
    const std::vector<double> taus{0.0, 5.0, 15.0, 30.0, 60.0, 120.0};
    const auto r = evaluate_segmentation(ts, bs, taus);
    CHECK(*r.median_best_sec <= std::min({*r.median_abs_out_sec, *r.median_abs_in_sec, *r.median_abs_mid_sec}));
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(*r.cue_in_hit_rates[i - 1] <= *r.cue_in_hit_rates[i]);
    for (const auto& h : r.cue_in_hit_rates) {
      CHECK(*h >= 0.0);
      CHECK(*h <= 1.0);
    }
    CHECK(r.closest_out + r.closest_in + r.closest_mid == n);
  }
}

TEST_CASE("merged reports pool rows") {
  const auto a = evaluate_segmentation({transition(60, 62, 61)}, {60});
  const auto b = evaluate_segmentation({transition(170, 200, 185), transition(290, 299, 294.5)}, {180, 300});
  const auto m = merge_reports({a, b}, {15});
  CHECK(m.rows.size() == 3);
  CHECK(m.median_abs_in_sec == 2.0);
  CHECK(*m.cue_in_hit_rates[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

#include <doctest.h>

#include <algorithm>
#include <random>

#include "djmix/error.hpp"
#include "djmix/stats.hpp"

using namespace djmix;

namespace {

BeatGrid grid_with_interval(std::size_t n, double interval, double start = 3.0) {
  BeatGrid g;
  for (std::size_t i = 0; i < n; ++i) g.beat_times.push_back(start + interval * static_cast<double>(i));
  g.tempo_bpm = 60.0 / interval;
  return g;
}

CuePoints span(std::size_t in, std::size_t out) {
  CuePoints c;
  c.cue_in_mix_beat = in;
  c.cue_out_mix_beat = out;
  return c;
}

CuePoints track_cues(std::size_t in, std::size_t out) {
  CuePoints c;
  c.cue_in_track_beat = in;
  c.cue_out_track_beat = out;
  return c;
}

}  // namespace

TEST_CASE("tempo adjustment arithmetic") {
  CHECK(tempo_adjustment(120.0, grid_with_interval(100, 0.47619), span(10, 80)) == doctest::Approx(5.0).epsilon(0.02));
  const auto g = grid_with_interval(100, 0.5);
  CHECK(tempo_adjustment(120.0, g, span(0, 99)) == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(tempo_adjustment(grid_tempo_bpm(g), g, span(0, 99))) < 1e-9);
  CHECK(tempo_adjustment(100.0, grid_with_interval(50, 60.0 / 92.0), span(5, 45)) == doctest::Approx(-8.0));
}

TEST_CASE("tempo adjustment ignores a displaced beat") {
  auto g = grid_with_interval(64, 0.5);
  g.beat_times[30] += 0.12;
  CHECK(tempo_adjustment(120.0, g, span(0, 63)) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("tempo adjustment errors") {
  const auto g = grid_with_interval(40, 0.5);
  CHECK_THROWS_AS(tempo_adjustment(120.0, g, span(10, 17)), Error);
  CHECK_NOTHROW(tempo_adjustment(120.0, g, span(10, 18)));
  CHECK_THROWS_AS(tempo_adjustment(120.0, g, span(10, 40)), Error);
  CHECK_THROWS_AS(tempo_adjustment(0.0, g, span(0, 20)), Error);
}

TEST_CASE("transposition histogram uses signed semitones") {
  const auto h = transposition_histogram(std::vector<int>{0, 0, 1, 11});
  CHECK(h.counts == std::map<int, std::size_t>{{-1, 1}, {0, 2}, {1, 1}});
  CHECK(h.total == 4);
  CHECK(h.fraction_transposed == 0.5);
  CHECK(transposition_histogram(std::vector<int>{0, 0, 0}).fraction_transposed == 0.0);
  CHECK(transposition_histogram(std::vector<int>{}).total == 0);
  CHECK(transposition_histogram(std::vector<int>{6, 7}).counts == std::map<int, std::size_t>{{-5, 1}, {6, 1}});

  std::vector<AlignmentResult> rs(3);
  rs[0].transposition_semitones = 10;
  rs[2].transposition_semitones = 1;
  CHECK(transposition_histogram(rs).counts == std::map<int, std::size_t>{{-2, 1}, {0, 1}, {1, 1}});
}

TEST_CASE("transition length histogram") {
  const auto h = transition_length_histogram(std::vector<long>{32, 32, 16});
  CHECK(h.counts == std::map<long, std::size_t>{{16, 1}, {32, 2}});
  CHECK(h.total == 3);
  CHECK(transition_length_histogram(std::vector<long>{}).counts.empty());

  const auto neg = transition_length_histogram(std::vector<long>{-3, 5, 7, 64}, 4);
  CHECK(neg.negative_counts == std::map<long, std::size_t>{{-4, 1}});
  CHECK(neg.counts == std::map<long, std::size_t>{{4, 2}, {64, 1}});
  CHECK_THROWS_AS(transition_length_histogram(std::vector<long>{1}, 0), Error);

  const auto peaks = transition_length_histogram(std::vector<long>{32, 32, 64, 64, 5});
  REQUIRE(peaks.phrase_peak_score.has_value());
  CHECK(*peaks.phrase_peak_score > 1.0);
}

TEST_CASE("cue agreement examples") {
  std::map<std::string, std::vector<CuePoints>> two{{"t", {track_cues(64, 200), track_cues(64, 200)}}};
  const auto a = cue_agreement(two);
  CHECK(a.distances_beats == std::vector<std::size_t>{0, 0});
  CHECK(a.shares_within[0] == 1.0);

  std::map<std::string, std::vector<CuePoints>> shifted{{"t", {track_cues(64, 200), track_cues(68, 200)}}};
  CHECK(cue_agreement(shifted).distances_beats == std::vector<std::size_t>{4, 0});

  std::map<std::string, std::vector<CuePoints>> three{{"t", {track_cues(0, 100), track_cues(8, 90), track_cues(40, 180)}}};
  const auto c = cue_agreement(three);
  CHECK(c.distances_beats.size() == 6);
  CHECK(c.thresholds == kAgreementThresholds);
  CHECK(*c.shares_within[1] == doctest::Approx(0.0));
  CHECK(*c.shares_within[2] == doctest::Approx(3.0 / 6.0));
  CHECK(*c.shares_within[3] == doctest::Approx(4.0 / 6.0));

  CHECK_FALSE(cue_agreement({}).shares_within[0].has_value());
}

TEST_CASE("cue agreement counts n(n-1) pairs per track") {
  std::mt19937_64 rng(17);
  for (std::size_t n = 1; n <= 8; ++n) {
    std::map<std::string, std::vector<CuePoints>> sets;
    for (std::size_t k = 0; k < n; ++k) sets["x"].push_back(track_cues(rng() % 64, 100 + rng() % 64));
    sets["single"].push_back(track_cues(1, 2));
    CHECK(cue_agreement(sets).distances_beats.size() == n * (n - 1));
  }
}

TEST_CASE("histograms do not depend on input order") {
  std::mt19937_64 rng(23);
  std::vector<int> shifts(40);
  std::vector<long> lengths(40);
  for (auto& s : shifts) s = static_cast<int>(rng() % 12);
  for (auto& l : lengths) l = static_cast<long>(rng() % 80) - 10;
  const auto h1 = transposition_histogram(shifts);
  const auto l1 = transition_length_histogram(lengths, 4);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(shifts.begin(), shifts.end(), rng);
    std::shuffle(lengths.begin(), lengths.end(), rng);
    const auto h2 = transposition_histogram(shifts);
    const auto l2 = transition_length_histogram(lengths, 4);
    CHECK(h2.counts == h1.counts);
    CHECK(h2.fraction_transposed == h1.fraction_transposed);
    CHECK(l2.counts == l1.counts);
    CHECK(l2.negative_counts == l1.negative_counts);
    CHECK(l2.phrase_peak_score == l1.phrase_peak_score);
  }
  std::size_t sum = 0;
  for (const auto& [k, v] : h1.counts) sum += v;
  CHECK(sum == shifts.size());
  sum = 0;
  for (const auto& [k, v] : l1.counts) sum += v;
  for (const auto& [k, v] : l1.negative_counts) sum += v;
  CHECK(sum == lengths.size());
}

TEST_CASE("tempo summary shares and report json") {
  StatsReport r;
  r.tempo_diffs_pct = {1.0, -4.0, 6.0, -12.0, 25.0};
  summarize_tempo(r);
  REQUIRE(r.tempo_shares_within.size() == 3);
  CHECK(*r.tempo_shares_within[0] == doctest::Approx(0.4));
  CHECK(*r.tempo_shares_within[1] == doctest::Approx(0.6));
  CHECK(*r.tempo_shares_within[2] == doctest::Approx(0.8));
  for (const auto& s : r.tempo_shares_within) {
    CHECK(*s >= 0.0);
    CHECK(*s <= 1.0);
  }
  r.transposition = transposition_histogram(std::vector<int>{0, 2});
  const auto j = to_json(r);
  CHECK(j.at("tempo_adjustment").at("count") == 5);
  CHECK(j.at("transposition").at("counts").at("2") == 1);

  StatsReport empty;
  summarize_tempo(empty);
  CHECK_FALSE(empty.tempo_shares_within[0].has_value());
}

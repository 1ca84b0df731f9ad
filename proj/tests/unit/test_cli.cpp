#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "djmix/cli.hpp"
#include "djmix/error.hpp"
#include "djmix/feature_cache.hpp"
#include "djmix/synthmix.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace djmix;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("djmix_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "djmix");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// Two played tracks joined by a 16-beat fade, plus one decoy.
CorpusMix small_mix(const std::string& id, std::size_t n_tracks = 2) {
  CorpusMix cm;
  cm.mix.mix_id = id;
  for (std::size_t k = 0; k < n_tracks; ++k) {
    cm.mix.tracks.push_back(
        fixture::track(id + "_t" + std::to_string(k), 500 + k, 124.0, 160, k > 0 ? 17 : 0, k + 1 < n_tracks ? 16 : 0));
    cm.mix.windows.push_back({0, 160});
    cm.mix.tempo_factors.push_back(1.0);
    cm.mix.transpose_semitones.push_back(0);
    if (k + 1 < n_tracks) cm.mix.crossfade_beats.push_back(16);
  }
  cm.decoys.push_back(fixture::track(id + "_decoy0", 900, 118.0, 160, 8, 8));
  return cm;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::map<std::string, std::string> row;
    std::stringstream ls(line);
    std::string f;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!std::getline(ls, f, ',')) f.clear();
      row[header[i]] = f;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("defaults reproduce the reference configuration") {
  const RunConfig c;
  CHECK(c.feature_mode == FeatureMode::ChromaMfcc);
  CHECK(c.key_invariant);
  CHECK(c.match_threshold == 0.4);
  CHECK(c.run_length == 32);
  CHECK(c.tolerances == std::vector<double>{15.0, 30.0, 60.0});
  CHECK(c.sample_rate == 22050);
  CHECK(c.match_rate_norm == MatchRateNorm::TrackSide);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
  const std::string a = "a";
  CHECK(fnv1a64({reinterpret_cast<const std::uint8_t*>(a.data()), 1}) == 0xaf63dc4c8601ec8cULL);
  const std::string fb = "foobar";
  CHECK(fnv1a64({reinterpret_cast<const std::uint8_t*>(fb.data()), fb.size()}) == 0x85944171f73967e8ULL);
}

TEST_CASE("feature serialization round trip") {
  std::mt19937_64 rng(1);
  auto f = oracle::synthetic_features(oracle::random_chroma(7, rng), oracle::random_matrix(12, 7, rng, -50, 50));
  f.beat_grid.tempo_bpm = 123.456;
  const auto blob = serialize_features(f);
  const auto g = deserialize_features(blob);
  CHECK(g.beat_grid.beat_times == f.beat_grid.beat_times);
  CHECK(g.beat_grid.tempo_bpm == f.beat_grid.tempo_bpm);
  CHECK(*g.chroma == *f.chroma);
  CHECK(*g.mfcc == *f.mfcc);

  auto only = f;
  only.mfcc.reset();
  const auto h = deserialize_features(serialize_features(only));
  CHECK_FALSE(h.mfcc.has_value());
  CHECK(*h.chroma == *f.chroma);

  auto cut = blob;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(deserialize_features(cut), Error);
  auto foreign = blob;
  foreign[0] = 'X';
  CHECK_THROWS_AS(deserialize_features(foreign), Error);
  auto trailing = blob;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_features(trailing), Error);
}

TEST_CASE("feature cache hits in memory and on disk") {
  const auto dir = fresh_dir("cache");
  const auto audio = oracle::click_train(120.0, 15.0).audio;
  write_wav(dir / "clicks.wav", audio);
  FeatureCache cache(dir / "store");
  const auto first = cache.get(dir / "clicks.wav");
  CHECK_FALSE(first.hit);
  CHECK(cache.get(dir / "clicks.wav").hit);
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir / "store")) {
    CHECK(e.path().extension() == ".djf");
    ++entries;
  }
  CHECK(entries == 1);

  FeatureCache reopened(dir / "store");
  const auto again = reopened.get(dir / "clicks.wav");
  CHECK(again.hit);
  CHECK(again.features.beat_grid.beat_times == first.features.beat_grid.beat_times);
  CHECK(*again.features.mfcc == *first.features.mfcc);

  FeatureParams chroma_only;
  chroma_only.mfcc = false;
  FeatureCache other(dir / "store", kWorkingRate, chroma_only);
  const std::vector<std::uint8_t> bytes{1, 2, 3};
  CHECK(other.key_for(bytes) != cache.key_for(bytes));
  CHECK(cache.key_for(bytes) != cache.key_for(std::vector<std::uint8_t>{1, 2, 4}));
}

TEST_CASE("features command: cache entry, cache hit and partial failure") {
  const auto dir = fresh_dir("features");
  write_wav(dir / "a.wav", oracle::click_train(128.0, 15.0).audio);
  std::ofstream(dir / "broken.wav") << "RIFF0000WAVEjunk";
  RunConfig config;
  config.out = dir / "out";
  std::ostringstream log;
  CHECK(cmd_features({dir / "a.wav"}, config, log) == kExitOk);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "out" / "cache")) ++entries;
  CHECK(entries == 1);
  CHECK(log.str().find("cache hit") == std::string::npos);

  std::ostringstream log2;
  CHECK(cmd_features({dir / "a.wav", dir / "broken.wav"}, config, log2) == kExitOk);
  CHECK(log2.str().find("cache hit: ") != std::string::npos);
  const auto report = read_json(dir / "out" / "features_report.json");
  CHECK(report.at("n_ok") == 1);
  CHECK(report.at("n_failed") == 1);
  CHECK(report.at("entries").at(0).at("status") == "cached");
  CHECK(report.at("entries").at(1).at("status") == "failed");

  std::ostringstream log3;
  CHECK(cmd_features({dir / "broken.wav"}, config, log3) == kExitFailure);
}

TEST_CASE("align command on a two-track mix with a decoy") {
  const auto dir = fresh_dir("align");
  const auto cm = small_mix("m0");
  const auto manifest = write_corpus_mix(cm, dir / "corpus");
  const auto truth = read_json(manifest).at("truth");
  RunConfig config;
  config.out = dir / "out";
  config.match_threshold = 0.6;
  std::ostringstream log;
  CHECK(cmd_align({manifest}, config, log) == kExitOk);

  const auto rows = read_csv(dir / "out" / "alignment.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(rows[k].at("role") == "track");
    CHECK(rows[k].at("matched") == "1");
    CHECK(rows[k].at("transposition_semitones") == "0");
    const double cue_in = std::stod(rows[k].at("cue_in_sec"));
    CHECK(std::abs(cue_in - truth.at("tracks").at(k).at("cue_in_sec").get<double>()) <= 2 * 60.0 / 124.0);
  }
  CHECK(rows[2].at("role") == "decoy");
  CHECK(rows[2].at("matched") == "0");
  CHECK(std::stod(rows[2].at("match_rate")) < config.match_threshold);
  CHECK(rows[2].at("cue_in_sec").empty());
  CHECK(rows[2].at("tempo_adjustment_pct").empty());

  const auto cues = read_csv(dir / "out" / "cues.csv");
  CHECK(cues.size() == 2);
  const auto doc = read_json(dir / "out" / "m0" / "alignment.json");
  CHECK(doc.at("transitions").size() == 1);
  CHECK(doc.at("transitions").at(0).at("prev_track_id") == "m0_t0");
  CHECK(fs::exists(dir / "out" / "m0" / "paths" / "m0_t1.csv"));
  CHECK(slurp(dir / "out" / "m0" / "paths" / "m0_t1.csv").rfind("track_beat,mix_beat\n", 0) == 0);

  SUBCASE("segment-eval on the same mix") {
    CHECK(cmd_segment_eval({manifest}, config, log) == kExitOk);
    const auto seg = read_json(dir / "out" / "segmentation.json");
    const auto& overall = seg.at("overall");
    CHECK(overall.at("n_transitions") == 1);
    CHECK(overall.at("median_abs_diff_sec").at("cue_in").get<double>() <= 1.0);
    CHECK(overall.at("closest_type_counts").at("cue_in") == 1);
    CHECK(overall.at("cue_in_hit_rates").at(0).at("rate") == 1.0);
    CHECK(seg.at("config").at("match_threshold") == 0.6);
  }
  SUBCASE("stats over the output directory is repeatable") {
    CHECK(cmd_stats(config.out, config, log) == kExitOk);
    const auto first = slurp(dir / "out" / "stats.json");
    const auto stats = json::parse(first);
    CHECK(stats.at("transposition").at("total") == 2);
    CHECK(stats.at("transition_length").at("total") == 1);
    CHECK(stats.at("tempo_adjustment").at("count") == 2);
    CHECK(cmd_stats(config.out, config, log) == kExitOk);
    CHECK(slurp(dir / "out" / "stats.json") == first);
    CHECK(fs::exists(dir / "out" / "tempo_adjustments.csv"));
    CHECK(fs::exists(dir / "out" / "transpositions.csv"));
    CHECK(fs::exists(dir / "out" / "transition_lengths.csv"));
    CHECK(fs::exists(dir / "out" / "cue_agreement.csv"));
  }
}

TEST_CASE("a single-track mix evaluates to an empty report") {
  const auto dir = fresh_dir("single");
  auto cm = small_mix("solo", 1);
  cm.decoys.clear();
  const auto manifest = write_corpus_mix(cm, dir / "corpus");
  RunConfig config;
  config.out = dir / "out";
  std::ostringstream log;
  CHECK(cmd_segment_eval({manifest}, config, log) == kExitOk);
  const auto seg = read_json(dir / "out" / "segmentation.json");
  CHECK(seg.at("overall").at("n_transitions") == 0);
  CHECK(seg.at("overall").at("median_abs_diff_sec").at("cue_in").is_null());
}

TEST_CASE("broken manifests are reported, not fatal for the rest") {
  const auto dir = fresh_dir("broken");
  fs::create_directories(dir / "bad");
  std::ofstream(dir / "bad" / "manifest.json") << R"({"mix_id":"bad","mix_audio":"mix.wav","tracks":[]})";
  RunConfig config;
  config.out = dir / "out";
  std::ostringstream log;
  CHECK(cmd_align({dir / "bad" / "manifest.json"}, config, log) == kExitFailure);
  CHECK(log.str().find("SchemaViolation") != std::string::npos);

  fs::create_directories(dir / "missing");
  std::ofstream(dir / "missing" / "manifest.json")
      << R"({"mix_id":"missing","mix_audio":"mix.wav","tracks":[{"track_id":"x","boundary_sec":0}]})";
  std::ostringstream log2;
  CHECK(cmd_align({dir / "missing" / "manifest.json"}, config, log2) == kExitFailure);
  const auto rows = read_csv(dir / "out" / "alignment.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("error").find("MissingAudio") != std::string::npos);
}

TEST_CASE("stats on an empty corpus") {
  const auto dir = fresh_dir("empty_stats");
  RunConfig config;
  config.out = dir / "out";
  std::ostringstream log;
  CHECK(cmd_stats(dir, config, log) == kExitOk);
  const auto stats = read_json(dir / "out" / "stats.json");
  CHECK(stats.at("transposition").at("total") == 0);
  CHECK(stats.at("cue_agreement").at("count") == 0);
}

TEST_CASE("manifest discovery") {
  const auto dir = fresh_dir("discover");
  fs::create_directories(dir / "b");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "empty");
  std::ofstream(dir / "a" / "manifest.json") << "{}";
  std::ofstream(dir / "b" / "manifest.json") << "{}";
  const auto found = collect_manifests({dir, dir / "a" / "manifest.json"});
  CHECK(found == std::vector<fs::path>{dir / "a" / "manifest.json", dir / "b" / "manifest.json"});
}

TEST_CASE("exit codes") {
  CHECK(run({}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"align"}) == kExitUsage);
  CHECK(run({"align", "x.json", "--feature", "cqt"}) == kExitUsage);
  CHECK(run({"align", "x.json", "--match-threshold", "2"}) == kExitUsage);
  CHECK(run({"--help"}) == kExitOk);
  const auto dir = fresh_dir("exit");
  CHECK(run({"align", (dir / "nothing").string(), "--out", (dir / "out").string()}) == kExitFailure);
  CHECK(run({"align", dir.string(), "--out", (dir / "out").string()}) == kExitUsage);
  CHECK(run({"stats", dir.string(), "--out", (dir / "out").string()}) == kExitOk);
}

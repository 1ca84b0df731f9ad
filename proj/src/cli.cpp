#include "djmix/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "djmix/error.hpp"
#include "djmix/feature_cache.hpp"
#include "djmix/manifest.hpp"
#include "djmix/stats.hpp"
#include "djmix/synthmix.hpp"

namespace djmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
// the caller's business; fn must not throw.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

// Library errors already lead with their kind.
std::string describe(const std::exception& e) { return e.what(); }

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// CSV field quoting for ids and messages.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json config_json(const RunConfig& c) {
  return {{"feature_mode", std::string(to_string(c.feature_mode))},
          {"key_invariant", c.key_invariant},
          {"match_threshold", c.match_threshold},
          {"run_length", c.run_length},
          {"tolerances_sec", c.tolerances},
          {"sample_rate", c.sample_rate},
          {"match_rate_norm", c.match_rate_norm == MatchRateNorm::TrackSide ? "track" : "mix"}};
}

FeatureParams feature_params(const RunConfig& c) {
  FeatureParams p;
  p.chroma = c.feature_mode != FeatureMode::Mfcc;
  p.mfcc = c.feature_mode != FeatureMode::Chroma;
  return p;
}

// ---- alignment pipeline -------------------------------------------------

struct TrackOutcome {
  std::string track_id;
  bool decoy = false;
  std::optional<AlignmentResult> result;
  std::optional<CuePoints> cues;
  std::optional<double> track_tempo_bpm;
  std::optional<double> tempo_adjustment_pct;
  bool matched = false;
  std::string error;
};

struct MixOutcome {
  fs::path manifest_path;
  std::optional<MixManifest> manifest;
  std::optional<BeatSyncFeatures> mix_features;
  std::string error;
  std::vector<TrackOutcome> tracks;
  std::vector<TransitionRecord> transitions;
};

struct TaskRef {
  std::size_t mix;
  std::size_t track;
};

void run_track(const RunConfig& config, FeatureCache& cache, const BeatSyncFeatures& mix_features,
               const std::optional<fs::path>& audio, TrackOutcome& out) {
  try {
    if (!audio) throw Error(ErrorKind::MissingAudio, "no audio path for " + out.track_id);
    if (!fs::exists(*audio)) throw Error(ErrorKind::MissingAudio, "missing " + audio->string());
    const auto track = cache.get(*audio).features;
    out.track_tempo_bpm = grid_tempo_bpm(track.beat_grid);
    out.result = align(track, mix_features, {config.feature_mode, config.key_invariant, config.match_rate_norm});
    out.matched = out.result->match_rate >= config.match_threshold;
    if (out.matched) {
      out.cues = extract_cues(out.result->path, mix_features.beat_grid, config.run_length, out.track_id);
      out.tempo_adjustment_pct = tempo_adjustment(*out.track_tempo_bpm, mix_features.beat_grid, *out.cues);
    }
  } catch (const std::exception& e) {
    out.error = describe(e);
  }
}

std::vector<MixOutcome> run_alignment(const std::vector<fs::path>& manifests, const RunConfig& config,
                                      std::ostream& log) {
  FeatureCache cache(config.cache_dir, config.sample_rate, feature_params(config));
  std::vector<MixOutcome> mixes(manifests.size());
  for (std::size_t m = 0; m < manifests.size(); ++m) {
    mixes[m].manifest_path = manifests[m];
    try {
      mixes[m].manifest = parse_manifest(manifests[m]);
    } catch (const std::exception& e) {
      mixes[m].error = describe(e);
    }
  }

  parallel_for(mixes.size(), config.workers, [&](std::size_t m) {
    auto& mix = mixes[m];
    if (!mix.manifest) return;
    try {
      if (!fs::exists(mix.manifest->mix_audio_path))
        throw Error(ErrorKind::MissingAudio, "missing " + mix.manifest->mix_audio_path.string());
      mix.mix_features = cache.get(mix.manifest->mix_audio_path).features;
    } catch (const std::exception& e) {
      mix.error = describe(e);
    }
  });

  std::vector<TaskRef> tasks;
  std::vector<std::optional<fs::path>> task_audio;
  for (std::size_t m = 0; m < mixes.size(); ++m) {
    auto& mix = mixes[m];
    if (!mix.manifest) continue;
    for (const auto& e : mix.manifest->entries) mix.tracks.emplace_back().track_id = e.track_id;
    for (const auto& d : mix.manifest->decoys) {
      auto& t = mix.tracks.emplace_back();
      t.track_id = d.track_id;
      t.decoy = true;
    }
    const std::size_t n_entries = mix.manifest->entries.size();
    for (std::size_t k = 0; k < mix.tracks.size(); ++k) {
      if (!mix.mix_features) {
        mix.tracks[k].error = mix.error;
        continue;
      }
      tasks.push_back({m, k});
      task_audio.push_back(k < n_entries ? mix.manifest->entries[k].track_audio_path
                                         : mix.manifest->decoys[k - n_entries].track_audio_path);
    }
  }
  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    auto& mix = mixes[tasks[i].mix];
    run_track(config, cache, *mix.mix_features, task_audio[i], mix.tracks[tasks[i].track]);
  });

  for (auto& mix : mixes) {
    if (!mix.error.empty()) log << "error: " << mix.manifest_path.string() << ": " << mix.error << "\n";
    for (const auto& t : mix.tracks)
      if (!t.error.empty() && t.error != mix.error) log << "error: " << t.track_id << ": " << t.error << "\n";
    if (!mix.mix_features) continue;
    // Tracklist order = order of cue-in in the mix; manifest order breaks ties.
    std::vector<CuePoints> placed;
    for (const auto& t : mix.tracks)
      if (!t.decoy && t.cues) placed.push_back(*t.cues);
    std::stable_sort(placed.begin(), placed.end(),
                     [](const CuePoints& a, const CuePoints& b) { return a.cue_in_mix_beat < b.cue_in_mix_beat; });
    mix.transitions = build_transitions(placed, mix.mix_features->beat_grid);
  }
  return mixes;
}

std::string mix_id_of(const MixOutcome& mix) {
  return mix.manifest ? mix.manifest->mix_id : mix.manifest_path.parent_path().filename().string();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json transition_json(const TransitionRecord& t) {
  return {{"prev_track_id", t.prev_track_id},   {"next_track_id", t.next_track_id},
          {"cue_out_sec", t.cue_out_sec},       {"cue_in_sec", t.cue_in_sec},
          {"cue_mid_sec", t.cue_mid_sec},       {"cue_out_mix_beat", t.cue_out_mix_beat},
          {"cue_in_mix_beat", t.cue_in_mix_beat}, {"cue_mid_mix_beat", t.cue_mid_mix_beat},
          {"length_beats", t.length_beats},     {"length_sec", t.length_sec},
          {"overlapping", t.overlapping}};
}

json mix_json(const MixOutcome& mix, const RunConfig& config) {
  json tracks = json::array();
  for (const auto& t : mix.tracks) {
    json row = {{"track_id", t.track_id},
                {"role", t.decoy ? "decoy" : "track"},
                {"matched", t.matched},
                {"track_tempo_bpm", optional_json(t.track_tempo_bpm)},
                {"tempo_adjustment_pct", optional_json(t.tempo_adjustment_pct)},
                {"error", t.error.empty() ? json(nullptr) : json(t.error)}};
    if (t.result) {
      row["match_rate"] = t.result->match_rate;
      row["total_cost"] = t.result->total_cost;
      row["transposition_semitones"] = t.result->transposition_semitones;
      row["transposition_signed"] = signed_semitones(t.result->transposition_semitones);
      row["path_length"] = t.result->path.size();
    }
    if (t.cues) {
      row["cues"] = {{"cue_in_sec", t.cues->cue_in_sec},
                     {"cue_out_sec", t.cues->cue_out_sec},
                     {"cue_in_mix_beat", t.cues->cue_in_mix_beat},
                     {"cue_out_mix_beat", t.cues->cue_out_mix_beat},
                     {"cue_in_track_beat", t.cues->cue_in_track_beat},
                     {"cue_out_track_beat", t.cues->cue_out_track_beat}};
    } else {
      row["cues"] = nullptr;
    }
    tracks.push_back(std::move(row));
  }
  json transitions = json::array();
  for (const auto& t : mix.transitions) transitions.push_back(transition_json(t));
  json doc = {{"mix_id", mix_id_of(mix)},
              {"config", config_json(config)},
              {"tracks", tracks},
              {"transitions", transitions},
              {"error", mix.error.empty() ? json(nullptr) : json(mix.error)}};
  if (mix.mix_features) {
    doc["mix_tempo_bpm"] = grid_tempo_bpm(mix.mix_features->beat_grid);
    doc["mix_beat_times"] = mix.mix_features->beat_grid.beat_times;
  }
  return doc;
}

void write_alignment_outputs(const std::vector<MixOutcome>& mixes, const RunConfig& config) {
  std::ostringstream table, cues;
  table << "mix_id,track_id,role,matched,match_rate,transposition_semitones,total_cost,track_tempo_bpm,"
           "cue_in_sec,cue_out_sec,cue_in_mix_beat,cue_out_mix_beat,cue_in_track_beat,cue_out_track_beat,"
           "tempo_adjustment_pct,error\n";
  cues << "mix_id,track_id,cue_in_sec,cue_out_sec,cue_in_track_beat,cue_out_track_beat,match_rate,"
          "transposition_semitones\n";
  for (const auto& mix : mixes) {
    const std::string mix_id = mix_id_of(mix);
    for (const auto& t : mix.tracks) {
      table << csv_field(mix_id) << ',' << csv_field(t.track_id) << ',' << (t.decoy ? "decoy" : "track") << ','
            << (t.matched ? 1 : 0) << ',';
      if (t.result)
        table << fixed(t.result->match_rate) << ',' << t.result->transposition_semitones << ','
              << fixed(t.result->total_cost) << ',';
      else
        table << ",,,";
      table << (t.track_tempo_bpm ? fixed(*t.track_tempo_bpm) : "") << ',';
      if (t.cues)
        table << fixed(t.cues->cue_in_sec) << ',' << fixed(t.cues->cue_out_sec) << ',' << t.cues->cue_in_mix_beat
              << ',' << t.cues->cue_out_mix_beat << ',' << t.cues->cue_in_track_beat << ','
              << t.cues->cue_out_track_beat << ',';
      else
        table << ",,,,,,";
      table << (t.tempo_adjustment_pct ? fixed(*t.tempo_adjustment_pct) : "") << ',' << csv_field(t.error) << '\n';

      if (t.cues && t.result)
        cues << csv_field(mix_id) << ',' << csv_field(t.track_id) << ',' << fixed(t.cues->cue_in_sec) << ','
             << fixed(t.cues->cue_out_sec) << ',' << t.cues->cue_in_track_beat << ',' << t.cues->cue_out_track_beat
             << ',' << fixed(t.result->match_rate) << ',' << t.result->transposition_semitones << '\n';

      if (t.result) {
        std::ostringstream path_csv;
        write_path_csv(path_csv, t.result->path);
        write_text(config.out / mix_id / "paths" / (t.track_id + ".csv"), path_csv.str());
      }
    }
    write_json(config.out / mix_id / "alignment.json", mix_json(mix, config));
  }
  write_text(config.out / "alignment.csv", table.str());
  write_text(config.out / "cues.csv", cues.str());
}

int exit_code(std::size_t succeeded, std::size_t attempted) {
  return attempted > 0 && succeeded == 0 ? kExitFailure : kExitOk;
}

std::size_t count_succeeded(const std::vector<MixOutcome>& mixes, std::size_t& attempted) {
  std::size_t ok = 0;
  attempted = 0;
  for (const auto& mix : mixes) {
    if (!mix.manifest) {
      ++attempted;
      continue;
    }
    for (const auto& t : mix.tracks) {
      ++attempted;
      if (t.error.empty()) ++ok;
    }
  }
  return ok;
}

}  // namespace

std::vector<fs::path> collect_manifests(const std::vector<fs::path>& inputs) {
  std::set<fs::path> found;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      if (fs::exists(in / "manifest.json")) found.insert(in / "manifest.json");
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) found.insert(e.path() / "manifest.json");
    } else {
      found.insert(in);
    }
  }
  return {found.begin(), found.end()};
}

int cmd_features(const std::vector<fs::path>& audio_paths, const RunConfig& config, std::ostream& log) {
  FeatureCache cache(config.cache_dir ? config.cache_dir : std::optional(config.out / "cache"), config.sample_rate,
                     feature_params(config));
  struct Entry {
    std::string status, error;
    std::size_t n_beats = 0;
    double tempo = 0.0;
  };
  std::vector<Entry> entries(audio_paths.size());
  parallel_for(audio_paths.size(), config.workers, [&](std::size_t i) {
    try {
      const auto r = cache.get(audio_paths[i]);
      entries[i].status = r.hit ? "cached" : "computed";
      entries[i].n_beats = r.features.n_beats();
      entries[i].tempo = grid_tempo_bpm(r.features.beat_grid);
    } catch (const std::exception& e) {
      entries[i].status = "failed";
      entries[i].error = describe(e);
    }
  });
  json rows = json::array();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.status == "cached") log << "cache hit: " << audio_paths[i].string() << "\n";
    if (e.status == "failed") log << "error: " << audio_paths[i].string() << ": " << e.error << "\n";
    if (e.status != "failed") ++ok;
    json row = {{"path", audio_paths[i].string()}, {"status", e.status}};
    if (e.status == "failed") {
      row["error"] = e.error;
    } else {
      row["n_beats"] = e.n_beats;
      row["tempo_bpm"] = e.tempo;
    }
    rows.push_back(std::move(row));
  }
  write_json(config.out / "features_report.json",
             {{"entries", rows}, {"n_ok", ok}, {"n_failed", entries.size() - ok}, {"config", config_json(config)}});
  return exit_code(ok, entries.size());
}

int cmd_align(const std::vector<fs::path>& manifests, const RunConfig& config, std::ostream& log) {
  const auto mixes = run_alignment(manifests, config, log);
  write_alignment_outputs(mixes, config);
  std::size_t attempted = 0;
  const std::size_t ok = count_succeeded(mixes, attempted);
  return exit_code(ok, attempted);
}

int cmd_segment_eval(const std::vector<fs::path>& manifests, const RunConfig& config, std::ostream& log) {
  const auto mixes = run_alignment(manifests, config, log);
  write_alignment_outputs(mixes, config);

  std::vector<SegmentationReport> reports;
  json per_mix = json::object();
  for (const auto& mix : mixes) {
    if (!mix.manifest || !mix.mix_features) continue;
    std::map<std::string, double> boundary;
    for (const auto& e : mix.manifest->entries) boundary[e.track_id] = e.boundary_seconds;
    std::vector<double> boundaries;
    for (const auto& t : mix.transitions) boundaries.push_back(boundary.at(t.next_track_id));
    try {
      auto report = evaluate_segmentation(mix.transitions, boundaries, config.tolerances, &mix.mix_features->beat_grid);
      per_mix[mix.manifest->mix_id] = to_json(report);
      reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      log << "error: " << mix.manifest->mix_id << ": " << describe(e) << "\n";
    }
  }
  write_json(config.out / "segmentation.json", {{"config", config_json(config)},
                                                {"overall", to_json(merge_reports(reports, config.tolerances))},
                                                {"mixes", per_mix}});
  std::size_t attempted = 0;
  const std::size_t ok = count_succeeded(mixes, attempted);
  return exit_code(ok, attempted);
}

int cmd_stats(const fs::path& corpus_dir, const RunConfig& config, std::ostream& log) {
  std::vector<fs::path> files;
  if (fs::is_directory(corpus_dir))
    for (const auto& e : fs::directory_iterator(corpus_dir))
      if (e.is_directory() && fs::exists(e.path() / "alignment.json")) files.push_back(e.path() / "alignment.json");
  std::sort(files.begin(), files.end());

  StatsReport report;
  std::vector<int> shifts;
  std::vector<long> lengths;
  std::map<std::string, std::vector<CuePoints>> cue_sets;
  std::ostringstream tempo_csv, shift_csv;
  tempo_csv << "mix_id,track_id,tempo_adjustment_pct\n";
  shift_csv << "mix_id,track_id,transposition_semitones\n";
  std::size_t failed = 0;
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      const json doc = json::parse(in);
      const std::string mix_id = doc.at("mix_id");
      for (const auto& t : doc.at("tracks")) {
        if (t.at("role") != "track" || !t.at("matched").get<bool>()) continue;
        const std::string id = t.at("track_id");
        if (t.contains("transposition_signed")) {
          shifts.push_back(t.at("transposition_signed").get<int>());
          shift_csv << csv_field(mix_id) << ',' << csv_field(id) << ',' << shifts.back() << '\n';
        }
        if (!t.at("tempo_adjustment_pct").is_null()) {
          report.tempo_diffs_pct.push_back(t.at("tempo_adjustment_pct").get<double>());
          tempo_csv << csv_field(mix_id) << ',' << csv_field(id) << ',' << fixed(report.tempo_diffs_pct.back())
                    << '\n';
        }
        if (!t.at("cues").is_null()) {
          const auto& c = t.at("cues");
          CuePoints cp;
          cp.track_id = id;
          cp.cue_in_mix_beat = c.at("cue_in_mix_beat");
          cp.cue_out_mix_beat = c.at("cue_out_mix_beat");
          cp.cue_in_track_beat = c.at("cue_in_track_beat");
          cp.cue_out_track_beat = c.at("cue_out_track_beat");
          cp.cue_in_sec = c.at("cue_in_sec");
          cp.cue_out_sec = c.at("cue_out_sec");
          cue_sets[id].push_back(cp);
        }
      }
      for (const auto& tr : doc.at("transitions")) lengths.push_back(tr.at("length_beats").get<long>());
    } catch (const std::exception& e) {
      ++failed;
      log << "error: " << f.string() << ": " << e.what() << "\n";
    }
  }
  report.transposition = transposition_histogram(shifts);
  report.transition_lengths = transition_length_histogram(lengths);
  report.agreement = cue_agreement(cue_sets);
  summarize_tempo(report);

  json doc = to_json(report);
  doc["n_mixes"] = files.size() - failed;
  doc["config"] = config_json(config);
  write_json(config.out / "stats.json", doc);
  write_text(config.out / "tempo_adjustments.csv", tempo_csv.str());
  write_text(config.out / "transpositions.csv", shift_csv.str());
  std::ostringstream len_csv, agree_csv;
  len_csv << "length_beats,count\n";
  for (const auto& [len, n] : report.transition_lengths.negative_counts) len_csv << len << ',' << n << '\n';
  for (const auto& [len, n] : report.transition_lengths.counts) len_csv << len << ',' << n << '\n';
  write_text(config.out / "transition_lengths.csv", len_csv.str());
  agree_csv << "distance_beats\n";
  for (std::size_t d : report.agreement.distances_beats) agree_csv << d << '\n';
  write_text(config.out / "cue_agreement.csv", agree_csv.str());
  return files.empty() || failed < files.size() ? kExitOk : kExitFailure;
}

int cmd_synth(std::size_t n_mixes, std::uint64_t seed, const RunConfig& config, std::ostream& log) {
  const auto corpus = make_corpus(n_mixes, seed);
  std::vector<std::string> errors(corpus.size());
  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    try {
      write_corpus_mix(corpus[i], config.out, config.sample_rate);
    } catch (const std::exception& e) {
      errors[i] = describe(e);
    }
  });
  std::size_t ok = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (errors[i].empty()) {
      ++ok;
      log << "wrote " << (config.out / corpus[i].mix.mix_id).string() << "\n";
    } else {
      log << "error: " << corpus[i].mix.mix_id << ": " << errors[i] << "\n";
    }
  }
  return exit_code(ok, corpus.size());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"DJ mix reverse engineering: align tracks to mixes, extract cues, evaluate and summarize."};
  app.require_subcommand(1);

  RunConfig config;
  std::string feature = "chroma+mfcc";
  std::string cache_dir;
  std::string out = "out";
  bool mix_side = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--feature", feature, "mfcc | chroma | chroma+mfcc")
        ->check(CLI::IsMember({"mfcc", "chroma", "chroma+mfcc", "chroma_mfcc"}));
    cmd->add_flag("--key-invariant,!--no-key-invariant", config.key_invariant,
                  "Search all 12 chroma shifts (default on)");
    cmd->add_option("--match-threshold", config.match_threshold)->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--run-length", config.run_length)->check(CLI::PositiveNumber);
    cmd->add_option("--tolerances", config.tolerances, "Hit-rate windows in seconds")->delimiter(',');
    cmd->add_option("--sr", config.sample_rate)->check(CLI::PositiveNumber);
    cmd->add_option("--workers", config.workers)->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", cache_dir);
    cmd->add_option("--out", out);
    cmd->add_flag("--mix-side-match-rate", mix_side, "Normalize match rate by the mix span");
  };

  std::vector<std::string> paths;
  auto* features = app.add_subcommand("features", "Extract and cache beat-synchronous features");
  features->add_option("paths", paths, "Audio files")->required();
  add_common(features);

  std::vector<std::string> manifests;
  auto* align_cmd = app.add_subcommand("align", "Align every manifest track to its mix");
  align_cmd->add_option("manifests", manifests, "Manifest files or corpus directories")->required();
  add_common(align_cmd);

  auto* seg = app.add_subcommand("segment-eval", "Compare cue points with annotated boundaries");
  seg->add_option("manifests", manifests, "Manifest files or corpus directories")->required();
  add_common(seg);

  std::string corpus_dir;
  auto* stats = app.add_subcommand("stats", "Aggregate alignment outputs");
  stats->add_option("dir", corpus_dir, "Directory holding <mix_id>/alignment.json")->required();
  add_common(stats);

  std::size_t n_mixes = 10;
  std::uint64_t seed = 1;
  auto* synth = app.add_subcommand("synth", "Render a synthetic corpus with ground truth");
  synth->add_option("--mixes", n_mixes)->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);
  add_common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  config.feature_mode = *parse_feature_mode(feature);
  if (!cache_dir.empty()) config.cache_dir = fs::path(cache_dir);
  config.out = out;
  config.match_rate_norm = mix_side ? MatchRateNorm::MixSide : MatchRateNorm::TrackSide;
  for (double t : config.tolerances)
    if (!(t >= 0.0)) {
      std::cerr << "--tolerances must be non-negative\n";
      return kExitUsage;
    }

  try {
    const auto as_paths = [](const std::vector<std::string>& v) { return std::vector<fs::path>(v.begin(), v.end()); };
    if (features->parsed()) return cmd_features(as_paths(paths), config, std::cerr);
    if (align_cmd->parsed() || seg->parsed()) {
      const auto found = collect_manifests(as_paths(manifests));
      if (found.empty()) {
        std::cerr << "no manifests found\n";
        return kExitUsage;
      }
      return align_cmd->parsed() ? cmd_align(found, config, std::cerr) : cmd_segment_eval(found, config, std::cerr);
    }
    if (stats->parsed()) return cmd_stats(corpus_dir, config, std::cerr);
    if (synth->parsed()) return cmd_synth(n_mixes, seed, config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << describe(e) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace djmix

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "djmix/audio.hpp"
#include "djmix/manifest.hpp"

namespace djmix {

/// Procedural dance-music track: a kick on every beat, a sustained chord pad
/// (root, fifth, octave) and, outside the intro and outro, a plucked lead
/// note per beat. Intro and outro are pad + kick only, the sections DJs
/// usually mix over.
struct SynthTrackSpec {
  std::string id;
  std::uint64_t seed = 0;
  double tempo_bpm = 128.0;
  std::size_t n_beats = 64;             // multiple of 32
  std::vector<int> chord_progression;   // root pitch class per 8 beats
  double brightness = 0.5;              // partial roll-off in (0, 1)
  std::size_t intro_beats = 0;          // leading beats without the lead voice
  std::size_t outro_beats = 0;          // trailing beats without the lead voice
};

struct PlayWindow {
  std::size_t start_beat = 0;
  std::size_t end_beat = 0;  // exclusive
};

struct SynthMixSpec {
  std::string mix_id;
  std::vector<SynthTrackSpec> tracks;
  std::vector<PlayWindow> windows;           // per track
  std::vector<std::size_t> crossfade_beats;  // per transition (tracks - 1), in beats of the outgoing track
  std::vector<double> tempo_factors;         // per track
  std::vector<int> transpose_semitones;      // per track, signed
};

struct TrackTruth {
  std::string track_id;
  double start_sec = 0.0;   // first audible sample in the mix
  double end_sec = 0.0;     // last audible sample in the mix
  double cue_in_sec = 0.0;  // fade-in complete (track start for the first track)
  double cue_out_sec = 0.0; // fade-out begins (final beat onset for the last track)
  double tempo_factor = 1.0;
  int transpose_semitones = 0;
};

struct GroundTruth {
  std::vector<TrackTruth> tracks;
  std::vector<double> annotated_boundaries_sec;  // one per track, at its true cue-in
};

/// Render the whole track at its own tempo, peak-normalized.
AudioBuffer synth_track(const SynthTrackSpec& spec, int sample_rate = kWorkingRate);

/// Render the window [start_beat, end_beat) at `bpm` with chord roots shifted
/// by `transpose` semitones. Unnormalized.
std::vector<float> render_track_segment(const SynthTrackSpec& spec, std::size_t start_beat, std::size_t end_beat,
                                        double bpm, int transpose, int sample_rate);

struct RenderedMix {
  AudioBuffer audio;
  GroundTruth truth;
};

/// Equal-power (quarter-sine) crossfades between consecutive windows; each
/// track is re-rendered at tempo_bpm * tempo_factor.
RenderedMix render_mix(const SynthMixSpec& spec, int sample_rate = kWorkingRate);

/// Gains of the outgoing and incoming track at fade position u in [0, 1].
std::pair<double, double> equal_power_gains(double u);

void validate(const SynthTrackSpec& spec);
void validate(const SynthMixSpec& spec);

struct CorpusMix {
  SynthMixSpec mix;
  std::vector<SynthTrackSpec> decoys;
};

/// Deterministic corpus: 3-6 tracks per mix, tempo factors in [0.92, 1.10],
/// ~90% untransposed (otherwise +-1 or +-2), crossfades from {16, 32, 64},
/// and at least one decoy per mix. All played tracks of a mix share one
/// played tempo, like a beat-matched DJ set.
std::vector<CorpusMix> make_corpus(std::size_t n_mixes, std::uint64_t seed);

struct CorpusOptions {
  std::vector<std::size_t> crossfade_choices = {16, 32, 64};
  double transposed_share = 0.1;
  std::size_t min_tracks = 3;
  std::size_t max_tracks = 6;
  std::size_t min_decoys = 1;
  std::size_t max_decoys = 2;
};

std::vector<CorpusMix> make_corpus(std::size_t n_mixes, std::uint64_t seed, const CorpusOptions& options);

/// Write mix.wav, tracks/<id>.wav and manifest.json (manifest + "truth")
/// under dir/<mix_id>/. Returns the manifest path.
std::filesystem::path write_corpus_mix(const CorpusMix& corpus_mix, const std::filesystem::path& dir,
                                       int sample_rate = kWorkingRate);

nlohmann::json to_json(const GroundTruth& truth);

/// Manifest describing a rendered mix (boundaries at the true cue-ins).
MixManifest manifest_for(const CorpusMix& corpus_mix, const GroundTruth& truth, const std::filesystem::path& mix_dir);

}  // namespace djmix

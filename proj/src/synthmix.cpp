#include "djmix/synthmix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "djmix/error.hpp"

namespace djmix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kBeatsPerChord = 8;
constexpr std::size_t kTableSize = 4096;
constexpr int kPartials = 6;
constexpr double kPadGain = 0.15;
constexpr double kKickGain = 0.6;
constexpr double kLeadGain = 0.6;
constexpr double kChordGlide = 0.02;  // seconds of crossfade on a chord change
constexpr std::array<int, 5> kLeadDegrees = {0, 2, 4, 7, 9};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64(state_);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(next()); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit(next()) * static_cast<double>(n)); }

 private:
  std::uint64_t state_;
};

double midi_hz(int midi) { return 440.0 * std::pow(2.0, (midi - 69) / 12.0); }

int wrap12(int pc) { return ((pc % 12) + 12) % 12; }

std::vector<double> pad_table(double brightness) {
  std::vector<double> table(kTableSize + 1);
  double peak = 0.0;
  for (std::size_t i = 0; i <= kTableSize; ++i) {
    const double ph = kTwoPi * static_cast<double>(i) / kTableSize;
    double v = 0.0;
    for (int k = 1; k <= kPartials; ++k) v += std::pow(brightness, k - 1) / k * std::sin(k * ph);
    table[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  for (double& v : table) v /= peak;
  return table;
}

double lookup(const std::vector<double>& table, double cycles) {
  const double pos = (cycles - std::floor(cycles)) * kTableSize;
  const auto i = std::min(static_cast<std::size_t>(pos), kTableSize - 1);
  const double f = pos - static_cast<double>(i);
  return table[i] + f * (table[i + 1] - table[i]);
}

double pad_chord(const std::vector<double>& table, int root_pc, double t) {
  const int base = 48 + root_pc;
  return lookup(table, midi_hz(base) * t) + lookup(table, midi_hz(base + 7) * t) +
         lookup(table, midi_hz(base + 12) * t);
}

double kick(double dt, std::uint64_t beat_seed) {
  constexpr double kSweepTau = 0.03, kDecay = 0.08, kClick = 0.003;
  const double phase = 50.0 * dt + 60.0 * kSweepTau * (1.0 - std::exp(-dt / kSweepTau));
  double v = std::sin(kTwoPi * phase) * std::exp(-dt / kDecay);
  if (dt < kClick) {
    const auto sample = static_cast<std::uint64_t>(dt * 1e6);
    v += 0.5 * (2.0 * unit(splitmix64(beat_seed ^ sample)) - 1.0) * (1.0 - dt / kClick);
  }
  return v;
}

double pluck(double dt, double hz) {
  const double env = std::exp(-dt / 0.25) * std::min(1.0, dt / 0.002);
  return env * (std::sin(kTwoPi * hz * dt) + 0.3 * std::sin(2.0 * kTwoPi * hz * dt));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidSpec, what);
}

}  // namespace

void validate(const SynthTrackSpec& spec) {
  require(std::isfinite(spec.tempo_bpm) && spec.tempo_bpm > 0.0, "tempo_bpm must be positive");
  require(spec.n_beats > 0 && spec.n_beats % 32 == 0, "n_beats must be a positive multiple of 32");
  require(spec.chord_progression.size() == spec.n_beats / kBeatsPerChord,
          "chord_progression needs one root per 8 beats");
  for (int r : spec.chord_progression) require(r >= 0 && r < 12, "chord roots must be pitch classes 0-11");
  require(spec.brightness > 0.0 && spec.brightness < 1.0, "brightness must be in (0, 1)");
  require(spec.intro_beats + spec.outro_beats <= spec.n_beats, "intro and outro exceed the track");
}

void validate(const SynthMixSpec& spec) {
  const std::size_t n = spec.tracks.size();
  require(n >= 1, "mix needs at least one track");
  require(spec.windows.size() == n && spec.tempo_factors.size() == n && spec.transpose_semitones.size() == n,
          "per-track vectors must match the track count");
  require(spec.crossfade_beats.size() == n - 1, "need one crossfade per transition");
  for (std::size_t k = 0; k < n; ++k) {
    validate(spec.tracks[k]);
    const auto& w = spec.windows[k];
    require(w.start_beat < w.end_beat && w.end_beat <= spec.tracks[k].n_beats, "window outside the track");
    require(std::isfinite(spec.tempo_factors[k]) && spec.tempo_factors[k] > 0.0, "tempo factor must be positive");
    require(std::abs(spec.transpose_semitones[k]) < 12, "transposition must be within an octave");
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t f = spec.crossfade_beats[k];
    require(f < spec.windows[k].end_beat - spec.windows[k].start_beat, "crossfade longer than outgoing window");
  }
}

std::pair<double, double> equal_power_gains(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return {std::cos(0.5 * std::numbers::pi * u), std::sin(0.5 * std::numbers::pi * u)};
}

std::vector<float> render_track_segment(const SynthTrackSpec& spec, std::size_t start_beat, std::size_t end_beat,
                                        double bpm, int transpose, int sample_rate) {
  validate(spec);
  require(start_beat < end_beat && end_beat <= spec.n_beats, "segment outside the track");
  require(std::isfinite(bpm) && bpm > 0.0 && sample_rate > 0, "invalid render tempo or rate");

  const double beat_sec = 60.0 / bpm;
  const double sr = sample_rate;
  const auto n_samples =
      static_cast<std::size_t>(std::llround(static_cast<double>(end_beat - start_beat) * beat_sec * sr));
  const auto table = pad_table(spec.brightness);
  // Transposition shifts pitch rather than re-voicing, so the register moves too.
  const auto root = [&](std::size_t beat) { return spec.chord_progression[beat / kBeatsPerChord] + transpose; };
  const std::size_t body_end = spec.n_beats - spec.outro_beats;

  std::vector<float> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double pos = t / beat_sec;
    const auto local = static_cast<std::size_t>(pos);
    const std::size_t beat = std::min(start_beat + local, end_beat - 1);
    const double dt = t - static_cast<double>(local) * beat_sec;

    double pad = pad_chord(table, root(beat), t);
    if (beat % kBeatsPerChord == 0 && beat > 0 && dt < kChordGlide && root(beat - 1) != root(beat)) {
      const double w = dt / kChordGlide;
      pad = w * pad + (1.0 - w) * pad_chord(table, root(beat - 1), t);
    }
    const bool body = beat >= spec.intro_beats && beat < body_end;
    // Body kicks carry a per-beat click; intro and outro repeat one sample.
    const std::uint64_t click_seed = body ? splitmix64(spec.seed ^ (beat * 0x100000001B3ULL)) : splitmix64(spec.seed);
    const double half = 0.5 * beat_sec;
    double v = kPadGain * pad + kKickGain * kick(dt, click_seed);
    if (body) {
      // Lead degree, octave and an optional half-beat note come from a per-beat hash.
      const std::uint64_t h = splitmix64(spec.seed + 0xA5A5A5A5ULL * (beat + 1));
      const int chord_pc = spec.chord_progression[beat / kBeatsPerChord];
      const int pc = wrap12(chord_pc + kLeadDegrees[h % kLeadDegrees.size()]) + transpose;
      v += kLeadGain * pluck(dt, midi_hz(72 + 12 * static_cast<int>((h >> 8) & 1) + pc));
      if ((h >> 9) & 1) {
        const int pc2 = wrap12(chord_pc + kLeadDegrees[(h >> 12) % kLeadDegrees.size()]) + transpose;
        if (dt >= half) v += kLeadGain * pluck(dt - half, midi_hz(72 + pc2));
      }
    }
    out[i] = static_cast<float>(v);
  }
  return out;
}

AudioBuffer synth_track(const SynthTrackSpec& spec, int sample_rate) {
  return AudioBuffer(peak_normalize(render_track_segment(spec, 0, spec.n_beats, spec.tempo_bpm, 0, sample_rate)),
                     sample_rate);
}

RenderedMix render_mix(const SynthMixSpec& spec, int sample_rate) {
  validate(spec);
  require(sample_rate > 0, "sample rate must be positive");
  const std::size_t n = spec.tracks.size();
  const double sr = sample_rate;

  std::vector<double> bpm(n), start(n), length(n), fade(n, 0.0);
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    bpm[k] = spec.tracks[k].tempo_bpm * spec.tempo_factors[k];
    const auto& w = spec.windows[k];
    start[k] = t;
    length[k] = static_cast<double>(w.end_beat - w.start_beat) * 60.0 / bpm[k];
    if (k + 1 < n) {
      fade[k] = static_cast<double>(spec.crossfade_beats[k]) * 60.0 / bpm[k];
      t += length[k] - fade[k];
    }
  }
  for (std::size_t k = 1; k + 1 < n; ++k)
    require(start[k] + fade[k - 1] <= start[k + 1], "fade-in and fade-out of a track overlap");

  const double total = start[n - 1] + length[n - 1];
  std::vector<float> mix(static_cast<std::size_t>(std::llround(total * sr)), 0.0f);
  RenderedMix result;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& w = spec.windows[k];
    const auto seg =
        render_track_segment(spec.tracks[k], w.start_beat, w.end_beat, bpm[k], spec.transpose_semitones[k], sample_rate);
    const auto offset = static_cast<std::size_t>(std::llround(start[k] * sr));
    for (std::size_t i = 0; i < seg.size() && offset + i < mix.size(); ++i) {
      const double time = static_cast<double>(offset + i) / sr;
      double g = 1.0;
      if (k > 0 && time < start[k] + fade[k - 1]) g *= equal_power_gains((time - start[k]) / fade[k - 1]).second;
      if (k + 1 < n && time >= start[k + 1])
        g *= fade[k] > 0.0 ? equal_power_gains((time - start[k + 1]) / fade[k]).first : 0.0;
      mix[offset + i] += static_cast<float>(g * seg[i]);
    }

    TrackTruth truth;
    truth.track_id = spec.tracks[k].id;
    truth.start_sec = start[k];
    truth.end_sec = start[k] + length[k];
    truth.cue_in_sec = k == 0 ? start[k] : start[k] + fade[k - 1];
    truth.cue_out_sec = k + 1 == n ? truth.end_sec - 60.0 / bpm[k] : start[k + 1];
    truth.tempo_factor = spec.tempo_factors[k];
    truth.transpose_semitones = spec.transpose_semitones[k];
    result.truth.annotated_boundaries_sec.push_back(truth.cue_in_sec);
    result.truth.tracks.push_back(std::move(truth));
  }
  result.audio = AudioBuffer(peak_normalize(std::move(mix)), sample_rate);
  return result;
}

namespace {

SynthTrackSpec random_track(Rng& rng, std::string id, double tempo_bpm, std::size_t intro, std::size_t outro) {
  static constexpr std::array<std::size_t, 3> kLengths = {384, 416, 448};
  SynthTrackSpec spec;
  spec.id = std::move(id);
  spec.seed = rng.next();
  spec.tempo_bpm = tempo_bpm;
  spec.n_beats = kLengths[rng.index(kLengths.size())];
  spec.brightness = rng.uniform(0.3, 0.8);
  spec.intro_beats = intro;
  spec.outro_beats = outro;

  const std::size_t slots = spec.n_beats / kBeatsPerChord;
  const std::size_t intro_slots = (intro + kBeatsPerChord - 1) / kBeatsPerChord;
  const std::size_t outro_slots = (outro + kBeatsPerChord - 1) / kBeatsPerChord;
  spec.chord_progression.resize(slots);
  int prev = -1;
  for (std::size_t s = 0; s < slots; ++s) {
    const bool held = (s > 0 && s < intro_slots) || (s >= slots - outro_slots && s > slots - outro_slots);
    if (held) {
      spec.chord_progression[s] = prev;
      continue;
    }
    int r;
    do r = static_cast<int>(rng.index(12));
    while (r == prev);
    spec.chord_progression[s] = prev = r;
  }
  return spec;
}

}  // namespace

std::vector<CorpusMix> make_corpus(std::size_t n_mixes, std::uint64_t seed) {
  return make_corpus(n_mixes, seed, CorpusOptions{});
}

std::vector<CorpusMix> make_corpus(std::size_t n_mixes, std::uint64_t seed, const CorpusOptions& options) {
  require(!options.crossfade_choices.empty(), "no crossfade choices");
  require(options.min_tracks >= 1 && options.min_tracks <= options.max_tracks, "bad track count range");
  require(options.min_decoys <= options.max_decoys, "bad decoy count range");
  static constexpr std::array<int, 4> kShifts = {1, -1, 2, -2};

  Rng rng(seed);
  const auto fade_choice = [&] { return options.crossfade_choices[rng.index(options.crossfade_choices.size())]; };
  std::vector<CorpusMix> corpus;
  for (std::size_t m = 0; m < n_mixes; ++m) {
    CorpusMix cm;
    char buf[32];
    std::snprintf(buf, sizeof buf, "mix_%03zu", m);
    const std::string mix_id = buf;
    cm.mix.mix_id = mix_id;
    const double mix_bpm = rng.uniform(120.0, 130.0);
    const std::size_t n = options.min_tracks + rng.index(options.max_tracks - options.min_tracks + 1);
    for (std::size_t k = 0; k + 1 < n; ++k) cm.mix.crossfade_beats.push_back(fade_choice());

    for (std::size_t k = 0; k < n; ++k) {
      // The set opens and closes on track audio, so only mixed-over edges get
      // a lead-free section.
      const std::size_t intro = k > 0 ? cm.mix.crossfade_beats[k - 1] + 1 : 0;
      const std::size_t outro = k + 1 < n ? cm.mix.crossfade_beats[k] : 0;
      const double factor = rng.uniform(0.92, 1.10);
      auto track = random_track(rng, mix_id + "_t" + std::to_string(k), mix_bpm / factor, intro, outro);
      cm.mix.windows.push_back({0, track.n_beats});
      cm.mix.tracks.push_back(std::move(track));
      cm.mix.tempo_factors.push_back(factor);
      cm.mix.transpose_semitones.push_back(
          rng.uniform(0.0, 1.0) < options.transposed_share ? kShifts[rng.index(kShifts.size())] : 0);
    }
    const std::size_t n_decoys = options.min_decoys + rng.index(options.max_decoys - options.min_decoys + 1);
    for (std::size_t d = 0; d < n_decoys; ++d) {
      const double factor = rng.uniform(0.92, 1.10);
      cm.decoys.push_back(random_track(rng, mix_id + "_decoy" + std::to_string(d), mix_bpm / factor, kBeatsPerChord, kBeatsPerChord));
    }
    validate(cm.mix);
    corpus.push_back(std::move(cm));
  }
  return corpus;
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& t : truth.tracks) {
    tracks.push_back({{"track_id", t.track_id},
                      {"start_sec", t.start_sec},
                      {"end_sec", t.end_sec},
                      {"cue_in_sec", t.cue_in_sec},
                      {"cue_out_sec", t.cue_out_sec},
                      {"tempo_factor", t.tempo_factor},
                      {"transpose_semitones", t.transpose_semitones}});
  }
  return {{"tracks", tracks}, {"annotated_boundaries_sec", truth.annotated_boundaries_sec}};
}

MixManifest manifest_for(const CorpusMix& corpus_mix, const GroundTruth& truth, const std::filesystem::path& mix_dir) {
  MixManifest m;
  m.mix_id = corpus_mix.mix.mix_id;
  m.mix_audio_path = mix_dir / "mix.wav";
  m.genre = "synthetic";
  for (std::size_t k = 0; k < corpus_mix.mix.tracks.size(); ++k) {
    const auto& id = corpus_mix.mix.tracks[k].id;
    m.entries.push_back({id, mix_dir / "tracks" / (id + ".wav"), truth.annotated_boundaries_sec[k]});
  }
  for (const auto& d : corpus_mix.decoys) m.decoys.push_back({d.id, mix_dir / "tracks" / (d.id + ".wav")});
  return m;
}

std::filesystem::path write_corpus_mix(const CorpusMix& corpus_mix, const std::filesystem::path& dir,
                                       int sample_rate) {
  namespace fs = std::filesystem;
  const fs::path mix_dir = dir / corpus_mix.mix.mix_id;
  fs::create_directories(mix_dir / "tracks");
  const auto rendered = render_mix(corpus_mix.mix, sample_rate);
  write_wav(mix_dir / "mix.wav", rendered.audio);
  for (const auto& t : corpus_mix.mix.tracks) write_wav(mix_dir / "tracks" / (t.id + ".wav"), synth_track(t, sample_rate));
  for (const auto& d : corpus_mix.decoys) write_wav(mix_dir / "tracks" / (d.id + ".wav"), synth_track(d, sample_rate));

  auto doc = manifest_to_json(manifest_for(corpus_mix, rendered.truth, mix_dir), mix_dir);
  doc["truth"] = to_json(rendered.truth);
  const fs::path manifest_path = mix_dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
  return manifest_path;
}

}  // namespace djmix

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "djmix/error.hpp"
#include "djmix/features.hpp"

namespace djmix {

namespace {

constexpr double kOnsetTopDb = 80.0;
constexpr double kMinTempoSeconds = 10.0;
constexpr std::size_t kTempoRefineMultiples = 4;

}  // namespace

std::vector<double> onset_envelope(const Spectrogram& spec) {
  const std::size_t n = spec.n_frames();
  std::vector<double> env(n, 0.0);
  if (n == 0) return env;
  const std::size_t n_mels = std::min(kMelBands, spec.n_bins());
  const auto bank = MelFilterbank::build(n_mels, spec.fft_size, spec.sample_rate);

  Matrix db(n_mels, n);
  std::vector<double> power(spec.n_bins()), mel(n_mels);
  double max_db = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t k = 0; k < spec.n_bins(); ++k) power[k] = spec.magnitudes(k, f) * spec.magnitudes(k, f);
    bank.apply(power, mel);
    for (std::size_t m = 0; m < n_mels; ++m) {
      db(m, f) = 10.0 * std::log10(std::max(mel[m], kLogFloor));
      max_db = std::max(max_db, db(m, f));
    }
  }
  const double floor_db = max_db - kOnsetTopDb;
  for (double& v : db.data()) v = std::max(v, floor_db);

  // Centred frames see an onset up to half a window early; delay the
  // envelope by fft_size / (2 hop) frames to compensate.
  const std::size_t delay = spec.fft_size / (2 * spec.hop);
  for (std::size_t f = 1; f + delay < n; ++f) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n_mels; ++m) acc += std::max(0.0, db(m, f) - db(m, f - 1));
    env[f + delay] = acc;
  }
  return env;
}

double estimate_tempo(std::span<const double> onsets, double frame_rate) {
  if (!(frame_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "frame rate must be positive");
  const std::size_t n = onsets.size();
  if (static_cast<double>(n) / frame_rate < kMinTempoSeconds)
    throw Error(ErrorKind::TooShort, "tempo estimation needs at least 10 s of onsets");

  const double mean = std::accumulate(onsets.begin(), onsets.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  bool flat = true;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = onsets[i] - mean;
    if (centred[i] != 0.0) flat = false;
  }
  if (flat) return kTempoPrior;

  const auto min_lag = static_cast<std::size_t>(std::floor(60.0 * frame_rate / kMaxTempo));
  const auto max_lag = static_cast<std::size_t>(std::ceil(60.0 * frame_rate / kMinTempo));
  if (max_lag + 2 >= n) throw Error(ErrorKind::TooShort, "onset envelope shorter than the slowest tempo period");

  // Unbiased autocorrelation, weighted by the log-Gaussian tempo prior.
  const auto weighted = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centred[t] * centred[t + lag];
    acc /= static_cast<double>(n - lag);
    const double bpm = 60.0 * frame_rate / static_cast<double>(lag);
    const double z = std::log2(bpm / kTempoPrior) / kTempoPriorOctaves;
    return acc * std::exp(-0.5 * z * z);
  };

  std::vector<double> score(max_lag + 2, -std::numeric_limits<double>::infinity());
  for (std::size_t lag = std::max<std::size_t>(min_lag, 2) - 1; lag <= max_lag + 1; ++lag)
    score[lag] = weighted(lag);

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t lag = std::max<std::size_t>(min_lag, 1); lag <= max_lag; ++lag) {
    const double bpm = 60.0 * frame_rate / static_cast<double>(lag);
    if (bpm < kMinTempo || bpm > kMaxTempo) continue;
    if (score[lag] > best_score) {
      best_score = score[lag];
      best = lag;
    }
  }
  if (best == 0 || !(best_score > 0.0)) return kTempoPrior;

  // Refine with the autocorrelation peaks at the first few multiples of the
  // period: a least-squares line through the origin over parabolic peaks.
  const auto raw = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centred[t] * centred[t + lag];
    return acc / static_cast<double>(n - lag);
  };
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k <= kTempoRefineMultiples && k * best + k + 2 < n / 2; ++k) {
    const std::size_t centre = k * best, reach = k / 2 + 1;
    std::size_t peak = centre;
    double peak_value = raw(centre);
    for (std::size_t l = centre - std::min(centre - 1, reach); l <= centre + reach; ++l) {
      const double v = raw(l);
      if (v > peak_value) {
        peak_value = v;
        peak = l;
      }
    }
    if (!(peak_value > 0.0)) break;
    double lag = static_cast<double>(peak);
    const double a = raw(peak - 1), c = raw(peak + 1);
    const double denom = a - 2.0 * peak_value + c;
    if (denom < 0.0) lag += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    num += static_cast<double>(k) * lag;
    den += static_cast<double>(k * k);
  }
  const double lag = den > 0.0 ? num / den : static_cast<double>(best);
  return std::clamp(60.0 * frame_rate / lag, kMinTempo, kMaxTempo);
}

BeatGrid track_beats(std::span<const double> onsets, double tempo_bpm, double frame_rate, double tightness) {
  if (!(tempo_bpm >= kMinTempo && tempo_bpm <= kMaxTempo))
    throw Error(ErrorKind::InvalidParams, "tempo must be within [60, 200] BPM");
  if (!(frame_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "frame rate must be positive");
  const double period = 60.0 * frame_rate / tempo_bpm;
  const std::size_t n = onsets.size();
  if (static_cast<double>(n) < 2.0 * period) throw Error(ErrorKind::TooShort, "too few frames for two beats");

  // Normalize onset strength to unit standard deviation.
  const double mean = std::accumulate(onsets.begin(), onsets.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double o : onsets) var += (o - mean) * (o - mean);
  const double sd = std::sqrt(var / static_cast<double>(n > 1 ? n - 1 : 1));
  double scale = sd;
  if (!(scale > 0.0)) scale = *std::max_element(onsets.begin(), onsets.end());
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> local(n);
  for (std::size_t i = 0; i < n; ++i) local[i] = onsets[i] / scale;

  const auto max_back = static_cast<std::int64_t>(std::round(2.0 * period));
  const auto min_back = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::round(period / 2.0)));
  std::vector<double> penalty(static_cast<std::size_t>(max_back + 1), 0.0);
  for (std::int64_t d = min_back; d <= max_back; ++d) {
    const double l = std::log(static_cast<double>(d) / period);
    penalty[static_cast<std::size_t>(d)] = -tightness * l * l;
  }

  std::vector<double> cum(n);
  std::vector<std::int64_t> back(n, -1);
  for (std::size_t t = 0; t < n; ++t) {
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t arg = -1;
    // Scan from the nearest predecessor outward so equal scores keep the
    // spacing closest to one period.
    for (std::int64_t d = min_back; d <= max_back; ++d) {
      const std::int64_t prev = static_cast<std::int64_t>(t) - d;
      if (prev < 0) break;
      const double s = cum[static_cast<std::size_t>(prev)] + penalty[static_cast<std::size_t>(d)];
      if (s > best) {
        best = s;
        arg = prev;
      }
    }
    cum[t] = local[t] + (arg >= 0 ? best : 0.0);
    back[t] = arg;
  }

  // The final beat is the best-scoring frame within the last period.
  const auto tail = static_cast<std::size_t>(std::max(1.0, std::round(period)));
  std::size_t last = n - 1;
  double best_tail = -std::numeric_limits<double>::infinity();
  for (std::size_t t = n - std::min(tail, n); t < n; ++t) {
    if (cum[t] > best_tail) {
      best_tail = cum[t];
      last = t;
    }
  }

  std::vector<std::size_t> frames;
  for (std::int64_t t = static_cast<std::int64_t>(last); t >= 0; t = back[static_cast<std::size_t>(t)])
    frames.push_back(static_cast<std::size_t>(t));
  std::reverse(frames.begin(), frames.end());

  // Drop weak beats at either end (below half the RMS onset at beats).
  if (frames.size() > 2) {
    double rms = 0.0;
    for (auto f : frames) rms += local[f] * local[f];
    rms = std::sqrt(rms / static_cast<double>(frames.size()));
    const double thresh = 0.5 * rms;
    std::size_t lo = 0, hi = frames.size();
    while (lo + 2 < hi && local[frames[lo]] < thresh) ++lo;
    while (hi > lo + 2 && local[frames[hi - 1]] < thresh) --hi;
    frames = std::vector<std::size_t>(frames.begin() + static_cast<std::ptrdiff_t>(lo),
                                      frames.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  if (frames.size() < 2) throw Error(ErrorKind::TooShort, "fewer than two beats found");

  BeatGrid grid;
  grid.tempo_bpm = tempo_bpm;
  grid.beat_times.reserve(frames.size());
  for (auto f : frames) grid.beat_times.push_back(static_cast<double>(f) / frame_rate);
  return grid;
}

double robust_beat_interval(std::span<const double> beat_times) {
  const std::size_t n = beat_times.size();
  if (n < 2) throw Error(ErrorKind::DegenerateInput, "need at least two beats");
  std::vector<double> slopes;
  slopes.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      slopes.push_back((beat_times[j] - beat_times[i]) / static_cast<double>(j - i));
  const std::size_t mid = slopes.size() / 2;
  std::nth_element(slopes.begin(), slopes.begin() + static_cast<std::ptrdiff_t>(mid), slopes.end());
  double median = slopes[mid];
  if (slopes.size() % 2 == 0) {
    const double lower = *std::max_element(slopes.begin(), slopes.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median;
}

double grid_tempo_bpm(const BeatGrid& grid) { return 60.0 / robust_beat_interval(grid.beat_times); }

Matrix beat_sync(const Matrix& features, const BeatGrid& beats, double frame_rate, bool renormalize_l2) {
  if (beats.beat_times.size() < 2) throw Error(ErrorKind::EmptyInterval, "need at least two beats");
  if (!(frame_rate > 0.0)) throw Error(ErrorKind::InvalidParams, "frame rate must be positive");
  const std::size_t d = features.rows(), n_frames = features.cols();
  const std::size_t n_out = beats.beat_times.size() - 1;
  // First frame index whose time is >= t. The epsilon absorbs round-off when
  // beat times were themselves derived from frame indices.
  const auto first_frame_at = [&](double t) {
    const double x = std::ceil(t * frame_rate - 1e-9);
    return static_cast<std::size_t>(std::max(0.0, x));
  };

  Matrix out(d, n_out);
  std::vector<double> col(d);
  for (std::size_t j = 0; j < n_out; ++j) {
    const std::size_t lo = first_frame_at(beats.beat_times[j]);
    const std::size_t hi = std::min(first_frame_at(beats.beat_times[j + 1]), n_frames);
    if (lo >= hi) throw Error(ErrorKind::EmptyInterval, "beat interval " + std::to_string(j) + " contains no frames");
    const double count = static_cast<double>(hi - lo);
    for (std::size_t r = 0; r < d; ++r) {
      const auto row = features.row(r);
      double acc = 0.0;
      for (std::size_t f = lo; f < hi; ++f) acc += row[f];
      out(r, j) = acc / count;
    }
    if (renormalize_l2) {
      for (std::size_t r = 0; r < d; ++r) col[r] = out(r, j);
      const double norm = permutation_stable_norm(col);
      if (norm > 0.0)
        for (std::size_t r = 0; r < d; ++r) out(r, j) /= norm;
    }
  }
  return out;
}

BeatSyncFeatures extract_features(const AudioBuffer& audio, const FeatureParams& params) {
  if (!params.chroma && !params.mfcc) throw Error(ErrorKind::InvalidParams, "request at least one feature");
  const Spectrogram spec = stft(audio, params.fft_size, params.hop);
  const auto onsets = onset_envelope(spec);
  const double tempo = estimate_tempo(onsets, spec.frame_rate);

  BeatSyncFeatures out;
  out.beat_grid = track_beats(onsets, tempo, spec.frame_rate);
  if (params.chroma) out.chroma = beat_sync(chroma_cens(spec), out.beat_grid, spec.frame_rate, true);
  if (params.mfcc) out.mfcc = beat_sync(mfcc(spec, params.n_mels, params.n_mfcc), out.beat_grid, spec.frame_rate);
  return out;
}

}  // namespace djmix

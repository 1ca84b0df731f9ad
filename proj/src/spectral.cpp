#include <algorithm>
#include <cmath>
#include <numbers>

#include "djmix/error.hpp"
#include "djmix/features.hpp"

namespace djmix {

std::vector<double> hann_window(std::size_t n) {
  // Periodic Hann, the usual choice for STFT analysis.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

namespace {

std::size_t reflect_index(std::int64_t i, std::int64_t len) {
  if (len == 1) return 0;
  const std::int64_t period = 2 * (len - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < len ? i : period - i);
}

}  // namespace

Spectrogram stft(const AudioBuffer& audio, std::size_t fft_size, std::size_t hop) {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw Error(ErrorKind::InvalidParams, "fft_size must be a power of two");
  if (hop == 0 || hop > fft_size) throw Error(ErrorKind::InvalidParams, "hop must be in [1, fft_size]");
  if (audio.empty()) throw Error(ErrorKind::InvalidParams, "empty audio");

  const auto samples = audio.samples();
  const auto len = static_cast<std::int64_t>(samples.size());
  const std::size_t n_frames = 1 + samples.size() / hop;
  const std::size_t n_bins = fft_size / 2 + 1;
  const auto window = hann_window(fft_size);
  const auto half = static_cast<std::int64_t>(fft_size / 2);

  Spectrogram spec;
  spec.magnitudes = Matrix(n_bins, n_frames);
  spec.frame_rate = static_cast<double>(audio.sample_rate()) / static_cast<double>(hop);
  spec.fft_size = fft_size;
  spec.hop = hop;
  spec.sample_rate = audio.sample_rate();

  RealFft fft(fft_size);
  std::vector<double> frame(fft_size);
  std::vector<std::complex<double>> bins(n_bins);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::int64_t start = static_cast<std::int64_t>(f * hop) - half;
    const bool interior = start >= 0 && start + static_cast<std::int64_t>(fft_size) <= len;
    for (std::size_t i = 0; i < fft_size; ++i) {
      const std::int64_t idx = start + static_cast<std::int64_t>(i);
      const float s = interior ? samples[static_cast<std::size_t>(idx)] : samples[reflect_index(idx, len)];
      frame[i] = window[i] * s;
    }
    fft.forward(frame, bins);
    for (std::size_t k = 0; k < n_bins; ++k) spec.magnitudes(k, f) = std::abs(bins[k]);
  }
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelBreakHz = 1000.0;
constexpr double kMelBreak = kMelBreakHz / kMelLinearStep;
const double kMelLogStep = std::log(6.4) / 27.0;

}  // namespace

double hz_to_mel(double hz) {
  if (hz < kMelBreakHz) return hz / kMelLinearStep;
  return kMelBreak + std::log(hz / kMelBreakHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelBreak) return mel * kMelLinearStep;
  return kMelBreakHz * std::exp(kMelLogStep * (mel - kMelBreak));
}

MelFilterbank MelFilterbank::build(std::size_t n_mels, std::size_t fft_size, int sample_rate) {
  const std::size_t n_bins = fft_size / 2 + 1;
  if (n_mels == 0 || n_mels > n_bins) throw Error(ErrorKind::InvalidParams, "n_mels must be in [1, n_bins]");
  const double max_mel = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(max_mel * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  MelFilterbank bank;
  bank.filters.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    auto& filter = bank.filters[m];
    bool started = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      const double w = std::max(0.0, std::min((f - lo) / (centre - lo), (hi - f) / (hi - centre)));
      if (w > 0.0) {
        if (!started) {
          filter.first_bin = k;
          started = true;
        }
        filter.weights.resize(k - filter.first_bin + 1, 0.0);
        filter.weights.back() = w * norm;
      }
    }
  }
  return bank;
}

void MelFilterbank::apply(std::span<const double> power, std::span<double> out) const {
  for (std::size_t m = 0; m < filters.size(); ++m) {
    const auto& f = filters[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < f.weights.size(); ++i) acc += f.weights[i] * power[f.first_bin + i];
    out[m] = acc;
  }
}

std::vector<double> dct_ii_ortho(std::span<const double> input, std::size_t n_out) {
  const std::size_t n = input.size();
  if (n_out > n) throw Error(ErrorKind::InvalidParams, "more DCT outputs than inputs");
  std::vector<double> out(n_out, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += input[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    out[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return out;
}

Matrix mfcc(const Spectrogram& spec, std::size_t n_mels, std::size_t n_coeffs) {
  if (n_coeffs == 0 || n_coeffs > n_mels) throw Error(ErrorKind::InvalidParams, "n_coeffs must be in [1, n_mels]");
  if (n_mels > spec.n_bins()) throw Error(ErrorKind::InvalidParams, "n_mels exceeds n_bins");
  const auto bank = MelFilterbank::build(n_mels, spec.fft_size, spec.sample_rate);

  // cos table for the DCT, rows = coefficient
  Matrix basis(n_coeffs, n_mels);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_mels));
    for (std::size_t i = 0; i < n_mels; ++i)
      basis(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n_mels));
  }

  Matrix out(n_coeffs, spec.n_frames());
  std::vector<double> power(spec.n_bins()), mel(n_mels);
  for (std::size_t f = 0; f < spec.n_frames(); ++f) {
    for (std::size_t k = 0; k < spec.n_bins(); ++k) {
      const double m = spec.magnitudes(k, f);
      power[k] = m * m;
    }
    bank.apply(power, mel);
    for (double& e : mel) e = 10.0 * std::log10(std::max(e, kLogFloor));
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double acc = 0.0;
      const auto b = basis.row(k);
      for (std::size_t i = 0; i < n_mels; ++i) acc += b[i] * mel[i];
      out(k, f) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kChromaMinHz = 65.40639;    // C2
constexpr double kChromaMaxHz = 4186.00904;  // C8

struct ChromaWeight {
  std::size_t bin;
  std::size_t pitch_class;
  double weight;
};

// Each STFT bin spreads its energy over the semitone bands its frequency
// extent overlaps, proportionally to the overlap in semitones.
std::vector<ChromaWeight> chroma_weights(std::size_t fft_size, int sample_rate, double tuning_ref) {
  std::vector<ChromaWeight> out;
  const double df = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  const auto to_midi = [&](double hz) { return 69.0 + 12.0 * std::log2(hz / tuning_ref); };
  for (std::size_t k = 1; k <= fft_size / 2; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < kChromaMinHz || f > kChromaMaxHz) continue;
    const double lo = to_midi(f - df / 2.0);
    const double hi = to_midi(f + df / 2.0);
    const double width = hi - lo;
    for (auto p = static_cast<long>(std::floor(lo + 0.5)); p <= static_cast<long>(std::floor(hi + 0.5)); ++p) {
      const double overlap = std::min(hi, p + 0.5) - std::max(lo, p - 0.5);
      if (overlap <= 0.0) continue;
      const auto pc = static_cast<std::size_t>(((p % 12) + 12) % 12);
      out.push_back({k, pc, overlap / width});
    }
  }
  return out;
}

}  // namespace

Matrix chroma_energy(const Spectrogram& spec, double tuning_ref) {
  if (!(tuning_ref > 0.0)) throw Error(ErrorKind::InvalidParams, "tuning reference must be positive");
  if (spec.sample_rate <= 0 || spec.fft_size == 0) throw Error(ErrorKind::InvalidParams, "malformed spectrogram");
  const auto weights = chroma_weights(spec.fft_size, spec.sample_rate, tuning_ref);
  Matrix out(kPitchClasses, spec.n_frames());
  for (std::size_t f = 0; f < spec.n_frames(); ++f) {
    for (const auto& w : weights) {
      const double m = spec.magnitudes(w.bin, f);
      out(w.pitch_class, f) += w.weight * m * m;
    }
  }
  return out;
}

namespace {

double quantize_cens(double v) {
  // thresholds 0.05, 0.1, 0.2, 0.4 -> weights 0.25, 0.5, 0.75, 1.0
  if (v > 0.4) return 1.0;
  if (v > 0.2) return 0.75;
  if (v > 0.1) return 0.5;
  if (v > 0.05) return 0.25;
  return 0.0;
}

}  // namespace

Matrix cens_from_energy(const Matrix& energy, std::size_t smoothing) {
  const std::size_t rows = energy.rows(), n = energy.cols();
  Matrix quant(rows, n);
  for (std::size_t f = 0; f < n; ++f) {
    double l1 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) l1 += std::abs(energy(r, f));
    if (l1 <= 0.0) continue;
    for (std::size_t r = 0; r < rows; ++r) quant(r, f) = quantize_cens(std::abs(energy(r, f)) / l1);
  }

  Matrix smooth(rows, n);
  if (smoothing <= 1) {
    smooth = quant;
  } else {
    // Symmetric Hann of length smoothing + 2 with its zero endpoints dropped.
    std::vector<double> win(smoothing);
    double total = 0.0;
    for (std::size_t i = 0; i < smoothing; ++i) {
      win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                    static_cast<double>(smoothing + 1));
      total += win[i];
    }
    for (double& w : win) w /= total;
    const auto centre = static_cast<std::int64_t>(smoothing / 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto in = quant.row(r);
      auto out = smooth.row(r);
      for (std::size_t f = 0; f < n; ++f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < smoothing; ++i) {
          const std::int64_t src = static_cast<std::int64_t>(f) + static_cast<std::int64_t>(i) - centre;
          if (src >= 0 && src < static_cast<std::int64_t>(n)) acc += win[i] * in[static_cast<std::size_t>(src)];
        }
        out[f] = acc;
      }
    }
  }

  std::vector<double> col(rows);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t r = 0; r < rows; ++r) col[r] = smooth(r, f);
    const double norm = permutation_stable_norm(col);
    if (norm <= 0.0) continue;
    for (std::size_t r = 0; r < rows; ++r) smooth(r, f) /= norm;
  }
  return smooth;
}

Matrix chroma_cens(const Spectrogram& spec, double tuning_ref) {
  return cens_from_energy(chroma_energy(spec, tuning_ref));
}

Matrix rotate_chroma(const Matrix& chroma, int semitones) {
  const auto rows = static_cast<int>(chroma.rows());
  if (rows == 0) return chroma;
  Matrix out(chroma.rows(), chroma.cols());
  for (int p = 0; p < rows; ++p) {
    const int src = ((p - semitones) % rows + rows) % rows;
    const auto in = chroma.row(static_cast<std::size_t>(src));
    std::copy(in.begin(), in.end(), out.row(static_cast<std::size_t>(p)).begin());
  }
  return out;
}

double permutation_stable_norm(std::span<const double> values) {
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = values[i] * values[i];
  std::sort(sq.begin(), sq.end());
  double acc = 0.0;
  for (double v : sq) acc += v;
  return std::sqrt(acc);
}

}  // namespace djmix

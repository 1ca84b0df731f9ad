#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "djmix/audio.hpp"
#include "djmix/matrix.hpp"

namespace djmix {

// ---------------------------------------------------------------------------
// Spectral front end

/// In-place iterative radix-2 complex FFT with precomputed twiddles.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  void forward(std::span<std::complex<double>> data) const;

 private:
  std::size_t size_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> bit_reverse_;
};

/// Real-input FFT computed through a half-size complex transform.
/// Not thread-safe (owns scratch space); create one per worker.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  /// Writes size()/2 + 1 bins.
  void forward(std::span<const double> input, std::span<std::complex<double>> out);

 private:
  std::size_t size_;
  FftPlan half_;
  std::vector<std::complex<double>> post_twiddles_;
  std::vector<std::complex<double>> scratch_;
};

struct Spectrogram {
  Matrix magnitudes;  // [fft_size/2 + 1 x n_frames]
  double frame_rate = 0.0;
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  int sample_rate = 0;

  std::size_t n_bins() const noexcept { return magnitudes.rows(); }
  std::size_t n_frames() const noexcept { return magnitudes.cols(); }
};

inline constexpr std::size_t kFftSize = 2048;
inline constexpr std::size_t kHop = 512;

/// Hann-windowed magnitude STFT with reflect padding; frame k is centred on
/// sample k * hop, n_frames = 1 + len / hop.
Spectrogram stft(const AudioBuffer& audio, std::size_t fft_size = kFftSize, std::size_t hop = kHop);

std::vector<double> hann_window(std::size_t n);

// ---------------------------------------------------------------------------
// MFCC

inline constexpr std::size_t kMelBands = 128;
inline constexpr std::size_t kMfccCoeffs = 12;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Sparse triangular mel filterbank (Slaney scale, area-normalized) over
/// [0, sample_rate / 2].
struct MelFilterbank {
  struct Filter {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters;

  static MelFilterbank build(std::size_t n_mels, std::size_t fft_size, int sample_rate);
  /// Mel energies of one power-spectrum column.
  void apply(std::span<const double> power, std::span<double> out) const;
};

/// Orthonormal DCT-II; returns the first n_out coefficients.
std::vector<double> dct_ii_ortho(std::span<const double> input, std::size_t n_out);

/// log10 floor applied to mel energies before the DCT.
inline constexpr double kLogFloor = 1e-10;

/// MFCC [n_coeffs x n_frames]: 10*log10(max(mel power, 1e-10)) then DCT-II.
Matrix mfcc(const Spectrogram& spec, std::size_t n_mels = kMelBands, std::size_t n_coeffs = kMfccCoeffs);

// ---------------------------------------------------------------------------
// Chroma

inline constexpr std::size_t kPitchClasses = 12;
inline constexpr double kTuningA4 = 440.0;
inline constexpr std::size_t kCensSmoothing = 41;

/// Pitch-class energy (class 0 = C) per frame before any normalization.
Matrix chroma_energy(const Spectrogram& spec, double tuning_ref = kTuningA4);

/// CENS: L1 normalize, quantize, Hann smoothing over 41 frames, L2 normalize.
Matrix chroma_cens(const Spectrogram& spec, double tuning_ref = kTuningA4);

/// CENS post-processing of a raw chroma energy matrix.
Matrix cens_from_energy(const Matrix& energy, std::size_t smoothing = kCensSmoothing);

/// Circularly rotate the 12 pitch-class rows up by `semitones`
/// (row p of the result is row p - semitones of the input).
Matrix rotate_chroma(const Matrix& chroma, int semitones);

// ---------------------------------------------------------------------------
// Onsets, tempo, beats

/// Spectral flux of dB-scaled mel bands (positive differences, summed).
std::vector<double> onset_envelope(const Spectrogram& spec);

inline constexpr double kMinTempo = 60.0;
inline constexpr double kMaxTempo = 200.0;
inline constexpr double kTempoPrior = 120.0;
inline constexpr double kTempoPriorOctaves = 1.0;
inline constexpr double kBeatTightness = 100.0;

/// Autocorrelation tempo in [60, 200] BPM under a log-Gaussian prior centred
/// at 120 BPM. Needs at least 10 s of envelope.
double estimate_tempo(std::span<const double> onsets, double frame_rate);

struct BeatGrid {
  std::vector<double> beat_times;  // seconds, strictly increasing
  double tempo_bpm = 0.0;

  std::size_t n_intervals() const noexcept { return beat_times.empty() ? 0 : beat_times.size() - 1; }
};

/// Dynamic-programming beat tracker (onset strength plus log-squared
/// inter-beat-interval penalty).
BeatGrid track_beats(std::span<const double> onsets, double tempo_bpm, double frame_rate,
                     double tightness = kBeatTightness);

/// Robust inter-beat interval of beats [first, last]: the median of all
/// pairwise slopes (t_j - t_i) / (j - i). Insensitive to frame quantization
/// of individual beats.
double robust_beat_interval(std::span<const double> beat_times);

/// Tempo implied by robust_beat_interval over the whole grid.
double grid_tempo_bpm(const BeatGrid& grid);

// ---------------------------------------------------------------------------
// Beat-level aggregation

/// Column j is the mean of frames whose time falls in [beat_j, beat_{j+1}).
/// With renormalize_l2 each output column is rescaled to unit L2 norm.
Matrix beat_sync(const Matrix& features, const BeatGrid& beats, double frame_rate, bool renormalize_l2 = false);

/// L2 norm computed over the sorted magnitudes, so permuting the input never
/// changes the result.
double permutation_stable_norm(std::span<const double> values);

struct BeatSyncFeatures {
  std::optional<Matrix> chroma;  // [12 x n_intervals]
  std::optional<Matrix> mfcc;    // [12 x n_intervals]
  BeatGrid beat_grid;

  std::size_t n_beats() const noexcept { return beat_grid.n_intervals(); }
};

struct FeatureParams {
  std::size_t fft_size = kFftSize;
  std::size_t hop = kHop;
  std::size_t n_mels = kMelBands;
  std::size_t n_mfcc = kMfccCoeffs;
  bool chroma = true;
  bool mfcc = true;
};

/// Full front end: STFT -> chroma/MFCC + beats -> beat-synchronous matrices.
BeatSyncFeatures extract_features(const AudioBuffer& audio, const FeatureParams& params = {});

}  // namespace djmix

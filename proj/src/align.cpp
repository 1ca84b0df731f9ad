#include "djmix/align.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "djmix/error.hpp"

namespace djmix {

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::Mfcc: return "mfcc";
    case FeatureMode::Chroma: return "chroma";
    case FeatureMode::ChromaMfcc: return "chroma+mfcc";
  }
  return "unknown";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view text) {
  if (text == "mfcc") return FeatureMode::Mfcc;
  if (text == "chroma") return FeatureMode::Chroma;
  if (text == "chroma+mfcc" || text == "chroma_mfcc") return FeatureMode::ChromaMfcc;
  return std::nullopt;
}

bool is_valid_path(const WarpingPath& path, std::size_t n_track_beats) {
  if (path.empty() || n_track_beats == 0) return false;
  if (path.front().track_beat != 0 || path.back().track_beat != n_track_beats - 1) return false;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto& a = path[k - 1];
    const auto& b = path[k];
    if (b.track_beat < a.track_beat || b.mix_beat < a.mix_beat) return false;
    const std::size_t dt = b.track_beat - a.track_beat, dm = b.mix_beat - a.mix_beat;
    if (dt > 1 || dm > 1 || (dt == 0 && dm == 0)) return false;
  }
  return true;
}

namespace {

// Column-major copy so one beat's vector is contiguous.
std::vector<double> columns_of(const Matrix& m) {
  std::vector<double> out(m.rows() * m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) out[c * m.rows() + r] = m(r, c);
  return out;
}

double mean_entry(const Matrix& m) {
  if (m.empty()) return 0.0;
  double acc = 0.0;
  for (double v : m.data()) acc += v;
  return acc / static_cast<double>(m.data().size());
}

void scale_add(Matrix& acc, const Matrix& m, double divisor) {
  const double s = divisor > 0.0 ? 1.0 / divisor : 1.0;
  auto out = acc.data();
  auto in = m.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i] * s;
}

const Matrix& require_chroma(const BeatSyncFeatures& f, const char* side) {
  if (!f.chroma) throw Error(ErrorKind::MissingFeature, std::string(side) + " has no chroma");
  return *f.chroma;
}

const Matrix& require_mfcc(const BeatSyncFeatures& f, const char* side) {
  if (!f.mfcc) throw Error(ErrorKind::MissingFeature, std::string(side) + " has no MFCC");
  return *f.mfcc;
}

}  // namespace

Matrix euclidean_costs(const Matrix& track, const Matrix& mix, int track_shift) {
  if (track.rows() != mix.rows()) throw Error(ErrorKind::InvalidParams, "feature dimensionality mismatch");
  const std::size_t d = track.rows(), n = track.cols(), m = mix.cols();
  const auto t = columns_of(track);
  const auto x = columns_of(mix);
  // source row in the track for each mix dimension p
  std::vector<std::size_t> src(d);
  const auto di = static_cast<int>(d);
  for (int p = 0; p < di; ++p) src[static_cast<std::size_t>(p)] = static_cast<std::size_t>(((p - track_shift) % di + di) % di);

  Matrix out(n, m);
  std::vector<double> tv(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) tv[p] = t[i * d + src[p]];
    auto row = out.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* xv = &x[j * d];
      double acc = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        const double diff = tv[p] - xv[p];
        acc += diff * diff;
      }
      row[j] = std::sqrt(acc);
    }
  }
  return out;
}

namespace {

// Cost matrix for a given chroma shift. For chroma+mfcc the chroma part is
// divided by `chroma_norm` when provided (shared across shifts), otherwise by
// its own mean.
CostMatrix shifted_cost(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, FeatureMode mode, int shift,
                        const Matrix* mfcc_costs, std::optional<double> chroma_norm) {
  switch (mode) {
    case FeatureMode::Mfcc:
      return {mfcc_costs ? *mfcc_costs : euclidean_costs(require_mfcc(track, "track"), require_mfcc(mix, "mix"))};
    case FeatureMode::Chroma:
      return {euclidean_costs(require_chroma(track, "track"), require_chroma(mix, "mix"), shift)};
    case FeatureMode::ChromaMfcc: {
      Matrix chroma = euclidean_costs(require_chroma(track, "track"), require_chroma(mix, "mix"), shift);
      Matrix mf = mfcc_costs ? *mfcc_costs : euclidean_costs(require_mfcc(track, "track"), require_mfcc(mix, "mix"));
      Matrix sum(chroma.rows(), chroma.cols());
      scale_add(sum, chroma, chroma_norm ? *chroma_norm : mean_entry(chroma));
      scale_add(sum, mf, mean_entry(mf));
      return {std::move(sum)};
    }
  }
  throw Error(ErrorKind::InvalidParams, "unknown feature mode");
}

}  // namespace

CostMatrix cost_matrix(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, FeatureMode mode) {
  return shifted_cost(track, mix, mode, 0, nullptr, std::nullopt);
}

DtwResult subsequence_dtw(const CostMatrix& costs) {
  const std::size_t n = costs.n_track(), m = costs.n_mix();
  if (n < 2 || m < 1) throw Error(ErrorKind::DegenerateInput, "need at least 2 track beats and 1 mix beat");
  for (double c : costs.costs.data())
    if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorKind::DegenerateInput, "costs must be finite and >= 0");

  enum : std::uint8_t { kStart = 0, kDiag = 1, kRight = 2, kDown = 3 };
  std::vector<std::uint8_t> step(n * m);
  std::vector<double> prev(m), cur(m);
  // Diagonal steps on the chosen path into each cell, for end-column ties.
  std::vector<std::size_t> prev_diag(m, 0), cur_diag(m, 0);

  for (std::size_t j = 0; j < m; ++j) {
    prev[j] = costs(0, j);
    step[j] = kStart;
  }
  for (std::size_t i = 1; i < n; ++i) {
    std::uint8_t* srow = &step[i * m];
    for (std::size_t j = 0; j < m; ++j) {
      // Preference on exact ties: diagonal, then (0,1), then (1,0).
      double best = prev[j];
      std::uint8_t choice = kDown;
      if (j > 0) {
        if (cur[j - 1] <= best) {
          best = cur[j - 1];
          choice = kRight;
        }
        if (prev[j - 1] <= best) {
          best = prev[j - 1];
          choice = kDiag;
        }
      }
      cur[j] = costs(i, j) + best;
      srow[j] = choice;
      cur_diag[j] = choice == kDiag ? prev_diag[j - 1] + 1 : choice == kRight ? cur_diag[j - 1] : prev_diag[j];
    }
    std::swap(prev, cur);
    std::swap(prev_diag, cur_diag);
  }

  std::size_t end = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (prev[j] < prev[end] || (prev[j] == prev[end] && prev_diag[j] > prev_diag[end])) end = j;

  DtwResult result;
  result.total_cost = prev[end];
  std::size_t i = n - 1, j = end;
  while (true) {
    result.path.push_back({i, j});
    const std::uint8_t s = step[i * m + j];
    if (s == kStart) break;
    if (s == kDiag) {
      --i;
      --j;
    } else if (s == kRight) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

double match_rate(const WarpingPath& path, std::size_t n_track_beats, MatchRateNorm norm) {
  if (n_track_beats < 2) throw Error(ErrorKind::DegenerateInput, "match rate needs at least 2 track beats");
  std::size_t diagonal = 0;
  for (std::size_t k = 1; k < path.size(); ++k)
    if (is_diagonal(path[k - 1], path[k])) ++diagonal;
  if (norm == MatchRateNorm::TrackSide) return static_cast<double>(diagonal) / static_cast<double>(n_track_beats - 1);
  if (path.empty()) return 0.0;
  const std::size_t span = path.back().mix_beat - path.front().mix_beat;
  return span == 0 ? 0.0 : static_cast<double>(diagonal) / static_cast<double>(span);
}

int signed_semitones(int shift) {
  const int s = ((shift % 12) + 12) % 12;
  return s <= 6 ? s : s - 12;
}

AlignmentResult align(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, const AlignOptions& options) {
  const bool uses_chroma = options.mode != FeatureMode::Mfcc;
  const bool rotate = options.key_invariant && uses_chroma;

  AlignmentResult best;
  best.feature_mode = options.mode;
  best.key_invariant = options.key_invariant;

  if (!rotate) {
    auto dtw = subsequence_dtw(cost_matrix(track, mix, options.mode));
    best.path = std::move(dtw.path);
    best.total_cost = dtw.total_cost;
  } else {
    std::optional<Matrix> mfcc_costs;
    std::optional<double> chroma_norm;
    if (options.mode == FeatureMode::ChromaMfcc) {
      mfcc_costs = euclidean_costs(require_mfcc(track, "track"), require_mfcc(mix, "mix"));
      // One normalizer for all shifts keeps their totals comparable.
      double acc = 0.0;
      for (int s = 0; s < 12; ++s)
        acc += mean_entry(euclidean_costs(require_chroma(track, "track"), require_chroma(mix, "mix"), s));
      chroma_norm = acc / 12.0;
    }
    // 0, +1, -1, +2, -2, ... +5, -5, +6
    static constexpr std::array<int, 12> kOrder = {0, 1, 11, 2, 10, 3, 9, 4, 8, 5, 7, 6};
    bool have = false;
    for (int shift : kOrder) {
      auto dtw = subsequence_dtw(shifted_cost(track, mix, options.mode, shift,
                                              mfcc_costs ? &*mfcc_costs : nullptr, chroma_norm));
      if (!have || dtw.total_cost < best.total_cost) {
        best.path = std::move(dtw.path);
        best.total_cost = dtw.total_cost;
        best.transposition_semitones = shift;
        have = true;
      }
    }
  }
  best.match_rate = match_rate(best.path, track.n_beats(), options.norm);
  return best;
}

AlignmentResult align_key_invariant(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, FeatureMode mode) {
  return align(track, mix, {mode, true, MatchRateNorm::TrackSide});
}

MatchPartition filter_matched(const std::vector<AlignmentResult>& results, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorKind::InvalidParams, "threshold must be in [0, 1]");
  MatchPartition out;
  for (std::size_t i = 0; i < results.size(); ++i)
    (results[i].match_rate >= threshold ? out.matched : out.rejected).push_back(i);
  return out;
}

void write_path_csv(std::ostream& out, const WarpingPath& path) {
  out << "track_beat,mix_beat\n";
  for (const auto& s : path) out << s.track_beat << ',' << s.mix_beat << '\n';
}

}  // namespace djmix

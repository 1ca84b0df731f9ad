#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "djmix/features.hpp"
#include "djmix/matrix.hpp"

namespace djmix {

enum class FeatureMode { Mfcc, Chroma, ChromaMfcc };

std::string_view to_string(FeatureMode mode);
/// Accepts "mfcc", "chroma", "chroma+mfcc" (also "chroma_mfcc").
std::optional<FeatureMode> parse_feature_mode(std::string_view text);

/// Pairwise feature distances: rows are track beats, columns mix beats.
struct CostMatrix {
  Matrix costs;

  std::size_t n_track() const noexcept { return costs.rows(); }
  std::size_t n_mix() const noexcept { return costs.cols(); }
  double operator()(std::size_t track_beat, std::size_t mix_beat) const { return costs(track_beat, mix_beat); }
};

struct PathStep {
  std::size_t track_beat = 0;
  std::size_t mix_beat = 0;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

using WarpingPath = std::vector<PathStep>;

/// Monotone, unit steps {(1,1),(1,0),(0,1)}, starts on track beat 0 and ends
/// on track beat n_track_beats - 1.
bool is_valid_path(const WarpingPath& path, std::size_t n_track_beats);

inline bool is_diagonal(const PathStep& from, const PathStep& to) {
  return to.track_beat == from.track_beat + 1 && to.mix_beat == from.mix_beat + 1;
}

struct DtwResult {
  WarpingPath path;
  double total_cost = 0.0;
};

/// Euclidean distance matrix for one feature kind. `track_shift` rotates the
/// track's pitch-class rows (chroma only). Terms are summed in mix
/// pitch-class order, so every shift of a rotated track reproduces the
/// corresponding unrotated matrix bit for bit.
Matrix euclidean_costs(const Matrix& track, const Matrix& mix, int track_shift = 0);

/// Cost matrix for the requested mode. chroma+mfcc sums both matrices after
/// dividing each by its own mean entry.
CostMatrix cost_matrix(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, FeatureMode mode);

/// Subsequence DTW: the whole track axis is consumed, the mix start and end
/// are free. Ties during backtracking prefer the diagonal, then (0,1).
DtwResult subsequence_dtw(const CostMatrix& costs);

enum class MatchRateNorm { TrackSide, MixSide };

/// Diagonal steps divided by (n_track_beats - 1), or by the mix span of the
/// path with MixSide.
double match_rate(const WarpingPath& path, std::size_t n_track_beats, MatchRateNorm norm = MatchRateNorm::TrackSide);

inline constexpr double kMatchThreshold = 0.4;

struct AlignmentResult {
  WarpingPath path;
  double total_cost = 0.0;
  int transposition_semitones = 0;  // in [0, 11]
  double match_rate = 0.0;
  FeatureMode feature_mode = FeatureMode::Chroma;
  bool key_invariant = false;
};

struct AlignOptions {
  FeatureMode mode = FeatureMode::ChromaMfcc;
  bool key_invariant = true;
  MatchRateNorm norm = MatchRateNorm::TrackSide;
};

/// Align a track into a mix. With key_invariant and a chroma mode, all 12
/// circular shifts of the track chroma are tried and the cheapest wins; ties
/// prefer shift 0, then the smaller signed magnitude (+k before -k).
AlignmentResult align(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, const AlignOptions& options);
AlignmentResult align_key_invariant(const BeatSyncFeatures& track, const BeatSyncFeatures& mix, FeatureMode mode);

/// Shift in [0, 11] read as a signed transposition in [-5, +6].
int signed_semitones(int shift);

struct MatchPartition {
  std::vector<std::size_t> matched;   // input indices, order preserved
  std::vector<std::size_t> rejected;
};

/// matched iff match_rate >= threshold.
MatchPartition filter_matched(const std::vector<AlignmentResult>& results, double threshold = kMatchThreshold);

/// CSV dump of a path: header "track_beat,mix_beat" then one row per step.
void write_path_csv(std::ostream& out, const WarpingPath& path);

}  // namespace djmix

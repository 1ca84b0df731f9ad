#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "djmix/align.hpp"
#include "djmix/features.hpp"

namespace djmix {

inline constexpr std::size_t kCueRunLength = 32;

struct CuePoints {
  std::string track_id;
  std::size_t cue_in_mix_beat = 0;
  std::size_t cue_out_mix_beat = 0;
  std::size_t cue_in_track_beat = 0;
  std::size_t cue_out_track_beat = 0;
  double cue_in_sec = 0.0;
  double cue_out_sec = 0.0;
};

/// cue-in: first path point followed by run_length consecutive diagonal
/// steps. cue-out: last path point preceded by run_length diagonal steps.
/// Throws NoStableRun when the path has no such run.
CuePoints extract_cues(const WarpingPath& path, const BeatGrid& mix_beats, std::size_t run_length = kCueRunLength,
                       std::string track_id = {});

/// Fractional beat index of a time on the grid (linear within intervals,
/// extrapolated with the edge intervals outside the grid).
double beat_position(const BeatGrid& grid, double seconds);

struct TransitionRecord {
  std::string prev_track_id;
  std::string next_track_id;
  double cue_out_sec = 0.0;  // previous track starts fading out
  double cue_in_sec = 0.0;   // next track plays alone
  double cue_mid_sec = 0.0;
  std::size_t cue_out_mix_beat = 0;
  std::size_t cue_in_mix_beat = 0;
  long cue_mid_mix_beat = 0;  // cue_mid_sec on the grid, rounded half-up
  long length_beats = 0;      // may be negative
  double length_sec = 0.0;
  bool overlapping = false;   // set when length_beats < 0
};

/// One record per adjacent pair of cue sets (ordered by cue-in).
std::vector<TransitionRecord> build_transitions(const std::vector<CuePoints>& cues, const BeatGrid& mix_beats);

enum class CueType { Out, In, Mid };
const char* to_string(CueType type);

inline const std::vector<double> kDefaultTolerances = {15.0, 30.0, 60.0};

struct SegmentationRow {
  std::string prev_track_id;
  std::string next_track_id;
  double boundary_sec = 0.0;
  // estimate - boundary, seconds
  double diff_out_sec = 0.0;
  double diff_in_sec = 0.0;
  double diff_mid_sec = 0.0;
  // same in beats on the mix grid, when one was supplied
  std::optional<double> diff_out_beats;
  std::optional<double> diff_in_beats;
  std::optional<double> diff_mid_beats;
  double best_abs_sec = 0.0;
  CueType closest = CueType::In;
};

struct SegmentationReport {
  std::vector<SegmentationRow> rows;
  std::optional<double> median_abs_out_sec;
  std::optional<double> median_abs_in_sec;
  std::optional<double> median_abs_mid_sec;
  std::optional<double> median_best_sec;
  std::vector<double> tolerances;
  std::vector<std::optional<double>> cue_in_hit_rates;  // parallel to tolerances
  std::size_t closest_out = 0;
  std::size_t closest_in = 0;
  std::size_t closest_mid = 0;
};

/// Pairs transitions with boundaries by order. Closest-type ties resolve
/// in the order cue-in, cue-out, cue-mid.
SegmentationReport evaluate_segmentation(const std::vector<TransitionRecord>& transitions,
                                         const std::vector<double>& boundaries,
                                         const std::vector<double>& tolerances = kDefaultTolerances,
                                         const BeatGrid* mix_beats = nullptr);

/// Pool several reports (e.g. one per mix) and recompute the aggregates.
SegmentationReport merge_reports(const std::vector<SegmentationReport>& reports, const std::vector<double>& tolerances);

nlohmann::json to_json(const SegmentationReport& report);

double median(std::vector<double> values);

}  // namespace djmix

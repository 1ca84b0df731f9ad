#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "djmix/align.hpp"
#include "djmix/cue.hpp"
#include "djmix/features.hpp"

namespace djmix {

inline constexpr std::size_t kMinTempoSpanBeats = 8;

/// Percentage tempo change of the mix segment between the cues relative to
/// the original track: (segment_bpm / track_bpm - 1) * 100. The segment
/// tempo comes from robust_beat_interval over the mix beats in the span.
double tempo_adjustment(double track_bpm, const BeatGrid& mix_beats, const CuePoints& cues);

struct TranspositionHistogram {
  std::map<int, std::size_t> counts;  // signed semitones in [-5, +6]
  std::size_t total = 0;
  double fraction_transposed = 0.0;
};

TranspositionHistogram transposition_histogram(const std::vector<int>& shifts);
TranspositionHistogram transposition_histogram(const std::vector<AlignmentResult>& results);

struct TransitionLengthHistogram {
  std::map<long, std::size_t> counts;           // bin start (beats) -> count, non-negative lengths
  std::map<long, std::size_t> negative_counts;  // overlapping detections, kept apart
  std::size_t total = 0;
  std::optional<double> phrase_peak_score;      // mean count at multiples of 32 / mean count elsewhere
};

TransitionLengthHistogram transition_length_histogram(const std::vector<long>& lengths_beats, long bin = 1);
TransitionLengthHistogram transition_length_histogram(const std::vector<TransitionRecord>& transitions, long bin = 1);

inline const std::vector<std::size_t> kAgreementThresholds = {0, 4, 32, 64};

struct CueAgreement {
  std::vector<std::size_t> distances_beats;  // cue-in and cue-out pairs pooled
  std::vector<std::size_t> thresholds;
  std::vector<std::optional<double>> shares_within;  // share with distance <= threshold
};

/// All unordered pairs of appearances per track, in track-beat coordinates.
CueAgreement cue_agreement(const std::map<std::string, std::vector<CuePoints>>& cue_sets,
                           const std::vector<std::size_t>& thresholds = kAgreementThresholds);

struct StatsReport {
  std::vector<double> tempo_diffs_pct;
  TranspositionHistogram transposition;
  TransitionLengthHistogram transition_lengths;
  CueAgreement agreement;
  std::vector<double> tempo_thresholds_pct = {5.0, 10.0, 20.0};
  std::vector<std::optional<double>> tempo_shares_within;  // |diff| < threshold
};

/// Fill the tempo summary shares from tempo_diffs_pct.
void summarize_tempo(StatsReport& report);

nlohmann::json to_json(const StatsReport& report);

}  // namespace djmix

#include "djmix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "djmix/error.hpp"

namespace djmix {

double tempo_adjustment(double track_bpm, const BeatGrid& mix_beats, const CuePoints& cues) {
  if (!(track_bpm > 0.0)) throw Error(ErrorKind::InvalidParams, "track tempo must be positive");
  if (cues.cue_out_mix_beat < cues.cue_in_mix_beat ||
      cues.cue_out_mix_beat - cues.cue_in_mix_beat < kMinTempoSpanBeats)
    throw Error(ErrorKind::SpanTooShort, "cue span shorter than 8 beats");
  if (cues.cue_out_mix_beat >= mix_beats.beat_times.size())
    throw Error(ErrorKind::InvalidParams, "cues outside the mix beat grid");
  const auto first = mix_beats.beat_times.begin() + static_cast<std::ptrdiff_t>(cues.cue_in_mix_beat);
  const auto last = mix_beats.beat_times.begin() + static_cast<std::ptrdiff_t>(cues.cue_out_mix_beat) + 1;
  const double segment_bpm = 60.0 / robust_beat_interval(std::span<const double>(&*first, static_cast<std::size_t>(last - first)));
  return (segment_bpm / track_bpm - 1.0) * 100.0;
}

TranspositionHistogram transposition_histogram(const std::vector<int>& shifts) {
  TranspositionHistogram h;
  for (int s : shifts) ++h.counts[signed_semitones(s)];
  h.total = shifts.size();
  const auto zero = h.counts.count(0) ? h.counts.at(0) : 0;
  h.fraction_transposed = h.total == 0 ? 0.0 : 1.0 - static_cast<double>(zero) / static_cast<double>(h.total);
  return h;
}

TranspositionHistogram transposition_histogram(const std::vector<AlignmentResult>& results) {
  std::vector<int> shifts;
  shifts.reserve(results.size());
  for (const auto& r : results) shifts.push_back(r.transposition_semitones);
  return transposition_histogram(shifts);
}

TransitionLengthHistogram transition_length_histogram(const std::vector<long>& lengths, long bin) {
  if (bin < 1) throw Error(ErrorKind::InvalidParams, "bin width must be >= 1");
  TransitionLengthHistogram h;
  const auto bin_of = [bin](long v) {
    long q = v / bin;
    if (v % bin != 0 && v < 0) --q;
    return q * bin;
  };
  for (long l : lengths) ++(l < 0 ? h.negative_counts : h.counts)[bin_of(l)];
  h.total = lengths.size();

  if (!h.counts.empty()) {
    const long max_bin = h.counts.rbegin()->first;
    double phrase_sum = 0.0, other_sum = 0.0;
    std::size_t phrase_n = 0, other_n = 0;
    for (long b = bin; b <= max_bin; b += bin) {
      const auto it = h.counts.find(b);
      const double c = it == h.counts.end() ? 0.0 : static_cast<double>(it->second);
      if (b % 32 == 0) {
        phrase_sum += c;
        ++phrase_n;
      } else {
        other_sum += c;
        ++other_n;
      }
    }
    if (phrase_n > 0 && other_n > 0 && other_sum > 0.0)
      h.phrase_peak_score = (phrase_sum / static_cast<double>(phrase_n)) / (other_sum / static_cast<double>(other_n));
  }
  return h;
}

TransitionLengthHistogram transition_length_histogram(const std::vector<TransitionRecord>& transitions, long bin) {
  std::vector<long> lengths;
  lengths.reserve(transitions.size());
  for (const auto& t : transitions) lengths.push_back(t.length_beats);
  return transition_length_histogram(lengths, bin);
}

CueAgreement cue_agreement(const std::map<std::string, std::vector<CuePoints>>& cue_sets,
                           const std::vector<std::size_t>& thresholds) {
  CueAgreement out;
  out.thresholds = thresholds;
  const auto dist = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  for (const auto& [track, cues] : cue_sets) {
    for (std::size_t i = 0; i < cues.size(); ++i) {
      for (std::size_t j = i + 1; j < cues.size(); ++j) {
        out.distances_beats.push_back(dist(cues[i].cue_in_track_beat, cues[j].cue_in_track_beat));
        out.distances_beats.push_back(dist(cues[i].cue_out_track_beat, cues[j].cue_out_track_beat));
      }
    }
  }
  for (std::size_t t : thresholds) {
    if (out.distances_beats.empty()) {
      out.shares_within.emplace_back(std::nullopt);
      continue;
    }
    const auto n = std::count_if(out.distances_beats.begin(), out.distances_beats.end(),
                                 [t](std::size_t d) { return d <= t; });
    out.shares_within.emplace_back(static_cast<double>(n) / static_cast<double>(out.distances_beats.size()));
  }
  return out;
}

void summarize_tempo(StatsReport& report) {
  report.tempo_shares_within.clear();
  for (double t : report.tempo_thresholds_pct) {
    if (report.tempo_diffs_pct.empty()) {
      report.tempo_shares_within.emplace_back(std::nullopt);
      continue;
    }
    const auto n = std::count_if(report.tempo_diffs_pct.begin(), report.tempo_diffs_pct.end(),
                                 [t](double d) { return std::abs(d) < t; });
    report.tempo_shares_within.emplace_back(static_cast<double>(n) /
                                            static_cast<double>(report.tempo_diffs_pct.size()));
  }
}

nlohmann::json to_json(const StatsReport& r) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };

  json tempo_shares = json::array();
  for (std::size_t i = 0; i < r.tempo_thresholds_pct.size() && i < r.tempo_shares_within.size(); ++i)
    tempo_shares.push_back({{"threshold_pct", r.tempo_thresholds_pct[i]}, {"share", opt(r.tempo_shares_within[i])}});

  json trans = json::object();
  for (const auto& [k, v] : r.transposition.counts) trans[std::to_string(k)] = v;

  json lengths = json::object();
  for (const auto& [k, v] : r.transition_lengths.counts) lengths[std::to_string(k)] = v;
  json negative = json::object();
  for (const auto& [k, v] : r.transition_lengths.negative_counts) negative[std::to_string(k)] = v;

  json agree_shares = json::array();
  for (std::size_t i = 0; i < r.agreement.thresholds.size(); ++i)
    agree_shares.push_back({{"threshold_beats", r.agreement.thresholds[i]}, {"share", opt(r.agreement.shares_within[i])}});

  return {
      {"tempo_adjustment",
       {{"diffs_pct", r.tempo_diffs_pct}, {"count", r.tempo_diffs_pct.size()}, {"shares_within", tempo_shares}}},
      {"transposition",
       {{"counts", trans}, {"total", r.transposition.total}, {"fraction_transposed", r.transposition.fraction_transposed}}},
      {"transition_length",
       {{"counts", lengths},
        {"negative_counts", negative},
        {"total", r.transition_lengths.total},
        {"phrase_peak_score", opt(r.transition_lengths.phrase_peak_score)}}},
      {"cue_agreement",
       {{"distances_beats", r.agreement.distances_beats},
        {"count", r.agreement.distances_beats.size()},
        {"shares_within", agree_shares}}},
  };
}

}  // namespace djmix

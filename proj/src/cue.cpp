#include "djmix/cue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "djmix/error.hpp"

namespace djmix {

CuePoints extract_cues(const WarpingPath& path, const BeatGrid& mix_beats, std::size_t run_length,
                       std::string track_id) {
  if (run_length == 0) throw Error(ErrorKind::InvalidParams, "run_length must be >= 1");
  if (path.size() < 2) throw Error(ErrorKind::NoStableRun, "path too short");
  const std::size_t n_steps = path.size() - 1;

  // diag_after[k]: consecutive diagonal steps starting at point k.
  std::vector<std::size_t> diag_after(path.size(), 0);
  for (std::size_t k = n_steps; k-- > 0;)
    diag_after[k] = is_diagonal(path[k], path[k + 1]) ? diag_after[k + 1] + 1 : 0;
  // diag_before[k]: consecutive diagonal steps ending at point k.
  std::vector<std::size_t> diag_before(path.size(), 0);
  for (std::size_t k = 1; k < path.size(); ++k)
    diag_before[k] = is_diagonal(path[k - 1], path[k]) ? diag_before[k - 1] + 1 : 0;

  std::optional<std::size_t> in, out;
  for (std::size_t k = 0; k < path.size() && !in; ++k)
    if (diag_after[k] >= run_length) in = k;
  for (std::size_t k = path.size(); k-- > 0 && !out;)
    if (diag_before[k] >= run_length) out = k;
  if (!in || !out)
    throw Error(ErrorKind::NoStableRun, "no run of " + std::to_string(run_length) + " diagonal steps");

  CuePoints cues;
  cues.track_id = std::move(track_id);
  cues.cue_in_mix_beat = path[*in].mix_beat;
  cues.cue_in_track_beat = path[*in].track_beat;
  cues.cue_out_mix_beat = path[*out].mix_beat;
  cues.cue_out_track_beat = path[*out].track_beat;
  const auto& times = mix_beats.beat_times;
  if (cues.cue_out_mix_beat >= times.size())
    throw Error(ErrorKind::InvalidParams, "path exceeds the mix beat grid");
  cues.cue_in_sec = times[cues.cue_in_mix_beat];
  cues.cue_out_sec = times[cues.cue_out_mix_beat];
  return cues;
}

double beat_position(const BeatGrid& grid, double seconds) {
  const auto& t = grid.beat_times;
  if (t.size() < 2) throw Error(ErrorKind::DegenerateInput, "grid needs at least two beats");
  auto it = std::upper_bound(t.begin(), t.end(), seconds);
  std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  k = std::min(k, t.size() - 2);
  return static_cast<double>(k) + (seconds - t[k]) / (t[k + 1] - t[k]);
}

std::vector<TransitionRecord> build_transitions(const std::vector<CuePoints>& cues, const BeatGrid& mix_beats) {
  std::vector<TransitionRecord> out;
  if (cues.size() < 2) return out;
  out.reserve(cues.size() - 1);
  for (std::size_t k = 1; k < cues.size(); ++k) {
    const auto& prev = cues[k - 1];
    const auto& next = cues[k];
    TransitionRecord r;
    r.prev_track_id = prev.track_id;
    r.next_track_id = next.track_id;
    r.cue_out_sec = prev.cue_out_sec;
    r.cue_in_sec = next.cue_in_sec;
    r.cue_mid_sec = 0.5 * (r.cue_out_sec + r.cue_in_sec);
    r.cue_out_mix_beat = prev.cue_out_mix_beat;
    r.cue_in_mix_beat = next.cue_in_mix_beat;
    r.cue_mid_mix_beat = static_cast<long>(std::floor(beat_position(mix_beats, r.cue_mid_sec) + 0.5));
    r.length_beats = static_cast<long>(next.cue_in_mix_beat) - static_cast<long>(prev.cue_out_mix_beat);
    r.length_sec = r.cue_in_sec - r.cue_out_sec;
    r.overlapping = r.length_beats < 0;
    out.push_back(std::move(r));
  }
  return out;
}

const char* to_string(CueType type) {
  switch (type) {
    case CueType::Out: return "cue_out";
    case CueType::In: return "cue_in";
    case CueType::Mid: return "cue_mid";
  }
  return "unknown";
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::optional<double> median_or_null(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  return median(std::move(values));
}

void aggregate(SegmentationReport& report) {
  std::vector<double> out, in, mid, best;
  report.closest_out = report.closest_in = report.closest_mid = 0;
  for (const auto& r : report.rows) {
    out.push_back(std::abs(r.diff_out_sec));
    in.push_back(std::abs(r.diff_in_sec));
    mid.push_back(std::abs(r.diff_mid_sec));
    best.push_back(r.best_abs_sec);
    switch (r.closest) {
      case CueType::Out: ++report.closest_out; break;
      case CueType::In: ++report.closest_in; break;
      case CueType::Mid: ++report.closest_mid; break;
    }
  }
  report.median_abs_out_sec = median_or_null(out);
  report.median_abs_in_sec = median_or_null(in);
  report.median_abs_mid_sec = median_or_null(mid);
  report.median_best_sec = median_or_null(best);
  report.cue_in_hit_rates.clear();
  for (double tol : report.tolerances) {
    if (in.empty()) {
      report.cue_in_hit_rates.emplace_back(std::nullopt);
      continue;
    }
    const auto hits = std::count_if(in.begin(), in.end(), [tol](double d) { return d <= tol; });
    report.cue_in_hit_rates.emplace_back(static_cast<double>(hits) / static_cast<double>(in.size()));
  }
}

void check_tolerances(const std::vector<double>& tolerances) {
  for (double t : tolerances)
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidParams, "tolerances must be non-negative");
}

}  // namespace

SegmentationReport evaluate_segmentation(const std::vector<TransitionRecord>& transitions,
                                         const std::vector<double>& boundaries, const std::vector<double>& tolerances,
                                         const BeatGrid* mix_beats) {
  if (transitions.size() != boundaries.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(transitions.size()) + " transitions vs " +
                                               std::to_string(boundaries.size()) + " boundaries");
  check_tolerances(tolerances);
  SegmentationReport report;
  report.tolerances = tolerances;
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const auto& t = transitions[k];
    SegmentationRow row;
    row.prev_track_id = t.prev_track_id;
    row.next_track_id = t.next_track_id;
    row.boundary_sec = boundaries[k];
    row.diff_out_sec = t.cue_out_sec - row.boundary_sec;
    row.diff_in_sec = t.cue_in_sec - row.boundary_sec;
    row.diff_mid_sec = t.cue_mid_sec - row.boundary_sec;
    if (mix_beats) {
      const double b = beat_position(*mix_beats, row.boundary_sec);
      row.diff_out_beats = beat_position(*mix_beats, t.cue_out_sec) - b;
      row.diff_in_beats = beat_position(*mix_beats, t.cue_in_sec) - b;
      row.diff_mid_beats = beat_position(*mix_beats, t.cue_mid_sec) - b;
    }
    const double a_out = std::abs(row.diff_out_sec), a_in = std::abs(row.diff_in_sec),
                 a_mid = std::abs(row.diff_mid_sec);
    row.best_abs_sec = std::min({a_out, a_in, a_mid});
    row.closest = CueType::In;
    if (a_out < a_in && a_out <= a_mid) row.closest = CueType::Out;
    else if (a_mid < a_in && a_mid < a_out) row.closest = CueType::Mid;
    report.rows.push_back(std::move(row));
  }
  aggregate(report);
  return report;
}

SegmentationReport merge_reports(const std::vector<SegmentationReport>& reports, const std::vector<double>& tolerances) {
  check_tolerances(tolerances);
  SegmentationReport merged;
  merged.tolerances = tolerances;
  for (const auto& r : reports) merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
  aggregate(merged);
  return merged;
}

nlohmann::json to_json(const SegmentationReport& report) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({
        {"prev_track_id", r.prev_track_id},
        {"next_track_id", r.next_track_id},
        {"boundary_sec", r.boundary_sec},
        {"diff_out_sec", r.diff_out_sec},
        {"diff_in_sec", r.diff_in_sec},
        {"diff_mid_sec", r.diff_mid_sec},
        {"diff_out_beats", opt(r.diff_out_beats)},
        {"diff_in_beats", opt(r.diff_in_beats)},
        {"diff_mid_beats", opt(r.diff_mid_beats)},
        {"best_abs_sec", r.best_abs_sec},
        {"closest", to_string(r.closest)},
    });
  }
  json hit = json::array();
  for (std::size_t i = 0; i < report.tolerances.size(); ++i)
    hit.push_back({{"tolerance_sec", report.tolerances[i]}, {"rate", opt(report.cue_in_hit_rates[i])}});
  const double n = static_cast<double>(report.rows.size());
  const auto share = [n](std::size_t c) { return n > 0 ? json(static_cast<double>(c) / n) : json(nullptr); };
  return {
      {"transitions", rows},
      {"n_transitions", report.rows.size()},
      {"median_abs_diff_sec",
       {{"cue_out", opt(report.median_abs_out_sec)},
        {"cue_in", opt(report.median_abs_in_sec)},
        {"cue_mid", opt(report.median_abs_mid_sec)},
        {"cue_best", opt(report.median_best_sec)}}},
      {"cue_in_hit_rates", hit},
      {"closest_type_counts",
       {{"cue_out", report.closest_out}, {"cue_in", report.closest_in}, {"cue_mid", report.closest_mid}}},
      {"closest_type_shares",
       {{"cue_out", share(report.closest_out)},
        {"cue_in", share(report.closest_in)},
        {"cue_mid", share(report.closest_mid)}}},
  };
}

}  // namespace djmix

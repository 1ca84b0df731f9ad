#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "djmix/align.hpp"
#include "djmix/cue.hpp"
#include "djmix/features.hpp"

namespace djmix {

struct RunConfig {
  FeatureMode feature_mode = FeatureMode::ChromaMfcc;
  bool key_invariant = true;
  double match_threshold = kMatchThreshold;
  std::size_t run_length = kCueRunLength;
  std::vector<double> tolerances = kDefaultTolerances;
  int sample_rate = kWorkingRate;
  std::size_t workers = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path out = "out";
  MatchRateNorm match_rate_norm = MatchRateNorm::TrackSide;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Manifest files named directly, plus <dir>/manifest.json and
/// <dir>/*/manifest.json for directories. Sorted and de-duplicated.
std::vector<std::filesystem::path> collect_manifests(const std::vector<std::filesystem::path>& inputs);

int cmd_features(const std::vector<std::filesystem::path>& audio_paths, const RunConfig& config, std::ostream& log);
int cmd_align(const std::vector<std::filesystem::path>& manifests, const RunConfig& config, std::ostream& log);
int cmd_segment_eval(const std::vector<std::filesystem::path>& manifests, const RunConfig& config, std::ostream& log);
int cmd_stats(const std::filesystem::path& corpus_dir, const RunConfig& config, std::ostream& log);
int cmd_synth(std::size_t n_mixes, std::uint64_t seed, const RunConfig& config, std::ostream& log);

/// Argument parsing and dispatch for the djmix executable.
int run_cli(int argc, char** argv);

}  // namespace djmix

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "djmix/features.hpp"

namespace djmix {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::vector<std::uint8_t> serialize_features(const BeatSyncFeatures& features);
/// Throws CorruptFile on a truncated or foreign blob.
BeatSyncFeatures deserialize_features(std::span<const std::uint8_t> bytes);

/// Beat-synchronous features keyed by (audio content hash, parameters).
/// Entries live in memory and, when a directory is given, on disk as
/// <content>-<params>.djf written via rename so readers never see a
/// partial file.
class FeatureCache {
 public:
  explicit FeatureCache(std::optional<std::filesystem::path> dir = std::nullopt, int sample_rate = kWorkingRate,
                        FeatureParams params = {});

  struct Lookup {
    BeatSyncFeatures features;
    bool hit = false;
  };

  /// Thread-safe. Decode and extraction errors propagate.
  Lookup get(const std::filesystem::path& audio_path);

  std::string key_for(std::span<const std::uint8_t> audio_bytes) const;

 private:
  std::optional<std::filesystem::path> dir_;
  int sample_rate_;
  FeatureParams params_;
  std::uint64_t params_hash_;
  std::mutex mutex_;
  std::map<std::string, BeatSyncFeatures> memory_;
};

}  // namespace djmix

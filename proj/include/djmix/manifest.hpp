#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace djmix {

struct TrackEntry {
  std::string track_id;
  std::optional<std::filesystem::path> track_audio_path;  // absent when unavailable
  double boundary_seconds = 0.0;                           // annotated start boundary
};

/// Candidate track known not to be (or not verified to be) part of the mix.
/// Aligned and reported like any track but never placed in the tracklist.
struct DecoyEntry {
  std::string track_id;
  std::optional<std::filesystem::path> track_audio_path;
};

struct MixManifest {
  std::string mix_id;
  std::filesystem::path mix_audio_path;
  std::optional<std::string> genre;
  std::vector<TrackEntry> entries;  // strictly increasing boundary_seconds
  std::vector<DecoyEntry> decoys;
};

/// Parse a manifest file. Relative audio paths resolve against the
/// manifest's directory.
MixManifest parse_manifest(const std::filesystem::path& path);
MixManifest parse_manifest_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Inverse of parse_manifest_json; paths are written relative to base_dir.
nlohmann::json manifest_to_json(const MixManifest& manifest, const std::filesystem::path& base_dir);

}  // namespace djmix

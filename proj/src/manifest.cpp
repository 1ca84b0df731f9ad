#include "djmix/manifest.hpp"

#include <fstream>

#include "djmix/error.hpp"

namespace djmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw Error(ErrorKind::SchemaViolation, where + ": missing '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<fs::path> optional_path(const json& obj, const char* key, const fs::path& base_dir,
                                      const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorKind::SchemaViolation, where + ": '" + key + "' must be a string");
  fs::path p = it->get<std::string>();
  return p.is_absolute() ? p : base_dir / p;
}

std::string relative_or_absolute(const fs::path& p, const fs::path& base_dir) {
  if (base_dir.empty()) return p.generic_string();
  auto rel = p.lexically_relative(base_dir);
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

}  // namespace

MixManifest parse_manifest_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::SchemaViolation, "manifest must be a JSON object");
  MixManifest m;
  m.mix_id = require_string(doc, "mix_id", "manifest");
  const std::string where = "mix " + m.mix_id;
  const std::string mix_audio = require_string(doc, "mix_audio", where);
  m.mix_audio_path = fs::path(mix_audio).is_absolute() ? fs::path(mix_audio) : base_dir / mix_audio;
  if (auto g = doc.find("genre"); g != doc.end() && !g->is_null()) {
    if (!g->is_string()) throw Error(ErrorKind::SchemaViolation, where + ": 'genre' must be a string");
    m.genre = g->get<std::string>();
  }

  const json& tracks = require(doc, "tracks", where);
  if (!tracks.is_array() || tracks.empty())
    throw Error(ErrorKind::SchemaViolation, where + ": 'tracks' must be a non-empty array");
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const json& t = tracks[i];
    const std::string tw = where + " track " + std::to_string(i);
    if (!t.is_object()) throw Error(ErrorKind::SchemaViolation, tw + ": entry must be an object");
    TrackEntry e;
    e.track_id = require_string(t, "track_id", tw);
    const json& b = require(t, "boundary_sec", tw);
    if (!b.is_number()) throw Error(ErrorKind::SchemaViolation, tw + ": 'boundary_sec' must be a number");
    e.boundary_seconds = b.get<double>();
    if (!(e.boundary_seconds >= 0.0)) throw Error(ErrorKind::SchemaViolation, tw + ": negative boundary");
    e.track_audio_path = optional_path(t, "audio", base_dir, tw);
    if (!m.entries.empty() && !(e.boundary_seconds > m.entries.back().boundary_seconds))
      throw Error(ErrorKind::NonMonotonicBoundaries, tw + ": boundaries must be strictly increasing");
    m.entries.push_back(std::move(e));
  }

  if (auto d = doc.find("decoys"); d != doc.end() && !d->is_null()) {
    if (!d->is_array()) throw Error(ErrorKind::SchemaViolation, where + ": 'decoys' must be an array");
    for (std::size_t i = 0; i < d->size(); ++i) {
      const json& t = (*d)[i];
      const std::string tw = where + " decoy " + std::to_string(i);
      if (!t.is_object()) throw Error(ErrorKind::SchemaViolation, tw + ": entry must be an object");
      m.decoys.push_back({require_string(t, "track_id", tw), optional_path(t, "audio", base_dir, tw)});
    }
  }
  return m;
}

MixManifest parse_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaViolation, path.string() + ": " + e.what());
  }
  return parse_manifest_json(doc, path.parent_path());
}

json manifest_to_json(const MixManifest& m, const fs::path& base_dir) {
  json doc;
  doc["mix_id"] = m.mix_id;
  doc["mix_audio"] = relative_or_absolute(m.mix_audio_path, base_dir);
  if (m.genre) doc["genre"] = *m.genre;
  json tracks = json::array();
  for (const auto& e : m.entries) {
    json t;
    t["track_id"] = e.track_id;
    t["boundary_sec"] = e.boundary_seconds;
    if (e.track_audio_path) t["audio"] = relative_or_absolute(*e.track_audio_path, base_dir);
    tracks.push_back(std::move(t));
  }
  doc["tracks"] = std::move(tracks);
  if (!m.decoys.empty()) {
    json decoys = json::array();
    for (const auto& d : m.decoys) {
      json t;
      t["track_id"] = d.track_id;
      if (d.track_audio_path) t["audio"] = relative_or_absolute(*d.track_audio_path, base_dir);
      decoys.push_back(std::move(t));
    }
    doc["decoys"] = std::move(decoys);
  }
  return doc;
}

}  // namespace djmix

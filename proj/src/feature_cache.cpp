#include "djmix/feature_cache.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "djmix/audio.hpp"
#include "djmix/error.hpp"

namespace djmix {

namespace {

constexpr char kMagic[4] = {'D', 'J', 'F', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const std::optional<Matrix>& m) {
    u64(m ? 1 : 0);
    if (!m) return;
    u64(m->rows());
    u64(m->cols());
    for (double v : m->data()) f64(v);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count() {
    const auto n = u64();
    if (n > bytes_.size()) throw Error(ErrorKind::CorruptFile, "cache entry count out of range");
    return static_cast<std::size_t>(n);
  }
  std::optional<Matrix> matrix() {
    if (u64() == 0) return std::nullopt;
    const std::size_t rows = count(), cols = count();
    need(rows * cols * 8);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = f64();
    return m;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::CorruptFile, "truncated cache entry");
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingAudio, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_features(const BeatSyncFeatures& features) {
  Writer w;
  w.bytes.insert(w.bytes.end(), std::begin(kMagic), std::end(kMagic));
  w.u64(kFormatVersion);
  w.f64(features.beat_grid.tempo_bpm);
  w.u64(features.beat_grid.beat_times.size());
  for (double t : features.beat_grid.beat_times) w.f64(t);
  w.matrix(features.chroma);
  w.matrix(features.mfcc);
  return std::move(w.bytes);
}

BeatSyncFeatures deserialize_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorKind::CorruptFile, "not a feature cache entry");
  Reader r(bytes.subspan(4));
  if (r.u64() != kFormatVersion) throw Error(ErrorKind::CorruptFile, "feature cache version mismatch");
  BeatSyncFeatures f;
  f.beat_grid.tempo_bpm = r.f64();
  const std::size_t n = r.count();
  r.need(n * 8);
  f.beat_grid.beat_times.resize(n);
  for (double& t : f.beat_grid.beat_times) t = r.f64();
  f.chroma = r.matrix();
  f.mfcc = r.matrix();
  if (!r.done()) throw Error(ErrorKind::CorruptFile, "trailing bytes in cache entry");
  return f;
}

FeatureCache::FeatureCache(std::optional<std::filesystem::path> dir, int sample_rate, FeatureParams params)
    : dir_(std::move(dir)), sample_rate_(sample_rate), params_(params) {
  std::ostringstream desc;
  desc << "v" << kFormatVersion << ";sr=" << sample_rate_ << ";fft=" << params_.fft_size << ";hop=" << params_.hop
       << ";mels=" << params_.n_mels << ";mfcc=" << params_.n_mfcc << ";c=" << params_.chroma
       << ";m=" << params_.mfcc;
  const auto s = desc.str();
  params_hash_ = fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::string FeatureCache::key_for(std::span<const std::uint8_t> audio_bytes) const {
  return hex(fnv1a64(audio_bytes)) + "-" + hex(params_hash_);
}

FeatureCache::Lookup FeatureCache::get(const std::filesystem::path& audio_path) {
  const auto bytes = read_file(audio_path);
  const std::string key = key_for(bytes);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return {it->second, true};
  }
  const auto entry_path = dir_ ? std::optional(*dir_ / (key + ".djf")) : std::nullopt;
  if (entry_path && std::filesystem::exists(*entry_path)) {
    try {
      auto features = deserialize_features(read_file(*entry_path));
      std::lock_guard lock(mutex_);
      memory_.emplace(key, features);
      return {std::move(features), true};
    } catch (const Error&) {
      // unreadable entry: recompute and overwrite
    }
  }

  auto features = extract_features(decode_wav_bytes(bytes, sample_rate_), params_);
  if (entry_path) {
    const auto blob = serialize_features(features);
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const auto tmp = *dir_ / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
      out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    }
    std::filesystem::rename(tmp, *entry_path);
  }
  std::lock_guard lock(mutex_);
  memory_.emplace(key, features);
  return {std::move(features), false};
}

}  // namespace djmix

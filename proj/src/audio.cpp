#include "djmix/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "djmix/error.hpp"

namespace djmix {

AudioBuffer::AudioBuffer(std::vector<float> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) throw Error(ErrorKind::InvalidParams, "sample rate must be positive");
  for (float s : samples_) {
    if (!std::isfinite(s)) throw Error(ErrorKind::InvalidParams, "non-finite sample");
  }
}

float AudioBuffer::peak() const noexcept {
  float p = 0.0f;
  for (float s : samples_) p = std::max(p, std::abs(s));
  return p;
}

std::vector<float> peak_normalize(std::vector<float> samples) {
  float peak = 0.0f;
  for (float s : samples) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0f) return samples;
  const double gain = 1.0 / peak;
  for (float& s : samples) s = static_cast<float>(std::clamp(s * gain, -1.0, 1.0));
  return samples;
}

namespace {

constexpr int kZeroCrossings = 32;
constexpr int kTableOversample = 512;
constexpr double kKaiserBeta = 8.6;

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Kaiser-windowed sinc sampled on [0, kZeroCrossings] at kTableOversample
// points per zero crossing; indexed in units of the lower-rate sample period.
const std::vector<double>& sinc_table() {
  static const std::vector<double> table = [] {
    const int n = kZeroCrossings * kTableOversample + 2;
    std::vector<double> t(n, 0.0);
    const double norm = bessel_i0(kKaiserBeta);
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / kTableOversample;
      if (x >= kZeroCrossings) break;
      const double r = x / kZeroCrossings;
      const double window = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / norm;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      t[i] = sinc * window;
    }
    return t;
  }();
  return table;
}

}  // namespace

std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw Error(ErrorKind::InvalidParams, "rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};
  const auto& table = sinc_table();
  const double ratio = static_cast<double>(from_rate) / to_rate;  // input samples per output sample
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const auto n_in = static_cast<std::int64_t>(input.size());
  const auto n_out = static_cast<std::int64_t>(
      (static_cast<std::int64_t>(input.size()) * to_rate + from_rate - 1) / from_rate);

  std::vector<float> out(static_cast<std::size_t>(n_out));
  for (std::int64_t m = 0; m < n_out; ++m) {
    const double t = static_cast<double>(m) * ratio;
    const auto lo = static_cast<std::int64_t>(std::ceil(t - half_width));
    const auto hi = static_cast<std::int64_t>(std::floor(t + half_width));
    double acc = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(lo, 0); k <= std::min(hi, n_in - 1); ++k) {
      const double pos = std::abs(t - static_cast<double>(k)) * cutoff * kTableOversample;
      const auto idx = static_cast<std::size_t>(pos);
      if (idx + 1 >= table.size()) continue;
      const double frac = pos - static_cast<double>(idx);
      const double h = table[idx] + frac * (table[idx + 1] - table[idx]);
      acc += input[static_cast<std::size_t>(k)] * h;
    }
    out[static_cast<std::size_t>(m)] = static_cast<float>(acc * cutoff);
  }
  return out;
}

namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void seek(std::size_t p) { pos_ = p; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) | (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                      (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                      (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (!has(n)) throw Error(ErrorKind::CorruptFile, "truncated WAV data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct WavFormat {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

float read_float_le(const std::uint8_t* p) {
  std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(v);
}

}  // namespace

AudioBuffer decode_wav_bytes(std::span<const std::uint8_t> bytes, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorKind::InvalidParams, "target rate must be positive");
  if (bytes.size() < 12) throw Error(ErrorKind::UnsupportedFormat, "not a RIFF/WAVE file");
  ByteReader r(bytes);
  if (r.tag() != "RIFF") throw Error(ErrorKind::UnsupportedFormat, "not a RIFF/WAVE file");
  r.u32();
  if (r.tag() != "WAVE") throw Error(ErrorKind::UnsupportedFormat, "not a RIFF/WAVE file");

  std::optional<WavFormat> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  while (r.remaining() >= 8 && !have_data) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorKind::CorruptFile, "short fmt chunk");
      const std::size_t start = r.pos();
      WavFormat f;
      f.format = r.u16();
      f.channels = r.u16();
      f.sample_rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      f.bits = r.u16();
      if (f.format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorKind::CorruptFile, "short extensible fmt chunk");
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        f.format = r.u16();  // first two bytes of the subformat GUID
      }
      fmt = f;
      r.seek(start);
      r.take(size + (size & 1u));
    } else if (id == "data") {
      if (!fmt) throw Error(ErrorKind::CorruptFile, "data chunk before fmt chunk");
      if (size > r.remaining()) throw Error(ErrorKind::CorruptFile, "truncated data chunk");
      data = r.take(size);
      have_data = true;
    } else {
      if (size > r.remaining()) throw Error(ErrorKind::CorruptFile, "truncated chunk " + id);
      r.take(size + ((size & 1u) && r.remaining() > size ? 1 : 0));
    }
  }
  if (!fmt) throw Error(ErrorKind::CorruptFile, "missing fmt chunk");
  if (!have_data) throw Error(ErrorKind::CorruptFile, "missing data chunk");
  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !f32) throw Error(ErrorKind::UnsupportedFormat, "only PCM16 and float32 WAV are supported");
  if (fmt->channels < 1 || fmt->channels > 2) throw Error(ErrorKind::UnsupportedFormat, "1-2 channels supported");
  if (fmt->sample_rate == 0) throw Error(ErrorKind::CorruptFile, "zero sample rate");

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t n_frames = data.size() / frame_bytes;
  if (n_frames == 0) throw Error(ErrorKind::EmptyAudio, "no samples");

  std::vector<float> mono(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::uint8_t* p = data.data() + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
        acc += v / 32768.0;
      } else {
        const float v = read_float_le(p);
        if (!std::isfinite(v)) throw Error(ErrorKind::CorruptFile, "non-finite float sample");
        acc += v;
      }
    }
    mono[i] = static_cast<float>(acc / fmt->channels);
  }
  auto resampled = resample(mono, static_cast<int>(fmt->sample_rate), target_rate);
  return AudioBuffer(peak_normalize(std::move(resampled)), target_rate);
}

AudioBuffer decode_audio(const std::filesystem::path& path, int target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav_bytes(bytes, target_rate);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::vector<std::uint8_t> encode_wav(std::span<const float> interleaved, int channels, int sample_rate,
                                     WavEncoding encoding) {
  if (channels < 1 || channels > 2 || sample_rate <= 0)
    throw Error(ErrorKind::InvalidParams, "unsupported channel count or rate");
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
  put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : interleaved) {
    if (encoding == WavEncoding::Pcm16) {
      const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clamped * 32767.0))));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(s));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding) {
  const auto bytes = encode_wav(audio.samples(), 1, audio.sample_rate(), encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace djmix

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace djmix {

/// Working sample rate for every analysis path.
inline constexpr int kWorkingRate = 22050;

/// Decoded mono audio. Immutable once constructed.
class AudioBuffer {
 public:
  AudioBuffer() = default;
  /// Throws InvalidParams on a non-positive rate or non-finite samples.
  AudioBuffer(std::vector<float> samples, int sample_rate);

  std::span<const float> samples() const noexcept { return samples_; }
  int sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double duration_seconds() const noexcept {
    return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_ : 0.0;
  }
  float peak() const noexcept;

 private:
  std::vector<float> samples_;
  int sample_rate_ = kWorkingRate;
};

enum class WavEncoding { Pcm16, Float32 };

/// Windowed-sinc (Kaiser) band-limited resampler. Kernel spans 32 zero
/// crossings of the lower rate on each side (64 taps at unity ratio).
std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate);

/// Scale so max |sample| == 1. Silent input is returned unchanged.
std::vector<float> peak_normalize(std::vector<float> samples);

/// Decode a WAV container (PCM16 or float32, 1-2 channels) to a mono,
/// peak-normalized buffer at target_rate. Stereo is downmixed by channel mean.
AudioBuffer decode_audio(const std::filesystem::path& path, int target_rate = kWorkingRate);
AudioBuffer decode_wav_bytes(std::span<const std::uint8_t> bytes, int target_rate = kWorkingRate);

/// Serialize a multi-channel interleaved signal as WAV.
std::vector<std::uint8_t> encode_wav(std::span<const float> interleaved, int channels, int sample_rate,
                                     WavEncoding encoding);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace djmix

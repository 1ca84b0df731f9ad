#include <cmath>
#include <numbers>

#include "djmix/error.hpp"
#include "djmix/features.hpp"

namespace djmix {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

}  // namespace

FftPlan::FftPlan(std::size_t size) : size_(size) {
  if (!is_power_of_two(size)) throw Error(ErrorKind::InvalidParams, "FFT size must be a power of two");
  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  bit_reverse_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  if (data.size() != size_) throw Error(ErrorKind::InvalidParams, "FFT input length mismatch");
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= size_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = size_ / len;
    for (std::size_t start = 0; start < size_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = twiddles_[k * stride] * data[start + k + half];
        const std::complex<double> u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
}

RealFft::RealFft(std::size_t size) : size_(size), half_(size >= 2 ? size / 2 : 1) {
  if (size < 2 || !is_power_of_two(size)) throw Error(ErrorKind::InvalidParams, "FFT size must be a power of two");
  post_twiddles_.resize(size / 2 + 1);
  for (std::size_t k = 0; k <= size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    post_twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  scratch_.resize(size / 2);
}

void RealFft::forward(std::span<const double> input, std::span<std::complex<double>> out) {
  const std::size_t half = size_ / 2;
  if (input.size() != size_ || out.size() != half + 1)
    throw Error(ErrorKind::InvalidParams, "real FFT buffer size mismatch");
  for (std::size_t n = 0; n < half; ++n) scratch_[n] = {input[2 * n], input[2 * n + 1]};
  half_.forward(scratch_);
  for (std::size_t k = 0; k <= half; ++k) {
    const std::complex<double> zk = scratch_[k % half];
    const std::complex<double> zc = std::conj(scratch_[(half - k) % half]);
    const std::complex<double> even = 0.5 * (zk + zc);
    const std::complex<double> odd = std::complex<double>(0.0, -0.5) * (zk - zc);
    out[k] = even + post_twiddles_[k] * odd;
  }
}

}  // namespace djmix

#include "y2aec/dsp/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace y2aec::dsp {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table for one direction, computed in double and stored as float.
std::vector<std::complex<float>> twiddles(size_t n, bool inverse) {
  std::vector<std::complex<float>> w(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n / 2; ++k) {
    const double ang = sign * 2.0 * std::numbers::pi * double(k) / double(n);
    w[k] = {float(std::cos(ang)), float(std::sin(ang))};
  }
  return w;
}

}  // namespace

void fft(std::vector<std::complex<float>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
  if (n == 1) return;

  // bit reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const auto w = twiddles(n, inverse);
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t step = n / len;
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<float> u = a[i + k];
        const std::complex<float> v = a[i + k + len / 2] * w[k * step];
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }

  if (inverse) {
    const float inv = 1.0f / float(n);
    for (auto& x : a) x *= inv;
  }
}

std::vector<std::complex<float>> rdft(std::span<const float> frame, int n) {
  if (n <= 0 || !is_pow2(size_t(n))) throw std::invalid_argument("rdft: bad size");
  if (frame.size() > size_t(n)) throw std::invalid_argument("rdft: frame longer than transform");
  std::vector<std::complex<float>> a(static_cast<size_t>(n));
  for (size_t i = 0; i < frame.size(); ++i) a[i] = {frame[i], 0.0f};
  fft(a, false);
  a.resize(size_t(n) / 2 + 1);
  return a;
}

std::vector<float> irdft(std::span<const std::complex<float>> half, int n) {
  const size_t bins = size_t(n) / 2 + 1;
  if (half.size() != bins) throw std::invalid_argument("irdft: expected n/2+1 bins");
  std::vector<std::complex<float>> a(static_cast<size_t>(n));
  for (size_t k = 0; k < bins; ++k) a[k] = half[k];
  for (size_t k = bins; k < size_t(n); ++k) a[k] = std::conj(half[size_t(n) - k]);
  fft(a, true);
  std::vector<float> out(static_cast<size_t>(n));
  for (size_t i = 0; i < size_t(n); ++i) out[i] = a[i].real();
  return out;
}

}  // namespace y2aec::dsp

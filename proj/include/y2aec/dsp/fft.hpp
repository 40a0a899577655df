#pragma once

#include <complex>
#include <span>
#include <vector>

namespace y2aec::dsp {

/// In-place radix-2 complex FFT. Size must be a power of two.
/// Forward transform is un-normalized; the inverse applies 1/n.
void fft(std::vector<std::complex<float>>& a, bool inverse);

/// Real-input DFT: n-point transform of `frame` (zero-padded to n if
/// shorter), returning the n/2+1 non-redundant bins.
std::vector<std::complex<float>> rdft(std::span<const float> frame, int n);

/// Inverse of rdft: expands the half spectrum by conjugate symmetry and
/// returns the n real samples (1/n normalization).
std::vector<float> irdft(std::span<const std::complex<float>> half, int n);

}  // namespace y2aec::dsp

#pragma once

#include "y2aec/dsp/frame_config.hpp"
#include "y2aec/tc/tensor.hpp"

namespace y2aec::dsp {

/// Packs a half spectrum into an (M,1,2) tensor: channel 0 real, channel 1
/// imaginary, rows beyond the bin count zero-padded.
template <typename S>
tc::TensorT<S> pack_features(const Spectrum& spec, int feature_dim) {
  if (int(spec.size()) > feature_dim || spec.empty())
    throw std::invalid_argument("pack_features: bin count exceeds feature dim");
  std::vector<S> data(size_t(feature_dim) * 2, S(0));
  for (size_t k = 0; k < spec.size(); ++k) {
    data[2 * k] = S(spec[k].real());
    data[2 * k + 1] = S(spec[k].imag());
  }
  return tc::TensorT<S>::from_vector({feature_dim, 1, 2}, std::move(data));
}

/// Inverse of pack_features: rows 0..n_bins-1 become complex bins, the
/// padding rows are discarded, and the imaginary parts of the DC and
/// Nyquist bins are forced to zero.
template <typename S>
Spectrum unpack_features(const tc::TensorT<S>& t, int n_bins) {
  const auto& sh = t.shape();
  if (sh.size() != 3 || sh[1] != 1 || sh[2] != 2)
    throw std::invalid_argument("unpack_features: tensor must be (M,1,2)");
  if (sh[0] < n_bins) throw std::invalid_argument("unpack_features: fewer rows than bins");
  const auto& d = t.data();
  Spectrum out(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k)
    out[size_t(k)] = {float(d[size_t(2 * k)]), float(d[size_t(2 * k) + 1])};
  out.front().imag(0.0f);
  out.back().imag(0.0f);
  return out;
}

}  // namespace y2aec::dsp

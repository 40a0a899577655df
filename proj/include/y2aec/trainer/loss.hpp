#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "y2aec/dsp/frame_config.hpp"
#include "y2aec/tc/ops.hpp"

namespace y2aec::trainer {

/// Mean squared complex error over the full DFT grid, computed on the
/// non-redundant half spectrum: bins 1..K/2-1 carry weight 2 (conjugate
/// pair), DC and Nyquist weight 1, total divided by K.
template <typename C>
double spectral_mse(const std::vector<std::complex<C>>& pred,
                    const std::vector<std::complex<C>>& target, int dft_size) {
  if (pred.size() != target.size()) throw std::invalid_argument("spectral_mse: bin count mismatch");
  if (int(pred.size()) != dft_size / 2 + 1)
    throw std::invalid_argument("spectral_mse: expected K/2+1 bins");
  double acc = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    const double w = (k == 0 || k + 1 == pred.size()) ? 1.0 : 2.0;
    acc += w * std::norm(std::complex<double>(pred[k]) - std::complex<double>(target[k]));
  }
  return acc / double(dft_size);
}

inline double loss_aec(const dsp::Spectrum& dhat, const dsp::Spectrum& d, int dft_size = 512) {
  return spectral_mse(dhat, d, dft_size);
}

inline double loss_pf(const dsp::Spectrum& shat, const dsp::Spectrum& s, int dft_size = 512) {
  return spectral_mse(shat, s, dft_size);
}

inline double loss_joint(double j_aec, double j_pf, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("loss_joint: alpha outside [0,1]");
  return alpha * j_aec + (1.0 - alpha) * j_pf;
}

/// Per-entry weights realizing spectral_mse on packed (M,1,2) tensors.
/// Padding rows get weight 0, so they never enter the loss.
template <typename S>
std::shared_ptr<const std::vector<S>> make_loss_weights(int feature_dim, int n_bins, int dft_size) {
  std::vector<S> w(size_t(feature_dim) * 2, S(0));
  for (int k = 0; k < n_bins; ++k) {
    const S wk = (k == 0 || k == n_bins - 1) ? S(1) : S(2);
    w[size_t(2 * k)] = wk / S(dft_size);
    w[size_t(2 * k) + 1] = wk / S(dft_size);
  }
  return std::make_shared<const std::vector<S>>(std::move(w));
}

/// Differentiable counterpart of spectral_mse: weighted sum of squared
/// channel differences. Targets are plain (untracked) tensors.
template <typename S>
tc::TensorT<S> spectral_mse_tensor(const tc::TensorT<S>& pred, const tc::TensorT<S>& target,
                                   std::shared_ptr<const std::vector<S>> weights) {
  auto diff = tc::sub(pred, target);
  return tc::dot_const(tc::mul(diff, diff), std::move(weights));
}

/// Projection that reproduces the unpack/pack round trip of the inference
/// path: zeros the padding rows and the imaginary parts of DC and Nyquist.
template <typename S>
std::shared_ptr<const std::vector<S>> make_bin_projection(int feature_dim, int n_bins) {
  std::vector<S> p(size_t(feature_dim) * 2, S(0));
  for (int k = 0; k < n_bins; ++k) {
    p[size_t(2 * k)] = S(1);
    p[size_t(2 * k) + 1] = (k == 0 || k == n_bins - 1) ? S(0) : S(1);
  }
  return std::make_shared<const std::vector<S>>(std::move(p));
}

}  // namespace y2aec::trainer

#pragma once

#include <cmath>

#include "y2aec/dsp/frame_config.hpp"
#include "y2aec/tc/tensor.hpp"

namespace y2aec::pipeline {

namespace detail {

/// tanh(r)/r, continuous at 0 (limit 1). Series below 1e-3 avoids the 0/0.
template <typename S>
S tanh_ratio(S r) {
  if (r < S(1e-3)) {
    const S r2 = r * r;
    return S(1) - r2 / S(3) + S(2) * r2 * r2 / S(15);
  }
  return std::tanh(r) / r;
}

/// d/dr of tanh(r)/r, divided by r; smooth with limit -2/3 at 0.
template <typename S>
S tanh_ratio_deriv_over_r(S r) {
  if (r < S(1e-3)) {
    const S r2 = r * r;
    return S(-2) / S(3) + S(8) * r2 / S(15);
  }
  const S t = std::tanh(r);
  const S sech2 = S(1) - t * t;
  return (sech2 * r - t) / (r * r * r);
}

}  // namespace detail

/// Complex per-bin gain of the compressed mask: tanh(|M|) * M/|M|,
/// defined as 0 at M = 0.
inline std::complex<float> compressed_gain(std::complex<float> m) {
  const float rho = std::abs(m);
  if (rho == 0.0f) return {0.0f, 0.0f};
  return m * detail::tanh_ratio(rho);
}

/// Applies the amplitude-compressed complex mask per bin:
/// S = E * tanh(|M|) * M/|M|, with S = 0 where M = 0.
inline dsp::Spectrum apply_mask(const dsp::Spectrum& e, const dsp::Spectrum& m) {
  if (e.size() != m.size()) throw std::invalid_argument("apply_mask: bin count mismatch");
  dsp::Spectrum out(e.size());
  for (size_t k = 0; k < e.size(); ++k) out[k] = e[k] * compressed_gain(m[k]);
  return out;
}

/// Differentiable form of apply_mask on packed (M,1,2) tensors. Writing
/// g(rho) = tanh(rho)/rho with rho = |M|, the output is (E*M) * g(rho)
/// per row as a complex product, which is smooth in (M_re, M_im)
/// everywhere including M = 0.
template <typename S>
tc::TensorT<S> mask_compress(const tc::TensorT<S>& e, const tc::TensorT<S>& m) {
  const auto& es = e.shape();
  if (es.size() != 3 || es[1] != 1 || es[2] != 2)
    throw std::invalid_argument("mask_compress: tensors must be (M,1,2)");
  if (m.shape() != es) throw std::invalid_argument("mask_compress: shape mismatch");

  const auto& ev = e.data();
  const auto& mv = m.data();
  const size_t rows = size_t(es[0]);
  std::vector<S> out(rows * 2);
  for (size_t r = 0; r < rows; ++r) {
    const S er = ev[2 * r], ei = ev[2 * r + 1];
    const S mr = mv[2 * r], mi = mv[2 * r + 1];
    const S rho = std::sqrt(mr * mr + mi * mi);
    const S g = detail::tanh_ratio(rho);
    out[2 * r] = (er * mr - ei * mi) * g;
    out[2 * r + 1] = (er * mi + ei * mr) * g;
  }
  tc::check_finite(out, "mask_compress");

  auto node = tc::detail::make_node<S>({&e, &m}, out.size());
  if (node) {
    auto pe = e.node();
    auto pm = m.node();
    auto ed = e.data_ptr();
    auto md = m.data_ptr();
    node->backprop = [pe, pm, ed, md, rows](const std::vector<S>& grad) {
      for (size_t r = 0; r < rows; ++r) {
        const S er = (*ed)[2 * r], ei = (*ed)[2 * r + 1];
        const S mr = (*md)[2 * r], mi = (*md)[2 * r + 1];
        const S gr = grad[2 * r], gi = grad[2 * r + 1];
        const S rho = std::sqrt(mr * mr + mi * mi);
        const S g = detail::tanh_ratio(rho);
        if (pe) {
          // dS_re/dE = (mr, -mi)*g ; dS_im/dE = (mi, mr)*g
          pe->grad[2 * r] += g * (gr * mr + gi * mi);
          pe->grad[2 * r + 1] += g * (-gr * mi + gi * mr);
        }
        if (pm) {
          const S q = detail::tanh_ratio_deriv_over_r(rho);  // g'(rho)/rho
          const S pr = er * mr - ei * mi;                    // (E*M)_re
          const S pi = er * mi + ei * mr;                    // (E*M)_im
          pm->grad[2 * r] += gr * (er * g + pr * q * mr) + gi * (ei * g + pi * q * mr);
          pm->grad[2 * r + 1] += gr * (-ei * g + pr * q * mi) + gi * (er * g + pi * q * mi);
        }
      }
    };
  }
  return tc::TensorT<S>::with_node(es, std::move(out), std::move(node));
}

}  // namespace y2aec::pipeline

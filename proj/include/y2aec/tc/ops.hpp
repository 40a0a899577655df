#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "y2aec/tc/tensor.hpp"

namespace y2aec::tc {

/// Geometry of a feature-axis convolution. "Same" padding throughout, with
/// the extra zero at the high-index end; stride 2 halves the feature axis
/// (rounding up), the transposed form doubles it.
struct ConvSpec {
  int kernel_len = 24;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  bool transposed = false;

  void validate() const {
    if (kernel_len < 1) throw std::invalid_argument("ConvSpec: kernel_len < 1");
    if (stride != 1 && stride != 2) throw std::invalid_argument("ConvSpec: stride must be 1 or 2");
    if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("ConvSpec: bad channel counts");
  }
};

namespace detail {

/// Left padding of the forward convolution mapping length `lin` to
/// ceil(lin/stride). The transposed op reuses the same geometry.
inline int same_pad_left(int lin, int kernel_len, int stride) {
  const int lout = (lin + stride - 1) / stride;
  const int pad_total = std::max((lout - 1) * stride + kernel_len - lin, 0);
  return pad_total / 2;
}

// Scratch for register-blocked accumulator rows; spills to the heap only
// for unusually wide channel counts.
template <typename S>
struct AccRow {
  static constexpr int kStack = 192;
  S stack[kStack];
  std::vector<S> heap;
  S* get(int n) {
    if (n <= kStack) return stack;
    heap.assign(size_t(n), S(0));
    return heap.data();
  }
};

// y[p, co] += sum_{t, ci} x[p*s + t - pl, ci] * w[t, ci, co]
template <typename S>
void conv_gather(S* __restrict y, const S* __restrict x, int lx, int ci_n, const S* __restrict w,
                 int n, int co_n, int stride, int pad_left, int lo) {
  AccRow<S> scratch;
  S* acc = scratch.get(co_n);
  for (int p = 0; p < lo; ++p) {
    const int base = p * stride - pad_left;
    const int t0 = std::max(0, -base);
    const int t1 = std::min(n, lx - base);
    S* __restrict yrow = y + size_t(p) * size_t(co_n);
    for (int co = 0; co < co_n; ++co) acc[co] = yrow[co];
    for (int t = t0; t < t1; ++t) {
      const S* __restrict xrow = x + size_t(base + t) * size_t(ci_n);
      const S* __restrict wtap = w + size_t(t) * size_t(ci_n) * size_t(co_n);
      for (int ci = 0; ci < ci_n; ++ci) {
        const S a = xrow[ci];
        const S* __restrict wrow = wtap + size_t(ci) * size_t(co_n);
        for (int co = 0; co < co_n; ++co) acc[co] += a * wrow[co];
      }
    }
    for (int co = 0; co < co_n; ++co) yrow[co] = acc[co];
  }
}

// Valid output positions p for tap t: 0 <= p*s + t - pl < limit.
inline std::pair<int, int> tap_bounds(int t, int pad_left, int stride, int limit, int count) {
  const int off = t - pad_left;
  int p0 = off < 0 ? (-off + stride - 1) / stride : 0;
  int p1 = (limit - 1 - off) / stride + 1;
  return {std::max(p0, 0), std::min(p1, count)};
}

// dx[p*s + t - pl, ci] += sum_co dy[p, co] * w[t, ci, co]
template <typename S>
void conv_scatter_dx(S* __restrict dx, const S* __restrict dy, int lx, int ci_n,
                     const S* __restrict w, int n, int co_n, int stride, int pad_left, int lo) {
  for (int p = 0; p < lo; ++p) {
    const int base = p * stride - pad_left;
    const int t0 = std::max(0, -base);
    const int t1 = std::min(n, lx - base);
    const S* __restrict dyrow = dy + size_t(p) * size_t(co_n);
    for (int t = t0; t < t1; ++t) {
      S* __restrict dxrow = dx + size_t(base + t) * size_t(ci_n);
      const S* __restrict wtap = w + size_t(t) * size_t(ci_n) * size_t(co_n);
      for (int ci = 0; ci < ci_n; ++ci) {
        const S* __restrict wrow = wtap + size_t(ci) * size_t(co_n);
        S acc = S(0);
        for (int co = 0; co < co_n; ++co) acc += dyrow[co] * wrow[co];
        dxrow[ci] += acc;
      }
    }
  }
}

// dw[t, ci, co] += sum_p x[p*s + t - pl, ci] * dy[p, co]
// Loops are ordered (t, ci, p) so each weight row accumulates in registers.
template <typename S>
void conv_dweights(S* __restrict dw, const S* __restrict x, const S* __restrict dy, int lx,
                   int ci_n, int n, int co_n, int stride, int pad_left, int lo) {
  AccRow<S> scratch;
  S* acc = scratch.get(co_n);
  for (int t = 0; t < n; ++t) {
    const auto [p0, p1] = tap_bounds(t, pad_left, stride, lx, lo);
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int co = 0; co < co_n; ++co) acc[co] = S(0);
      for (int p = p0; p < p1; ++p) {
        const S a = x[size_t(p * stride + t - pad_left) * size_t(ci_n) + size_t(ci)];
        const S* __restrict dyrow = dy + size_t(p) * size_t(co_n);
        for (int co = 0; co < co_n; ++co) acc[co] += a * dyrow[co];
      }
      S* __restrict dwrow = dw + (size_t(t) * size_t(ci_n) + size_t(ci)) * size_t(co_n);
      for (int co = 0; co < co_n; ++co) dwrow[co] += acc[co];
    }
  }
}

// y[p*s + t - pl, co] += sum_ci x[p, ci] * w[t, ci, co]   (transposed conv)
template <typename S>
void deconv_scatter(S* __restrict y, const S* __restrict x, int li, int ci_n,
                    const S* __restrict w, int n, int co_n, int stride, int pad_left, int lo) {
  AccRow<S> scratch;
  S* acc = scratch.get(co_n);
  for (int p = 0; p < li; ++p) {
    const int base = p * stride - pad_left;
    const int t0 = std::max(0, -base);
    const int t1 = std::min(n, lo - base);
    const S* __restrict xrow = x + size_t(p) * size_t(ci_n);
    for (int t = t0; t < t1; ++t) {
      S* __restrict yrow = y + size_t(base + t) * size_t(co_n);
      const S* __restrict wtap = w + size_t(t) * size_t(ci_n) * size_t(co_n);
      for (int co = 0; co < co_n; ++co) acc[co] = yrow[co];
      for (int ci = 0; ci < ci_n; ++ci) {
        const S a = xrow[ci];
        const S* __restrict wrow = wtap + size_t(ci) * size_t(co_n);
        for (int co = 0; co < co_n; ++co) acc[co] += a * wrow[co];
      }
      for (int co = 0; co < co_n; ++co) yrow[co] = acc[co];
    }
  }
}

// dx[p, ci] += sum_{t, co} dy[p*s + t - pl, co] * w[t, ci, co]
template <typename S>
void deconv_dx(S* __restrict dx, const S* __restrict dy, int li, int ci_n, const S* __restrict w,
               int n, int co_n, int stride, int pad_left, int lo) {
  for (int p = 0; p < li; ++p) {
    const int base = p * stride - pad_left;
    const int t0 = std::max(0, -base);
    const int t1 = std::min(n, lo - base);
    S* __restrict dxrow = dx + size_t(p) * size_t(ci_n);
    for (int t = t0; t < t1; ++t) {
      const S* __restrict dyrow = dy + size_t(base + t) * size_t(co_n);
      const S* __restrict wtap = w + size_t(t) * size_t(ci_n) * size_t(co_n);
      for (int ci = 0; ci < ci_n; ++ci) {
        const S* __restrict wrow = wtap + size_t(ci) * size_t(co_n);
        S acc = S(0);
        for (int co = 0; co < co_n; ++co) acc += dyrow[co] * wrow[co];
        dxrow[ci] += acc;
      }
    }
  }
}

// dw[t, ci, co] += sum_p x[p, ci] * dy[p*s + t - pl, co]
template <typename S>
void deconv_dweights(S* __restrict dw, const S* __restrict x, const S* __restrict dy, int li,
                     int ci_n, int n, int co_n, int stride, int pad_left, int lo) {
  AccRow<S> scratch;
  S* acc = scratch.get(co_n);
  for (int t = 0; t < n; ++t) {
    const auto [p0, p1] = tap_bounds(t, pad_left, stride, lo, li);
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int co = 0; co < co_n; ++co) acc[co] = S(0);
      for (int p = p0; p < p1; ++p) {
        const S a = x[size_t(p) * size_t(ci_n) + size_t(ci)];
        const S* __restrict dyrow = dy + size_t(p * stride + t - pad_left) * size_t(co_n);
        for (int co = 0; co < co_n; ++co) acc[co] += a * dyrow[co];
      }
      S* __restrict dwrow = dw + (size_t(t) * size_t(ci_n) + size_t(ci)) * size_t(co_n);
      for (int co = 0; co < co_n; ++co) dwrow[co] += acc[co];
    }
  }
}

template <typename S>
void require_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
  if (!same_shape(a.shape(), b.shape()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<S> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  check_finite(out, "add");
  auto node = detail::make_node<S>({&a, &b}, out.size());
  if (node) {
    auto pa = a.node();
    auto pb = b.node();
    node->backprop = [pa, pb](const std::vector<S>& g) {
      if (pa) detail::axpy(pa->grad, g);
      if (pb) detail::axpy(pb->grad, g);
    };
  }
  return TensorT<S>::with_node(a.shape(), std::move(out), std::move(node));
}

template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<S> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  check_finite(out, "sub");
  auto node = detail::make_node<S>({&a, &b}, out.size());
  if (node) {
    auto pa = a.node();
    auto pb = b.node();
    node->backprop = [pa, pb](const std::vector<S>& g) {
      if (pa) detail::axpy(pa->grad, g);
      if (pb)
        for (size_t i = 0; i < g.size(); ++i) pb->grad[i] -= g[i];
    };
  }
  return TensorT<S>::with_node(a.shape(), std::move(out), std::move(node));
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<S> out(a.numel());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  check_finite(out, "mul");
  auto node = detail::make_node<S>({&a, &b}, out.size());
  if (node) {
    auto pa = a.node();
    auto pb = b.node();
    auto ad = a.data_ptr();
    auto bd = b.data_ptr();
    node->backprop = [pa, pb, ad, bd](const std::vector<S>& g) {
      if (pa)
        for (size_t i = 0; i < g.size(); ++i) pa->grad[i] += g[i] * (*bd)[i];
      if (pb)
        for (size_t i = 0; i < g.size(); ++i) pb->grad[i] += g[i] * (*ad)[i];
    };
  }
  return TensorT<S>::with_node(a.shape(), std::move(out), std::move(node));
}

template <typename S>
TensorT<S> scale(const TensorT<S>& a, S c) {
  std::vector<S> out(a.numel());
  const auto& av = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  check_finite(out, "scale");
  auto node = detail::make_node<S>({&a}, out.size());
  if (node) {
    auto pa = a.node();
    node->backprop = [pa, c](const std::vector<S>& g) {
      for (size_t i = 0; i < g.size(); ++i) pa->grad[i] += g[i] * c;
    };
  }
  return TensorT<S>::with_node(a.shape(), std::move(out), std::move(node));
}

/// Elementwise product with a constant vector (padding masks and the like).
template <typename S>
TensorT<S> mul_const(const TensorT<S>& a, std::shared_ptr<const std::vector<S>> weights) {
  if (!weights || weights->size() != a.numel()) throw std::invalid_argument("mul_const: size mismatch");
  std::vector<S> out(a.numel());
  const auto& av = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * (*weights)[i];
  check_finite(out, "mul_const");
  auto node = detail::make_node<S>({&a}, out.size());
  if (node) {
    auto pa = a.node();
    node->backprop = [pa, weights](const std::vector<S>& g) {
      for (size_t i = 0; i < g.size(); ++i) pa->grad[i] += g[i] * (*weights)[i];
    };
  }
  return TensorT<S>::with_node(a.shape(), std::move(out), std::move(node));
}

/// Weighted sum reduction to a scalar: sum_i a_i * w_i.
template <typename S>
TensorT<S> dot_const(const TensorT<S>& a, std::shared_ptr<const std::vector<S>> weights) {
  if (!weights || weights->size() != a.numel()) throw std::invalid_argument("dot_const: size mismatch");
  const auto& av = a.data();
  S acc = S(0);
  for (size_t i = 0; i < av.size(); ++i) acc += av[i] * (*weights)[i];
  std::vector<S> out{acc};
  check_finite(out, "dot_const");
  auto node = detail::make_node<S>({&a}, 1);
  if (node) {
    auto pa = a.node();
    node->backprop = [pa, weights](const std::vector<S>& g) {
      const S g0 = g[0];
      for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g0 * (*weights)[i];
    };
  }
  return TensorT<S>::with_node({1}, std::move(out), std::move(node));
}

/// Channel-axis concatenation of rank-3 tensors (M,1,Ca)+(M,1,Cb).
template <typename S>
TensorT<S> concat_channels(const TensorT<S>& a, const TensorT<S>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0] || sa[1] != sb[1])
    throw std::invalid_argument("concat_channels: incompatible shapes");
  const int rows = sa[0] * sa[1];
  const int ca = sa[2], cb = sb[2];
  std::vector<S> out(size_t(rows) * size_t(ca + cb));
  const auto& av = a.data();
  const auto& bv = b.data();
  for (int r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + size_t(r) * ca, ca, out.begin() + size_t(r) * (ca + cb));
    std::copy_n(bv.begin() + size_t(r) * cb, cb, out.begin() + size_t(r) * (ca + cb) + ca);
  }
  auto node = detail::make_node<S>({&a, &b}, out.size());
  if (node) {
    auto pa = a.node();
    auto pb = b.node();
    node->backprop = [pa, pb, rows, ca, cb](const std::vector<S>& g) {
      for (int r = 0; r < rows; ++r) {
        const S* grow = g.data() + size_t(r) * (ca + cb);
        if (pa)
          for (int c = 0; c < ca; ++c) pa->grad[size_t(r) * ca + c] += grow[c];
        if (pb)
          for (int c = 0; c < cb; ++c) pb->grad[size_t(r) * cb + c] += grow[ca + c];
      }
    };
  }
  return TensorT<S>::with_node({sa[0], sa[1], ca + cb}, std::move(out), std::move(node));
}

// ---------------------------------------------------------------------------
// activations

template <typename S>
TensorT<S> leaky_relu(const TensorT<S>& x, S slope) {
  if (!(slope > S(0) && slope < S(1))) throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
  std::vector<S> out(x.numel());
  const auto& xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] >= S(0) ? xv[i] : slope * xv[i];
  check_finite(out, "leaky_relu");
  auto node = detail::make_node<S>({&x}, out.size());
  if (node) {
    auto px = x.node();
    auto xd = x.data_ptr();
    node->backprop = [px, xd, slope](const std::vector<S>& g) {
      for (size_t i = 0; i < g.size(); ++i)
        px->grad[i] += g[i] * ((*xd)[i] >= S(0) ? S(1) : slope);
    };
  }
  return TensorT<S>::with_node(x.shape(), std::move(out), std::move(node));
}

/// clamp(0.2*x + 0.5, 0, 1)
template <typename S>
TensorT<S> hard_sigmoid(const TensorT<S>& x) {
  std::vector<S> out(x.numel());
  const auto& xv = x.data();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(S(0.2) * xv[i] + S(0.5), S(0), S(1));
  check_finite(out, "hard_sigmoid");
  auto node = detail::make_node<S>({&x}, out.size());
  if (node) {
    auto px = x.node();
    auto xd = x.data_ptr();
    node->backprop = [px, xd](const std::vector<S>& g) {
      for (size_t i = 0; i < g.size(); ++i) {
        const S v = (*xd)[i];
        if (v > S(-2.5) && v < S(2.5)) px->grad[i] += g[i] * S(0.2);
      }
    };
  }
  return TensorT<S>::with_node(x.shape(), std::move(out), std::move(node));
}

template <typename S>
TensorT<S> tanh_op(const TensorT<S>& x) {
  std::vector<S> out(x.numel());
  const auto& xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  check_finite(out, "tanh");
  auto node = detail::make_node<S>({&x}, out.size());
  if (node) {
    auto px = x.node();
    auto yd = std::make_shared<std::vector<S>>(out);
    node->backprop = [px, yd](const std::vector<S>& g) {
      for (size_t i = 0; i < g.size(); ++i) {
        const S y = (*yd)[i];
        px->grad[i] += g[i] * (S(1) - y * y);
      }
    };
  }
  return TensorT<S>::with_node(x.shape(), std::move(out), std::move(node));
}

// ---------------------------------------------------------------------------
// feature-axis convolutions

/// Cross-correlation along the feature axis of an (M,1,C) tensor. Weights
/// are (N, C_in, C_out); bias is (C_out) or an undefined tensor for none.
template <typename S>
TensorT<S> conv1d_feature(const TensorT<S>& x, const ConvSpec& spec, const TensorT<S>& w,
                          const TensorT<S>& b) {
  spec.validate();
  if (spec.transposed) throw std::invalid_argument("conv1d_feature: spec marked transposed");
  const auto& xs = x.shape();
  if (xs.size() != 3 || xs[1] != 1) throw std::invalid_argument("conv1d_feature: input must be (M,1,C)");
  if (xs[2] != spec.in_channels) throw std::invalid_argument("conv1d_feature: input channel mismatch");
  const Shape want_w{spec.kernel_len, spec.in_channels, spec.out_channels};
  if (w.shape() != want_w) throw std::invalid_argument("conv1d_feature: weight shape mismatch");
  const bool has_bias = b.defined();
  if (has_bias && b.shape() != Shape{spec.out_channels})
    throw std::invalid_argument("conv1d_feature: bias shape mismatch");

  const int lx = xs[0], ci_n = spec.in_channels, co_n = spec.out_channels;
  const int n = spec.kernel_len, stride = spec.stride;
  const int lo = (lx + stride - 1) / stride;
  const int pl = detail::same_pad_left(lx, n, stride);

  std::vector<S> out(size_t(lo) * size_t(co_n), S(0));
  if (has_bias) {
    const auto& bv = b.data();
    for (int p = 0; p < lo; ++p)
      std::copy(bv.begin(), bv.end(), out.begin() + size_t(p) * size_t(co_n));
  }
  detail::conv_gather(out.data(), x.data().data(), lx, ci_n, w.data().data(), n, co_n, stride, pl, lo);
  check_finite(out, "conv1d_feature");

  auto node = has_bias ? detail::make_node<S>({&x, &w, &b}, out.size())
                       : detail::make_node<S>({&x, &w}, out.size());
  if (node) {
    auto px = x.node();
    auto pw = w.node();
    auto pb = has_bias ? b.node() : nullptr;
    auto xd = x.data_ptr();
    auto wd = w.data_ptr();
    node->backprop = [=](const std::vector<S>& g) {
      if (px)
        detail::conv_scatter_dx(px->grad.data(), g.data(), lx, ci_n, wd->data(), n, co_n, stride, pl, lo);
      if (pw)
        detail::conv_dweights(pw->grad.data(), xd->data(), g.data(), lx, ci_n, n, co_n, stride, pl, lo);
      if (pb)
        for (int p = 0; p < lo; ++p)
          for (int co = 0; co < co_n; ++co) pb->grad[size_t(co)] += g[size_t(p) * co_n + co];
    };
  }
  return TensorT<S>::with_node({lo, 1, co_n}, std::move(out), std::move(node));
}

/// Transposed counterpart of conv1d_feature: the exact adjoint of the
/// forward convolution (plus bias), restoring the feature-axis length.
template <typename S>
TensorT<S> deconv1d_feature(const TensorT<S>& x, const ConvSpec& spec, const TensorT<S>& w,
                            const TensorT<S>& b) {
  spec.validate();
  if (!spec.transposed) throw std::invalid_argument("deconv1d_feature: spec not marked transposed");
  const auto& xs = x.shape();
  if (xs.size() != 3 || xs[1] != 1) throw std::invalid_argument("deconv1d_feature: input must be (M,1,C)");
  if (xs[2] != spec.in_channels) throw std::invalid_argument("deconv1d_feature: input channel mismatch");
  const Shape want_w{spec.kernel_len, spec.in_channels, spec.out_channels};
  if (w.shape() != want_w) throw std::invalid_argument("deconv1d_feature: weight shape mismatch");
  const bool has_bias = b.defined();
  if (has_bias && b.shape() != Shape{spec.out_channels})
    throw std::invalid_argument("deconv1d_feature: bias shape mismatch");

  const int li = xs[0], ci_n = spec.in_channels, co_n = spec.out_channels;
  const int n = spec.kernel_len, stride = spec.stride;
  const int lo = li * stride;
  const int pl = detail::same_pad_left(lo, n, stride);

  std::vector<S> out(size_t(lo) * size_t(co_n), S(0));
  if (has_bias) {
    const auto& bv = b.data();
    for (int p = 0; p < lo; ++p)
      std::copy(bv.begin(), bv.end(), out.begin() + size_t(p) * size_t(co_n));
  }
  detail::deconv_scatter(out.data(), x.data().data(), li, ci_n, w.data().data(), n, co_n, stride, pl, lo);
  check_finite(out, "deconv1d_feature");

  auto node = has_bias ? detail::make_node<S>({&x, &w, &b}, out.size())
                       : detail::make_node<S>({&x, &w}, out.size());
  if (node) {
    auto px = x.node();
    auto pw = w.node();
    auto pb = has_bias ? b.node() : nullptr;
    auto xd = x.data_ptr();
    auto wd = w.data_ptr();
    node->backprop = [=](const std::vector<S>& g) {
      if (px)
        detail::deconv_dx(px->grad.data(), g.data(), li, ci_n, wd->data(), n, co_n, stride, pl, lo);
      if (pw)
        detail::deconv_dweights(pw->grad.data(), xd->data(), g.data(), li, ci_n, n, co_n, stride, pl, lo);
      if (pb)
        for (int p = 0; p < lo; ++p)
          for (int co = 0; co < co_n; ++co) pb->grad[size_t(co)] += g[size_t(p) * co_n + co];
    };
  }
  return TensorT<S>::with_node({lo, 1, co_n}, std::move(out), std::move(node));
}

// ---------------------------------------------------------------------------
// convolutional LSTM

/// Gate order: input, forget, output, candidate. One bias per gate, on the
/// input-side convolution; no peephole terms.
template <typename S>
struct ConvLstmWeightsT {
  TensorT<S> wx[4];
  TensorT<S> wh[4];
  TensorT<S> b[4];
  int kernel_len = 24;
  int in_channels = 0;
  int hidden_channels = 0;
};

template <typename S>
struct LstmOut {
  TensorT<S> h;
  TensorT<S> c;
};

/// One recurrent step. All gate convolutions are stride-1 same-padding
/// along the feature axis; i, f, o use the hard sigmoid, the candidate and
/// the cell output use tanh.
template <typename S>
LstmOut<S> convlstm_step(const TensorT<S>& x, const TensorT<S>& h, const TensorT<S>& c,
                         const ConvLstmWeightsT<S>& w) {
  const auto& xs = x.shape();
  const auto& hs = h.shape();
  if (xs.size() != 3 || hs.size() != 3 || xs[0] != hs[0])
    throw std::invalid_argument("convlstm_step: feature length mismatch");
  if (xs[2] != w.in_channels || hs[2] != w.hidden_channels)
    throw std::invalid_argument("convlstm_step: channel mismatch");
  detail::require_same_shape(h, c, "convlstm_step");

  const ConvSpec sx{w.kernel_len, w.in_channels, w.hidden_channels, 1, false};
  const ConvSpec sh{w.kernel_len, w.hidden_channels, w.hidden_channels, 1, false};
  const TensorT<S> none;

  auto pre = [&](int gate) {
    return add(conv1d_feature(x, sx, w.wx[gate], w.b[gate]), conv1d_feature(h, sh, w.wh[gate], none));
  };
  const auto gate_i = hard_sigmoid(pre(0));
  const auto gate_f = hard_sigmoid(pre(1));
  const auto gate_o = hard_sigmoid(pre(2));
  const auto cand = tanh_op(pre(3));

  const auto c_new = add(mul(gate_f, c), mul(gate_i, cand));
  const auto h_new = mul(gate_o, tanh_op(c_new));
  return {h_new, c_new};
}

}  // namespace y2aec::tc

#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "y2aec/tc/tensor.hpp"

namespace y2aec::tc {

/// Named trainable array with its Adam accumulators.
template <typename S>
struct ParameterT {
  std::string name;
  Shape shape;
  std::vector<S> value;
  std::vector<S> adam_m;
  std::vector<S> adam_v;
  long step_count = 0;
};

/// Ordered collection of parameters with unique names.
template <typename S>
class ParamSetT {
 public:
  ParameterT<S>& add(std::string name, Shape shape, std::vector<S> values) {
    if (index_.count(name)) throw std::invalid_argument("param set: duplicate name " + name);
    const size_t n = shape_numel(shape);
    if (values.empty()) values.assign(n, S(0));
    if (values.size() != n) throw std::invalid_argument("param set: bad value count for " + name);
    index_[name] = items_.size();
    items_.push_back({std::move(name), std::move(shape), std::move(values),
                      std::vector<S>(n, S(0)), std::vector<S>(n, S(0)), 0});
    return items_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  ParameterT<S>& at(const std::string& name) { return items_[index_.at(name)]; }
  const ParameterT<S>& at(const std::string& name) const { return items_[index_.at(name)]; }

  std::vector<ParameterT<S>>& items() { return items_; }
  const std::vector<ParameterT<S>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  size_t total_values() const {
    size_t n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
  }

 private:
  std::vector<ParameterT<S>> items_;
  std::unordered_map<std::string, size_t> index_;
};

/// Per-tape leaf tensors for one forward/backward pass. Each binding owns
/// a private gradient buffer, so concurrent tapes over shared parameter
/// values never contend.
template <typename S>
class BoundParams {
 public:
  BoundParams() = default;

  static BoundParams bind(const ParamSetT<S>& params, bool track) {
    BoundParams b;
    b.order_.reserve(params.size());
    for (const auto& p : params.items()) {
      b.order_.push_back(p.name);
      b.leaves_.emplace(p.name, TensorT<S>::leaf(p.shape, p.value, track));
    }
    return b;
  }

  const TensorT<S>& operator[](const std::string& name) const {
    auto it = leaves_.find(name);
    if (it == leaves_.end()) throw std::invalid_argument("bound params: unknown name " + name);
    return it->second;
  }

  /// Gradients in parameter-set order, read after backward().
  std::vector<std::vector<S>> grads() const {
    std::vector<std::vector<S>> out;
    out.reserve(order_.size());
    for (const auto& name : order_) out.push_back(leaves_.at(name).grad());
    return out;
  }

  const std::vector<std::string>& order() const { return order_; }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, TensorT<S>> leaves_;
};

/// Glorot-uniform initialization over fan-in/fan-out of the kernel.
template <typename S>
std::vector<S> glorot_uniform(const Shape& shape, int fan_in, int fan_out, std::mt19937& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<S> out(shape_numel(shape));
  for (auto& v : out) v = S(dist(rng));
  return out;
}

/// Standard Adam with bias correction. Gradients arrive in parameter-set
/// order; non-finite gradients are rejected.
template <typename S>
void adam_update(ParamSetT<S>& params, const std::vector<std::vector<S>>& grads, S lr,
                 S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8)) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_update: gradient count mismatch");
  auto& items = params.items();
  for (size_t pi = 0; pi < items.size(); ++pi) {
    auto& p = items[pi];
    const auto& g = grads[pi];
    if (g.size() != p.value.size())
      throw std::invalid_argument("adam_update: gradient shape mismatch for " + p.name);
    for (S gv : g)
      if (!std::isfinite(gv)) throw std::runtime_error("adam_update: non-finite gradient for " + p.name);

    p.step_count += 1;
    const S bc1 = S(1) - S(std::pow(double(beta1), double(p.step_count)));
    const S bc2 = S(1) - S(std::pow(double(beta2), double(p.step_count)));
    for (size_t i = 0; i < p.value.size(); ++i) {
      p.adam_m[i] = beta1 * p.adam_m[i] + (S(1) - beta1) * g[i];
      p.adam_v[i] = beta2 * p.adam_v[i] + (S(1) - beta2) * g[i] * g[i];
      const S mhat = p.adam_m[i] / bc1;
      const S vhat = p.adam_v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

using Parameter = ParameterT<float>;
using ParamSet = ParamSetT<float>;

}  // namespace y2aec::tc

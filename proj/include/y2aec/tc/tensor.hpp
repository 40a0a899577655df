#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace y2aec::tc {

using Shape = std::vector<int>;

inline size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument("shape: non-positive dimension");
    n *= size_t(d);
  }
  return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + ")";
}

/// When enabled, every op validates that its output is finite and throws
/// otherwise. Off by default; tests switch it on.
inline std::atomic<bool>& finite_check_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}
inline void set_finite_check(bool on) { finite_check_flag().store(on); }

template <typename S>
inline void check_finite(const std::vector<S>& v, const char* op) {
  if (!finite_check_flag().load(std::memory_order_relaxed)) return;
  for (S x : v)
    if (!std::isfinite(x)) throw std::runtime_error(std::string(op) + ": non-finite value produced");
}

/// One node of the reverse-mode tape. `grad` holds dLoss/d(output of this
/// node) while backward() runs; for leaves it persists so parameter
/// gradients can be read afterwards.
template <typename S>
struct Node {
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::vector<S> grad;
  size_t numel = 0;
  std::function<void(const std::vector<S>&)> backprop;  // pushes into parents' grad
  bool leaf = false;
  bool consumed = false;
};

/// Immutable shaped array in row-major order. Copies share the underlying
/// buffer; an attached Node makes the tensor part of a differentiation tape.
template <typename S>
class TensorT {
 public:
  TensorT() = default;

  static TensorT zeros(Shape shape) {
    return from_vector(std::move(shape), {});
  }

  static TensorT from_vector(Shape shape, std::vector<S> values) {
    const size_t n = shape_numel(shape);
    if (values.empty()) values.assign(n, S(0));
    if (values.size() != n) throw std::invalid_argument("tensor: data length != shape product");
    TensorT t;
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<const std::vector<S>>(std::move(values));
    return t;
  }

  /// Leaf of the tape. With requires_grad the gradient buffer exists up
  /// front (zeros), so parameters off the loss path read zero gradients.
  static TensorT leaf(Shape shape, std::vector<S> values, bool requires_grad) {
    TensorT t = from_vector(std::move(shape), std::move(values));
    if (requires_grad) {
      t.node_ = std::make_shared<Node<S>>();
      t.node_->leaf = true;
      t.node_->numel = t.numel();
      t.node_->grad.assign(t.numel(), S(0));
    }
    return t;
  }

  static TensorT with_node(Shape shape, std::vector<S> values, std::shared_ptr<Node<S>> node) {
    TensorT t = from_vector(std::move(shape), std::move(values));
    t.node_ = std::move(node);
    return t;
  }

  const Shape& shape() const { return shape_; }
  size_t numel() const { return data_ ? data_->size() : 0; }
  bool defined() const { return data_ != nullptr; }
  bool tracked() const { return node_ != nullptr; }

  const std::vector<S>& data() const {
    if (!data_) throw std::logic_error("tensor: undefined");
    return *data_;
  }
  std::shared_ptr<const std::vector<S>> data_ptr() const { return data_; }
  const std::shared_ptr<Node<S>>& node() const { return node_; }

  S at(size_t i) const { return data().at(i); }
  /// Element of a rank-3 tensor (feature, time, channel).
  S at3(int m, int t, int c) const {
    const auto& sh = shape_;
    if (sh.size() != 3) throw std::logic_error("at3: rank != 3");
    return data()[(size_t(m) * size_t(sh[1]) + size_t(t)) * size_t(sh[2]) + size_t(c)];
  }

  /// Leaf gradient accumulated by backward(); zeros if the leaf was never
  /// reached.
  const std::vector<S>& grad() const {
    if (!node_ || !node_->leaf) throw std::logic_error("grad: not a grad-tracking leaf");
    return node_->grad;
  }
  void zero_grad() {
    if (node_ && node_->leaf) std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<S>> data_;
  std::shared_ptr<Node<S>> node_;
};

using Tensor = TensorT<float>;

namespace detail {

/// Collects the parent nodes of an op's inputs; returns nullptr when no
/// input is tracked (pure value computation, no tape growth).
template <typename S>
std::shared_ptr<Node<S>> make_node(std::initializer_list<const TensorT<S>*> inputs, size_t numel) {
  bool any = false;
  for (const auto* t : inputs)
    if (t->tracked()) any = true;
  if (!any) return nullptr;
  auto node = std::make_shared<Node<S>>();
  node->numel = numel;
  for (const auto* t : inputs)
    if (t->tracked()) node->parents.push_back(t->node());
  return node;
}

template <typename S>
inline void axpy(std::vector<S>& dst, const std::vector<S>& src) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace detail

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into leaf
/// nodes; calling it twice on the same tape is an error.
template <typename S>
void backward(const TensorT<S>& loss) {
  if (!loss.tracked()) throw std::invalid_argument("backward: loss is not tracked");
  if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
  auto root = loss.node();
  if (root->consumed) throw std::logic_error("backward: tape already consumed");

  // Iterative DFS, post-order: every node appears after all of its parents.
  std::vector<Node<S>*> order;
  std::vector<std::pair<Node<S>*, size_t>> stack;
  std::unordered_set<Node<S>*> visited;
  visited.insert(root.get());
  stack.push_back({root.get(), 0});
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<S>* p = node->parents[idx].get();
      ++idx;
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* n : order) {
    if (!n->leaf) n->grad.assign(n->numel, S(0));
  }
  root->grad.assign(1, S(1));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->backprop) n->backprop(n->grad);
    if (!n->leaf) {
      n->consumed = true;
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

}  // namespace y2aec::tc

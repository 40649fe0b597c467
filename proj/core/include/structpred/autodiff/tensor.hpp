#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace structpred::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
concept Real = std::floating_point<T>;

// One vertex of the computation graph. Interior nodes own a backward closure
// that reads `grad` and accumulates into the grads of `inputs`.
template <Real T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

// Handle to a graph node with value semantics for the handle itself; copies
// share the underlying storage the way framework tensors do.
template <Real T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  // Empty span when no gradient has been allocated.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  T item() const;
  T at(std::size_t i) const { return node_->value.at(i); }
  T at(std::size_t i, std::size_t j) const;
  T at(std::size_t i, std::size_t j, std::size_t k) const;

  // Reverse sweep from a scalar. Each reachable node is visited exactly once
  // in reverse topological order; leaf gradients accumulate across calls.
  void backward();
  void zero_grad();

  // Fresh leaf holding a copy of the value, cut from the graph.
  Tensor detach() const;

  Node<T>* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

// While alive on a thread, newly built nodes record no graph history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

// Builds an interior node. When no input requires a gradient the closure and
// input links are dropped so inference graphs hold no history.
template <Real T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward_fn);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace structpred::ad

#include "structpred/autodiff/tensor.hpp"

#include <numeric>
#include <sstream>
#include <unordered_set>

#include "structpred/error.hpp"

namespace structpred::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <Real T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (numel(shape) != data.size()) {
    fail(ErrorCode::kDimension, "tensor data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

template <Real T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <Real T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  std::vector<T> data(numel(shape), value);
  return from(std::move(shape), std::move(data), requires_grad);
}

template <Real T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <Real T>
T Tensor<T>::item() const {
  if (size() != 1) {
    fail(ErrorCode::kDimension, "item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

template <Real T>
T Tensor<T>::at(std::size_t i, std::size_t j) const {
  return node_->value.at(i * node_->shape.at(1) + j);
}

template <Real T>
T Tensor<T>::at(std::size_t i, std::size_t j, std::size_t k) const {
  const auto& s = node_->shape;
  return node_->value.at((i * s.at(1) + j) * s.at(2) + k);
}

template <Real T>
void Tensor<T>::backward() {
  if (size() != 1) {
    fail(ErrorCode::kDimension,
         "backward() requires a scalar, got " + shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long recurrent chains.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* node : order) {
    if (node->backward_fn) {
      node->grad.assign(node->value.size(), T(0));
    } else {
      node->ensure_grad();
    }
  }
  node_->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn) {
      for (auto& input : node->inputs) {
        if (input->requires_grad) input->ensure_grad();
      }
      node->backward_fn(*node);
    }
  }
}

template <Real T>
void Tensor<T>::zero_grad() {
  node_->grad.assign(node_->value.size(), T(0));
}

template <Real T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->value, false);
}

namespace {
thread_local bool g_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

template <Real T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  if (!g_no_grad)
    for (const auto& input : inputs) any = any || input.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& input : inputs) node->inputs.push_back(input.node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>,
                                    std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);

}  // namespace structpred::ad

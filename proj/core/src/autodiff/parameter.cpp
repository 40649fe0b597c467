#include "structpred/autodiff/parameter.hpp"

#include <cmath>

#include "structpred/error.hpp"

namespace structpred::ad {

template <Real T>
Tensor<T> ParameterStore<T>::create(const std::string& name, Shape shape, Init init,
                                    Rng& rng) {
  std::vector<T> values(numel(shape), T(0));
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(values.begin(), values.end(), T(1));
      break;
    case Init::kXavierUniform: {
      std::size_t fan_in = 1, fan_out = 1;
      if (shape.size() >= 2) {
        fan_in = shape[shape.size() - 2];
        fan_out = shape.back();
      } else if (shape.size() == 1) {
        fan_in = fan_out = shape[0];
      }
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
      break;
    }
    case Init::kUniformSmall:
      for (auto& v : values) v = static_cast<T>(rng.uniform(-0.1, 0.1));
      break;
  }
  return insert(name, Tensor<T>::from(std::move(shape), std::move(values), true), true);
}

template <Real T>
Tensor<T> ParameterStore<T>::create_from(const std::string& name, Shape shape,
                                         std::vector<T> values) {
  return insert(name, Tensor<T>::from(std::move(shape), std::move(values), true), true);
}

template <Real T>
Tensor<T> ParameterStore<T>::create_frozen(const std::string& name, Shape shape,
                                           std::vector<T> values) {
  return insert(name, Tensor<T>::from(std::move(shape), std::move(values), false), false);
}

template <Real T>
Tensor<T> ParameterStore<T>::insert(const std::string& name, Tensor<T> tensor,
                                    bool trainable) {
  if (find(name) != nullptr) {
    fail(ErrorCode::kValidation, "duplicate parameter name '" + name + "'");
  }
  auto param = std::make_unique<Parameter<T>>();
  param->name = name;
  param->tensor = tensor;
  param->trainable = trainable;
  param->first_moment.assign(tensor.size(), T(0));
  param->second_moment.assign(tensor.size(), T(0));
  params_.push_back(std::move(param));
  return tensor;
}

template <Real T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <Real T>
const Parameter<T>* ParameterStore<T>::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <Real T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_)
    if (p->trainable) p->tensor.zero_grad();
}

template <Real T>
std::vector<std::vector<T>> ParameterStore<T>::snapshot() const {
  std::vector<std::vector<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    auto d = p->tensor.data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

template <Real T>
void ParameterStore<T>::restore(const std::vector<std::vector<T>>& values) {
  if (values.size() != params_.size()) {
    fail(ErrorCode::kValidation, "snapshot holds " + std::to_string(values.size()) +
                                     " parameters, store has " +
                                     std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i]->tensor.mutable_data();
    if (values[i].size() != dst.size()) {
      fail(ErrorCode::kValidation, "snapshot size mismatch for " + params_[i]->name);
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace structpred::ad

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "structpred/autodiff/tensor.hpp"
#include "structpred/rng.hpp"

namespace structpred::testing {

using Fn = std::function<ad::Tensor<double>(const std::vector<ad::Tensor<double>>&)>;

struct GradCheckResult {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero from turning roundoff into large relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences on every entry of every input against one backward
// pass. `fn` must return a scalar and build a fresh graph on each call.
inline GradCheckResult check_gradients(const Fn& fn, std::vector<ad::Tensor<double>> inputs,
                                       double eps = 1e-5) {
  for (auto& x : inputs) x = ad::Tensor<double>::from(x.shape(), {x.data().begin(), x.data().end()}, true);
  auto out = fn(inputs);
  out.backward();
  GradCheckResult result;
  for (auto& x : inputs) {
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double plus = fn(inputs).item();
      data[i] = saved - eps;
      const double minus = fn(inputs).item();
      data[i] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric));
      result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic[i] - numeric));
      ++result.checked;
    }
  }
  return result;
}

inline ad::Tensor<double> random_tensor(ad::Shape shape, Rng& rng, double lo = -2, double hi = 2) {
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return ad::Tensor<double>::from(std::move(shape), std::move(v));
}

}  // namespace structpred::testing

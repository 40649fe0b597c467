#include "structpred/tagger/crf.hpp"

#include <cmath>
#include <limits>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::tagger {

namespace {

template <ad::Real T>
void check_shapes(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions) {
  if (emissions.rank() != 2 || emissions.dim(0) == 0 || emissions.dim(1) == 0) {
    fail(ErrorCode::kDimension, "crf: emissions must be n x t with n, t >= 1, got " +
                                    ad::shape_string(emissions.shape()));
  }
  const std::size_t t = emissions.dim(1);
  if (transitions.rank() != 2 || transitions.dim(0) != t + 2 || transitions.dim(1) != t + 2) {
    fail(ErrorCode::kDimension, "crf: transitions must be " + std::to_string(t + 2) + "x" +
                                    std::to_string(t + 2) + ", got " +
                                    ad::shape_string(transitions.shape()));
  }
}

template <typename T>
T log_sum_exp(const T* values, std::size_t count, std::size_t stride = 1) {
  T best = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < count; ++i) best = std::max(best, values[i * stride]);
  if (!std::isfinite(best)) return best;
  T total = 0;
  for (std::size_t i = 0; i < count; ++i) total += std::exp(values[i * stride] - best);
  return best + std::log(total);
}

}  // namespace

template <ad::Real T>
ad::Tensor<T> crf_log_partition(const ad::Tensor<T>& emissions,
                                const ad::Tensor<T>& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t n = emissions.dim(0);
  const std::size_t t = emissions.dim(1);
  const std::size_t width = t + 2;
  const std::size_t bos = bos_index(t);
  const std::size_t eos = eos_index(t);
  const auto e = emissions.data();
  const auto tr = transitions.data();

  std::vector<T> alpha(n * t);
  std::vector<T> scratch(t);
  for (std::size_t j = 0; j < t; ++j) alpha[j] = tr[bos * width + j] + e[j];
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t i = 0; i < t; ++i) {
        scratch[i] = alpha[(k - 1) * t + i] + tr[i * width + j];
      }
      alpha[k * t + j] = log_sum_exp(scratch.data(), t) + e[k * t + j];
    }
  }
  for (std::size_t j = 0; j < t; ++j) scratch[j] = alpha[(n - 1) * t + j] + tr[j * width + eos];
  const T log_z = log_sum_exp(scratch.data(), t);

  return ad::make_result<T>(
      {}, {log_z}, {emissions, transitions},
      [emissions, transitions, alpha = std::move(alpha), log_z, n, t, width, bos,
       eos](ad::Node<T>& self) {
        const T g = self.grad[0];
        const auto e = emissions.data();
        const auto tr = transitions.data();
        std::vector<T> beta(n * t);
        std::vector<T> scratch(t);
        for (std::size_t i = 0; i < t; ++i) beta[(n - 1) * t + i] = tr[i * width + eos];
        for (std::size_t k = n - 1; k-- > 0;) {
          for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < t; ++j) {
              scratch[j] = tr[i * width + j] + e[(k + 1) * t + j] + beta[(k + 1) * t + j];
            }
            beta[k * t + i] = log_sum_exp(scratch.data(), t);
          }
        }
        const bool emission_grad = emissions.requires_grad();
        const bool transition_grad = transitions.requires_grad();
        auto& de = emissions.node()->grad;
        auto& dt = transitions.node()->grad;
        for (std::size_t k = 0; k < n; ++k) {
          for (std::size_t j = 0; j < t; ++j) {
            const T p = std::exp(alpha[k * t + j] + beta[k * t + j] - log_z);
            if (emission_grad) de[k * t + j] += g * p;
            if (transition_grad) {
              if (k == 0) dt[bos * width + j] += g * p;
              if (k == n - 1) dt[j * width + eos] += g * p;
            }
          }
        }
        if (!transition_grad) return;
        for (std::size_t k = 1; k < n; ++k) {
          for (std::size_t i = 0; i < t; ++i) {
            const T a = alpha[(k - 1) * t + i];
            for (std::size_t j = 0; j < t; ++j) {
              const T p = std::exp(a + tr[i * width + j] + e[k * t + j] + beta[k * t + j] -
                                   log_z);
              dt[i * width + j] += g * p;
            }
          }
        }
      });
}

template <ad::Real T>
ad::Tensor<T> crf_path_score(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions,
                             std::span<const std::size_t> tags) {
  check_shapes(emissions, transitions);
  const std::size_t n = emissions.dim(0);
  const std::size_t t = emissions.dim(1);
  if (tags.size() != n) {
    fail(ErrorCode::kDimension, "crf: " + std::to_string(tags.size()) + " tags for " +
                                    std::to_string(n) + " positions");
  }
  for (std::size_t tag : tags) {
    if (tag >= t) {
      fail(ErrorCode::kInput, "crf: tag id " + std::to_string(tag) + " outside " +
                                  std::to_string(t) + " tags");
    }
  }
  const std::size_t width = t + 2;
  const std::size_t bos = bos_index(t);
  const std::size_t eos = eos_index(t);
  std::vector<std::size_t> path(tags.begin(), tags.end());
  const auto e = emissions.data();
  const auto tr = transitions.data();
  T score = tr[bos * width + path[0]] + tr[path[n - 1] * width + eos];
  for (std::size_t k = 0; k < n; ++k) {
    score += e[k * t + path[k]];
    if (k > 0) score += tr[path[k - 1] * width + path[k]];
  }
  return ad::make_result<T>(
      {}, {score}, {emissions, transitions},
      [emissions, transitions, path = std::move(path), n, t, width, bos, eos](ad::Node<T>& self) {
        const T g = self.grad[0];
        if (emissions.requires_grad()) {
          auto& de = emissions.node()->grad;
          for (std::size_t k = 0; k < n; ++k) de[k * t + path[k]] += g;
        }
        if (transitions.requires_grad()) {
          auto& dt = transitions.node()->grad;
          dt[bos * width + path[0]] += g;
          dt[path[n - 1] * width + eos] += g;
          for (std::size_t k = 1; k < n; ++k) dt[path[k - 1] * width + path[k]] += g;
        }
      });
}

template <ad::Real T>
ad::Tensor<T> crf_nll(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions,
                      std::span<const std::size_t> tags) {
  auto gold = crf_path_score(emissions, transitions, tags);
  return ad::sub(crf_log_partition(emissions, transitions), gold);
}

template <ad::Real T>
ViterbiResult<T> viterbi(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t n = emissions.dim(0);
  const std::size_t t = emissions.dim(1);
  const std::size_t width = t + 2;
  const std::size_t bos = bos_index(t);
  const std::size_t eos = eos_index(t);
  const auto e = emissions.data();
  const auto tr = transitions.data();

  std::vector<T> delta(n * t);
  std::vector<std::size_t> back(n * t, 0);
  for (std::size_t j = 0; j < t; ++j) delta[j] = tr[bos * width + j] + e[j];
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < t; ++j) {
      std::size_t best_i = 0;
      T best = delta[(k - 1) * t] + tr[j];
      for (std::size_t i = 1; i < t; ++i) {
        const T candidate = delta[(k - 1) * t + i] + tr[i * width + j];
        if (candidate > best) {
          best = candidate;
          best_i = i;
        }
      }
      delta[k * t + j] = best + e[k * t + j];
      back[k * t + j] = best_i;
    }
  }
  std::size_t last = 0;
  T best = delta[(n - 1) * t] + tr[eos];
  for (std::size_t j = 1; j < t; ++j) {
    const T candidate = delta[(n - 1) * t + j] + tr[j * width + eos];
    if (candidate > best) {
      best = candidate;
      last = j;
    }
  }
  ViterbiResult<T> result;
  result.score = best;
  result.tags.assign(n, 0);
  result.tags[n - 1] = last;
  for (std::size_t k = n - 1; k > 0; --k) result.tags[k - 1] = back[k * t + result.tags[k]];
  return result;
}

#define STRUCTPRED_INSTANTIATE_CRF(T)                                                      \
  template ad::Tensor<T> crf_log_partition(const ad::Tensor<T>&, const ad::Tensor<T>&);    \
  template ad::Tensor<T> crf_path_score(const ad::Tensor<T>&, const ad::Tensor<T>&,        \
                                        std::span<const std::size_t>);                     \
  template ad::Tensor<T> crf_nll(const ad::Tensor<T>&, const ad::Tensor<T>&,               \
                                 std::span<const std::size_t>);                            \
  template ViterbiResult<T> viterbi(const ad::Tensor<T>&, const ad::Tensor<T>&);

STRUCTPRED_INSTANTIATE_CRF(float)
STRUCTPRED_INSTANTIATE_CRF(double)

}  // namespace structpred::tagger

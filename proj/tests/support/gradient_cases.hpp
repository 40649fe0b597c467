#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "structpred/autodiff/parameter.hpp"

namespace structpred::testing {

struct GradCase {
  std::string name;
  std::function<GradCheckResult(Rng&)> run;
};

// One entry per differentiable op, each drawing random inputs in [-2, 2].
std::vector<GradCase> op_gradient_cases();

// crf_nll, tree_loss and graph_loss against their score inputs, plus the
// tagger and biaffine models against every parameter.
std::vector<GradCase> model_gradient_cases();

// Central differences over every trainable parameter of `store`.
GradCheckResult check_store_gradients(ad::ParameterStore<double>& store,
                                      const std::function<ad::Tensor<double>()>& loss,
                                      double eps = 1e-5);

}  // namespace structpred::testing

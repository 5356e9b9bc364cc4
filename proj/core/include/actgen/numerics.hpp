#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "actgen/tensor.hpp"

namespace actgen {

/// Shift-invariant softmax: subtracts the max before exponentiation so large
/// logits do not overflow. Throws on an empty input.
std::vector<double> softmax(const std::vector<double>& logits);

/// H(target, predicted) = -sum_i target_i * log(predicted_i), with predicted
/// entries clamped to [1e-12, 1] before the log. Both arguments must be
/// probability vectors of equal length (sums within 1e-6 of 1).
double cross_entropy(const std::vector<double>& predicted, const std::vector<double>& target);

/// Central finite differences: (f(x + h e_i) - f(x - h e_i)) / 2h.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, double step);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates and the shared step counter for one
/// parameter collection. Slots are keyed by parameter name and allocated
/// lazily to match the parameter shapes.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;

  bool operator==(const AdamState& other) const;
};

inline bool operator==(const AdamConfig& a, const AdamConfig& b) {
  return a.lr == b.lr && a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.eps == b.eps;
}

/// One bias-corrected Adam update of a single tensor. `step` is the
/// already-incremented step counter (1 on the first update).
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 const AdamConfig& config, std::int64_t step);

/// Applies one Adam step to a named parameter collection. Gradients are
/// looked up by name; a missing gradient is an error, a present-but-zero
/// gradient decays the moments as usual.
void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state);

}  // namespace actgen

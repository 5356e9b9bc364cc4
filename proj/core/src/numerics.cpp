#include "actgen/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace actgen {

namespace {
constexpr double kProbEps = 1e-12;

void require_probability(const std::vector<double>& p, const char* name) {
  double s = 0.0;
  for (double v : p) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + ": non-finite entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(name) + ": entries sum to " + std::to_string(s) +
                                ", expected 1");
  }
}
}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw std::invalid_argument("softmax: non-finite input");
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

double cross_entropy(const std::vector<double>& predicted, const std::vector<double>& target) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("cross_entropy: length mismatch (" + std::to_string(predicted.size()) +
                                " vs " + std::to_string(target.size()) + ")");
  }
  require_probability(predicted, "cross_entropy predicted");
  require_probability(target, "cross_entropy target");
  double h = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double p = std::clamp(predicted[i], kProbEps, 1.0);
    h -= target[i] * std::log(p);
  }
  return h;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_difference_gradient: step must be positive");
  std::vector<double> grad(point.size());
  std::vector<double> x = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    x[i] = point[i] + step;
    double fp = f(x);
    x[i] = point[i] - step;
    double fm = f(x);
    x[i] = point[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_difference_gradient: non-finite evaluation at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

bool AdamState::operator==(const AdamState& other) const {
  return config == other.config && step == other.step && m == other.m && v == other.v;
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 const AdamConfig& config, std::int64_t step) {
  if (!param.same_shape(grad)) {
    throw std::invalid_argument("adam_update: parameter/gradient shape mismatch " +
                                shape_to_string(param.shape()) + " vs " + shape_to_string(grad.shape()));
  }
  grad.require_finite("adam_update gradient");
  if (!m.defined()) m = Tensor::zeros(param.shape());
  if (!v.defined()) v = Tensor::zeros(param.shape());
  const double b1 = config.beta1, b2 = config.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    double mhat = m[i] / corr1;
    double vhat = v[i] / corr2;
    param[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state) {
  ++state.step;
  for (const auto& [name, param] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw std::invalid_argument("adam_step: no gradient for parameter '" + name + "'");
    }
    adam_update(*param, it->second, state.m[name], state.v[name], state.config, state.step);
  }
}

}  // namespace actgen

#include "wrd/numerics/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wrd/error.hpp"

namespace wrd::num {

void adam_step(std::span<Tensor> params, AdamState& state, double lr) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const Tensor& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size()) {
      throw DimensionError("adam_step: moment buffer " + std::to_string(i) + " holds " +
                           std::to_string(state.first_moment[i].size()) + " values, parameter has shape " +
                           shape_str(params[i].shape()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const auto grad = p.grad();
    auto value = p.mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      value[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double LrSchedule::rate(std::uint64_t step) const {
  if (step == 0) throw DomainError("learning-rate schedule is defined for step >= 1");
  if (model_dim <= 0 || warmup_steps <= 0) {
    throw DomainError("learning-rate schedule needs positive model_dim and warmup_steps");
  }
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return std::pow(static_cast<double>(model_dim), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

}  // namespace wrd::num

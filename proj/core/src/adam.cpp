#include "hargnn/adam.hpp"

#include <cmath>

#include "hargnn/error.hpp"

namespace hargnn {

AdamState AdamState::zeros_like(const std::vector<Tensor>& params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.numel(), 0.0);
    state.second_moment.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& options) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw Error("adam_step: optimizer state does not match parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.numel()) throw Error("adam_step: moment buffer size mismatch");
    if (!p.has_grad()) {
      // zero gradient still decays the moments
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] *= options.beta1;
        v[i] *= options.beta2;
      }
    }
    auto values = p.mutable_data();
    const bool has_grad = p.has_grad();
    const std::span<const double> grad = has_grad ? p.grad() : std::span<const double>{};
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (has_grad) {
        const double g = grad[i];
        m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
        v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      }
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options), state_(AdamState::zeros_like(params_)) {}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::step() { adam_step(params_, state_, options_); }

}  // namespace hargnn

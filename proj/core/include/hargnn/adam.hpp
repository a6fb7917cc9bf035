#pragma once

#include <cstdint>
#include <vector>

#include "hargnn/tensor.hpp"

namespace hargnn {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one buffer per parameter.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(const std::vector<Tensor>& params);
};

/// One bias-corrected Adam update of `params` in place. A parameter without
/// an accumulated gradient is treated as having a zero gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& options);

/// Convenience owner of parameters + state.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void zero_grad();
  void step();

  const AdamState& state() const noexcept { return state_; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  AdamState state_;
};

}  // namespace hargnn

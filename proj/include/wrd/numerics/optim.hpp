#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wrd/numerics/tensor.hpp"

namespace wrd::num {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update over `params`, reading each parameter's
// accumulated grad (a parameter never reached by backward counts as zero
// gradient). Moment buffers are sized on the first call; a later shape
// change raises DimensionError.
void adam_step(std::span<Tensor> params, AdamState& state, double lr);

// Linear warmup followed by inverse-square-root decay:
//   rate(step) = model_dim^-0.5 * min(step^-0.5, step * warmup_steps^-1.5)
struct LrSchedule {
  int model_dim = 64;
  int warmup_steps = 4000;

  double rate(std::uint64_t step) const;
};

}  // namespace wrd::num

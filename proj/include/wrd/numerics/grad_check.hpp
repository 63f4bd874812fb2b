#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "wrd/numerics/tensor.hpp"

namespace wrd::num {

// Denominator floor for the element-wise relative error
//   |analytic - numeric| / max(|analytic|, |numeric|, floor)
// so that components whose true gradient is ~0 are judged on absolute error.
inline constexpr double kGradCheckFloor = 1e-4;

// Compares the backward gradient of scalar f at x against central finite
// differences (f(x + h e_i) - f(x - h e_i)) / 2h. Returns the largest
// relative error. Throws NumericError on a non-finite evaluation.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

// Same check with respect to parameters already captured by f. Each entry is
// perturbed in place and restored. At most `max_entries_per_param` entries
// (evenly strided) are probed per parameter; 0 means all.
double grad_check_params(const std::function<Tensor()>& f, std::span<Tensor> params, double h = 1e-5,
                         std::size_t max_entries_per_param = 0);

}  // namespace wrd::num

#pragma once

#include <cstddef>

#include "wrd/numerics/rng.hpp"
#include "wrd/numerics/tensor.hpp"

namespace wrd::num {

// Parameter matrix drawn uniformly from +-sqrt(6 / (rows + cols)).
Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);
// Parameter vector filled with `value` (zeros for biases, ones for gains).
Tensor constant_vector(std::size_t n, double value);

}  // namespace wrd::num

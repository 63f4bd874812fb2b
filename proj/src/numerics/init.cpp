#include "wrd/numerics/init.hpp"

#include <cmath>
#include <vector>

namespace wrd::num {

Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::parameter({rows, cols}, std::move(values));
}

Tensor constant_vector(std::size_t n, double value) {
  return Tensor::parameter({n}, std::vector<double>(n, value));
}

}  // namespace wrd::num

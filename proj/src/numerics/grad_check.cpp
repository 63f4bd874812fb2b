#include "wrd/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wrd/error.hpp"

namespace wrd::num {

namespace {

double checked_value(const Tensor& y) {
  if (y.size() != 1) throw RankError("grad_check needs a scalar-valued function, got " + shape_str(y.shape()));
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function evaluated to a non-finite value");
  return v;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor leaf = Tensor::parameter(x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
  Tensor y = f(leaf);
  checked_value(y);
  y.backward();
  std::vector<double> analytic(leaf.size(), 0.0);
  if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

  double worst = 0.0;
  NoGradGuard no_grad;
  std::vector<double> probe(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = checked_value(f(Tensor::constant(x.shape(), probe)));
    probe[i] = saved - h;
    const double down = checked_value(f(Tensor::constant(x.shape(), probe)));
    probe[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double grad_check_params(const std::function<Tensor()>& f, std::span<Tensor> params, double h,
                         std::size_t max_entries_per_param) {
  for (Tensor& p : params) p.zero_grad();
  Tensor y = f();
  checked_value(y);
  y.backward();
  std::vector<std::vector<double>> analytic;
  for (Tensor& p : params) {
    analytic.emplace_back(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.back().begin());
  }

  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    std::size_t stride = 1;
    if (max_entries_per_param > 0 && data.size() > max_entries_per_param) {
      stride = (data.size() + max_entries_per_param - 1) / max_entries_per_param;
    }
    for (std::size_t i = 0; i < data.size(); i += stride) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = checked_value(f());
      data[i] = saved - h;
      const double down = checked_value(f());
      data[i] = saved;
      worst = std::max(worst, relative_error(analytic[k][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace wrd::num

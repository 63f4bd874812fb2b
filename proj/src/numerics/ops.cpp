#include "wrd/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eigen_maps.hpp"
#include "wrd/error.hpp"

namespace wrd::num {

using detail::ConstMatrixMap;
using detail::MatrixMap;

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw RankError(std::string(op) + " expects a matrix, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

template <typename F>
Tensor unary(const Tensor& a, F forward, double (*derivative)(double in, double out)) {
  const auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return Tensor::make_result(a.shape(), std::move(out), {a}, [derivative](Node& self) {
    Node& x = *self.inputs[0];
    for (std::size_t i = 0; i < x.grad.size(); ++i) {
      x.grad[i] += self.grad[i] * derivative(x.value[i], self.value[i]);
    }
  });
}

}  // namespace

Mask Mask::prefix(std::size_t rows, std::size_t cols, std::span<const std::size_t> lengths) {
  if (lengths.size() != rows) {
    throw DimensionError("prefix mask: " + std::to_string(lengths.size()) + " lengths for " +
                         std::to_string(rows) + " rows");
  }
  Mask mask{{rows, cols}, std::vector<std::uint8_t>(rows * cols, 0)};
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t len = std::min(lengths[r], cols);
    std::fill_n(mask.keep.begin() + static_cast<std::ptrdiff_t>(r * cols), len, 1);
  }
  return mask;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents differ for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  MatrixMap(out.data(), m, n).noalias() =
      ConstMatrixMap(a.data().data(), m, k) * ConstMatrixMap(b.data().data(), k, n);
  return Tensor::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    ConstMatrixMap g(self.grad.data(), m, n);
    if (x.requires_grad) {
      MatrixMap(x.grad.data(), m, k).noalias() += g * ConstMatrixMap(y.value.data(), k, n).transpose();
    }
    if (y.requires_grad) {
      MatrixMap(y.grad.data(), k, n).noalias() += ConstMatrixMap(x.value.data(), m, k).transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int side = 0; side < 2; ++side) {
      Node& x = *self.inputs[side];
      if (!x.requires_grad) continue;
      for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad)
      for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < y.grad.size(); ++i) y.grad[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad)
      for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i] * y.value[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < y.grad.size(); ++i) y.grad[i] += self.grad[i] * x.value[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return Tensor::make_result(a.shape(), std::move(out), {a}, [factor](Node& self) {
    Node& x = *self.inputs[0];
    for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i] * factor;
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_matrix(a, "add_bias");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (bias.size() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match " +
                         shape_str(a.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias.data()[c];
  return Tensor::make_result(a.shape(), std::move(out), {a, bias}, [m, n](Node& self) {
    Node& x = *self.inputs[0];
    Node& b = *self.inputs[1];
    if (x.requires_grad)
      for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i];
    if (b.requires_grad)
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) b.grad[c] += self.grad[r * n + c];
  });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::make_result({1}, {total}, {a}, [](Node& self) {
    Node& x = *self.inputs[0];
    for (double& g : x.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    Node& x = *self.inputs[0];
    for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  const std::size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
  if (b.dim(0) != m) {
    throw DimensionError("concat_cols: row counts differ for " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(m * (p + q));
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(a.data().begin() + r * p, p, out.begin() + r * (p + q));
    std::copy_n(b.data().begin() + r * q, q, out.begin() + r * (p + q) + p);
  }
  return Tensor::make_result({m, p + q}, std::move(out), {a, b}, [m, p, q](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    for (std::size_t r = 0; r < m; ++r) {
      if (x.requires_grad)
        for (std::size_t c = 0; c < p; ++c) x.grad[r * p + c] += self.grad[r * (p + q) + c];
      if (y.requires_grad)
        for (std::size_t c = 0; c < q; ++c) y.grad[r * q + c] += self.grad[r * (p + q) + p + c];
    }
  });
}

namespace {

Tensor softmax_impl(const Tensor& logits, const Mask* mask) {
  if (logits.rank() == 0) throw RankError("masked_softmax on a rank-0 tensor");
  if (mask && mask->shape != logits.shape()) {
    throw DimensionError("masked_softmax: mask " + shape_str(mask->shape) + " vs logits " +
                         shape_str(logits.shape()));
  }
  const std::size_t n = logits.shape().back();
  const std::size_t rows = logits.size() / n;
  const auto in = logits.data();
  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    double max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (mask && !mask->kept(base + c)) continue;
      max = std::max(max, in[base + c]);
      any = true;
    }
    if (!any) throw InvalidMaskError("masked_softmax: row " + std::to_string(r) + " is fully masked");
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (mask && !mask->kept(base + c)) continue;
      out[base + c] = std::exp(in[base + c] - max);
      total += out[base + c];
    }
    for (std::size_t c = 0; c < n; ++c) out[base + c] /= total;
  }
  return Tensor::make_result(logits.shape(), std::move(out), {logits}, [rows, n](Node& self) {
    Node& x = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad[base + c] * self.value[base + c];
      // masked entries have value 0 and therefore receive no gradient
      for (std::size_t c = 0; c < n; ++c) {
        x.grad[base + c] += self.value[base + c] * (self.grad[base + c] - dot);
      }
    }
  });
}

}  // namespace

Tensor masked_softmax(const Tensor& logits) { return softmax_impl(logits, nullptr); }
Tensor masked_softmax(const Tensor& logits, const Mask& mask) { return softmax_impl(logits, &mask); }

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " vs input " + shape_str(x.shape()));
  }
  std::vector<double> out(m * n), normalized(m * n), inv_std(m);
  const auto in = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += in[r * n + c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (in[r * n + c] - mu) * (in[r * n + c] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      const double xhat = (in[r * n + c] - mu) * inv_std[r];
      normalized[r * n + c] = xhat;
      out[r * n + c] = xhat * gain.data()[c] + bias.data()[c];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [m, n, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
        Node& xin = *self.inputs[0];
        Node& g = *self.inputs[1];
        Node& b = *self.inputs[2];
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < m; ++r) {
          const double* dy = self.grad.data() + r * n;
          const double* xhat = normalized.data() + r * n;
          if (g.requires_grad)
            for (std::size_t c = 0; c < n; ++c) g.grad[c] += dy[c] * xhat[c];
          if (b.requires_grad)
            for (std::size_t c = 0; c < n; ++c) b.grad[c] += dy[c];
          if (!xin.requires_grad) continue;
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            const double dxhat = dy[c] * g.value[c];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[c];
          }
          mean_dxhat *= inv_n;
          mean_dxhat_xhat *= inv_n;
          for (std::size_t c = 0; c < n; ++c) {
            const double dxhat = dy[c] * g.value[c];
            xin.grad[r * n + c] += inv_std[r] * (dxhat - mean_dxhat - xhat[c] * mean_dxhat_xhat);
          }
        }
      });
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw DomainError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factors(x.size());
  for (double& f : factors) f = rng.uniform() < p ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factors[i];
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [factors = std::move(factors)](Node& self) {
                               Node& in = *self.inputs[0];
                               for (std::size_t i = 0; i < in.grad.size(); ++i)
                                 in.grad[i] += self.grad[i] * factors[i];
                             });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  require_matrix(table, "embedding");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw DimensionError("embedding: empty id sequence");
  std::vector<double> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw VocabularyError("token id " + std::to_string(ids[r]) + " outside vocabulary of size " +
                            std::to_string(vocab));
    }
    std::copy_n(table.data().begin() + ids[r] * d, d, out.begin() + r * d);
  }
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return Tensor::make_result({ids.size(), d}, std::move(out), {table},
                             [d, rows = std::move(rows)](Node& self) {
                               Node& t = *self.inputs[0];
                               for (std::size_t r = 0; r < rows.size(); ++r)
                                 for (std::size_t c = 0; c < d; ++c)
                                   t.grad[rows[r] * d + c] += self.grad[r * d + c];
                             });
}

Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values) {
  require_matrix(weights, "segment_weighted_sum");
  require_matrix(values, "segment_weighted_sum");
  const std::size_t batch = weights.dim(0), len = weights.dim(1), d = values.dim(1);
  if (values.dim(0) != batch * len) {
    throw DimensionError("segment_weighted_sum: weights " + shape_str(weights.shape()) +
                         " vs values " + shape_str(values.shape()));
  }
  std::vector<double> out(batch * d, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t n = 0; n < len; ++n) {
      const double w = weights.data()[b * len + n];
      const double* row = values.data().data() + (b * len + n) * d;
      for (std::size_t c = 0; c < d; ++c) out[b * d + c] += w * row[c];
    }
  return Tensor::make_result({batch, d}, std::move(out), {weights, values},
                             [batch, len, d](Node& self) {
                               Node& w = *self.inputs[0];
                               Node& v = *self.inputs[1];
                               for (std::size_t b = 0; b < batch; ++b)
                                 for (std::size_t n = 0; n < len; ++n) {
                                   const std::size_t row = b * len + n;
                                   const double* g = self.grad.data() + b * d;
                                   if (w.requires_grad) {
                                     double acc = 0.0;
                                     for (std::size_t c = 0; c < d; ++c) acc += g[c] * v.value[row * d + c];
                                     w.grad[row] += acc;
                                   }
                                   if (v.requires_grad) {
                                     const double wt = w.value[row];
                                     for (std::size_t c = 0; c < d; ++c) v.grad[row * d + c] += wt * g[c];
                                   }
                                 }
                             });
}

Tensor segment_dot(const Tensor& queries, const Tensor& keys, double factor) {
  require_matrix(queries, "segment_dot");
  require_matrix(keys, "segment_dot");
  const std::size_t batch = queries.dim(0), d = queries.dim(1);
  if (keys.dim(1) != d || keys.dim(0) % batch != 0) {
    throw DimensionError("segment_dot: queries " + shape_str(queries.shape()) + " vs keys " +
                         shape_str(keys.shape()));
  }
  const std::size_t len = keys.dim(0) / batch;
  std::vector<double> out(batch * len, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t n = 0; n < len; ++n) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += queries.data()[b * d + c] * keys.data()[(b * len + n) * d + c];
      out[b * len + n] = factor * acc;
    }
  return Tensor::make_result({batch, len}, std::move(out), {queries, keys},
                             [batch, len, d, factor](Node& self) {
                               Node& q = *self.inputs[0];
                               Node& k = *self.inputs[1];
                               for (std::size_t b = 0; b < batch; ++b)
                                 for (std::size_t n = 0; n < len; ++n) {
                                   const double g = factor * self.grad[b * len + n];
                                   const std::size_t row = b * len + n;
                                   if (q.requires_grad)
                                     for (std::size_t c = 0; c < d; ++c) q.grad[b * d + c] += g * k.value[row * d + c];
                                   if (k.requires_grad)
                                     for (std::size_t c = 0; c < d; ++c) k.grad[row * d + c] += g * q.value[b * d + c];
                                 }
                             });
}

Tensor nll_with_floor(const Tensor& probs, std::span<const std::size_t> targets, double floor) {
  require_matrix(probs, "nll_with_floor");
  const std::size_t batch = probs.dim(0), len = probs.dim(1);
  if (targets.size() != batch) {
    throw DimensionError("nll_with_floor: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(batch) + " rows");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] >= len) {
      throw InstanceError("target index " + std::to_string(targets[b]) + " outside [0, " +
                          std::to_string(len) + ")");
    }
    total -= std::log(std::max(probs.data()[b * len + targets[b]], floor));
  }
  std::vector<std::size_t> gold(targets.begin(), targets.end());
  return Tensor::make_result({1}, {total}, {probs}, [len, floor, gold = std::move(gold)](Node& self) {
    Node& p = *self.inputs[0];
    for (std::size_t b = 0; b < gold.size(); ++b) {
      const std::size_t idx = b * len + gold[b];
      if (p.value[idx] > floor) p.grad[idx] -= self.grad[0] / p.value[idx];
    }
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                             std::span<const double> row_weights) {
  require_matrix(logits, "softmax_cross_entropy");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (targets.size() != rows || row_weights.size() != rows) {
    throw DimensionError("softmax_cross_entropy: target/weight count does not match " +
                         shape_str(logits.shape()));
  }
  std::vector<double> probs(rows * classes, 0.0);
  double total = 0.0;
  const auto in = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_weights[r] == 0.0) continue;
    if (targets[r] >= classes) {
      throw InstanceError("class index " + std::to_string(targets[r]) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
    const double* row = in.data() + r * classes;
    const double max = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(row[c] - max);
      z += probs[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= z;
    total += row_weights[r] * (std::log(z) + max - row[targets[r]]);
  }
  std::vector<std::size_t> gold(targets.begin(), targets.end());
  std::vector<double> weights(row_weights.begin(), row_weights.end());
  return Tensor::make_result(
      {1}, {total}, {logits},
      [classes, probs = std::move(probs), gold = std::move(gold), weights = std::move(weights)](Node& self) {
        Node& x = *self.inputs[0];
        for (std::size_t r = 0; r < gold.size(); ++r) {
          if (weights[r] == 0.0) continue;
          const double g = self.grad[0] * weights[r];
          for (std::size_t c = 0; c < classes; ++c) x.grad[r * classes + c] += g * probs[r * classes + c];
          x.grad[r * classes + gold[r]] -= g;
        }
      });
}

}  // namespace wrd::num

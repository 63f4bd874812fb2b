#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wrd/numerics/rng.hpp"
#include "wrd/numerics/tensor.hpp"

namespace wrd::num {

// Boolean keep-mask with the same shape as the tensor it filters.
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> keep;

  // rows x cols mask keeping the first lengths[r] entries of row r.
  static Mask prefix(std::size_t rows, std::size_t cols, std::span<const std::size_t> lengths);
  bool kept(std::size_t flat) const { return keep[flat] != 0; }
};

// Matrix product of a [m x k] and b [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a [m x n] + bias [n] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
// [m x p] ++ [m x q] -> [m x (p+q)]
Tensor concat_cols(const Tensor& a, const Tensor& b);

// Softmax over the last axis with per-row max subtraction. Masked entries are
// exactly zero; a row with no kept entry raises InvalidMaskError.
Tensor masked_softmax(const Tensor& logits);
Tensor masked_softmax(const Tensor& logits, const Mask& mask);

// Row-wise layer normalization of x [m x n] with gain/bias [n].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-6);

// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when not
// training or p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

// Gathers rows of table [V x d]; ids out of range raise VocabularyError.
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

// weights [B x L], values [B*L x d] -> out [B x d], out[b] = sum_n w[b,n] values[b*L+n].
Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values);

// queries [B x d], keys [B*L x d] -> [B x L], factor * <q_b, k_{b*L+n}>.
Tensor segment_dot(const Tensor& queries, const Tensor& keys, double factor = 1.0);

// probs [B x L]; sum_b -log(max(probs[b, target_b], floor)). The floored
// branch carries zero gradient.
Tensor nll_with_floor(const Tensor& probs, std::span<const std::size_t> targets, double floor = 1e-12);

// logits [R x C]; sum_r weight_r * -log softmax(logits_r)[target_r].
// Rows with zero weight are skipped entirely.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                             std::span<const double> row_weights);

}  // namespace wrd::num

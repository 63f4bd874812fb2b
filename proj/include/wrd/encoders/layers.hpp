#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wrd/encoders/params.hpp"
#include "wrd/numerics/tensor.hpp"

namespace wrd::enc {

// A padded batch of `batch` sequences, each stored as `seq_len` consecutive
// rows of a [batch*seq_len x d] matrix. Only the first lengths[b] rows of
// sequence b are real; the rest are padding.
struct SequenceLayout {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::size_t> lengths;

  static SequenceLayout single(std::size_t n) { return {1, n, {n}}; }
  std::size_t rows() const { return batch * seq_len; }
  void validate() const;
};

// Which keys a head may attend to from query position i.
enum class HeadDirection {
  all,       // every real position
  forward,   // positions <= i
  backward,  // positions >= i
};

// Fused multi-head scaled dot-product attention. q, k, v are
// [rows x d]; head h owns columns [h*d/H, (h+1)*d/H). Each head computes
// softmax(Q K^T / sqrt(d/H)) V over real positions only; padded query rows
// produce zeros. Returns the concatenated head outputs [rows x d].
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::span<const HeadDirection> heads, const SequenceLayout& layout);

// Fused GRU over every sequence of the batch, h_0 = 0:
//   z = sigmoid(x Wz + h Uz + bz)      r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wc + (r * h) Uc + bc)   h' = (1 - z) * h + z * c
// With `reverse`, each sequence is scanned from its last real position to
// its first. Padded rows produce zeros and do not touch the state.
Tensor gru_scan(const Tensor& x, const GruDirectionParams& params, const SequenceLayout& layout, bool reverse);

}  // namespace wrd::enc

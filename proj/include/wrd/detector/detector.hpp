#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "wrd/encoders/layers.hpp"
#include "wrd/encoders/params.hpp"
#include "wrd/numerics/ops.hpp"
#include "wrd/numerics/rng.hpp"

namespace wrd::det {

using num::Tensor;

inline constexpr double kProbabilityFloor = 1e-12;

// Pointer-style output layer. Representations are rows h_n; the learned maps
// act on the right (h_n W), which is the transpose of the column convention
// W h_n and parametrizes the same family.
struct DetectorParams {
  Tensor w_i;  // d x d
  Tensor u_i;  // d
  Tensor w_q;  // d x d
  Tensor w_k;  // d x d
  // Only present in independent-heads mode, where the original position is
  // scored like the insert position instead of through the popped word.
  Tensor u_o;  // d

  static DetectorParams init(std::size_t d, num::Rng& rng, bool independent_heads = false);
  std::size_t dim() const { return w_i.dim(0); }
  bool independent_heads() const { return u_o.defined(); }
  enc::NamedTensors named() const;  // "detector." namespace
  std::vector<Tensor> tensors() const;
};

struct DetectorOutput {
  Tensor insert_logits;     // [B x L]
  Tensor p_insert;          // [B x L], zero on padding
  Tensor popped_embedding;  // [B x d]
  Tensor orig_logits;       // [B x L]
  Tensor p_orig;            // [B x L], zero on padding
  enc::SequenceLayout layout;
};

// Mask keeping the real positions of each sequence.
num::Mask position_mask(const enc::SequenceLayout& layout);

// p_insert = softmax_n(u_i . tanh(h_n W_i)). Requires every length >= 2.
Tensor insert_logits(const Tensor& h, const DetectorParams& params, const enc::SequenceLayout& layout);
Tensor insert_distribution(const Tensor& h, const DetectorParams& params, const enc::SequenceLayout& layout);

// E_b = sum_n p_insert[b, n] (h_n W_q)
Tensor popped_embedding(const Tensor& h, const Tensor& p_insert, const DetectorParams& params);

// orig logits: <E_b, h_n W_k> / sqrt(d)
Tensor orig_logits(const Tensor& h, const Tensor& popped, const DetectorParams& params);
Tensor orig_distribution(const Tensor& h, const Tensor& popped, const DetectorParams& params,
                         const enc::SequenceLayout& layout);

// Full forward. `dropout` (train mode only) is applied to h first.
DetectorOutput detect(const Tensor& h, const DetectorParams& params, const enc::SequenceLayout& layout,
                      double dropout = 0.0, num::Rng* rng = nullptr);

// Mean over the batch of -(log p_insert[gold I] + log p_orig[gold O]), with
// probabilities floored at kProbabilityFloor.
Tensor wrd_loss(const DetectorOutput& out, std::span<const std::size_t> gold_insert,
                std::span<const std::size_t> gold_orig);

// Independent argmax of each distribution over real positions; ties go to the
// lowest index. The two predictions may coincide.
std::vector<std::pair<std::size_t, std::size_t>> decode(const DetectorOutput& out);
std::size_t argmax(std::span<const double> probs);

}  // namespace wrd::det

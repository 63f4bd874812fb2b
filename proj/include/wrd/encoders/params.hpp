#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wrd/encoders/config.hpp"
#include "wrd/numerics/rng.hpp"
#include "wrd/numerics/tensor.hpp"

namespace wrd::enc {

using num::Tensor;

struct AttentionParams {
  Tensor wq, wk, wv, wo;  // d x d each
};

// Gate columns are ordered [update | reset | candidate], each `hidden` wide.
struct GruDirectionParams {
  Tensor w_input;   // d_in x 3h
  Tensor w_hidden;  // h x 3h
  Tensor bias;      // 3h
};

struct GruParams {
  GruDirectionParams forward;
  GruDirectionParams backward;
};

// One encoder layer. Exactly one of `attention` / `gru` is populated,
// depending on the architecture; the feed-forward and normalization arrays
// are shared by every architecture.
struct LayerParams {
  AttentionParams attention;
  GruParams gru;
  Tensor norm1_gain, norm1_bias;
  Tensor ffn_w1, ffn_b1;  // d x ffn, ffn
  Tensor ffn_w2, ffn_b2;  // ffn x d, d
  Tensor norm2_gain, norm2_bias;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct EncoderParams {
  Tensor embedding;  // vocab x d
  std::vector<LayerParams> layers;

  static EncoderParams init(const EncoderConfig& config, num::Rng& rng);

  // Stable, ordered names under the "encoder." namespace.
  NamedTensors named() const;
  std::vector<Tensor> tensors() const;
};

}  // namespace wrd::enc

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wrd/encoders/config.hpp"
#include "wrd/encoders/layers.hpp"
#include "wrd/encoders/params.hpp"
#include "wrd/numerics/rng.hpp"

namespace wrd::enc {

enum class Mode { train, eval };

// Token ids of a padded batch, row-major [batch x seq_len], padded with PAD.
struct SequenceBatch {
  SequenceLayout layout;
  std::vector<std::size_t> ids;

  static SequenceBatch single(std::span<const std::size_t> tokens);
  static SequenceBatch pad(std::span<const std::vector<std::size_t>> sequences);
};

// Representations after each stage: per_layer[0] is the embedded input,
// per_layer[l] the output of layer l. Each entry is [rows x d].
struct EncoderOutput {
  std::vector<Tensor> per_layer;
  SequenceLayout layout;

  const Tensor& final() const { return per_layer.back(); }
};

// Sinusoidal table: PE[p, 2k] = sin(p / 10000^(2k/d)), PE[p, 2k+1] = cos(same).
Tensor positional_encoding(std::size_t n, std::size_t d);

// Embedding lookup scaled by sqrt(d), plus positional encoding when enabled;
// dropout in train mode.
Tensor embed(const SequenceBatch& batch, const EncoderParams& params, const EncoderConfig& config, Mode mode,
             num::Rng* rng);

// Sequence sublayers: input and output are [rows x d].
Tensor san_sublayer(const Tensor& input, const AttentionParams& params, std::size_t num_heads,
                    const SequenceLayout& layout);
Tensor disan_sublayer(const Tensor& input, const AttentionParams& params, std::size_t num_heads,
                      const SequenceLayout& layout);
Tensor rnn_sublayer(const Tensor& input, const GruParams& params, const SequenceLayout& layout);

// Post-norm Transformer stack with the configured sequence sublayer:
//   x = LN(x + drop(sublayer(x)));  x = LN(x + drop(FFN(x)))
// `rng` drives dropout and may be null in eval mode.
EncoderOutput encode(const SequenceBatch& batch, const EncoderParams& params, const EncoderConfig& config,
                     Mode mode, num::Rng* rng = nullptr);

}  // namespace wrd::enc

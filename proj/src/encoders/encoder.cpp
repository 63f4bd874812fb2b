#include "wrd/encoders/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "wrd/error.hpp"
#include "wrd/numerics/ops.hpp"
#include "wrd/textdata/vocabulary.hpp"

namespace wrd::enc {

namespace {

Tensor apply_dropout(const Tensor& x, const EncoderConfig& config, Mode mode, num::Rng* rng) {
  if (mode == Mode::eval || config.dropout == 0.0) return x;
  if (rng == nullptr) throw ConfigError("train-mode encoding with dropout needs an Rng");
  return num::dropout(x, config.dropout, *rng, true);
}

Tensor project_attention(const Tensor& input, const AttentionParams& params,
                         std::span<const HeadDirection> heads, const SequenceLayout& layout) {
  const Tensor q = num::matmul(input, params.wq);
  const Tensor k = num::matmul(input, params.wk);
  const Tensor v = num::matmul(input, params.wv);
  return num::matmul(multi_head_attention(q, k, v, heads, layout), params.wo);
}

}  // namespace

SequenceBatch SequenceBatch::single(std::span<const std::size_t> tokens) {
  if (tokens.empty()) throw DimensionError("cannot encode an empty sequence");
  return {SequenceLayout::single(tokens.size()), std::vector<std::size_t>(tokens.begin(), tokens.end())};
}

SequenceBatch SequenceBatch::pad(std::span<const std::vector<std::size_t>> sequences) {
  if (sequences.empty()) throw DimensionError("cannot pad an empty batch");
  SequenceBatch out;
  out.layout.batch = sequences.size();
  for (const auto& s : sequences) {
    if (s.empty()) throw DimensionError("cannot encode an empty sequence");
    out.layout.seq_len = std::max(out.layout.seq_len, s.size());
    out.layout.lengths.push_back(s.size());
  }
  out.ids.assign(out.layout.rows(), text::Vocabulary::kPad);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), out.ids.begin() + b * out.layout.seq_len);
  }
  return out;
}

Tensor positional_encoding(std::size_t n, std::size_t d) {
  if (d == 0 || d % 2 != 0) throw ConfigError("positional encoding needs an even width, got " + std::to_string(d));
  std::vector<double> table(n * d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t k = 0; k < d / 2; ++k) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * k) / static_cast<double>(d));
      table[pos * d + 2 * k] = std::sin(angle);
      table[pos * d + 2 * k + 1] = std::cos(angle);
    }
  }
  return Tensor::constant({n, d}, std::move(table));
}

Tensor embed(const SequenceBatch& batch, const EncoderParams& params, const EncoderConfig& config, Mode mode,
             num::Rng* rng) {
  batch.layout.validate();
  const std::size_t d = config.model_dim;
  Tensor x = num::scale(num::embedding(params.embedding, batch.ids), std::sqrt(static_cast<double>(d)));
  if (config.use_position_encoding) {
    const std::size_t len = batch.layout.seq_len;
    const Tensor pe = positional_encoding(len, d);
    std::vector<double> tiled(batch.layout.rows() * d);
    for (std::size_t b = 0; b < batch.layout.batch; ++b) {
      std::copy(pe.data().begin(), pe.data().end(), tiled.begin() + b * len * d);
    }
    x = num::add(x, Tensor::constant({batch.layout.rows(), d}, std::move(tiled)));
  }
  return apply_dropout(x, config, mode, rng);
}

Tensor san_sublayer(const Tensor& input, const AttentionParams& params, std::size_t num_heads,
                    const SequenceLayout& layout) {
  const std::vector<HeadDirection> heads(num_heads, HeadDirection::all);
  return project_attention(input, params, heads, layout);
}

Tensor disan_sublayer(const Tensor& input, const AttentionParams& params, std::size_t num_heads,
                      const SequenceLayout& layout) {
  if (num_heads == 0 || num_heads % 2 != 0) {
    throw ConfigError("disan needs an even head count, got " + std::to_string(num_heads));
  }
  std::vector<HeadDirection> heads(num_heads, HeadDirection::forward);
  std::fill(heads.begin() + static_cast<std::ptrdiff_t>(num_heads / 2), heads.end(), HeadDirection::backward);
  return project_attention(input, params, heads, layout);
}

Tensor rnn_sublayer(const Tensor& input, const GruParams& params, const SequenceLayout& layout) {
  if (input.rank() != 2 || input.dim(1) % 2 != 0) {
    throw ConfigError("bidirectional GRU needs an even model width, got " + num::shape_str(input.shape()));
  }
  return num::concat_cols(gru_scan(input, params.forward, layout, false),
                          gru_scan(input, params.backward, layout, true));
}

EncoderOutput encode(const SequenceBatch& batch, const EncoderParams& params, const EncoderConfig& config,
                     Mode mode, num::Rng* rng) {
  config.validate();
  if (params.layers.size() != config.num_layers) {
    throw ConfigError("encoder parameters hold " + std::to_string(params.layers.size()) + " layers, config says " +
                      std::to_string(config.num_layers));
  }
  EncoderOutput out;
  out.layout = batch.layout;
  Tensor x = embed(batch, params, config, mode, rng);
  out.per_layer.push_back(x);
  for (const LayerParams& layer : params.layers) {
    Tensor seq;
    switch (config.arch) {
      case Arch::san:
        seq = san_sublayer(x, layer.attention, config.num_heads, batch.layout);
        break;
      case Arch::disan:
        seq = disan_sublayer(x, layer.attention, config.num_heads, batch.layout);
        break;
      case Arch::rnn:
        seq = rnn_sublayer(x, layer.gru, batch.layout);
        break;
    }
    x = num::layer_norm(num::add(x, apply_dropout(seq, config, mode, rng)), layer.norm1_gain, layer.norm1_bias);
    Tensor hidden = num::relu(num::add_bias(num::matmul(x, layer.ffn_w1), layer.ffn_b1));
    Tensor ffn = num::add_bias(num::matmul(hidden, layer.ffn_w2), layer.ffn_b2);
    x = num::layer_norm(num::add(x, apply_dropout(ffn, config, mode, rng)), layer.norm2_gain, layer.norm2_bias);
    out.per_layer.push_back(x);
  }
  return out;
}

}  // namespace wrd::enc

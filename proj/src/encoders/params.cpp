#include "wrd/encoders/params.hpp"

#include "wrd/numerics/init.hpp"

namespace wrd::enc {

namespace {

GruDirectionParams init_gru_direction(std::size_t d_in, std::size_t hidden, num::Rng& rng) {
  GruDirectionParams p;
  p.w_input = num::xavier_uniform(d_in, 3 * hidden, rng);
  p.w_hidden = num::xavier_uniform(hidden, 3 * hidden, rng);
  p.bias = num::constant_vector(3 * hidden, 0.0);
  return p;
}

}  // namespace

EncoderParams EncoderParams::init(const EncoderConfig& config, num::Rng& rng) {
  config.validate();
  const std::size_t d = config.model_dim;
  EncoderParams p;
  p.embedding = num::xavier_uniform(config.vocab_size, d, rng);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerParams layer;
    if (config.arch == Arch::rnn) {
      layer.gru.forward = init_gru_direction(d, d / 2, rng);
      layer.gru.backward = init_gru_direction(d, d / 2, rng);
    } else {
      layer.attention.wq = num::xavier_uniform(d, d, rng);
      layer.attention.wk = num::xavier_uniform(d, d, rng);
      layer.attention.wv = num::xavier_uniform(d, d, rng);
      layer.attention.wo = num::xavier_uniform(d, d, rng);
    }
    layer.norm1_gain = num::constant_vector(d, 1.0);
    layer.norm1_bias = num::constant_vector(d, 0.0);
    layer.ffn_w1 = num::xavier_uniform(d, config.ffn_dim, rng);
    layer.ffn_b1 = num::constant_vector(config.ffn_dim, 0.0);
    layer.ffn_w2 = num::xavier_uniform(config.ffn_dim, d, rng);
    layer.ffn_b2 = num::constant_vector(d, 0.0);
    layer.norm2_gain = num::constant_vector(d, 1.0);
    layer.norm2_bias = num::constant_vector(d, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

NamedTensors EncoderParams::named() const {
  NamedTensors out;
  out.emplace_back("encoder.embedding", embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerParams& layer = layers[l];
    const std::string prefix = "encoder.layer" + std::to_string(l) + ".";
    if (layer.attention.wq.defined()) {
      out.emplace_back(prefix + "attn.wq", layer.attention.wq);
      out.emplace_back(prefix + "attn.wk", layer.attention.wk);
      out.emplace_back(prefix + "attn.wv", layer.attention.wv);
      out.emplace_back(prefix + "attn.wo", layer.attention.wo);
    }
    if (layer.gru.forward.w_input.defined()) {
      for (auto [dir, g] : {std::pair{"fwd", &layer.gru.forward}, std::pair{"bwd", &layer.gru.backward}}) {
        out.emplace_back(prefix + "gru." + dir + ".w_input", g->w_input);
        out.emplace_back(prefix + "gru." + dir + ".w_hidden", g->w_hidden);
        out.emplace_back(prefix + "gru." + dir + ".bias", g->bias);
      }
    }
    out.emplace_back(prefix + "norm1.gain", layer.norm1_gain);
    out.emplace_back(prefix + "norm1.bias", layer.norm1_bias);
    out.emplace_back(prefix + "ffn.w1", layer.ffn_w1);
    out.emplace_back(prefix + "ffn.b1", layer.ffn_b1);
    out.emplace_back(prefix + "ffn.w2", layer.ffn_w2);
    out.emplace_back(prefix + "ffn.b2", layer.ffn_b2);
    out.emplace_back(prefix + "norm2.gain", layer.norm2_gain);
    out.emplace_back(prefix + "norm2.bias", layer.norm2_bias);
  }
  return out;
}

std::vector<Tensor> EncoderParams::tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

}  // namespace wrd::enc

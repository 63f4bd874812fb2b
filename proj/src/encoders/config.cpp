#include "wrd/encoders/config.hpp"

#include "wrd/error.hpp"

namespace wrd::enc {

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::rnn:
      return "rnn";
    case Arch::san:
      return "san";
    case Arch::disan:
      return "disan";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  if (name == "rnn") return Arch::rnn;
  if (name == "san") return Arch::san;
  if (name == "disan") return Arch::disan;
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected rnn, san or disan)");
}

EncoderConfig EncoderConfig::desk_default(Arch arch) {
  EncoderConfig c;
  c.arch = arch;
  c.use_position_encoding = arch != Arch::rnn;
  return c;
}

void EncoderConfig::validate() const {
  if (num_layers == 0) throw ConfigError("encoder needs at least one layer");
  if (model_dim == 0 || model_dim % 2 != 0) {
    throw ConfigError("model_dim must be positive and even, got " + std::to_string(model_dim));
  }
  if (ffn_dim == 0) throw ConfigError("ffn_dim must be positive");
  if (vocab_size < 2) throw ConfigError("vocab_size must cover at least PAD and UNK");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (arch != Arch::rnn) {
    if (num_heads == 0 || model_dim % num_heads != 0) {
      throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by num_heads " +
                        std::to_string(num_heads));
    }
    if (arch == Arch::disan && num_heads % 2 != 0) {
      throw ConfigError("disan splits heads into forward and backward halves; num_heads must be even");
    }
  }
}

}  // namespace wrd::enc

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace wrd::enc {

enum class Arch { rnn, san, disan };

std::string_view to_string(Arch arch);
// Accepts "rnn", "san", "disan"; throws ConfigError otherwise.
Arch parse_arch(std::string_view name);

struct EncoderConfig {
  Arch arch = Arch::san;
  std::size_t num_layers = 2;
  std::size_t model_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 256;
  bool use_position_encoding = true;
  double dropout = 0.1;
  std::size_t vocab_size = 0;

  // Desk-scale defaults. Position encoding is on for the attention
  // architectures and off for the recurrent one.
  static EncoderConfig desk_default(Arch arch);

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

}  // namespace wrd::enc

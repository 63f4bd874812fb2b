#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wrd::text {

using Sentence = std::vector<std::string>;

// Splits a line on ASCII whitespace.
Sentence tokenize(std::string_view line);
std::string join(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  // Keeps the max_size - 2 most frequent tokens; equal counts are ordered by
  // first occurrence. Throws InputError on an empty corpus.
  static Vocabulary build(std::span<const Sentence> corpus, std::size_t max_size);
  // Restores a vocabulary from its id-ordered token list (checkpoints).
  static Vocabulary from_tokens(std::vector<std::string> id_to_token);

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  Vocabulary() = default;

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::size_t> token_to_id_;
};

}  // namespace wrd::text

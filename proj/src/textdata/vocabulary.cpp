#include "wrd/textdata/vocabulary.hpp"

#include <algorithm>
#include <cctype>

#include "wrd/error.hpp"

namespace wrd::text {

Sentence tokenize(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary Vocabulary::build(std::span<const Sentence> corpus, std::size_t max_size) {
  if (max_size < 2) throw ConfigError("vocabulary max_size must be at least 2 (PAD and UNK)");
  struct Entry {
    std::string token;
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Entry> entries;
  for (const Sentence& sentence : corpus) {
    for (const std::string& tok : sentence) {
      auto [it, inserted] = index.try_emplace(tok, entries.size());
      if (inserted) entries.push_back({tok, 0, entries.size()});
      ++entries[it->second].count;
    }
  }
  if (entries.empty()) throw InputError("cannot build a vocabulary from an empty corpus");

  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.count != b.count ? a.count > b.count : a.first_seen < b.first_seen;
  });
  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken)};
  for (const Entry& e : entries) {
    if (tokens.size() >= max_size) break;
    if (e.token == kPadToken || e.token == kUnkToken) continue;
    tokens.push_back(e.token);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[kPad] != kPadToken || id_to_token[kUnk] != kUnkToken) {
    throw VocabularyError("vocabulary must start with the reserved <pad> and <unk> entries");
  }
  Vocabulary vocab;
  vocab.id_to_token_ = std::move(id_to_token);
  for (std::size_t i = 0; i < vocab.id_to_token_.size(); ++i) {
    if (!vocab.token_to_id_.emplace(vocab.id_to_token_[i], i).second) {
      throw VocabularyError("duplicate vocabulary entry '" + vocab.id_to_token_[i] + "'");
    }
  }
  return vocab;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= id_to_token_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

}  // namespace wrd::text

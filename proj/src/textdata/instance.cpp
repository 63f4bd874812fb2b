#include "wrd/textdata/instance.hpp"

#include <algorithm>

#include "wrd/error.hpp"

namespace wrd::text {

WrdInstance apply_move(std::span<const std::string> sentence, std::size_t pop, std::size_t insert) {
  const std::size_t n = sentence.size();
  if (pop >= n || insert >= n || pop == insert) {
    throw InstanceError("invalid move (" + std::to_string(pop) + " -> " + std::to_string(insert) +
                        ") for a sentence of length " + std::to_string(n));
  }
  WrdInstance inst;
  inst.tokens.assign(sentence.begin(), sentence.end());
  std::string moved = std::move(inst.tokens[pop]);
  inst.tokens.erase(inst.tokens.begin() + static_cast<std::ptrdiff_t>(pop));
  inst.tokens.insert(inst.tokens.begin() + static_cast<std::ptrdiff_t>(insert), std::move(moved));
  inst.insert_idx = insert;
  inst.orig_idx = pop;
  inst.source_line = join(sentence);
  return inst;
}

WrdInstance generate_instance(std::span<const std::string> sentence, num::Rng& rng, std::size_t max_len) {
  const std::size_t n = sentence.size();
  if (n < 2 || n > max_len) {
    throw InstanceError("sentence length " + std::to_string(n) + " outside [2, " + std::to_string(max_len) + "]");
  }
  if (std::all_of(sentence.begin(), sentence.end(), [&](const std::string& t) { return t == sentence[0]; })) {
    throw DegenerateSentenceError("every move leaves '" + join(sentence) + "' unchanged");
  }
  for (int attempt = 0; attempt <= kMaxMoveResamples; ++attempt) {
    const std::uint64_t k = rng.uniform_index(static_cast<std::uint64_t>(n * (n - 1)));
    const std::size_t pop = static_cast<std::size_t>(k / (n - 1));
    const std::size_t rest = static_cast<std::size_t>(k % (n - 1));
    const std::size_t insert = rest < pop ? rest : rest + 1;
    WrdInstance inst = apply_move(sentence, pop, insert);
    if (!std::equal(inst.tokens.begin(), inst.tokens.end(), sentence.begin())) return inst;
  }
  throw DegenerateSentenceError("no reordering of '" + join(sentence) + "' found after " +
                                std::to_string(kMaxMoveResamples) + " resamples");
}

Sentence undo_move(const WrdInstance& inst) {
  Sentence out = inst.tokens;
  if (inst.insert_idx >= out.size() || inst.orig_idx >= out.size()) return {};
  std::string moved = std::move(out[inst.insert_idx]);
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(inst.insert_idx));
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(inst.orig_idx), std::move(moved));
  return out;
}

bool verify_instance(const WrdInstance& inst, std::span<const std::string> original) {
  if (inst.insert_idx == inst.orig_idx || inst.tokens.size() != original.size()) return false;
  if (inst.insert_idx >= inst.size() || inst.orig_idx >= inst.size()) return false;
  const Sentence restored = undo_move(inst);
  return std::equal(restored.begin(), restored.end(), original.begin(), original.end());
}

}  // namespace wrd::text

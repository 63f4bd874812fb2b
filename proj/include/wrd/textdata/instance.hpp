#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "wrd/numerics/rng.hpp"
#include "wrd/textdata/vocabulary.hpp"

namespace wrd::text {

inline constexpr std::size_t kDefaultMaxLen = 80;
inline constexpr int kMaxMoveResamples = 100;

// A sentence with one word moved. `insert_idx` is where the moved word now
// sits; `orig_idx` is the index it was popped from, read in the reordered
// sequence's coordinates. Both are 0-based.
struct WrdInstance {
  Sentence tokens;
  std::size_t insert_idx = 0;
  std::size_t orig_idx = 0;
  std::string source_line;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const WrdInstance&) const = default;
};

// Pops sentence[pop] and re-inserts it so it lands at index `insert` of the
// result. Requires pop != insert, both in range.
WrdInstance apply_move(std::span<const std::string> sentence, std::size_t pop, std::size_t insert);

// Samples (pop, insert) uniformly over ordered pairs with pop != insert and
// applies the move, resampling when duplicate tokens make the result equal to
// the input. Throws InstanceError for sentences outside [2, max_len] and
// DegenerateSentenceError when no move changes the sequence.
WrdInstance generate_instance(std::span<const std::string> sentence, num::Rng& rng,
                              std::size_t max_len = kDefaultMaxLen);

// Removes tokens[insert_idx] and re-inserts it at orig_idx.
Sentence undo_move(const WrdInstance& inst);

// True iff undoing the move reproduces `original` exactly.
bool verify_instance(const WrdInstance& inst, std::span<const std::string> original);

}  // namespace wrd::text

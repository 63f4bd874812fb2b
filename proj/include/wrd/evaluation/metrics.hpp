#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wrd/textdata/instance.hpp"

namespace wrd::eval {

// (predicted insert index, predicted original index)
using Prediction = std::pair<std::size_t, std::size_t>;

struct Accuracy {
  double insert = 0.0;
  double orig = 0.0;
  double both = 0.0;
  std::size_t count = 0;

  bool operator==(const Accuracy&) const = default;
};

// Throws InputError when the lists differ in length or are empty.
Accuracy score(std::span<const Prediction> predictions, std::span<const text::WrdInstance> golds);

// Bucket [lo, hi) over the gold distance |insert - orig|; hi == 0 means
// unbounded. `both` is absent for an empty bucket.
struct BucketRow {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t count = 0;
  std::optional<double> both;

  bool operator==(const BucketRow&) const = default;
};

inline const std::vector<std::size_t> kDefaultBucketEdges{1, 3, 6, 11};

// Edges are the lower bounds of consecutive buckets and must be strictly
// increasing and positive. A bucket starting at 1 is prepended when the first
// edge is above 1 so that every instance lands somewhere.
std::vector<BucketRow> distance_buckets(std::span<const Prediction> predictions,
                                        std::span<const text::WrdInstance> golds,
                                        std::span<const std::size_t> edges = kDefaultBucketEdges);

// Expected Both-accuracy of guessing uniformly among ordered pairs, i.e. the
// mean of 1 / (N (N - 1)) over the set, and the standard error of an observed
// accuracy under that null.
struct ChanceBaseline {
  double mean = 0.0;
  double standard_error = 0.0;

  // |observed - mean| <= sigmas * standard_error
  bool consistent(double observed, double sigmas = 2.0) const;
  bool operator==(const ChanceBaseline&) const = default;
};

ChanceBaseline chance_baseline(std::span<const text::WrdInstance> golds);

}  // namespace wrd::eval

#include "wrd/evaluation/metrics.hpp"

#include <cmath>
#include <string>

#include "wrd/error.hpp"

namespace wrd::eval {

namespace {

std::size_t gold_distance(const text::WrdInstance& g) {
  return g.insert_idx > g.orig_idx ? g.insert_idx - g.orig_idx : g.orig_idx - g.insert_idx;
}

void check_lengths(std::span<const Prediction> predictions, std::span<const text::WrdInstance> golds) {
  if (predictions.size() != golds.size()) {
    throw InputError(std::to_string(predictions.size()) + " predictions for " + std::to_string(golds.size()) +
                     " gold instances");
  }
}

}  // namespace

Accuracy score(std::span<const Prediction> predictions, std::span<const text::WrdInstance> golds) {
  check_lengths(predictions, golds);
  if (golds.empty()) throw InputError("cannot score an empty set");
  std::size_t insert = 0, orig = 0, both = 0;
  for (std::size_t k = 0; k < golds.size(); ++k) {
    const bool i_ok = predictions[k].first == golds[k].insert_idx;
    const bool o_ok = predictions[k].second == golds[k].orig_idx;
    insert += i_ok;
    orig += o_ok;
    both += i_ok && o_ok;
  }
  const double n = static_cast<double>(golds.size());
  return {static_cast<double>(insert) / n, static_cast<double>(orig) / n, static_cast<double>(both) / n,
          golds.size()};
}

std::vector<BucketRow> distance_buckets(std::span<const Prediction> predictions,
                                        std::span<const text::WrdInstance> golds, std::span<const std::size_t> edges) {
  check_lengths(predictions, golds);
  if (edges.empty()) throw ConfigError("bucket edges must not be empty");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k] == 0) throw ConfigError("bucket edges must be positive distances");
    if (k > 0 && edges[k] <= edges[k - 1]) throw ConfigError("bucket edges must be strictly increasing");
  }
  std::vector<std::size_t> lows;
  if (edges.front() > 1) lows.push_back(1);
  lows.insert(lows.end(), edges.begin(), edges.end());

  std::vector<BucketRow> rows;
  for (std::size_t k = 0; k < lows.size(); ++k) rows.push_back({lows[k], k + 1 < lows.size() ? lows[k + 1] : 0, 0, {}});
  std::vector<std::size_t> correct(rows.size(), 0);
  for (std::size_t k = 0; k < golds.size(); ++k) {
    const std::size_t dist = gold_distance(golds[k]);
    std::size_t b = rows.size() - 1;
    while (b > 0 && dist < rows[b].lo) --b;
    ++rows[b].count;
    correct[b] += predictions[k].first == golds[k].insert_idx && predictions[k].second == golds[k].orig_idx;
  }
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (rows[b].count > 0) rows[b].both = static_cast<double>(correct[b]) / static_cast<double>(rows[b].count);
  }
  return rows;
}

bool ChanceBaseline::consistent(double observed, double sigmas) const {
  return std::abs(observed - mean) <= sigmas * standard_error;
}

ChanceBaseline chance_baseline(std::span<const text::WrdInstance> golds) {
  if (golds.empty()) throw InputError("chance baseline of an empty set");
  double sum = 0.0, var = 0.0;
  for (const auto& g : golds) {
    const double n = static_cast<double>(g.size());
    const double p = 1.0 / (n * (n - 1.0));
    sum += p;
    var += p * (1.0 - p);
  }
  const double m = static_cast<double>(golds.size());
  return {sum / m, std::sqrt(var) / m};
}

}  // namespace wrd::eval

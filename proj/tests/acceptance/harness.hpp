#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "wrd/encoders/config.hpp"
#include "wrd/numerics/rng.hpp"
#include "wrd/numerics/tensor.hpp"
#include "wrd/textdata/dataset.hpp"
#include "wrd/textdata/vocabulary.hpp"

namespace wrd::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

std::vector<Criterion> all_criteria();

// Shared fixtures.
std::filesystem::path data_dir();
std::filesystem::path scratch_dir(const std::string& name);  // emptied on each call
const std::vector<std::string>& corpus_lines();
text::WrdDataset corpus_dataset(text::SplitCounts counts, std::uint64_t seed);
text::Vocabulary vocab_of(std::span<const text::WrdInstance> instances);
num::Tensor random_tensor(num::Shape shape, num::Rng& rng, double lo = -1.0, double hi = 1.0);
// Random-weighted sum of y, so every output entry reaches the loss.
num::Tensor weighted_sum(const num::Tensor& y, std::uint64_t seed);

double seconds_since(std::chrono::steady_clock::time_point start);
std::string fmt(const char* format, ...);

Outcome criterion_gradients();
Outcome criterion_data_generation();
Outcome criterion_permutation_collapse();
Outcome criterion_causality();
Outcome criterion_overfit();
Outcome criterion_trend();
Outcome criterion_frozen_probe();
Outcome criterion_metric_algebra();
Outcome criterion_determinism();

}  // namespace wrd::acceptance

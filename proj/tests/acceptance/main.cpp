// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: wrd_acceptance [criterion numbers...]   (no arguments runs all)
// Lines are also appended to acceptance_summary.txt in the working directory.

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "harness.hpp"
#include "wrd/numerics/ops.hpp"

namespace wrd::acceptance {

namespace fs = std::filesystem;

std::vector<Criterion> all_criteria() {
  return {
      {1, "gradient oracle", criterion_gradients},
      {2, "data-generation oracle", criterion_data_generation},
      {3, "permutation equivariance and position-ablation collapse", criterion_permutation_collapse},
      {4, "causality", criterion_causality},
      {5, "overfit sanity", criterion_overfit},
      {6, "convergence trend", criterion_trend},
      {7, "frozen-probe integrity", criterion_frozen_probe},
      {8, "metric algebra", criterion_metric_algebra},
      {9, "determinism", criterion_determinism},
  };
}

fs::path data_dir() { return WRD_DATA_DIR; }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wrd_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::vector<std::string>& corpus_lines() {
  static const std::vector<std::string> lines = text::read_lines(data_dir() / "lee_sentences.txt");
  return lines;
}

text::WrdDataset corpus_dataset(text::SplitCounts counts, std::uint64_t seed) {
  text::DatasetOptions o;
  o.counts = counts;
  return text::generate_dataset(corpus_lines(), o, seed);
}

text::Vocabulary vocab_of(std::span<const text::WrdInstance> instances) {
  std::vector<text::Sentence> s;
  s.reserve(instances.size());
  for (const auto& i : instances) s.push_back(i.tokens);
  return text::Vocabulary::build(s, 20000);
}

num::Tensor random_tensor(num::Shape shape, num::Rng& rng, double lo, double hi) {
  std::vector<double> v(num::numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return num::Tensor::constant(std::move(shape), std::move(v));
}

num::Tensor weighted_sum(const num::Tensor& y, std::uint64_t seed) {
  num::Rng rng(seed);
  return num::sum(num::mul(y, random_tensor(y.shape(), rng)));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

}  // namespace wrd::acceptance

int main(int argc, char** argv) {
  using namespace wrd::acceptance;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  std::ofstream summary("acceptance_summary.txt", std::ios::app);
  bool all_pass = true;
  for (const auto& c : all_criteria()) {
    if (!wanted.empty() && !wanted.count(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const std::string line = fmt("criterion %d %s: %s (%.1fs) %s", c.number, outcome.pass ? "PASS" : "FAIL", c.title,
                                 seconds_since(start), outcome.detail.c_str());
    std::cout << line << std::endl;
    summary << line << std::endl;
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}

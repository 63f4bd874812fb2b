#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wrd/textdata/instance.hpp"

namespace wrd::text {

struct SplitCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

struct DatasetOptions {
  SplitCounts counts;
  std::size_t max_len = kDefaultMaxLen;
  // Share of distinct source lines reserved for each held-out split.
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  // Instances per independently seeded shard.
  std::size_t shard_size = 4096;
};

// Distinct eligible source sentences assigned to each split.
struct SplitPools {
  std::vector<Sentence> train;
  std::vector<Sentence> valid;
  std::vector<Sentence> test;
};

struct WrdDataset {
  std::vector<WrdInstance> train;
  std::vector<WrdInstance> valid;
  std::vector<WrdInstance> test;
};

// Keeps lines of length [2, max_len] with at least two distinct tokens,
// deduplicates them, and partitions them disjointly across splits. Held-out
// pools are only carved out for splits with a nonzero count.
SplitPools partition_corpus(std::span<const std::string> lines, const DatasetOptions& options,
                            std::uint64_t seed);

// Draws counts.{train,valid,test} instances, sampling source sentences with
// replacement from each split's pool. Fully determined by (lines, options,
// seed). Throws InputError when a requested split has no sentences.
WrdDataset generate_dataset(std::span<const std::string> lines, const DatasetOptions& options,
                            std::uint64_t seed);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// JSON Lines: {"tokens": [...], "insert": i, "orig": o, "src": "..."}
std::string to_json_line(const WrdInstance& inst);
WrdInstance from_json_line(const std::string& line);
void write_instances(const std::filesystem::path& path, std::span<const WrdInstance> instances);
std::vector<WrdInstance> read_instances(const std::filesystem::path& path);

}  // namespace wrd::text

#include "wrd/textdata/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "wrd/error.hpp"

namespace wrd::text {

namespace {

constexpr std::uint64_t kPartitionStream = 1000;

std::size_t held_out_size(std::size_t requested, double fraction, std::size_t distinct) {
  if (requested == 0) return 0;
  const auto share = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(distinct)));
  return std::clamp<std::size_t>(share, 1, distinct);
}

std::vector<WrdInstance> sample_split(const std::vector<Sentence>& pool, std::size_t count,
                                      const DatasetOptions& options, const num::Rng& split_rng,
                                      const char* name) {
  std::vector<WrdInstance> out;
  if (count == 0) return out;
  if (pool.empty()) throw InputError(std::string("split '") + name + "' has no eligible sentences");
  out.reserve(count);
  const std::size_t shard_size = std::max<std::size_t>(options.shard_size, 1);
  for (std::size_t shard = 0; shard * shard_size < count; ++shard) {
    num::Rng rng = split_rng.fork(shard);
    const std::size_t end = std::min(count, (shard + 1) * shard_size);
    for (std::size_t k = shard * shard_size; k < end; ++k) {
      const Sentence& sentence = pool[static_cast<std::size_t>(rng.uniform_index(pool.size()))];
      out.push_back(generate_instance(sentence, rng, options.max_len));
    }
  }
  return out;
}

}  // namespace

SplitPools partition_corpus(std::span<const std::string> lines, const DatasetOptions& options,
                            std::uint64_t seed) {
  std::vector<Sentence> distinct;
  std::unordered_set<std::string> seen;
  for (const std::string& line : lines) {
    Sentence tokens = tokenize(line);
    if (tokens.size() < 2 || tokens.size() > options.max_len) continue;
    if (std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return t == tokens[0]; })) continue;
    if (!seen.insert(join(tokens)).second) continue;
    distinct.push_back(std::move(tokens));
  }

  num::Rng rng = num::Rng(seed).fork(kPartitionStream);
  rng.shuffle(std::span<Sentence>(distinct));

  const std::size_t n_valid = held_out_size(options.counts.valid, options.valid_fraction, distinct.size());
  const std::size_t n_test =
      held_out_size(options.counts.test, options.test_fraction, distinct.size() - n_valid);
  SplitPools pools;
  auto it = distinct.begin();
  pools.valid.assign(std::make_move_iterator(it), std::make_move_iterator(it + static_cast<std::ptrdiff_t>(n_valid)));
  it += static_cast<std::ptrdiff_t>(n_valid);
  pools.test.assign(std::make_move_iterator(it), std::make_move_iterator(it + static_cast<std::ptrdiff_t>(n_test)));
  it += static_cast<std::ptrdiff_t>(n_test);
  pools.train.assign(std::make_move_iterator(it), std::make_move_iterator(distinct.end()));
  return pools;
}

WrdDataset generate_dataset(std::span<const std::string> lines, const DatasetOptions& options,
                            std::uint64_t seed) {
  if (options.max_len < 2) throw ConfigError("max_len must be at least 2");
  const SplitPools pools = partition_corpus(lines, options, seed);
  const num::Rng root(seed);
  WrdDataset data;
  data.train = sample_split(pools.train, options.counts.train, options, root.fork(0), "train");
  data.valid = sample_split(pools.valid, options.counts.valid, options, root.fork(1), "valid");
  data.test = sample_split(pools.test, options.counts.test, options, root.fork(2), "test");
  return data;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string to_json_line(const WrdInstance& inst) {
  nlohmann::ordered_json j;
  j["tokens"] = inst.tokens;
  j["insert"] = inst.insert_idx;
  j["orig"] = inst.orig_idx;
  j["src"] = inst.source_line;
  return j.dump();
}

WrdInstance from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed instance line: ") + e.what());
  }
  WrdInstance inst;
  try {
    inst.tokens = j.at("tokens").get<Sentence>();
    inst.insert_idx = j.at("insert").get<std::size_t>();
    inst.orig_idx = j.at("orig").get<std::size_t>();
    inst.source_line = j.value("src", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("instance line is missing a field: ") + e.what());
  }
  if (inst.tokens.size() < 2 || inst.insert_idx >= inst.size() || inst.orig_idx >= inst.size() ||
      inst.insert_idx == inst.orig_idx) {
    throw InstanceError("instance labels (" + std::to_string(inst.insert_idx) + ", " +
                        std::to_string(inst.orig_idx) + ") invalid for length " + std::to_string(inst.size()));
  }
  return inst;
}

void write_instances(const std::filesystem::path& path, std::span<const WrdInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& inst : instances) out << to_json_line(inst) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<WrdInstance> read_instances(const std::filesystem::path& path) {
  std::vector<WrdInstance> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(from_json_line(line));
    } catch (const UsageError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace wrd::text

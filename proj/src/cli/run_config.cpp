#include "wrd/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wrd/error.hpp"

namespace wrd::cli {

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys{
      // data
      {"corpus", "", "source text, one tokenized sentence per line"},
      {"data", "", "dataset directory holding train/valid/test .jsonl"},
      {"out", "", "output directory"},
      {"train_count", "50000", "training instances to generate"},
      {"valid_count", "1000", "validation instances to generate"},
      {"test_count", "1000", "test instances to generate"},
      {"max_len", "80", "longest sentence kept, in tokens"},
      {"max_vocab", "20000", "vocabulary size cap, reserved entries included"},
      // encoder
      {"arch", "san", "encoder architecture: rnn, san or disan"},
      {"layers", "2", "encoder layers"},
      {"dim", "64", "model width"},
      {"heads", "4", "attention heads"},
      {"ffn_dim", "256", "feed-forward inner width"},
      {"pos_emb", "auto", "positional encoding: true, false or auto (off for rnn)"},
      {"independent_heads", "false", "score the original position without the popped word"},
      // training
      {"regime", "wrd_cotrain", "wrd_cotrain, frozen_probe or proxy_pretrain"},
      {"batch_size", "64", "sentences per step"},
      {"max_steps", "20000", "optimizer steps"},
      {"seed", "1", "random seed"},
      {"dropout", "0.1", "dropout rate"},
      {"eval_interval", "500", "steps between validation passes"},
      {"warmup_steps", "4000", "learning-rate warmup steps"},
      {"lr_scale", "1", "multiplier on the learning-rate schedule"},
      {"target_train_both", "", "stop once training Both-accuracy reaches this"},
      {"proxy_objective", "reversal", "proxy task: reversal, copy or denoise"},
      {"denoise_rate", "0.15", "token corruption rate of the denoise proxy"},
      // probing and evaluation
      {"checkpoint", "", "model checkpoint manifest"},
      {"head", "", "probe-head checkpoint manifest"},
      {"dump", "", "representation dump for the training split"},
      {"valid_dump", "", "representation dump for the scored split"},
      {"layer", "", "probe layer index, or all"},
      {"split", "test", "split to score or dump: train, valid or test"},
      {"buckets", "1,3,6,11", "distance bucket lower edges"},
      {"label", "", "row label in reports"},
      {"random_dim", "0", "write random vectors of this width instead of encoder outputs"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : known_keys()) values_.emplace(std::string(k.key), std::string(k.default_value));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    try {
      config.set(key, trim(std::string_view(body).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
  explicit_[key] = true;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

bool RunConfig::is_explicit(const std::string& key) const { return explicit_.count(key) > 0; }

std::string RunConfig::require(const std::string& key) const {
  const std::string& v = get(key);
  if (v.empty()) throw ConfigError("missing required key '" + key + "'");
  return v;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

std::size_t RunConfig::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }
int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::optional<double> RunConfig::get_optional_double(const std::string& key) const {
  if (get(key).empty()) return std::nullopt;
  return get_double(key);
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  std::stringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : known_keys()) {
    const std::string key(k.key);
    out += key + " = " + values_.at(key) + "\n";
  }
  return out;
}

}  // namespace wrd::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wrd::cli {

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

// Every key a run can set, in echo order.
const std::vector<KeySpec>& known_keys();

// Flat key/value run configuration. Text form: one `key = value` per line,
// `#` starts a comment, blank lines are ignored. Unknown keys are errors.
class RunConfig {
 public:
  RunConfig();  // all defaults

  static RunConfig parse(std::string_view text, const std::string& origin = "config");
  static RunConfig load(const std::filesystem::path& path);

  // Throws ConfigError for an unknown key.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  // True when the key was set by a file or flag rather than defaulted.
  bool is_explicit(const std::string& key) const;

  // Typed reads; malformed values raise ConfigError naming the key.
  std::string require(const std::string& key) const;  // non-empty
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  // Every key in known_keys() order, `key = value` per line.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace wrd::cli

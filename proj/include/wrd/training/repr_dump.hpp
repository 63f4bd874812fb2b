#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrd/textdata/instance.hpp"
#include "wrd/training/model.hpp"

namespace wrd::train {

// Per-token representation vectors for a list of instances, stored in
// instance order. Record i holds lengths[i] rows of `dim` values.
class ReprDump {
 public:
  ReprDump() = default;
  ReprDump(std::size_t dim, std::string producer);

  std::size_t dim() const { return dim_; }
  const std::string& producer() const { return producer_; }
  std::size_t size() const { return lengths_.size(); }
  const std::vector<std::size_t>& lengths() const { return lengths_; }
  std::span<const double> values() const { return values_; }

  // `rows` is [length x dim] row-major.
  void append(std::span<const double> rows, std::size_t length);
  std::span<const double> record(std::size_t i) const;

 private:
  std::size_t dim_ = 0;
  std::string producer_;
  std::vector<std::size_t> lengths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

// JSON manifest {"format", "dim", "records", "producer", "lengths", "blob"}
// plus a sibling .bin blob of little-endian doubles.
void write_dump(const std::filesystem::path& path, const ReprDump& dump);
ReprDump read_dump(const std::filesystem::path& path);

// Throws AlignmentError naming the first instance whose record is missing or
// has a token count different from the instance, or when the width differs
// from `expected_dim` (if given).
void check_alignment(const ReprDump& dump, std::span<const text::WrdInstance> instances,
                     std::optional<std::size_t> expected_dim = std::nullopt);

// Eval-mode encoder outputs at `layer` (default: last) for every instance.
ReprDump dump_encoder(const Model& model, std::span<const text::WrdInstance> instances,
                      std::optional<std::size_t> layer = std::nullopt, std::size_t batch_size = 64);

// I.i.d. standard normal vectors; the random-representation control.
ReprDump random_dump(std::span<const text::WrdInstance> instances, std::size_t dim, std::uint64_t seed);

}  // namespace wrd::train

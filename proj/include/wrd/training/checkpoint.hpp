#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wrd/training/model.hpp"

namespace wrd::train {

using Metadata = std::map<std::string, std::string>;

// A checkpoint is a JSON manifest at `path` plus a sibling blob
// (`path` with extension .bin) of little-endian 64-bit floats, one array per
// named tensor in manifest order.
void save_model(const std::filesystem::path& path, const Model& model, const Metadata& metadata = {});
Model load_model(const std::filesystem::path& path, Metadata* metadata = nullptr);

// Output-layer-only checkpoint written by frozen probing.
void save_detector(const std::filesystem::path& path, const det::DetectorParams& params,
                   const Metadata& metadata = {});
det::DetectorParams load_detector(const std::filesystem::path& path, Metadata* metadata = nullptr);

// Little-endian byte image of the tensor values, in order.
std::vector<std::uint8_t> tensor_bytes(std::span<const Tensor> tensors);
// FNV-1a 64 of tensor_bytes, as 16 hex digits.
std::string fingerprint(std::span<const Tensor> tensors);
std::string fingerprint_text(const std::string& text);

// Blob helpers shared with representation dumps.
void write_doubles(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t expected_count);

}  // namespace wrd::train

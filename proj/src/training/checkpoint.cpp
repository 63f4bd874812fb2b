#include "wrd/training/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "wrd/error.hpp"

namespace wrd::train {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

void append_le(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

double read_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

fs::path blob_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Json config_json(const enc::EncoderConfig& c) {
  Json j;
  j["arch"] = std::string(enc::to_string(c.arch));
  j["num_layers"] = c.num_layers;
  j["model_dim"] = c.model_dim;
  j["num_heads"] = c.num_heads;
  j["ffn_dim"] = c.ffn_dim;
  j["use_position_encoding"] = c.use_position_encoding;
  j["dropout"] = c.dropout;
  j["vocab_size"] = c.vocab_size;
  return j;
}

enc::EncoderConfig config_from_json(const Json& j) {
  enc::EncoderConfig c;
  c.arch = enc::parse_arch(j.at("arch").get<std::string>());
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.use_position_encoding = j.at("use_position_encoding").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  return c;
}

void save_named(const fs::path& path, Json header, const enc::NamedTensors& named, const Metadata& metadata) {
  Json entries = Json::array();
  std::vector<double> values;
  for (const auto& [name, t] : named) {
    entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", values.size()}});
    values.insert(values.end(), t.data().begin(), t.data().end());
  }
  header["metadata"] = Json(metadata);
  header["blob"] = blob_path(path).filename().string();
  header["tensors"] = std::move(entries);
  write_doubles(blob_path(path), values);
  write_text(path, header.dump(2) + "\n");
}

// Loads the tensors of a manifest as parameters keyed by name.
std::map<std::string, Tensor> load_named(const fs::path& path, const Json& header) {
  std::size_t total = 0;
  for (const auto& e : header.at("tensors")) total += num::numel(e.at("shape").get<num::Shape>());
  const std::vector<double> values = read_doubles(path.parent_path() / header.at("blob").get<std::string>(), total);
  std::map<std::string, Tensor> out;
  for (const auto& e : header.at("tensors")) {
    const auto shape = e.at("shape").get<num::Shape>();
    const auto offset = e.at("offset").get<std::size_t>();
    const std::size_t n = num::numel(shape);
    if (offset + n > values.size()) throw InputError(path.string() + ": tensor extends past the blob");
    out.emplace(e.at("name").get<std::string>(),
                Tensor::parameter(shape, std::vector<double>(values.begin() + offset, values.begin() + offset + n)));
  }
  return out;
}

Json open_manifest(const fs::path& path, const std::string& kind) {
  Json header = read_json(path);
  if (header.value("format", "") != "wrd-checkpoint" || header.value("kind", "") != kind) {
    throw InputError(path.string() + " is not a " + kind + " checkpoint");
  }
  if (header.value("version", 0) != kFormatVersion) throw InputError(path.string() + ": unsupported version");
  return header;
}

// Moves each tensor of `into` from `loaded`, checking names and shapes.
void assign(const fs::path& path, enc::NamedTensors into, std::map<std::string, Tensor>& loaded) {
  for (auto& [name, t] : into) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw InputError(path.string() + ": missing tensor " + name);
    if (it->second.shape() != t.shape()) {
      throw InputError(path.string() + ": tensor " + name + " has shape " + num::shape_str(it->second.shape()) +
                       ", expected " + num::shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(it->second.data().begin(), it->second.data().end(), dst.begin());
    loaded.erase(it);
  }
  if (!loaded.empty()) throw InputError(path.string() + ": unexpected tensor " + loaded.begin()->first);
}

Metadata metadata_of(const Json& header) {
  return header.contains("metadata") ? header.at("metadata").get<Metadata>() : Metadata{};
}

}  // namespace

void write_doubles(const fs::path& path, std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) append_le(bytes, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> read_doubles(const fs::path& path, std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  if (bytes.size() != expected_count * 8) {
    throw InputError(path.string() + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(expected_count * 8));
  }
  std::vector<double> values(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) values[i] = read_le(bytes.data() + 8 * i);
  return values;
}

void save_model(const fs::path& path, const Model& model, const Metadata& metadata) {
  Json header;
  header["format"] = "wrd-checkpoint";
  header["version"] = kFormatVersion;
  header["kind"] = "model";
  header["config"] = config_json(model.config);
  header["independent_heads"] = model.detector.independent_heads();
  header["vocab"] = model.vocab.tokens();
  save_named(path, std::move(header), model.named(), metadata);
}

Model load_model(const fs::path& path, Metadata* metadata) {
  const Json header = open_manifest(path, "model");
  enc::EncoderConfig config;
  std::vector<std::string> tokens;
  try {
    config = config_from_json(header.at("config"));
    tokens = header.at("vocab").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  num::Rng rng(0);
  Model model = Model::init(config, text::Vocabulary::from_tokens(std::move(tokens)), rng,
                            header.value("independent_heads", false));
  auto loaded = load_named(path, header);
  assign(path, model.named(), loaded);
  if (metadata) *metadata = metadata_of(header);
  return model;
}

void save_detector(const fs::path& path, const det::DetectorParams& params, const Metadata& metadata) {
  Json header;
  header["format"] = "wrd-checkpoint";
  header["version"] = kFormatVersion;
  header["kind"] = "detector";
  header["model_dim"] = params.dim();
  header["independent_heads"] = params.independent_heads();
  save_named(path, std::move(header), params.named(), metadata);
}

det::DetectorParams load_detector(const fs::path& path, Metadata* metadata) {
  const Json header = open_manifest(path, "detector");
  num::Rng rng(0);
  det::DetectorParams params = det::DetectorParams::init(header.at("model_dim").get<std::size_t>(), rng,
                                                         header.value("independent_heads", false));
  auto loaded = load_named(path, header);
  assign(path, params.named(), loaded);
  if (metadata) *metadata = metadata_of(header);
  return params;
}

std::vector<std::uint8_t> tensor_bytes(std::span<const Tensor> tensors) {
  std::vector<std::uint8_t> bytes;
  for (const Tensor& t : tensors)
    for (double v : t.data()) append_le(bytes, v);
  return bytes;
}

namespace {

std::string fnv1a_hex(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string fingerprint(std::span<const Tensor> tensors) {
  const auto bytes = tensor_bytes(tensors);
  return fnv1a_hex(bytes.data(), bytes.size());
}

std::string fingerprint_text(const std::string& text) {
  return fnv1a_hex(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

}  // namespace wrd::train

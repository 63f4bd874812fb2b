#include "wrd/training/repr_dump.hpp"

#include <fstream>
#include <numeric>

#include <json.hpp>

#include "wrd/error.hpp"
#include "wrd/numerics/tensor.hpp"
#include "wrd/training/checkpoint.hpp"

namespace wrd::train {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

ReprDump::ReprDump(std::size_t dim, std::string producer) : dim_(dim), producer_(std::move(producer)) {
  if (dim == 0) throw DimensionError("a representation dump needs a positive width");
}

void ReprDump::append(std::span<const double> rows, std::size_t length) {
  if (rows.size() != length * dim_) {
    throw DimensionError("record of " + std::to_string(length) + " tokens needs " + std::to_string(length * dim_) +
                         " values, got " + std::to_string(rows.size()));
  }
  offsets_.push_back(values_.size());
  lengths_.push_back(length);
  values_.insert(values_.end(), rows.begin(), rows.end());
}

std::span<const double> ReprDump::record(std::size_t i) const {
  if (i >= size()) throw InputError("dump has no record " + std::to_string(i));
  return std::span<const double>(values_).subspan(offsets_[i], lengths_[i] * dim_);
}

void write_dump(const fs::path& path, const ReprDump& dump) {
  fs::path blob = path;
  blob.replace_extension(".bin");
  write_doubles(blob, dump.values());
  Json header;
  header["format"] = "wrd-repr-dump";
  header["dim"] = dump.dim();
  header["records"] = dump.size();
  header["producer"] = dump.producer();
  header["lengths"] = dump.lengths();
  header["blob"] = blob.filename().string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

ReprDump read_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  Json header;
  std::size_t dim = 0, records = 0;
  std::vector<std::size_t> lengths;
  std::string producer, blob;
  try {
    header = Json::parse(in);
    if (header.value("format", "") != "wrd-repr-dump") throw InputError(path.string() + " is not a representation dump");
    dim = header.at("dim").get<std::size_t>();
    records = header.at("records").get<std::size_t>();
    lengths = header.at("lengths").get<std::vector<std::size_t>>();
    producer = header.value("producer", "");
    blob = header.at("blob").get<std::string>();
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (lengths.size() != records) throw InputError(path.string() + ": record count disagrees with lengths");
  const std::size_t tokens = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  const std::vector<double> values = read_doubles(path.parent_path() / blob, tokens * dim);
  ReprDump dump(dim, producer);
  std::size_t offset = 0;
  for (std::size_t len : lengths) {
    dump.append(std::span<const double>(values).subspan(offset, len * dim), len);
    offset += len * dim;
  }
  return dump;
}

void check_alignment(const ReprDump& dump, std::span<const text::WrdInstance> instances,
                     std::optional<std::size_t> expected_dim) {
  if (expected_dim && dump.dim() != *expected_dim) {
    throw AlignmentError("dump width " + std::to_string(dump.dim()) + " does not match the expected width " +
                         std::to_string(*expected_dim));
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (i >= dump.size()) {
      throw AlignmentError("dump has " + std::to_string(dump.size()) + " records; instance " + std::to_string(i) +
                           " has none");
    }
    if (dump.lengths()[i] != instances[i].size()) {
      throw AlignmentError("instance " + std::to_string(i) + " has " + std::to_string(instances[i].size()) +
                           " tokens but its dump record has " + std::to_string(dump.lengths()[i]) + " vectors");
    }
  }
  if (dump.size() != instances.size()) {
    throw AlignmentError("dump has " + std::to_string(dump.size()) + " records for " +
                         std::to_string(instances.size()) + " instances");
  }
}

ReprDump dump_encoder(const Model& model, std::span<const text::WrdInstance> instances,
                      std::optional<std::size_t> layer, std::size_t batch_size) {
  const std::size_t index = layer.value_or(model.config.num_layers);
  if (index > model.config.num_layers) {
    throw ConfigError("layer " + std::to_string(index) + " does not exist in a " +
                      std::to_string(model.config.num_layers) + "-layer encoder");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  const std::size_t d = model.config.model_dim;
  ReprDump dump(d, std::string(enc::to_string(model.config.arch)) + " layer " + std::to_string(index));
  num::NoGradGuard no_grad;
  std::vector<std::size_t> ordinals;
  for (std::size_t start = 0; start < instances.size(); start += batch_size) {
    ordinals.resize(std::min(batch_size, instances.size() - start));
    std::iota(ordinals.begin(), ordinals.end(), start);
    const Batch batch = make_batch(instances, ordinals, model.vocab);
    const auto out = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::eval);
    const auto values = out.per_layer[index].data();
    const std::size_t len = batch.seqs.layout.seq_len;
    for (std::size_t b = 0; b < ordinals.size(); ++b) {
      const std::size_t n = batch.seqs.layout.lengths[b];
      dump.append(values.subspan(b * len * d, n * d), n);
    }
  }
  return dump;
}

ReprDump random_dump(std::span<const text::WrdInstance> instances, std::size_t dim, std::uint64_t seed) {
  num::Rng rng(seed);
  ReprDump dump(dim, "random normal");
  std::vector<double> rows;
  for (const auto& inst : instances) {
    rows.resize(inst.size() * dim);
    for (double& v : rows) v = rng.normal();
    dump.append(rows, inst.size());
  }
  return dump;
}

}  // namespace wrd::train

#include "wrd/training/model.hpp"

#include <algorithm>

#include "wrd/error.hpp"

namespace wrd::train {

Model Model::init(enc::EncoderConfig config, text::Vocabulary vocab, num::Rng& rng, bool independent_heads) {
  config.vocab_size = vocab.size();
  config.validate();
  Model m{config, std::move(vocab), {}, {}};
  m.encoder = enc::EncoderParams::init(m.config, rng);
  m.detector = det::DetectorParams::init(m.config.model_dim, rng, independent_heads);
  return m;
}

enc::NamedTensors Model::named() const {
  enc::NamedTensors out = encoder.named();
  for (auto& entry : detector.named()) out.push_back(std::move(entry));
  return out;
}

std::vector<Tensor> Model::tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

Batch make_batch(std::span<const text::WrdInstance> instances, std::span<const std::size_t> ordinals,
                 const text::Vocabulary& vocab) {
  if (ordinals.empty()) throw InputError("cannot assemble an empty batch");
  std::vector<std::vector<std::size_t>> ids;
  Batch batch;
  for (std::size_t k : ordinals) {
    if (k >= instances.size()) throw InputError("instance ordinal " + std::to_string(k) + " out of range");
    const auto& inst = instances[k];
    if (inst.insert_idx >= inst.size() || inst.orig_idx >= inst.size()) {
      throw InstanceError("instance " + std::to_string(k) + " has labels outside its tokens");
    }
    ids.push_back(vocab.encode(inst.tokens));
    batch.insert.push_back(inst.insert_idx);
    batch.orig.push_back(inst.orig_idx);
    batch.ordinals.push_back(k);
  }
  batch.seqs = enc::SequenceBatch::pad(ids);
  return batch;
}

std::vector<std::vector<double>> snapshot(std::span<const Tensor> params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const Tensor& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore(std::span<Tensor> params, const std::vector<std::vector<double>>& values) {
  if (params.size() != values.size()) throw DimensionError("snapshot holds a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].mutable_data();
    if (dst.size() != values[i].size()) throw DimensionError("snapshot entry " + std::to_string(i) + " has the wrong size");
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace wrd::train

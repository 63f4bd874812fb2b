#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wrd/detector/detector.hpp"
#include "wrd/encoders/encoder.hpp"
#include "wrd/textdata/instance.hpp"
#include "wrd/textdata/vocabulary.hpp"

namespace wrd::train {

using num::Tensor;

// Encoder plus WRD output layer, with the vocabulary the encoder was built on.
struct Model {
  enc::EncoderConfig config;
  text::Vocabulary vocab;
  enc::EncoderParams encoder;
  det::DetectorParams detector;

  // config.vocab_size is overwritten with vocab.size().
  static Model init(enc::EncoderConfig config, text::Vocabulary vocab, num::Rng& rng,
                    bool independent_heads = false);

  enc::NamedTensors named() const;  // encoder.* then detector.*
  std::vector<Tensor> tensors() const;
};

// A padded batch of instances with their gold labels.
struct Batch {
  enc::SequenceBatch seqs;
  std::vector<std::size_t> insert;
  std::vector<std::size_t> orig;
  std::vector<std::size_t> ordinals;  // positions in the source instance list
};

Batch make_batch(std::span<const text::WrdInstance> instances, std::span<const std::size_t> ordinals,
                 const text::Vocabulary& vocab);

// Copies every parameter value, in order.
std::vector<std::vector<double>> snapshot(std::span<const Tensor> params);
void restore(std::span<Tensor> params, const std::vector<std::vector<double>>& values);

}  // namespace wrd::train

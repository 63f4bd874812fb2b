#include "wrd/detector/detector.hpp"

#include <cmath>

#include "wrd/error.hpp"
#include "wrd/numerics/init.hpp"

namespace wrd::det {

DetectorParams DetectorParams::init(std::size_t d, num::Rng& rng, bool independent_heads) {
  DetectorParams p;
  p.w_i = num::xavier_uniform(d, d, rng);
  p.u_i = num::xavier_uniform(d, 1, rng);
  p.u_i = Tensor::parameter({d}, {p.u_i.data().begin(), p.u_i.data().end()});
  p.w_q = num::xavier_uniform(d, d, rng);
  p.w_k = num::xavier_uniform(d, d, rng);
  if (independent_heads) {
    const Tensor u = num::xavier_uniform(d, 1, rng);
    p.u_o = Tensor::parameter({d}, {u.data().begin(), u.data().end()});
  }
  return p;
}

enc::NamedTensors DetectorParams::named() const {
  enc::NamedTensors out{{"detector.w_i", w_i}, {"detector.u_i", u_i}, {"detector.w_q", w_q}, {"detector.w_k", w_k}};
  if (u_o.defined()) out.emplace_back("detector.u_o", u_o);
  return out;
}

std::vector<Tensor> DetectorParams::tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

num::Mask position_mask(const enc::SequenceLayout& layout) {
  return num::Mask::prefix(layout.batch, layout.seq_len, layout.lengths);
}

namespace {

void check_instance_lengths(const enc::SequenceLayout& layout) {
  layout.validate();
  for (std::size_t len : layout.lengths) {
    if (len < 2) throw InstanceError("the detector needs sequences of at least two tokens");
  }
}

Tensor as_column(const Tensor& v) { return num::reshape(v, {v.size(), 1}); }

Tensor pointer_logits(const Tensor& h, const Tensor& w, const Tensor& u, const enc::SequenceLayout& layout) {
  const Tensor scores = num::matmul(num::tanh(num::matmul(h, w)), as_column(u));
  return num::reshape(scores, {layout.batch, layout.seq_len});
}

}  // namespace

Tensor insert_logits(const Tensor& h, const DetectorParams& params, const enc::SequenceLayout& layout) {
  check_instance_lengths(layout);
  return pointer_logits(h, params.w_i, params.u_i, layout);
}

Tensor insert_distribution(const Tensor& h, const DetectorParams& params, const enc::SequenceLayout& layout) {
  return num::masked_softmax(insert_logits(h, params, layout), position_mask(layout));
}

Tensor popped_embedding(const Tensor& h, const Tensor& p_insert, const DetectorParams& params) {
  return num::segment_weighted_sum(p_insert, num::matmul(h, params.w_q));
}

Tensor orig_logits(const Tensor& h, const Tensor& popped, const DetectorParams& params) {
  const double factor = 1.0 / std::sqrt(static_cast<double>(params.dim()));
  return num::segment_dot(popped, num::matmul(h, params.w_k), factor);
}

Tensor orig_distribution(const Tensor& h, const Tensor& popped, const DetectorParams& params,
                         const enc::SequenceLayout& layout) {
  return num::masked_softmax(orig_logits(h, popped, params), position_mask(layout));
}

DetectorOutput detect(const Tensor& h_in, const DetectorParams& params, const enc::SequenceLayout& layout,
                      double dropout, num::Rng* rng) {
  check_instance_lengths(layout);
  if (h_in.rank() != 2 || h_in.dim(0) != layout.rows() || h_in.dim(1) != params.dim()) {
    throw DimensionError("detector input " + num::shape_str(h_in.shape()) + " does not match " +
                         std::to_string(layout.rows()) + " rows of width " + std::to_string(params.dim()));
  }
  Tensor h = h_in;
  if (dropout > 0.0) {
    if (rng == nullptr) throw ConfigError("detector dropout needs an Rng");
    h = num::dropout(h, dropout, *rng, true);
  }
  const num::Mask mask = position_mask(layout);
  DetectorOutput out;
  out.layout = layout;
  out.insert_logits = pointer_logits(h, params.w_i, params.u_i, layout);
  out.p_insert = num::masked_softmax(out.insert_logits, mask);
  out.popped_embedding = popped_embedding(h, out.p_insert, params);
  if (params.independent_heads()) {
    out.orig_logits = pointer_logits(h, params.w_k, params.u_o, layout);
  } else {
    out.orig_logits = orig_logits(h, out.popped_embedding, params);
  }
  out.p_orig = num::masked_softmax(out.orig_logits, mask);
  return out;
}

Tensor wrd_loss(const DetectorOutput& out, std::span<const std::size_t> gold_insert,
                std::span<const std::size_t> gold_orig) {
  const std::size_t batch = out.layout.batch;
  if (gold_insert.size() != batch || gold_orig.size() != batch) {
    throw InstanceError("wrd_loss: label count does not match batch size " + std::to_string(batch));
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (gold_insert[b] >= out.layout.lengths[b] || gold_orig[b] >= out.layout.lengths[b]) {
      throw InstanceError("gold index outside sequence " + std::to_string(b) + " of length " +
                          std::to_string(out.layout.lengths[b]));
    }
  }
  const Tensor total = num::add(num::nll_with_floor(out.p_insert, gold_insert, kProbabilityFloor),
                                num::nll_with_floor(out.p_orig, gold_orig, kProbabilityFloor));
  return num::scale(total, 1.0 / static_cast<double>(batch));
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> decode(const DetectorOutput& out) {
  const auto& layout = out.layout;
  std::vector<std::pair<std::size_t, std::size_t>> preds;
  preds.reserve(layout.batch);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const std::size_t off = b * layout.seq_len, len = layout.lengths[b];
    preds.emplace_back(argmax(out.p_insert.data().subspan(off, len)), argmax(out.p_orig.data().subspan(off, len)));
  }
  return preds;
}

}  // namespace wrd::det

#include "wrd/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "wrd/error.hpp"
#include "wrd/numerics/init.hpp"
#include "wrd/numerics/ops.hpp"
#include "wrd/numerics/optim.hpp"

namespace wrd::train {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::wrd_cotrain: return "wrd_cotrain";
    case Regime::frozen_probe: return "frozen_probe";
    case Regime::proxy_pretrain: return "proxy_pretrain";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::wrd_cotrain, Regime::frozen_probe, Regime::proxy_pretrain})
    if (name == to_string(r)) return r;
  throw ConfigError("unknown regime '" + std::string(name) + "' (wrd_cotrain, frozen_probe, proxy_pretrain)");
}

std::string_view to_string(ProxyObjective objective) {
  switch (objective) {
    case ProxyObjective::reversal: return "reversal";
    case ProxyObjective::copy: return "copy";
    case ProxyObjective::denoise: return "denoise";
  }
  return "?";
}

ProxyObjective parse_proxy_objective(std::string_view name) {
  for (ProxyObjective o : {ProxyObjective::reversal, ProxyObjective::copy, ProxyObjective::denoise})
    if (name == to_string(o)) return o;
  throw ConfigError("unknown proxy objective '" + std::string(name) + "' (reversal, copy, denoise)");
}

void TrainConfig::validate(std::size_t num_layers) const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_steps == 0) throw ConfigError("max_steps must be positive");
  if (eval_interval == 0) throw ConfigError("eval_interval must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (warmup_steps <= 0) throw ConfigError("warmup_steps must be positive");
  if (!(lr_scale > 0.0)) throw ConfigError("lr_scale must be positive");
  if (!(denoise_rate >= 0.0 && denoise_rate <= 1.0)) throw ConfigError("denoise_rate must lie in [0, 1]");
  if (probe_layer && *probe_layer > num_layers) {
    throw ConfigError("probe_layer " + std::to_string(*probe_layer) + " must be at most " +
                      std::to_string(num_layers));
  }
}

void write_curve(const std::filesystem::path& path, std::span<const CurvePoint> curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,train_loss,valid_insert_acc,valid_orig_acc,valid_both_acc\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", p.step, p.train_loss, p.valid.insert,
                  p.valid.orig, p.valid.both);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

using StepFn = std::function<Tensor(std::span<const std::size_t> ordinals, num::Rng& dropout_rng)>;
// Returns true to stop training.
using EvalFn = std::function<bool(std::size_t step, double mean_loss)>;

}  // namespace

std::vector<std::vector<std::size_t>> plan_epoch(std::span<const std::size_t> lengths, std::size_t batch_size,
                                                 num::Rng& rng) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t window = batch_size * kBucketBatches;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(start + window, order.size()));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch_size, order.size())));
  }
  rng.shuffle(std::span<std::vector<std::size_t>>(batches));
  return batches;
}

namespace {

// Shared optimization loop: length-bucketed minibatches reshuffled every
// epoch, Adam with the warmup schedule, periodic evaluation.
std::size_t run_loop(std::span<Tensor> params, std::span<const std::size_t> lengths, std::size_t model_dim,
                     const TrainConfig& config, const StepFn& step_fn, const EvalFn& eval_fn) {
  if (lengths.empty()) throw InputError("the training set is empty");
  const num::Rng root(config.seed);
  num::Rng shuffle_rng = root.fork(1);
  num::Rng dropout_rng = root.fork(2);
  std::vector<std::vector<std::size_t>> batches;
  std::size_t cursor = 0;

  num::AdamState adam;
  const num::LrSchedule schedule{static_cast<int>(model_dim), config.warmup_steps};
  double loss_sum = 0.0;
  std::size_t loss_steps = 0;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    if (cursor >= batches.size()) {
      batches = plan_epoch(lengths, config.batch_size, shuffle_rng);
      cursor = 0;
    }
    const std::span<const std::size_t> ordinals = batches[cursor++];

    for (Tensor& p : params) p.zero_grad();
    Tensor loss = step_fn(ordinals, dropout_rng);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "non-finite loss " << value << " at step " << step << "; batch instances";
      for (std::size_t k : ordinals) msg << ' ' << k;
      throw NumericError(msg.str());
    }
    loss.backward();
    num::adam_step(params, adam, config.lr_scale * schedule.rate(step));
    loss_sum += value;
    ++loss_steps;

    if (step % config.eval_interval == 0 || step == config.max_steps) {
      const bool stop = eval_fn(step, loss_sum / static_cast<double>(loss_steps));
      loss_sum = 0.0;
      loss_steps = 0;
      if (stop) return step;
    }
  }
  return config.max_steps;
}

template <typename T>
std::vector<std::size_t> lengths_of(std::span<const T> items) {
  std::vector<std::size_t> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.size());
  return out;
}

// Evaluation batches over instances sorted by length; results are written
// back by ordinal, so the order only affects padding.
template <typename T>
std::vector<std::vector<std::size_t>> eval_batches(std::span<const T> items, std::size_t batch_size) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].size() < items[b].size(); });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch_size, order.size())));
  }
  return batches;
}

// Tracks the best validation point and the stopping target.
struct Tracker {
  const TrainConfig& config;
  std::span<Tensor> params;
  TrainResult result;
  std::vector<std::vector<double>> best;

  bool record(std::size_t step, double loss, std::optional<eval::Accuracy> valid,
              const std::function<eval::Accuracy()>& train_acc) {
    CurvePoint point{step, loss, valid.value_or(eval::Accuracy{})};
    result.curve.push_back(point);
    if (config.on_eval) config.on_eval(point);
    if (valid && (best.empty() || valid->both > result.best_valid.both)) {
      result.best_valid = *valid;
      result.best_step = step;
      best = snapshot(params);
    }
    if (config.target_train_both) {
      result.last_train = train_acc();
      if (result.last_train->both >= *config.target_train_both) return true;
    }
    return false;
  }

  void finish(std::size_t steps) {
    result.steps = steps;
    if (!best.empty()) restore(params, best);
  }
};

}  // namespace

std::vector<eval::Prediction> predict(const Model& model, std::span<const text::WrdInstance> instances,
                                      std::size_t batch_size) {
  num::NoGradGuard no_grad;
  std::vector<eval::Prediction> preds(instances.size());
  for (const auto& ordinals : eval_batches(instances, batch_size)) {
    const Batch batch = make_batch(instances, ordinals, model.vocab);
    const auto h = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::eval).final();
    const auto decoded = det::decode(det::detect(h, model.detector, batch.seqs.layout));
    for (std::size_t b = 0; b < ordinals.size(); ++b) preds[ordinals[b]] = decoded[b];
  }
  return preds;
}

TrainResult train_wrd(Model& model, std::span<const text::WrdInstance> train, std::span<const text::WrdInstance> valid,
                      const TrainConfig& config) {
  config.validate(model.config.num_layers);
  model.config.dropout = config.dropout;
  std::vector<Tensor> params = model.tensors();
  Tracker tracker{config, params, {}, {}};

  auto step_fn = [&](std::span<const std::size_t> ordinals, num::Rng& rng) {
    const Batch batch = make_batch(train, ordinals, model.vocab);
    const auto h = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::train, &rng).final();
    const auto out = det::detect(h, model.detector, batch.seqs.layout, config.dropout, &rng);
    return det::wrd_loss(out, batch.insert, batch.orig);
  };
  auto eval_fn = [&](std::size_t step, double loss) {
    std::optional<eval::Accuracy> v;
    if (!valid.empty()) v = eval::score(predict(model, valid, config.batch_size), valid);
    return tracker.record(step, loss, v, [&] { return eval::score(predict(model, train, config.batch_size), train); });
  };
  tracker.finish(run_loop(params, lengths_of(train), model.config.model_dim, config, step_fn, eval_fn));
  return tracker.result;
}

ReprSource ReprSource::from_encoder(const Model& model, std::optional<std::size_t> layer) {
  ReprSource s;
  s.model_ = &model;
  s.layer_ = layer.value_or(model.config.num_layers);
  if (s.layer_ > model.config.num_layers) {
    throw ConfigError("layer " + std::to_string(s.layer_) + " does not exist in a " +
                      std::to_string(model.config.num_layers) + "-layer encoder");
  }
  return s;
}

ReprSource ReprSource::from_dump(const ReprDump& dump) {
  ReprSource s;
  s.dump_ = &dump;
  return s;
}

std::size_t ReprSource::dim() const { return model_ ? model_->config.model_dim : dump_->dim(); }

Batch ReprSource::batch(std::span<const text::WrdInstance> instances, std::span<const std::size_t> ordinals) const {
  static const text::Vocabulary kUnkOnly = text::Vocabulary::from_tokens({"<pad>", "<unk>"});
  return make_batch(instances, ordinals, model_ ? model_->vocab : kUnkOnly);
}

Tensor ReprSource::gather(std::span<const text::WrdInstance> instances, const Batch& batch) const {
  num::NoGradGuard no_grad;
  if (model_) {
    const auto out = enc::encode(batch.seqs, model_->encoder, model_->config, enc::Mode::eval);
    return out.per_layer[layer_].detach();
  }
  const auto& layout = batch.seqs.layout;
  const std::size_t d = dump_->dim();
  std::vector<double> values(layout.rows() * d, 0.0);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const std::size_t k = batch.ordinals[b];
    if (k >= dump_->size() || dump_->lengths()[k] != instances[k].size()) {
      throw AlignmentError("dump record " + std::to_string(k) + " does not match instance " + std::to_string(k));
    }
    const auto rec = dump_->record(k);
    std::copy(rec.begin(), rec.end(), values.begin() + static_cast<std::ptrdiff_t>(b * layout.seq_len * d));
  }
  return Tensor::constant({layout.rows(), d}, std::move(values));
}

std::vector<eval::Prediction> predict_probe(const ReprSource& source, const det::DetectorParams& head,
                                            std::span<const text::WrdInstance> instances, std::size_t batch_size) {
  num::NoGradGuard no_grad;
  std::vector<eval::Prediction> preds(instances.size());
  for (const auto& ordinals : eval_batches(instances, batch_size)) {
    const Batch batch = source.batch(instances, ordinals);
    const auto decoded = det::decode(det::detect(source.gather(instances, batch), head, batch.seqs.layout));
    for (std::size_t b = 0; b < ordinals.size(); ++b) preds[ordinals[b]] = decoded[b];
  }
  return preds;
}

det::DetectorParams init_probe_head(std::size_t d, const TrainConfig& config, bool independent_heads) {
  num::Rng rng = num::Rng(config.seed).fork(6);
  return det::DetectorParams::init(d, rng, independent_heads);
}

TrainResult probe_frozen(const ReprSource& train_source, const ReprSource& valid_source, det::DetectorParams& head,
                         std::span<const text::WrdInstance> train, std::span<const text::WrdInstance> valid,
                         const TrainConfig& config) {
  config.validate(config.probe_layer.value_or(0));
  if (train_source.dim() != head.dim() || valid_source.dim() != head.dim()) {
    throw AlignmentError("representation width " + std::to_string(train_source.dim()) +
                         " does not match the detector width " + std::to_string(head.dim()));
  }
  std::vector<Tensor> params = head.tensors();
  Tracker tracker{config, params, {}, {}};
  auto step_fn = [&](std::span<const std::size_t> ordinals, num::Rng& rng) {
    const Batch batch = train_source.batch(train, ordinals);
    const auto out = det::detect(train_source.gather(train, batch), head, batch.seqs.layout, config.dropout, &rng);
    return det::wrd_loss(out, batch.insert, batch.orig);
  };
  auto eval_fn = [&](std::size_t step, double loss) {
    std::optional<eval::Accuracy> v;
    if (!valid.empty()) v = eval::score(predict_probe(valid_source, head, valid, config.batch_size), valid);
    return tracker.record(step, loss, v, [&] {
      return eval::score(predict_probe(train_source, head, train, config.batch_size), train);
    });
  };
  tracker.finish(run_loop(params, lengths_of(train), head.dim(), config, step_fn, eval_fn));
  return tracker.result;
}

ProxyHead ProxyHead::init(std::size_t d, std::size_t vocab_size, num::Rng& rng) {
  ProxyHead h;
  h.wq = num::xavier_uniform(d, d, rng);
  h.wk = num::xavier_uniform(d, d, rng);
  h.wv = num::xavier_uniform(d, d, rng);
  h.wo = num::xavier_uniform(d, vocab_size, rng);
  h.bias = Tensor::parameter({vocab_size}, std::vector<double>(vocab_size, 0.0));
  return h;
}

std::vector<Tensor> ProxyHead::tensors() const { return {wq, wk, wv, wo, bias}; }

ProxyExample make_proxy_example(std::span<const std::size_t> ids, ProxyObjective objective, double denoise_rate,
                                num::Rng& rng) {
  ProxyExample ex{{ids.begin(), ids.end()}, {ids.begin(), ids.end()}};
  switch (objective) {
    case ProxyObjective::reversal:
      std::reverse(ex.target.begin(), ex.target.end());
      break;
    case ProxyObjective::copy:
      break;
    case ProxyObjective::denoise:
      for (auto& id : ex.input)
        if (rng.uniform() < denoise_rate) id = text::Vocabulary::kUnk;
      break;
  }
  return ex;
}

namespace {

struct ProxyBatch {
  enc::SequenceBatch seqs;
  std::vector<std::size_t> targets;  // one per row, PAD on padding
  std::vector<double> weights;       // 1 on real rows
};

ProxyBatch make_proxy_batch(const Model& model, std::span<const text::Sentence> sentences,
                            std::span<const std::size_t> ordinals, const TrainConfig& config, num::Rng& rng) {
  std::vector<std::vector<std::size_t>> inputs;
  std::vector<std::vector<std::size_t>> targets;
  for (std::size_t k : ordinals) {
    auto ex = make_proxy_example(model.vocab.encode(sentences[k]), config.proxy_objective, config.denoise_rate, rng);
    inputs.push_back(std::move(ex.input));
    targets.push_back(std::move(ex.target));
  }
  ProxyBatch out;
  out.seqs = enc::SequenceBatch::pad(inputs);
  const std::size_t len = out.seqs.layout.seq_len;
  out.targets.assign(out.seqs.layout.rows(), text::Vocabulary::kPad);
  out.weights.assign(out.seqs.layout.rows(), 0.0);
  for (std::size_t b = 0; b < targets.size(); ++b) {
    for (std::size_t n = 0; n < targets[b].size(); ++n) {
      out.targets[b * len + n] = targets[b][n];
      out.weights[b * len + n] = 1.0;
    }
  }
  return out;
}

Tensor proxy_logits(const Tensor& h, const ProxyHead& head, const enc::SequenceLayout& layout) {
  static const std::vector<enc::HeadDirection> kOneHead{enc::HeadDirection::all};
  const Tensor context = enc::multi_head_attention(num::matmul(h, head.wq), num::matmul(h, head.wk),
                                                   num::matmul(h, head.wv), kOneHead, layout);
  return num::add_bias(num::matmul(num::add(h, context), head.wo), head.bias);
}

double proxy_accuracy_impl(const Model& model, const ProxyHead& head, std::span<const text::Sentence> sentences,
                           const TrainConfig& config) {
  num::NoGradGuard no_grad;
  num::Rng corrupt = num::Rng(config.seed).fork(3);
  std::size_t correct = 0, total = 0;
  for (const auto& ordinals : eval_batches(sentences, config.batch_size)) {
    const ProxyBatch batch = make_proxy_batch(model, sentences, ordinals, config, corrupt);
    const auto h = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::eval).final();
    const Tensor logits = proxy_logits(h, head, batch.seqs.layout);
    const std::size_t v = logits.dim(1);
    for (std::size_t r = 0; r < batch.targets.size(); ++r) {
      if (batch.weights[r] == 0.0) continue;
      const auto row = logits.data().subspan(r * v, v);
      correct += det::argmax(row) == batch.targets[r];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

double proxy_accuracy(const Model& model, const ProxyHead& head, std::span<const text::Sentence> sentences,
                      const TrainConfig& config) {
  return proxy_accuracy_impl(model, head, sentences, config);
}

ProxyResult pretrain_proxy(Model& model, std::span<const text::Sentence> train, std::span<const text::Sentence> valid,
                           const TrainConfig& config) {
  config.validate(model.config.num_layers);
  for (const auto& s : train)
    if (s.empty()) throw InputError("proxy pretraining got an empty sentence");
  model.config.dropout = config.dropout;
  num::Rng head_rng = num::Rng(config.seed).fork(4);
  ProxyHead head = ProxyHead::init(model.config.model_dim, model.vocab.size(), head_rng);
  std::vector<Tensor> params = model.encoder.tensors();
  for (const Tensor& t : head.tensors()) params.push_back(t);

  num::Rng corrupt = num::Rng(config.seed).fork(5);
  ProxyResult result;
  auto step_fn = [&](std::span<const std::size_t> ordinals, num::Rng& rng) {
    const ProxyBatch batch = make_proxy_batch(model, train, ordinals, config, corrupt);
    const auto h = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::train, &rng).final();
    const Tensor logits = proxy_logits(h, head, batch.seqs.layout);
    const double tokens = std::accumulate(batch.weights.begin(), batch.weights.end(), 0.0);
    return num::scale(num::softmax_cross_entropy(logits, batch.targets, batch.weights), 1.0 / tokens);
  };
  auto eval_fn = [&](std::size_t step, double loss) {
    const double acc = valid.empty() ? 0.0 : proxy_accuracy_impl(model, head, valid, config);
    result.curve.push_back({step, loss, acc});
    result.final_valid_acc = acc;
    return false;
  };
  result.steps = run_loop(params, lengths_of(train), model.config.model_dim, config, step_fn, eval_fn);
  return result;
}

}  // namespace wrd::train

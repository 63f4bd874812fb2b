#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wrd/evaluation/metrics.hpp"
#include "wrd/training/model.hpp"
#include "wrd/training/repr_dump.hpp"

namespace wrd::train {

enum class Regime { wrd_cotrain, frozen_probe, proxy_pretrain };
enum class ProxyObjective { reversal, copy, denoise };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);
std::string_view to_string(ProxyObjective objective);
ProxyObjective parse_proxy_objective(std::string_view name);

struct CurvePoint {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous point
  eval::Accuracy valid;     // zero count when there is no validation set

  bool operator==(const CurvePoint&) const = default;
};

struct TrainConfig {
  Regime regime = Regime::wrd_cotrain;
  std::size_t batch_size = 64;
  std::size_t max_steps = 20000;
  std::uint64_t seed = 1;
  double dropout = 0.1;
  std::size_t eval_interval = 500;
  std::optional<std::size_t> probe_layer;
  int warmup_steps = 4000;
  double lr_scale = 1.0;
  // Stop at the first evaluation point whose training Both-accuracy (eval
  // mode) reaches this value.
  std::optional<double> target_train_both;
  ProxyObjective proxy_objective = ProxyObjective::reversal;
  double denoise_rate = 0.15;
  // Called after each evaluation point; not part of the run's identity.
  std::function<void(const CurvePoint&)> on_eval;

  // Throws ConfigError. `num_layers` bounds probe_layer.
  void validate(std::size_t num_layers) const;
};


struct TrainResult {
  std::vector<CurvePoint> curve;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  eval::Accuracy best_valid;
  std::optional<eval::Accuracy> last_train;  // set when target_train_both is
};

// One epoch of minibatches over instances of the given lengths: a fresh
// shuffle, then within each window of kBucketBatches batches the instances
// are sorted by length so a batch pads little, then the batch order is
// shuffled. Every ordinal appears in exactly one batch.
inline constexpr std::size_t kBucketBatches = 16;
std::vector<std::vector<std::size_t>> plan_epoch(std::span<const std::size_t> lengths, std::size_t batch_size,
                                                 num::Rng& rng);

// CSV: step,train_loss,valid_insert_acc,valid_orig_acc,valid_both_acc
void write_curve(const std::filesystem::path& path, std::span<const CurvePoint> curve);

// Eval-mode argmax decoding with the model's own encoder and detector.
std::vector<eval::Prediction> predict(const Model& model, std::span<const text::WrdInstance> instances,
                                      std::size_t batch_size = 64);

// Co-trains encoder and detector on wrd_loss with Adam and the warmup
// schedule. The training order is reshuffled every epoch. Validation
// accuracy is logged every eval_interval steps and at the last step; on
// return the model holds the parameters of the best validation point
// (earliest on ties), or the final ones without a validation set.
// A non-finite loss raises NumericError naming the step and batch.
TrainResult train_wrd(Model& model, std::span<const text::WrdInstance> train,
                      std::span<const text::WrdInstance> valid, const TrainConfig& config);

// Where frozen representations come from: an encoder (at probe_layer, or
// its last layer) or a dump aligned with the instance list.
class ReprSource {
 public:
  static ReprSource from_encoder(const Model& model, std::optional<std::size_t> layer);
  static ReprSource from_dump(const ReprDump& dump);

  std::size_t dim() const;
  // Layout and labels for the instances at `ordinals`. Token ids come from
  // the encoder's vocabulary; a dump ignores them.
  Batch batch(std::span<const text::WrdInstance> instances, std::span<const std::size_t> ordinals) const;
  // Padded [B*L x d] constant for the batch's instances.
  Tensor gather(std::span<const text::WrdInstance> instances, const Batch& batch) const;

 private:
  const Model* model_ = nullptr;
  std::size_t layer_ = 0;
  const ReprDump* dump_ = nullptr;
};

std::vector<eval::Prediction> predict_probe(const ReprSource& source, const det::DetectorParams& head,
                                            std::span<const text::WrdInstance> instances,
                                            std::size_t batch_size = 64);

// Fresh output layer for a probe run; a function of (d, seed) only, so a
// probe launched alone and the same probe inside a layer sweep start equal.
det::DetectorParams init_probe_head(std::size_t d, const TrainConfig& config, bool independent_heads = false);

// Trains only `head` on representations from the sources. Dropout applies to
// the representations fed to the head. Same logging and best-point rules as
// train_wrd.
TrainResult probe_frozen(const ReprSource& train_source, const ReprSource& valid_source, det::DetectorParams& head,
                         std::span<const text::WrdInstance> train, std::span<const text::WrdInstance> valid,
                         const TrainConfig& config);

// Token-prediction head used only during proxy pretraining:
//   logits_n = (h_n + Att(h_n Wq, H Wk, H Wv)) Wo + b
struct ProxyHead {
  Tensor wq, wk, wv;  // d x d
  Tensor wo;          // d x V
  Tensor bias;        // V

  static ProxyHead init(std::size_t d, std::size_t vocab_size, num::Rng& rng);
  std::vector<Tensor> tensors() const;
};

// Input ids and per-position targets of one proxy example.
struct ProxyExample {
  std::vector<std::size_t> input;
  std::vector<std::size_t> target;
};
ProxyExample make_proxy_example(std::span<const std::size_t> ids, ProxyObjective objective, double denoise_rate,
                                num::Rng& rng);

struct ProxyPoint {
  std::size_t step = 0;
  double train_loss = 0.0;
  double valid_token_acc = 0.0;
};

struct ProxyResult {
  std::vector<ProxyPoint> curve;
  std::size_t steps = 0;
  double final_valid_acc = 0.0;
};

// Per-token accuracy of the proxy head over every real position.
double proxy_accuracy(const Model& model, const ProxyHead& head, std::span<const text::Sentence> sentences,
                      const TrainConfig& config);

// Trains model.encoder plus a fresh ProxyHead on the configured objective;
// the head is discarded and the detector is left untouched.
ProxyResult pretrain_proxy(Model& model, std::span<const text::Sentence> train, std::span<const text::Sentence> valid,
                           const TrainConfig& config);

}  // namespace wrd::train

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrd/evaluation/metrics.hpp"
#include "wrd/training/trainer.hpp"

namespace wrd::eval {

struct LayerRow {
  std::size_t layer = 0;
  Accuracy accuracy;

  bool operator==(const LayerRow&) const = default;
};

struct ProbeReport {
  std::string model;  // row label, e.g. "SAN"
  std::string split;  // which instances were scored
  Accuracy accuracy;
  std::vector<BucketRow> buckets;
  std::vector<LayerRow> layers;
  std::vector<train::CurvePoint> curve;
  std::optional<ChanceBaseline> chance;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> notes;

  bool operator==(const ProbeReport&) const = default;
};

// Runs probe_frozen at every layer 0..num_layers of `model` with a fresh
// head from init_probe_head, returning the final validation accuracy of each.
std::vector<LayerRow> layer_sweep(const train::Model& model, std::span<const text::WrdInstance> train,
                                  std::span<const text::WrdInstance> valid, const train::TrainConfig& config);

// Throws InputError when both exceeds insert or orig on the report or any of
// its layer rows, or when bucket counts do not sum to the scored count.
void check_report(const ProbeReport& report);

// Table text: a "model insert original both" block with percentages to one
// decimal, then distance-bucket and per-layer blocks when present.
std::string render_tsv(std::span<const ProbeReport> reports);

// Writes `json_path` (full report) and the same path with extension .tsv.
void emit_report(const ProbeReport& report, const std::filesystem::path& json_path);
ProbeReport load_report(const std::filesystem::path& json_path);

}  // namespace wrd::eval

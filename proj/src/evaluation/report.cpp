#include "wrd/evaluation/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "wrd/error.hpp"

namespace wrd::eval {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::vector<LayerRow> layer_sweep(const train::Model& model, std::span<const text::WrdInstance> train_set,
                                  std::span<const text::WrdInstance> valid, const train::TrainConfig& config) {
  if (valid.empty()) throw InputError("a layer sweep needs validation instances");
  std::vector<LayerRow> rows;
  for (std::size_t layer = 0; layer <= model.config.num_layers; ++layer) {
    train::TrainConfig c = config;
    c.probe_layer = layer;
    const auto source = train::ReprSource::from_encoder(model, layer);
    auto head = train::init_probe_head(model.config.model_dim, c, model.detector.independent_heads());
    train::probe_frozen(source, source, head, train_set, valid, c);
    rows.push_back({layer, score(train::predict_probe(source, head, valid, c.batch_size), valid)});
  }
  return rows;
}

void check_report(const ProbeReport& report) {
  auto check = [](const Accuracy& a, const std::string& what) {
    if (a.both > a.insert || a.both > a.orig) throw InputError(what + ": both exceeds insert or original accuracy");
  };
  check(report.accuracy, "report");
  for (const auto& row : report.layers) check(row.accuracy, "layer " + std::to_string(row.layer));
  if (!report.buckets.empty()) {
    std::size_t total = 0;
    for (const auto& b : report.buckets) total += b.count;
    if (total != report.accuracy.count) throw InputError("bucket counts do not sum to the scored count");
  }
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string bucket_label(const BucketRow& b) {
  if (b.hi == 0) return std::to_string(b.lo) + "+";
  if (b.hi == b.lo + 1) return std::to_string(b.lo);
  return std::to_string(b.lo) + "-" + std::to_string(b.hi - 1);
}

Json accuracy_json(const Accuracy& a) {
  return Json{{"insert", a.insert}, {"orig", a.orig}, {"both", a.both}, {"count", a.count}};
}

Accuracy accuracy_from(const Json& j) {
  return {j.at("insert").get<double>(), j.at("orig").get<double>(), j.at("both").get<double>(),
          j.at("count").get<std::size_t>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string render_tsv(std::span<const ProbeReport> reports) {
  std::string out = "model\tinsert\toriginal\tboth\n";
  for (const auto& r : reports) {
    out += r.model + "\t" + pct(r.accuracy.insert) + "\t" + pct(r.accuracy.orig) + "\t" + pct(r.accuracy.both) + "\n";
  }
  for (const auto& r : reports) {
    if (r.buckets.empty()) continue;
    out += "\nmodel\tdistance\tcount\tboth\n";
    for (const auto& b : r.buckets) {
      out += r.model + "\t" + bucket_label(b) + "\t" + std::to_string(b.count) + "\t" + (b.both ? pct(*b.both) : "-") +
             "\n";
    }
  }
  for (const auto& r : reports) {
    if (r.layers.empty()) continue;
    out += "\nmodel\tlayer\tinsert\toriginal\tboth\n";
    for (const auto& l : r.layers) {
      out += r.model + "\t" + std::to_string(l.layer) + "\t" + pct(l.accuracy.insert) + "\t" + pct(l.accuracy.orig) +
             "\t" + pct(l.accuracy.both) + "\n";
    }
  }
  return out;
}

void emit_report(const ProbeReport& report, const fs::path& json_path) {
  check_report(report);
  Json j;
  j["model"] = report.model;
  j["split"] = report.split;
  j["seed"] = report.seed;
  j["config_fingerprint"] = report.config_fingerprint;
  j["accuracy"] = accuracy_json(report.accuracy);
  Json buckets = Json::array();
  for (const auto& b : report.buckets) {
    buckets.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"both", b.both ? Json(*b.both) : Json()}});
  }
  j["buckets"] = std::move(buckets);
  Json layers = Json::array();
  for (const auto& l : report.layers) layers.push_back({{"layer", l.layer}, {"accuracy", accuracy_json(l.accuracy)}});
  j["layers"] = std::move(layers);
  Json curve = Json::array();
  for (const auto& p : report.curve) {
    curve.push_back({{"step", p.step}, {"train_loss", p.train_loss}, {"valid", accuracy_json(p.valid)}});
  }
  j["curve"] = std::move(curve);
  j["chance"] = report.chance ? Json{{"mean", report.chance->mean}, {"standard_error", report.chance->standard_error}}
                              : Json();
  j["notes"] = Json(report.notes);

  write_text(json_path, j.dump(2) + "\n");
  fs::path tsv = json_path;
  tsv.replace_extension(".tsv");
  write_text(tsv, render_tsv(std::span<const ProbeReport>(&report, 1)));
}

ProbeReport load_report(const fs::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw InputError("cannot open " + json_path.string());
  ProbeReport r;
  try {
    const Json j = Json::parse(in);
    r.model = j.at("model").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.accuracy = accuracy_from(j.at("accuracy"));
    for (const auto& b : j.at("buckets")) {
      BucketRow row{b.at("lo").get<std::size_t>(), b.at("hi").get<std::size_t>(), b.at("count").get<std::size_t>(), {}};
      if (!b.at("both").is_null()) row.both = b.at("both").get<double>();
      r.buckets.push_back(row);
    }
    for (const auto& l : j.at("layers")) r.layers.push_back({l.at("layer").get<std::size_t>(), accuracy_from(l.at("accuracy"))});
    for (const auto& p : j.at("curve")) {
      r.curve.push_back({p.at("step").get<std::size_t>(), p.at("train_loss").get<double>(), accuracy_from(p.at("valid"))});
    }
    if (!j.at("chance").is_null()) {
      r.chance = ChanceBaseline{j.at("chance").at("mean").get<double>(), j.at("chance").at("standard_error").get<double>()};
    }
    r.notes = j.at("notes").get<std::map<std::string, std::string>>();
  } catch (const Json::exception& e) {
    throw InputError(json_path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace wrd::eval

#include "wrd/cli/commands.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "wrd/error.hpp"
#include "wrd/evaluation/report.hpp"
#include "wrd/textdata/dataset.hpp"
#include "wrd/training/checkpoint.hpp"
#include "wrd/training/repr_dump.hpp"
#include "wrd/training/trainer.hpp"

namespace wrd::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) != nullptr) return kExitUsage;
  return kExitFailure;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

fs::path prepare_out(const RunConfig& config) {
  const fs::path out = config.require("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_text(out / "config.txt", config.to_text());
  return out;
}

std::string fingerprint(const RunConfig& config) { return train::fingerprint_text(config.to_text()); }

std::string format_accuracy(const eval::Accuracy& a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "insert %.1f  original %.1f  both %.1f  (n=%zu)", 100 * a.insert, 100 * a.orig,
                100 * a.both, a.count);
  return buf;
}

enc::EncoderConfig encoder_config(const RunConfig& config) {
  const enc::Arch arch = enc::parse_arch(config.get("arch"));
  enc::EncoderConfig c = enc::EncoderConfig::desk_default(arch);
  c.num_layers = config.get_size("layers");
  c.model_dim = config.get_size("dim");
  c.num_heads = config.get_size("heads");
  c.ffn_dim = config.get_size("ffn_dim");
  c.dropout = config.get_double("dropout");
  if (config.get("pos_emb") != "auto") c.use_position_encoding = config.get_bool("pos_emb");
  return c;
}

train::TrainConfig train_config(const RunConfig& config, std::ostream& log) {
  train::TrainConfig t;
  t.regime = train::parse_regime(config.get("regime"));
  t.batch_size = config.get_size("batch_size");
  t.max_steps = config.get_size("max_steps");
  t.seed = config.get_u64("seed");
  t.dropout = config.get_double("dropout");
  t.eval_interval = config.get_size("eval_interval");
  t.warmup_steps = config.get_int("warmup_steps");
  t.lr_scale = config.get_double("lr_scale");
  t.target_train_both = config.get_optional_double("target_train_both");
  t.proxy_objective = train::parse_proxy_objective(config.get("proxy_objective"));
  t.denoise_rate = config.get_double("denoise_rate");
  const std::string& layer = config.get("layer");
  if (!layer.empty() && layer != "all") t.probe_layer = config.get_size("layer");
  t.on_eval = [&log](const train::CurvePoint& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "step %zu  loss %.4f  valid both %.1f\n", p.step, p.train_loss, 100 * p.valid.both);
    log << buf << std::flush;
  };
  return t;
}

std::string default_label(const enc::EncoderConfig& c) {
  std::string label = c.arch == enc::Arch::disan ? "DiSAN" : c.arch == enc::Arch::san ? "SAN" : "RNN";
  if (c.arch != enc::Arch::rnn && !c.use_position_encoding) label += "-nopos";
  return label;
}

std::string label_for(const RunConfig& config, const enc::EncoderConfig& c) {
  return config.get("label").empty() ? default_label(c) : config.get("label");
}

std::vector<text::WrdInstance> load_split(const RunConfig& config, const std::string& split) {
  if (split != "train" && split != "valid" && split != "test") {
    throw ConfigError("key 'split' must be train, valid or test, got '" + split + "'");
  }
  const fs::path path = fs::path(config.require("data")) / (split + ".jsonl");
  if (!fs::exists(path)) throw InputError("dataset file " + path.string() + " does not exist");
  return text::read_instances(path);
}

text::Vocabulary vocab_from(std::span<const text::WrdInstance> instances, std::size_t max_vocab) {
  std::vector<text::Sentence> sentences;
  sentences.reserve(instances.size());
  for (const auto& inst : instances) sentences.push_back(inst.tokens);
  return text::Vocabulary::build(sentences, max_vocab);
}

eval::ProbeReport base_report(const RunConfig& config, const std::string& label, const std::string& split) {
  eval::ProbeReport r;
  r.model = label;
  r.split = split;
  r.config_fingerprint = fingerprint(config);
  r.seed = config.get_u64("seed");
  return r;
}

void score_into(eval::ProbeReport& report, std::span<const eval::Prediction> preds,
                std::span<const text::WrdInstance> golds, const RunConfig& config) {
  report.accuracy = eval::score(preds, golds);
  const auto edges = config.get_size_list("buckets");
  report.buckets = eval::distance_buckets(preds, golds, edges);
  report.chance = eval::chance_baseline(golds);
}

}  // namespace

void cmd_gen_data(const RunConfig& config, std::ostream& log) {
  const std::string corpus = config.require("corpus");
  const auto lines = text::read_lines(corpus);
  text::DatasetOptions options;
  options.counts = {config.get_size("train_count"), config.get_size("valid_count"), config.get_size("test_count")};
  options.max_len = config.get_size("max_len");
  const std::uint64_t seed = config.get_u64("seed");
  const auto data = text::generate_dataset(lines, options, seed);
  const fs::path out = prepare_out(config);
  text::write_instances(out / "train.jsonl", data.train);
  text::write_instances(out / "valid.jsonl", data.valid);
  text::write_instances(out / "test.jsonl", data.test);

  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  nlohmann::ordered_json manifest;
  manifest["train"] = data.train.size();
  manifest["valid"] = data.valid.size();
  manifest["test"] = data.test.size();
  manifest["max_len"] = options.max_len;
  manifest["seed"] = seed;
  manifest["corpus_lines"] = lines.size();
  manifest["corpus_fingerprint"] = train::fingerprint_text(joined);
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << data.train.size() << "/" << data.valid.size() << "/" << data.test.size()
      << " instances to " << out.string() << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& log) {
  const auto regime = train::parse_regime(config.get("regime"));
  if (regime == train::Regime::proxy_pretrain) return cmd_pretrain_proxy(config, log);
  if (regime == train::Regime::frozen_probe) return cmd_probe(config, log);

  const auto train_set = load_split(config, "train");
  const auto valid_set = load_split(config, "valid");
  const auto enc_config = encoder_config(config);
  const auto tc = train_config(config, log);
  const fs::path out = prepare_out(config);

  num::Rng init_rng = num::Rng(tc.seed).fork(0);
  auto model = train::Model::init(enc_config, vocab_from(train_set, config.get_size("max_vocab")), init_rng,
                                  config.get_bool("independent_heads"));
  const auto result = train::train_wrd(model, train_set, valid_set, tc);

  train::save_model(out / "model.json", model,
                    {{"regime", "wrd_cotrain"}, {"best_step", std::to_string(result.best_step)},
                     {"config_fingerprint", fingerprint(config)}});
  train::write_curve(out / "curve.csv", result.curve);
  auto report = base_report(config, label_for(config, model.config), "valid");
  report.curve = result.curve;
  if (!valid_set.empty()) score_into(report, train::predict(model, valid_set, tc.batch_size), valid_set, config);
  report.notes["best_step"] = std::to_string(result.best_step);
  report.notes["steps"] = std::to_string(result.steps);
  eval::emit_report(report, out / "report.json");
  log << report.model << " valid: " << format_accuracy(report.accuracy) << "\n";
}

void cmd_pretrain_proxy(const RunConfig& config, std::ostream& log) {
  const auto lines = text::read_lines(config.require("corpus"));
  text::DatasetOptions options;
  options.counts = {1, 1, 0};
  options.max_len = config.get_size("max_len");
  const auto tc = train_config(config, log);
  const auto pools = text::partition_corpus(lines, options, tc.seed);
  const auto enc_config = encoder_config(config);
  const fs::path out = prepare_out(config);

  num::Rng init_rng = num::Rng(tc.seed).fork(0);
  auto model = train::Model::init(enc_config, text::Vocabulary::build(pools.train, config.get_size("max_vocab")),
                                  init_rng, config.get_bool("independent_heads"));
  const auto result = train::pretrain_proxy(model, pools.train, pools.valid, tc);

  char acc[32];
  std::snprintf(acc, sizeof acc, "%.17g", result.final_valid_acc);
  train::save_model(out / "model.json", model,
                    {{"regime", "proxy_pretrain"},
                     {"proxy_objective", std::string(train::to_string(tc.proxy_objective))},
                     {"proxy_valid_token_acc", acc},
                     {"config_fingerprint", fingerprint(config)}});
  std::string csv = "step,train_loss,valid_token_acc\n";
  for (const auto& p : result.curve) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", p.step, p.train_loss, p.valid_token_acc);
    csv += buf;
  }
  write_text(out / "proxy_curve.csv", csv);
  log << "proxy " << train::to_string(tc.proxy_objective) << " valid token accuracy "
      << 100.0 * result.final_valid_acc << "%\n";
}

void cmd_probe(const RunConfig& config, std::ostream& log) {
  const auto train_set = load_split(config, "train");
  const auto valid_set = load_split(config, "valid");
  auto tc = train_config(config, log);
  const bool sweep = config.get("layer") == "all";
  const bool from_dump = !config.get("dump").empty();
  if (from_dump == !config.get("checkpoint").empty()) {
    throw ConfigError("probe needs exactly one of 'checkpoint' or 'dump'");
  }

  eval::ProbeReport report;
  det::DetectorParams head;
  train::TrainResult result;
  if (from_dump) {
    if (sweep) throw ConfigError("'layer = all' needs a checkpoint, not a dump");
    const auto train_dump = train::read_dump(config.get("dump"));
    const auto valid_dump = train::read_dump(config.require("valid_dump"));
    const std::size_t d = config.is_explicit("dim") ? config.get_size("dim") : train_dump.dim();
    train::check_alignment(train_dump, train_set, d);
    train::check_alignment(valid_dump, valid_set, d);
    const fs::path out = prepare_out(config);
    const auto train_src = train::ReprSource::from_dump(train_dump);
    const auto valid_src = train::ReprSource::from_dump(valid_dump);
    head = train::init_probe_head(d, tc, config.get_bool("independent_heads"));
    result = train::probe_frozen(train_src, valid_src, head, train_set, valid_set, tc);
    report = base_report(config, config.get("label").empty() ? "dump" : config.get("label"), "valid");
    score_into(report, train::predict_probe(valid_src, head, valid_set, tc.batch_size), valid_set, config);
    report.notes["producer"] = train_dump.producer();
    train::save_detector(out / "head.json", head, {{"source", "dump"}, {"config_fingerprint", fingerprint(config)}});
  } else {
    const auto model = train::load_model(config.get("checkpoint"));
    tc.validate(model.config.num_layers);
    const fs::path out = prepare_out(config);
    const std::vector<num::Tensor> encoder_tensors = model.encoder.tensors();
    const std::string before = train::fingerprint(encoder_tensors);
    report = base_report(config, label_for(config, model.config), "valid");
    if (sweep) {
      report.layers = eval::layer_sweep(model, train_set, valid_set, tc);
      report.accuracy = report.layers.back().accuracy;
      report.chance = eval::chance_baseline(valid_set);
    } else {
      const auto src = train::ReprSource::from_encoder(model, tc.probe_layer);
      head = train::init_probe_head(model.config.model_dim, tc, config.get_bool("independent_heads"));
      result = train::probe_frozen(src, src, head, train_set, valid_set, tc);
      score_into(report, train::predict_probe(src, head, valid_set, tc.batch_size), valid_set, config);
      const std::size_t layer = tc.probe_layer.value_or(model.config.num_layers);
      train::save_detector(out / "head.json", head,
                           {{"source", "checkpoint"}, {"layer", std::to_string(layer)},
                            {"config_fingerprint", fingerprint(config)}});
    }
    const std::string after = train::fingerprint(encoder_tensors);
    report.notes["encoder_fingerprint_before"] = before;
    report.notes["encoder_fingerprint_after"] = after;
    if (before != after) throw RuntimeFailure("encoder parameters changed during frozen probing");
  }
  const fs::path out = config.get("out");
  report.curve = result.curve;
  if (!result.curve.empty()) train::write_curve(out / "curve.csv", result.curve);
  eval::emit_report(report, out / "report.json");
  for (const auto& row : report.layers) log << "layer " << row.layer << ": " << format_accuracy(row.accuracy) << "\n";
  log << report.model << " probe valid: " << format_accuracy(report.accuracy) << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
  const std::string split = config.get("split");
  const auto golds = load_split(config, split);
  const std::size_t batch = config.get_size("batch_size");
  std::vector<eval::Prediction> preds;
  std::string label;
  if (config.get("head").empty()) {
    const auto model = train::load_model(config.require("checkpoint"));
    preds = train::predict(model, golds, batch);
    label = label_for(config, model.config);
  } else {
    const auto head = train::load_detector(config.get("head"));
    if (!config.get("dump").empty()) {
      const auto dump = train::read_dump(config.get("dump"));
      train::check_alignment(dump, golds, head.dim());
      preds = train::predict_probe(train::ReprSource::from_dump(dump), head, golds, batch);
      label = config.get("label").empty() ? "dump" : config.get("label");
    } else {
      const auto model = train::load_model(config.require("checkpoint"));
      std::optional<std::size_t> layer;
      if (!config.get("layer").empty()) layer = config.get_size("layer");
      const auto src = train::ReprSource::from_encoder(model, layer);
      if (src.dim() != head.dim()) throw AlignmentError("probe head width does not match the encoder width");
      preds = train::predict_probe(src, head, golds, batch);
      label = label_for(config, model.config);
    }
  }
  const fs::path out = prepare_out(config);
  auto report = base_report(config, label, split);
  score_into(report, preds, golds, config);
  eval::emit_report(report, out / "report.json");
  log << label << " " << split << ": " << format_accuracy(report.accuracy) << "\n";
}

void cmd_dump(const RunConfig& config, std::ostream& log) {
  const std::string split = config.get("split");
  const auto instances = load_split(config, split);
  const std::size_t random_dim = config.get_size("random_dim");
  train::ReprDump dump;
  if (random_dim > 0) {
    // each split draws from its own stream
    const std::uint64_t stream = split == "train" ? 0 : split == "valid" ? 1 : 2;
    dump = train::random_dump(instances, random_dim, num::mix_seed(num::mix_seed(config.get_u64("seed"), 7), stream));
  } else {
    const auto model = train::load_model(config.require("checkpoint"));
    std::optional<std::size_t> layer;
    if (!config.get("layer").empty()) layer = config.get_size("layer");
    dump = train::dump_encoder(model, instances, layer, config.get_size("batch_size"));
  }
  const fs::path out = prepare_out(config);
  train::write_dump(out / (split + ".json"), dump);
  log << "wrote " << dump.size() << " records of width " << dump.dim() << " to " << (out / (split + ".json")).string()
      << "\n";
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out_path, std::ostream& log) {
  if (inputs.empty()) throw ConfigError("report needs at least one report file");
  std::vector<eval::ProbeReport> reports;
  for (const auto& in : inputs) {
    reports.push_back(eval::load_report(in));
    eval::check_report(reports.back());
  }
  const std::string table = eval::render_tsv(reports);
  if (!out_path.empty()) write_text(out_path, table);
  log << table;
}

int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  CLI::App app{"Word reordering detection: data generation, training, probing and reporting", "wrd"};
  app.require_subcommand(1);
  std::map<std::string, std::string> overrides;
  std::vector<std::pair<CLI::App*, std::vector<CLI::Option*>>> bound;
  std::string config_path;
  bool no_pos_emb = false;
  bool independent_heads = false;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"gen-data", "generate train/valid/test instance files from a corpus"},
      {"train", "train an encoder and detector (or dispatch on 'regime')"},
      {"pretrain-proxy", "train an encoder on a sequence proxy objective"},
      {"probe", "train only a detector on frozen representations"},
      {"eval", "score a checkpoint on a split and write a report"},
      {"dump", "write per-token representations (or random vectors) for a split"},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "run config file (key = value)");
    std::vector<CLI::Option*> options;
    for (const auto& k : known_keys()) {
      std::string flag = "--" + std::string(k.key);
      for (char& c : flag)
        if (c == '_') c = '-';
      options.push_back(sub->add_option(flag, overrides[std::string(k.key)], std::string(k.help)));
    }
    sub->add_flag("--no-pos-emb", no_pos_emb, "disable positional encoding");
    sub->add_flag("--independent", independent_heads, "same as --independent-heads true");
    bound.emplace_back(sub, std::move(options));
    commands.push_back(sub);
  }
  std::vector<std::string> report_inputs;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "combine report JSON files into one table");
  report->add_option("inputs", report_inputs, "report JSON files")->required();
  report->add_option("--out", report_out, "table output path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    log << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (report->parsed()) {
      cmd_report(report_inputs, report_out, log);
      return kExitOk;
    }
    for (auto& [sub, options] : bound) {
      if (!sub->parsed()) continue;
      RunConfig config = config_path.empty() ? RunConfig() : RunConfig::load(config_path);
      const auto& keys = known_keys();
      for (std::size_t k = 0; k < keys.size(); ++k) {
        if (options[k]->count() > 0) config.set(std::string(keys[k].key), overrides[std::string(keys[k].key)]);
      }
      if (no_pos_emb) config.set("pos_emb", "false");
      if (independent_heads) config.set("independent_heads", "true");
      const std::string name = sub->get_name();
      if (name == "gen-data") cmd_gen_data(config, log);
      else if (name == "train") cmd_train(config, log);
      else if (name == "pretrain-proxy") cmd_pretrain_proxy(config, log);
      else if (name == "probe") cmd_probe(config, log);
      else if (name == "eval") cmd_eval(config, log);
      else if (name == "dump") cmd_dump(config, log);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace wrd::cli

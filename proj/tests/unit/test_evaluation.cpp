#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wrd/error.hpp"
#include "wrd/evaluation/report.hpp"
#include "wrd/textdata/dataset.hpp"

using namespace wrd;
using eval::Prediction;
namespace fs = std::filesystem;

namespace {

text::WrdInstance inst(std::size_t n, std::size_t insert, std::size_t orig) {
  text::WrdInstance w;
  for (std::size_t i = 0; i < n; ++i) w.tokens.push_back("t" + std::to_string(i));
  w.insert_idx = insert;
  w.orig_idx = orig;
  return w;
}

std::vector<text::WrdInstance> random_golds(std::size_t count, num::Rng& rng, std::size_t max_n = 20) {
  std::vector<text::WrdInstance> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = 2 + rng.uniform_index(max_n - 1);
    const std::size_t i = rng.uniform_index(n);
    std::size_t o = rng.uniform_index(n - 1);
    if (o >= i) ++o;
    out.push_back(inst(n, i, o));
  }
  return out;
}

std::vector<Prediction> random_predictions(std::span<const text::WrdInstance> golds, num::Rng& rng) {
  std::vector<Prediction> out;
  for (const auto& g : golds) {
    // mostly right so every outcome combination occurs
    const std::size_t i = rng.uniform() < 0.6 ? g.insert_idx : rng.uniform_index(g.size());
    const std::size_t o = rng.uniform() < 0.6 ? g.orig_idx : rng.uniform_index(g.size());
    out.emplace_back(i, o);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Score, HandCountedExample) {
  const std::vector<text::WrdInstance> golds{inst(4, 1, 3), inst(5, 0, 2), inst(3, 2, 0), inst(6, 5, 1)};
  const std::vector<Prediction> preds{{1, 3}, {0, 1}, {1, 0}, {2, 2}};
  const auto a = eval::score(preds, golds);
  EXPECT_EQ(a.insert, 0.5);
  EXPECT_EQ(a.orig, 0.5);
  EXPECT_EQ(a.both, 0.25);
  EXPECT_EQ(a.count, 4u);
}

TEST(Score, RejectsMismatchedOrEmptyInput) {
  const std::vector<text::WrdInstance> golds{inst(4, 1, 3)};
  const std::vector<Prediction> two{{1, 3}, {0, 1}};
  EXPECT_THROW(eval::score(two, golds), InputError);
  EXPECT_THROW(eval::score({}, {}), InputError);
  EXPECT_THROW(eval::distance_buckets(two, golds), InputError);
}

TEST(Score, BothNeverExceedsEitherAndIsOrderFree) {
  for (int seed = 0; seed < 50; ++seed) {
    num::Rng rng(seed);
    auto golds = random_golds(40, rng);
    auto preds = random_predictions(golds, rng);
    const auto a = eval::score(preds, golds);
    EXPECT_LE(a.both, std::min(a.insert, a.orig));
    EXPECT_GE(a.both, a.insert + a.orig - 1.0 - 1e-12);

    std::vector<std::size_t> perm(golds.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<text::WrdInstance> g2;
    std::vector<Prediction> p2;
    for (std::size_t k : perm) {
      g2.push_back(golds[k]);
      p2.push_back(preds[k]);
    }
    const auto b = eval::score(p2, g2);
    EXPECT_EQ(a.count, b.count);
    EXPECT_NEAR(a.both, b.both, 1e-15);
    EXPECT_NEAR(a.insert, b.insert, 1e-15);
  }
}

TEST(Buckets, PlacesByGoldDistance) {
  // distances 2, 2, 2, 5, 1, 11
  const std::vector<text::WrdInstance> golds{inst(4, 1, 3), inst(5, 0, 2), inst(3, 2, 0),
                                             inst(6, 5, 0), inst(4, 1, 0), inst(12, 0, 11)};
  const std::vector<Prediction> preds{{1, 3}, {0, 1}, {2, 0}, {5, 0}, {0, 0}, {0, 11}};
  const auto rows = eval::distance_buckets(preds, golds);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (eval::BucketRow{1, 3, 4, 0.5}));
  EXPECT_EQ(rows[1], (eval::BucketRow{3, 6, 1, 1.0}));
  EXPECT_EQ(rows[2], (eval::BucketRow{6, 11, 0, std::nullopt}));
  EXPECT_EQ(rows[3], (eval::BucketRow{11, 0, 1, 1.0}));
}

TEST(Buckets, MatchBruteForceAndRecomposeOverall) {
  const std::vector<std::vector<std::size_t>> edge_sets{{1, 3, 6, 11}, {1, 2, 3, 4, 5}, {4, 9}, {1}};
  for (int seed = 0; seed < 30; ++seed) {
    num::Rng rng(200 + seed);
    const auto golds = random_golds(120, rng);
    const auto preds = random_predictions(golds, rng);
    const auto overall = eval::score(preds, golds);
    for (const auto& edges : edge_sets) {
      const auto rows = eval::distance_buckets(preds, golds, edges);
      double recomposed = 0.0;
      std::size_t total = 0;
      for (const auto& row : rows) {
        std::size_t count = 0, hit = 0;
        for (std::size_t k = 0; k < golds.size(); ++k) {
          const auto d = static_cast<std::size_t>(
              std::abs(static_cast<long>(golds[k].insert_idx) - static_cast<long>(golds[k].orig_idx)));
          if (d >= row.lo && (row.hi == 0 || d < row.hi)) {
            ++count;
            hit += preds[k] == Prediction{golds[k].insert_idx, golds[k].orig_idx};
          }
        }
        ASSERT_EQ(row.count, count);
        if (count == 0) {
          EXPECT_FALSE(row.both.has_value());
        } else {
          ASSERT_TRUE(row.both.has_value());
          EXPECT_NEAR(*row.both, static_cast<double>(hit) / static_cast<double>(count), 1e-15);
          recomposed += *row.both * static_cast<double>(count);
        }
        total += count;
      }
      EXPECT_EQ(total, golds.size());
      EXPECT_NEAR(recomposed / static_cast<double>(total), overall.both, 1e-12);
    }
  }
}

TEST(Buckets, PrependsUnitBucketAndValidatesEdges) {
  const std::vector<text::WrdInstance> golds{inst(4, 1, 0), inst(9, 0, 8)};
  const std::vector<Prediction> preds{{1, 0}, {0, 0}};
  const std::vector<std::size_t> edges{4};
  const auto rows = eval::distance_buckets(preds, golds, edges);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (eval::BucketRow{1, 4, 1, 1.0}));
  EXPECT_EQ(rows[1], (eval::BucketRow{4, 0, 1, 0.0}));
  const std::vector<std::size_t> zero{0, 3}, flat{2, 2}, down{5, 3}, none{};
  EXPECT_THROW(eval::distance_buckets(preds, golds, zero), ConfigError);
  EXPECT_THROW(eval::distance_buckets(preds, golds, flat), ConfigError);
  EXPECT_THROW(eval::distance_buckets(preds, golds, down), ConfigError);
  EXPECT_THROW(eval::distance_buckets(preds, golds, none), ConfigError);
}

TEST(Chance, ClosedFormValues) {
  const std::vector<text::WrdInstance> pair{inst(2, 0, 1)};
  EXPECT_EQ(eval::chance_baseline(pair), (eval::ChanceBaseline{0.5, 0.5}));
  // lengths 3 and 4: mean (1/6 + 1/12)/2, se sqrt(5/36 + 11/144)/2 = sqrt(31)/24
  const std::vector<text::WrdInstance> two{inst(3, 0, 1), inst(4, 0, 1)};
  const auto c = eval::chance_baseline(two);
  EXPECT_NEAR(c.mean, 0.125, 1e-15);
  EXPECT_NEAR(c.standard_error, 0.23199018178458422, 1e-15);
  EXPECT_TRUE(c.consistent(0.125 + 2 * c.standard_error - 1e-12));
  EXPECT_FALSE(c.consistent(0.125 + 2 * c.standard_error + 1e-9));
  EXPECT_THROW(eval::chance_baseline({}), InputError);
}

TEST(Chance, UniformGuessingMatchesMean) {
  num::Rng rng(77);
  const auto golds = random_golds(500, rng, 8);
  const auto c = eval::chance_baseline(golds);
  double total = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<Prediction> preds;
    for (const auto& g : golds) {
      const std::size_t i = rng.uniform_index(g.size());
      std::size_t o = rng.uniform_index(g.size() - 1);
      if (o >= i) ++o;
      preds.emplace_back(i, o);
    }
    total += eval::score(preds, golds).both;
  }
  // the mean of `trials` draws has standard error se / sqrt(trials)
  EXPECT_NEAR(total / trials, c.mean, 4.0 * c.standard_error / std::sqrt(static_cast<double>(trials)));
}

TEST(Report, TsvRowsUseOneDecimalPercentages) {
  eval::ProbeReport rnn;
  rnn.model = "RNN";
  rnn.accuracy = {0.784, 0.734, 0.682, 1000};
  eval::ProbeReport san;
  san.model = "SAN";
  san.accuracy = {0.5, 0.25, 0.125, 8};
  san.buckets = {{1, 3, 3, 0.0}, {3, 6, 5, 0.2}, {6, 11, 0, std::nullopt}, {11, 0, 0, std::nullopt}};
  san.layers = {{0, {0.1, 0.05, 0.0, 8}}};
  const std::vector<eval::ProbeReport> rows{rnn, san};
  EXPECT_EQ(eval::render_tsv(rows),
            "model\tinsert\toriginal\tboth\n"
            "RNN\t78.4\t73.4\t68.2\n"
            "SAN\t50.0\t25.0\t12.5\n"
            "\nmodel\tdistance\tcount\tboth\n"
            "SAN\t1-2\t3\t0.0\n"
            "SAN\t3-5\t5\t20.0\n"
            "SAN\t6-10\t0\t-\n"
            "SAN\t11+\t0\t-\n"
            "\nmodel\tlayer\tinsert\toriginal\tboth\n"
            "SAN\t0\t10.0\t5.0\t0.0\n");
}

TEST(Report, EmitAndLoadRoundTripByteIdentically) {
  num::Rng rng(5);
  const auto golds = random_golds(60, rng);
  const auto preds = random_predictions(golds, rng);
  eval::ProbeReport r;
  r.model = "DiSAN";
  r.split = "test";
  r.accuracy = eval::score(preds, golds);
  r.buckets = eval::distance_buckets(preds, golds);
  r.chance = eval::chance_baseline(golds);
  r.curve = {{10, 1.0 / 3.0, r.accuracy}, {20, 0.1, r.accuracy}};
  r.layers = {{1, r.accuracy}};
  r.config_fingerprint = "00ff";
  r.seed = 9;
  r.notes = {{"k", "v"}};

  const fs::path dir = fs::temp_directory_path() / "wrd_eval_report";
  fs::remove_all(dir);
  fs::create_directories(dir);
  eval::emit_report(r, dir / "a.json");
  const auto back = eval::load_report(dir / "a.json");
  EXPECT_EQ(back, r);
  eval::emit_report(back, dir / "b.json");
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_EQ(slurp(dir / "a.tsv"), slurp(dir / "b.tsv"));
  EXPECT_THROW(eval::load_report(dir / "missing.json"), InputError);
  fs::remove_all(dir);
}

TEST(Report, CheckRejectsInconsistentNumbers) {
  eval::ProbeReport r;
  r.accuracy = {0.5, 0.4, 0.45, 10};
  EXPECT_THROW(eval::check_report(r), InputError);
  r.accuracy = {0.5, 0.4, 0.3, 10};
  EXPECT_NO_THROW(eval::check_report(r));
  r.buckets = {{1, 0, 9, 0.3}};
  EXPECT_THROW(eval::check_report(r), InputError);
  r.buckets = {{1, 0, 10, 0.3}};
  r.layers = {{2, {0.1, 0.1, 0.2, 10}}};
  EXPECT_THROW(eval::check_report(r), InputError);
}

TEST(LayerSweep, EachRowEqualsAStandaloneProbe) {
  num::Rng lines_rng(8);
  std::vector<std::string> lines;
  for (int k = 0; k < 150; ++k) {
    std::string s;
    const std::size_t n = 3 + lines_rng.uniform_index(6);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(lines_rng.uniform_index(25));
    lines.push_back(s);
  }
  text::DatasetOptions o;
  o.counts = {100, 30, 0};
  const auto data = text::generate_dataset(lines, o, 3);
  std::vector<text::Sentence> sents;
  for (const auto& i : data.train) sents.push_back(i.tokens);
  auto cfg = enc::EncoderConfig::desk_default(enc::Arch::rnn);
  cfg.num_layers = 2;
  cfg.model_dim = 8;
  cfg.num_heads = 2;
  cfg.ffn_dim = 16;
  num::Rng rng(4);
  const auto model = train::Model::init(cfg, text::Vocabulary::build(sents, 1000), rng);

  train::TrainConfig tc;
  tc.max_steps = 40;
  tc.eval_interval = 20;
  tc.batch_size = 16;
  tc.warmup_steps = 20;
  const auto rows = eval::layer_sweep(model, data.train, data.valid, tc);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t layer = 0; layer < 3; ++layer) {
    auto c = tc;
    c.probe_layer = layer;
    const auto src = train::ReprSource::from_encoder(model, layer);
    auto head = train::init_probe_head(8, c);
    train::probe_frozen(src, src, head, data.train, data.valid, c);
    EXPECT_EQ(rows[layer].layer, layer);
    EXPECT_EQ(rows[layer].accuracy, eval::score(train::predict_probe(src, head, data.valid), data.valid));
  }
}

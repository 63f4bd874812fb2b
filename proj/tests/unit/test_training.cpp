#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "wrd/error.hpp"
#include "wrd/textdata/dataset.hpp"
#include "wrd/training/checkpoint.hpp"
#include "wrd/training/repr_dump.hpp"
#include "wrd/training/trainer.hpp"

using namespace wrd;
namespace fs = std::filesystem;

namespace {

// Sentences of distinct random words over a small alphabet.
std::vector<std::string> toy_lines(std::size_t count, std::size_t min_len, std::size_t max_len, std::uint64_t seed,
                                   std::size_t alphabet = 30) {
  num::Rng rng(seed);
  std::vector<std::string> lines;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = min_len + rng.uniform_index(max_len - min_len + 1);
    std::string line;
    for (std::size_t i = 0; i < n; ++i) line += (i ? " w" : "w") + std::to_string(rng.uniform_index(alphabet));
    lines.push_back(line);
  }
  return lines;
}

enc::EncoderConfig tiny(enc::Arch arch) {
  auto c = enc::EncoderConfig::desk_default(arch);
  c.num_layers = 2;
  c.model_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  return c;
}

text::Vocabulary vocab_of(std::span<const text::WrdInstance> instances) {
  std::vector<text::Sentence> s;
  for (const auto& i : instances) s.push_back(i.tokens);
  return text::Vocabulary::build(s, 1000);
}

struct Fixture {
  text::WrdDataset data;
  text::Vocabulary vocab;
};

Fixture make_fixture(std::size_t train = 120, std::size_t valid = 30) {
  text::DatasetOptions o;
  o.counts = {train, valid, 0};
  auto data = text::generate_dataset(toy_lines(200, 3, 9, 5), o, 11);
  auto vocab = vocab_of(data.train);
  return {std::move(data), std::move(vocab)};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wrd_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

train::TrainConfig quick_config(std::size_t steps) {
  train::TrainConfig tc;
  tc.max_steps = steps;
  tc.eval_interval = 10;
  tc.batch_size = 16;
  tc.warmup_steps = 50;
  return tc;
}

}  // namespace

TEST(Batch, PadsWithPadIdAndRecordsLengths) {
  const auto f = make_fixture();
  const std::vector<std::size_t> ordinals{0, 1, 2};
  const auto batch = train::make_batch(f.data.train, ordinals, f.vocab);
  std::size_t longest = 0;
  for (std::size_t k : ordinals) longest = std::max(longest, f.data.train[k].size());
  EXPECT_EQ(batch.seqs.layout.seq_len, longest);
  for (std::size_t b = 0; b < 3; ++b) {
    const auto& inst = f.data.train[ordinals[b]];
    EXPECT_EQ(batch.seqs.layout.lengths[b], inst.size());
    EXPECT_EQ(batch.insert[b], inst.insert_idx);
    EXPECT_EQ(batch.orig[b], inst.orig_idx);
    for (std::size_t n = inst.size(); n < longest; ++n) EXPECT_EQ(batch.seqs.ids[b * longest + n], text::Vocabulary::kPad);
  }
}

TEST(EpochPlan, PartitionsEveryOrdinalAndReshuffles) {
  num::Rng rng(3);
  std::vector<std::size_t> lengths(1000);
  for (auto& l : lengths) l = 2 + rng.uniform_index(60);
  const auto first = train::plan_epoch(lengths, 32, rng);
  const auto second = train::plan_epoch(lengths, 32, rng);
  for (const auto* plan : {&first, &second}) {
    std::vector<std::size_t> seen;
    for (const auto& b : *plan) {
      EXPECT_LE(b.size(), 32u);
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) ASSERT_EQ(seen[i], i);
  }
  std::set<std::vector<std::size_t>> a(first.begin(), first.end());
  std::size_t shared = 0;
  for (const auto& b : second) shared += a.count(b);
  EXPECT_LT(shared, first.size() / 4);

  // length grouping keeps per-batch padding small relative to random batches
  std::size_t padded = 0, real = 0;
  for (const auto& b : first) {
    std::size_t mx = 0;
    for (std::size_t k : b) {
      mx = std::max(mx, lengths[k]);
      real += lengths[k];
    }
    padded += mx * b.size();
  }
  EXPECT_LT(static_cast<double>(padded) / static_cast<double>(real), 1.2);
}

TEST(TrainWrd, SameSeedGivesIdenticalCurves) {
  const auto f = make_fixture();
  auto run = [&](std::uint64_t seed) {
    num::Rng rng(seed);
    auto m = train::Model::init(tiny(enc::Arch::disan), f.vocab, rng);
    auto tc = quick_config(30);
    tc.seed = seed;
    return train::train_wrd(m, f.data.train, f.data.valid, tc);
  };
  const auto a = run(4), b = run(4), c = run(5);
  ASSERT_EQ(a.curve.size(), 3u);
  EXPECT_EQ(a.curve, b.curve);
  EXPECT_NE(a.curve, c.curve);
  EXPECT_EQ(a.steps, 30u);
}

TEST(TrainWrd, ReturnsBestValidationParameters) {
  const auto f = make_fixture();
  num::Rng rng(2);
  auto m = train::Model::init(tiny(enc::Arch::rnn), f.vocab, rng);
  auto tc = quick_config(60);
  const auto r = train::train_wrd(m, f.data.train, f.data.valid, tc);
  double best = -1.0;
  std::size_t best_step = 0;
  for (const auto& p : r.curve) {
    if (p.valid.both > best) {
      best = p.valid.both;
      best_step = p.step;
    }
  }
  EXPECT_EQ(r.best_step, best_step);
  const auto acc = eval::score(train::predict(m, f.data.valid), f.data.valid);
  EXPECT_EQ(acc, r.best_valid);
}

TEST(TrainWrd, NonFiniteLossAbortsWithStepAndBatch) {
  const auto f = make_fixture();
  num::Rng rng(2);
  auto m = train::Model::init(tiny(enc::Arch::san), f.vocab, rng);
  m.detector.u_i.mutable_data()[0] = std::nan("");
  try {
    train::train_wrd(m, f.data.train, {}, quick_config(5));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch instances"), std::string::npos) << msg;
  }
}

TEST(TrainWrd, RejectsBadConfig) {
  const auto f = make_fixture();
  num::Rng rng(2);
  auto m = train::Model::init(tiny(enc::Arch::san), f.vocab, rng);
  auto tc = quick_config(5);
  tc.probe_layer = 3;
  EXPECT_THROW(train::train_wrd(m, f.data.train, {}, tc), ConfigError);
  tc = quick_config(5);
  tc.batch_size = 0;
  EXPECT_THROW(train::train_wrd(m, f.data.train, {}, tc), ConfigError);
}

TEST(Checkpoint, RoundTripReproducesLossBitExactly) {
  const auto f = make_fixture();
  num::Rng rng(8);
  auto m = train::Model::init(tiny(enc::Arch::disan), f.vocab, rng, true);
  train::train_wrd(m, f.data.train, {}, quick_config(10));
  const auto dir = temp_dir("ckpt");
  train::save_model(dir / "model.json", m, {{"note", "x"}});
  train::Metadata meta;
  const auto back = train::load_model(dir / "model.json", &meta);
  EXPECT_EQ(meta.at("note"), "x");
  EXPECT_EQ(back.config.arch, enc::Arch::disan);
  EXPECT_TRUE(back.detector.independent_heads());
  EXPECT_EQ(back.vocab.tokens(), m.vocab.tokens());
  EXPECT_EQ(train::fingerprint(back.tensors()), train::fingerprint(m.tensors()));

  auto loss_of = [&](const train::Model& model) {
    num::NoGradGuard g;
    std::vector<std::size_t> ord(f.data.valid.size());
    std::iota(ord.begin(), ord.end(), 0);
    const auto batch = train::make_batch(f.data.valid, ord, model.vocab);
    const auto h = enc::encode(batch.seqs, model.encoder, model.config, enc::Mode::eval).final();
    return det::wrd_loss(det::detect(h, model.detector, batch.seqs.layout), batch.insert, batch.orig).item();
  };
  EXPECT_EQ(loss_of(back), loss_of(m));
  EXPECT_EQ(fs::file_size(dir / "model.bin"), train::tensor_bytes(m.tensors()).size());

  train::save_detector(dir / "head.json", m.detector);
  const auto head = train::load_detector(dir / "head.json");
  EXPECT_EQ(train::fingerprint(head.tensors()), train::fingerprint(m.detector.tensors()));
  EXPECT_THROW(train::load_model(dir / "head.json"), InputError);
  fs::remove_all(dir);
}

TEST(Checkpoint, TruncatedBlobIsRejected) {
  const auto f = make_fixture();
  num::Rng rng(8);
  auto m = train::Model::init(tiny(enc::Arch::san), f.vocab, rng);
  const auto dir = temp_dir("trunc");
  train::save_model(dir / "model.json", m);
  fs::resize_file(dir / "model.bin", fs::file_size(dir / "model.bin") - 8);
  EXPECT_THROW(train::load_model(dir / "model.json"), InputError);
  fs::remove_all(dir);
}

TEST(ProbeFrozen, EncoderBytesUnchangedAfterThousandSteps) {
  const auto f = make_fixture();
  num::Rng rng(9);
  const auto m = train::Model::init(tiny(enc::Arch::rnn), f.vocab, rng);
  const auto before = train::tensor_bytes(m.encoder.tensors());
  const auto src = train::ReprSource::from_encoder(m, 1);
  auto tc = quick_config(1000);
  tc.eval_interval = 250;
  auto head = train::init_probe_head(8, tc);
  const auto head_before = train::fingerprint(head.tensors());
  train::probe_frozen(src, src, head, f.data.train, f.data.valid, tc);
  EXPECT_EQ(train::tensor_bytes(m.encoder.tensors()), before);
  EXPECT_NE(train::fingerprint(head.tensors()), head_before);
  for (const auto& t : m.encoder.tensors()) EXPECT_FALSE(t.has_grad() && std::any_of(t.grad().begin(), t.grad().end(), [](double g) { return g != 0.0; }));
}

TEST(ProbeFrozen, LayerZeroIsEmbeddingPlusPositions) {
  const auto f = make_fixture();
  num::Rng rng(10);
  const auto m = train::Model::init(tiny(enc::Arch::san), f.vocab, rng);
  const std::vector<std::size_t> ord{0, 1, 2, 3};
  const auto batch = train::make_batch(f.data.train, ord, m.vocab);
  const auto got = train::ReprSource::from_encoder(m, 0).gather(f.data.train, batch);
  const auto want = enc::embed(batch.seqs, m.encoder, m.config, enc::Mode::eval, nullptr);
  EXPECT_TRUE(std::equal(got.data().begin(), got.data().end(), want.data().begin()));
  EXPECT_THROW(train::ReprSource::from_encoder(m, 3), ConfigError);
}

TEST(ReprDump, RoundTripAndAlignment) {
  const auto f = make_fixture();
  const auto dump = train::random_dump(f.data.valid, 6, 42);
  const auto dir = temp_dir("dump");
  train::write_dump(dir / "d.json", dump);
  const auto back = train::read_dump(dir / "d.json");
  EXPECT_EQ(back.dim(), 6u);
  EXPECT_EQ(back.lengths(), dump.lengths());
  EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), dump.values().begin(), dump.values().end()));
  EXPECT_NO_THROW(train::check_alignment(back, f.data.valid, 6));
  EXPECT_THROW(train::check_alignment(back, f.data.valid, 8), AlignmentError);

  auto shifted = f.data.valid;
  shifted[3].tokens.push_back("extra");
  try {
    train::check_alignment(back, shifted);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("instance 3"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(ReprDump, EncoderDumpMatchesLiveRepresentations) {
  const auto f = make_fixture();
  num::Rng rng(12);
  const auto m = train::Model::init(tiny(enc::Arch::disan), f.vocab, rng);
  const auto dump = train::dump_encoder(m, f.data.valid, 1, 7);
  train::check_alignment(dump, f.data.valid, 8);
  const auto head = train::init_probe_head(8, quick_config(1));
  const auto live = train::predict_probe(train::ReprSource::from_encoder(m, 1), head, f.data.valid);
  const auto dumped = train::predict_probe(train::ReprSource::from_dump(dump), head, f.data.valid);
  EXPECT_EQ(live, dumped);
}

TEST(Proxy, ExamplesPerObjective) {
  num::Rng rng(1);
  const std::vector<std::size_t> ids{5, 6, 7, 8};
  auto rev = train::make_proxy_example(ids, train::ProxyObjective::reversal, 0.0, rng);
  EXPECT_EQ(rev.input, ids);
  EXPECT_EQ(rev.target, (std::vector<std::size_t>{8, 7, 6, 5}));
  auto copy = train::make_proxy_example(ids, train::ProxyObjective::copy, 0.0, rng);
  EXPECT_EQ(copy.target, ids);
  auto all = train::make_proxy_example(ids, train::ProxyObjective::denoise, 1.0, rng);
  EXPECT_EQ(all.input, std::vector<std::size_t>(4, text::Vocabulary::kUnk));
  EXPECT_EQ(all.target, ids);
}

TEST(Proxy, CopyObjectiveIsLearned) {
  const auto lines = toy_lines(1000, 3, 8, 21);
  std::vector<text::Sentence> sents;
  for (const auto& l : lines) sents.push_back(text::tokenize(l));
  const std::vector<text::Sentence> train_s(sents.begin(), sents.begin() + 900), valid_s(sents.begin() + 900, sents.end());
  num::Rng rng(3);
  auto c = tiny(enc::Arch::san);
  c.model_dim = 16;
  auto m = train::Model::init(c, text::Vocabulary::build(train_s, 100), rng);
  auto tc = quick_config(300);
  tc.eval_interval = 100;
  tc.batch_size = 32;
  tc.proxy_objective = train::ProxyObjective::copy;
  tc.dropout = 0.0;
  const auto before = train::fingerprint(m.detector.tensors());
  const auto r = train::pretrain_proxy(m, train_s, valid_s, tc);
  EXPECT_GT(r.final_valid_acc, 0.95);
  EXPECT_EQ(train::fingerprint(m.detector.tensors()), before);
}

// Without positions a SAN maps each token to the same output wherever it
// sits, so over all orderings of n distinct tokens reversal accuracy cannot
// exceed 1/(n-1).
TEST(Proxy, UnpositionedSanCannotLearnReversal) {
  std::vector<text::Sentence> sents;
  num::Rng rng(30);
  for (int k = 0; k < 400; ++k) {
    std::vector<std::string> alphabet{"a", "b", "c", "d", "e", "f"};
    rng.shuffle(std::span<std::string>(alphabet));
    sents.emplace_back(alphabet.begin(), alphabet.begin() + 4);
  }
  text::Sentence base{"a", "b", "c", "d"};
  std::vector<text::Sentence> perms;
  std::sort(base.begin(), base.end());
  do perms.push_back(base);
  while (std::next_permutation(base.begin(), base.end()));

  for (bool pos : {false, true}) {
    auto c = tiny(enc::Arch::san);
    c.model_dim = 16;
    c.use_position_encoding = pos;
    num::Rng init(4);
    auto m = train::Model::init(c, text::Vocabulary::build(sents, 100), init);
    auto tc = quick_config(400);
    tc.eval_interval = 400;
    tc.batch_size = 32;
    tc.dropout = 0.0;
    tc.warmup_steps = 100;
    const auto r = train::pretrain_proxy(m, sents, perms, tc);
    if (!pos) {
      EXPECT_LE(r.final_valid_acc, 1.0 / 3.0 + 1e-12);
    } else {
      EXPECT_GT(r.final_valid_acc, 0.6);
    }
  }
}

#include <gtest/gtest.h>

#include <cmath>

#include "wrd/detector/detector.hpp"
#include "wrd/error.hpp"
#include "wrd/numerics/grad_check.hpp"

using namespace wrd;
using enc::SequenceLayout;
using num::Tensor;

namespace {

Tensor random_tensor(num::Shape shape, num::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(num::numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::constant(std::move(shape), std::move(v));
}

det::DetectorParams identity_params(std::size_t d) {
  std::vector<double> eye(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  det::DetectorParams p;
  p.w_i = Tensor::parameter({d, d}, eye);
  p.u_i = Tensor::parameter({d}, std::vector<double>(d, 0.0));
  p.w_q = Tensor::parameter({d, d}, eye);
  p.w_k = Tensor::parameter({d, d}, eye);
  return p;
}

det::DetectorOutput manual_output(std::vector<double> p_insert, std::vector<double> p_orig) {
  const std::size_t n = p_insert.size();
  det::DetectorOutput out;
  out.layout = SequenceLayout::single(n);
  out.p_insert = Tensor::constant({1, n}, std::move(p_insert));
  out.p_orig = Tensor::constant({1, n}, std::move(p_orig));
  return out;
}

}  // namespace

TEST(InsertHead, ZeroScoringVectorIsUniform) {
  num::Rng rng(1);
  const auto p = identity_params(4);
  for (std::size_t n : {2u, 3u, 7u}) {
    const Tensor probs = det::insert_distribution(random_tensor({n, 4}, rng), p, SequenceLayout::single(n));
    for (double v : probs.data()) EXPECT_NEAR(v, 1.0 / static_cast<double>(n), 1e-15);
  }
}

TEST(InsertHead, KnownScoresGiveKnownProbabilities) {
  auto p = identity_params(2);
  p.u_i.mutable_data()[0] = 2.0 * std::log(3.0);
  // tanh(atanh(0.5)) = 0.5, so the scores are 0 and ln 3
  const Tensor h = Tensor::constant({2, 2}, {0.0, 0.0, std::atanh(0.5), 0.0});
  const Tensor probs = det::insert_distribution(h, p, SequenceLayout::single(2));
  EXPECT_NEAR(probs.data()[0], 0.25, 1e-15);
  EXPECT_NEAR(probs.data()[1], 0.75, 1e-15);
}

TEST(InsertHead, ShortSequenceIsInstanceError) {
  const auto p = identity_params(2);
  EXPECT_THROW(det::insert_distribution(Tensor::zeros({1, 2}), p, SequenceLayout::single(1)), InstanceError);
}

TEST(PoppedEmbedding, OneHotAndUniformWeights) {
  num::Rng rng(2);
  auto p = identity_params(3);
  p.w_q = random_tensor({3, 3}, rng);
  const Tensor h = random_tensor({4, 3}, rng);
  const Tensor hq = num::matmul(h, p.w_q);

  const Tensor onehot = Tensor::constant({1, 4}, {0, 0, 1, 0});
  const Tensor e1 = det::popped_embedding(h, onehot, p);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(e1.data()[c], hq.at(2, c), 1e-15);

  const Tensor uniform = Tensor::constant({1, 4}, {0.25, 0.25, 0.25, 0.25});
  const Tensor e2 = det::popped_embedding(h, uniform, p);
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = (hq.at(0, c) + hq.at(1, c) + hq.at(2, c) + hq.at(3, c)) / 4.0;
    EXPECT_NEAR(e2.data()[c], mean, 1e-15);
  }
}

TEST(PoppedEmbedding, LiesInConvexHullOfProjectedRows) {
  for (int seed = 0; seed < 50; ++seed) {
    num::Rng rng(100 + seed);
    const std::size_t n = 2 + rng.uniform_index(8);
    const auto p = det::DetectorParams::init(4, rng);
    const Tensor h = random_tensor({n, 4}, rng, -3, 3);
    const auto layout = SequenceLayout::single(n);
    const Tensor e = det::popped_embedding(h, det::insert_distribution(h, p, layout), p);
    const Tensor hq = num::matmul(h, p.w_q);
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = hq.at(0, c), hi = lo;
      for (std::size_t r = 1; r < n; ++r) {
        lo = std::min(lo, hq.at(r, c));
        hi = std::max(hi, hq.at(r, c));
      }
      EXPECT_GE(e.data()[c], lo - 1e-12);
      EXPECT_LE(e.data()[c], hi + 1e-12);
    }
  }
}

TEST(OrigHead, ZeroKeyMapIsUniformAndLogitsAreLinearInE) {
  num::Rng rng(3);
  auto p = identity_params(4);
  p.w_k = Tensor::parameter({4, 4}, std::vector<double>(16, 0.0));
  const Tensor h = random_tensor({5, 4}, rng);
  const Tensor e = random_tensor({1, 4}, rng);
  const Tensor probs = det::orig_distribution(h, e, p, SequenceLayout::single(5));
  for (double v : probs.data()) EXPECT_NEAR(v, 0.2, 1e-15);

  p = det::DetectorParams::init(4, rng);
  const Tensor one = det::orig_logits(h, e, p);
  const Tensor two = det::orig_logits(h, num::scale(e, 2.0), p);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(two.data()[i], 2.0 * one.data()[i], 1e-14);
  // <E, h W_k> / sqrt(d) by hand for position 0
  const Tensor hk = num::matmul(h, p.w_k);
  double dot = 0.0;
  for (std::size_t c = 0; c < 4; ++c) dot += e.data()[c] * hk.at(0, c);
  EXPECT_NEAR(one.data()[0], dot / 2.0, 1e-14);
}

TEST(Loss, UniformDistributionsOverFourPositions) {
  num::Rng rng(4);
  auto p = identity_params(3);
  p.w_k = Tensor::parameter({3, 3}, std::vector<double>(9, 0.0));
  const auto out = det::detect(random_tensor({4, 3}, rng), p, SequenceLayout::single(4));
  const std::vector<std::size_t> gi{1}, go{3};
  EXPECT_NEAR(det::wrd_loss(out, gi, go).item(), 2.77258872223978123766892848583, 1e-14);  // 2 ln 4
}

TEST(Loss, IsBatchMeanOfTwoNegativeLogLikelihoods) {
  num::Rng rng(5);
  const auto p = det::DetectorParams::init(4, rng);
  const SequenceLayout layout{2, 5, {5, 3}};
  const auto out = det::detect(random_tensor({10, 4}, rng), p, layout);
  const std::vector<std::size_t> gi{4, 0}, go{1, 2};
  double want = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    want -= std::log(out.p_insert.at(b, gi[b])) + std::log(out.p_orig.at(b, go[b]));
  }
  EXPECT_NEAR(det::wrd_loss(out, gi, go).item(), want / 2.0, 1e-13);
  // padding carries no mass
  EXPECT_EQ(out.p_insert.at(1, 3), 0.0);
  EXPECT_EQ(out.p_orig.at(1, 4), 0.0);
  const std::vector<std::size_t> bad{4, 3};
  EXPECT_THROW(det::wrd_loss(out, bad, go), InstanceError);
}

TEST(Loss, FloorKeepsLossFinite) {
  const auto out = manual_output({1.0, 0.0}, {0.0, 1.0});
  const std::vector<std::size_t> gi{1}, go{0};
  const double loss = det::wrd_loss(out, gi, go).item();
  EXPECT_NEAR(loss, -2.0 * std::log(det::kProbabilityFloor), 1e-9);
}

TEST(Decode, ArgmaxWithLowestIndexTies) {
  const auto out = manual_output({0.1, 0.1, 0.2, 0.6}, {0.1, 0.7, 0.1, 0.1});
  const auto preds = det::decode(out);
  ASSERT_EQ(preds.size(), 1u);
  EXPECT_EQ(preds[0], (std::pair<std::size_t, std::size_t>{3, 1}));
  const auto tie = det::decode(manual_output({0.5, 0.5}, {0.5, 0.5}));
  EXPECT_EQ(tie[0], (std::pair<std::size_t, std::size_t>{0, 0}));
}

TEST(Decode, IgnoresPaddedPositions) {
  det::DetectorOutput out;
  out.layout = SequenceLayout{2, 3, {3, 2}};
  out.p_insert = Tensor::constant({2, 3}, {0.2, 0.3, 0.5, 0.4, 0.6, 0.0});
  out.p_orig = Tensor::constant({2, 3}, {0.6, 0.3, 0.1, 0.6, 0.4, 0.0});
  const auto preds = det::decode(out);
  EXPECT_EQ(preds[0], (std::pair<std::size_t, std::size_t>{2, 0}));
  EXPECT_EQ(preds[1], (std::pair<std::size_t, std::size_t>{1, 0}));
}

TEST(GradCheck, LossThroughBothHeads) {
  for (bool independent : {false, true}) {
    for (int seed = 0; seed < 10; ++seed) {
      num::Rng rng(60 + seed);
      auto p = det::DetectorParams::init(4, rng, independent);
      const SequenceLayout layout{2, 4, {4, 3}};
      const Tensor h = random_tensor({8, 4}, rng);
      const std::vector<std::size_t> gi{2, 1}, go{0, 2};
      auto loss_of = [&](const Tensor& x) { return det::wrd_loss(det::detect(x, p, layout), gi, go); };
      EXPECT_LT(num::grad_check(loss_of, h), 1e-4) << independent << " seed " << seed;
      auto tensors = p.tensors();
      EXPECT_LT(num::grad_check_params([&] { return loss_of(h); }, tensors), 1e-4) << independent << " seed " << seed;
    }
  }
}

// The popped embedding must depend on the representation at the most likely
// insert position.
TEST(PoppedEmbedding, RespondsToPerturbationAtArgmax) {
  num::Rng rng(7);
  const auto p = det::DetectorParams::init(4, rng);
  const Tensor h = random_tensor({5, 4}, rng);
  const auto layout = SequenceLayout::single(5);
  const auto out = det::detect(h, p, layout);
  const std::size_t top = det::argmax(out.p_insert.data());
  std::vector<double> moved(h.data().begin(), h.data().end());
  moved[top * 4] += 0.5;
  const auto out2 = det::detect(Tensor::constant({5, 4}, moved), p, layout);
  double diff = 0.0;
  for (std::size_t c = 0; c < 4; ++c)
    diff = std::max(diff, std::abs(out.popped_embedding.data()[c] - out2.popped_embedding.data()[c]));
  EXPECT_GT(diff, 1e-6);
}

TEST(Detect, RejectsMismatchedInput) {
  num::Rng rng(8);
  const auto p = det::DetectorParams::init(4, rng);
  EXPECT_THROW(det::detect(Tensor::zeros({3, 5}), p, SequenceLayout::single(3)), DimensionError);
  EXPECT_THROW(det::detect(Tensor::zeros({4, 4}), p, SequenceLayout::single(3)), DimensionError);
  const auto named = p.named();
  EXPECT_EQ(named.size(), 4u);
  EXPECT_EQ(det::DetectorParams::init(4, rng, true).named().size(), 5u);
}

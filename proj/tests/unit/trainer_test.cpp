#include <gtest/gtest.h>

#include <cmath>

#include "relic/error.hpp"
#include "relic/rng.hpp"
#include "relic/trainer.hpp"
#include "test_util.hpp"

using namespace relic;
using relic::testing::triplet;

namespace {

EncoderConfig small_enc(std::size_t d_in = 32, std::size_t d_out = 4) {
  EncoderConfig e;
  e.d_in = d_in;
  e.d_out = d_out;
  return e;
}

ExampleBank topic_bank(const std::string& lang, int per_topic, const std::vector<std::string>& topics) {
  ExampleBank b;
  b.language = lang;
  int n = 0;
  for (const auto& t : topics) {
    for (int i = 0; i < per_topic; ++i) {
      const auto id = lang + std::to_string(n++);
      b.positives.push_back(triplet(id + "p", lang, t + " ask " + std::to_string(i), "fine GOOD", Polarity::kPositive));
      b.negatives.push_back(triplet(id + "n", lang, t + " ask " + std::to_string(i), "meh", Polarity::kNegative));
    }
  }
  return b;
}

double dense_loss(const ExampleTriplet& anchor, const std::vector<ContextPair>& pairs,
                  std::size_t target, const RetrieverParams& p, const EncoderConfig& enc) {
  return pairwise_nll_loss(anchor, pairs, target, p, enc).loss;
}

}  // namespace

TEST(SelectTarget, ArgmaxOfPolarityTimesScore) {
  const std::vector<double> s = {0.5, 2.0, -3.0, 2.0};
  EXPECT_EQ(select_target_pair(s, +1), 1u);  // tie resolves to the lower index
  EXPECT_EQ(select_target_pair(s, -1), 2u);
  EXPECT_THROW(select_target_pair(std::vector<double>{}, 1), InvariantError);
}

TEST(BuildPairSet, RowMajorWithCap) {
  CandidateSet c;
  for (int i = 0; i < 3; ++i) c.positives.push_back(triplet("p" + std::to_string(i), "hi", "q", "r", Polarity::kPositive));
  for (int i = 0; i < 2; ++i) c.negatives.push_back(triplet("n" + std::to_string(i), "hi", "q", "r", Polarity::kNegative));
  const auto all = build_pair_set(c, 100);
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all[1].positive.id, "p0");
  EXPECT_EQ(all[1].negative.id, "n1");
  EXPECT_EQ(all[2].positive.id, "p1");
  EXPECT_EQ(build_pair_set(c, 4).size(), 4u);
}

TEST(MineCandidates, TopFAndSelfExclusion) {
  const auto bank = topic_bank("hi", 5, {"alpha", "beta"});
  const auto enc = small_enc(1 << 10, 8);
  const auto params = init_params(enc, 3);
  const auto& anchor = bank.positives[0];
  const auto c = mine_candidates(anchor, bank, params, 4, enc);
  ASSERT_EQ(c.positives.size(), 4u);
  ASSERT_EQ(c.negatives.size(), 4u);
  for (const auto& p : c.positives) EXPECT_NE(p.id, anchor.id);
  for (std::size_t i = 1; i < c.positive_scores.size(); ++i) {
    EXPECT_GE(c.positive_scores[i - 1], c.positive_scores[i]);
  }
  // A different language never collides with the anchor id.
  auto other = anchor;
  other.language = "bn";
  const auto c2 = mine_candidates(other, bank, params, 10, enc);
  EXPECT_EQ(c2.positives.size(), 10u);
}

TEST(Loss, TwoCandidateHandValue) {
  // z = (1, 0) gives -log softmax_0 = ln(1 + e^-1).
  const auto enc = small_enc(1 << 18, 1);
  const auto a = triplet("a", "t", "aa", "aa", Polarity::kPositive);
  const auto x = triplet("x", "hi", "bb", "bb", Polarity::kPositive);
  const auto y = triplet("y", "hi", "zz", "zz", Polarity::kNegative);
  const auto fa = featurize(item_text(a), enc);
  const auto fx = featurize(item_text(x), enc);
  const auto fy = featurize(item_text(y), enc);
  ASSERT_EQ(dot(fx, fy), 0.0);
  RetrieverParams p{DenseMatrix(enc.d_in, 1), DenseMatrix(enc.d_in, 1)};
  for (std::size_t r = 0; r < enc.d_in; ++r) p.phi.row(r)[0] = 1.0;
  double sum_a = 0.0, sum_x = 0.0;
  for (double v : fa.values) sum_a += v;
  for (double v : fx.values) sum_x += v;
  for (auto k : fx.indices) p.psi.row(k)[0] = 1.0 / (sum_a * sum_x);
  const std::vector<ExampleTriplet> items = {x, y};
  const auto r = relevance_nll_loss(a, items, 0, p, enc);
  EXPECT_NEAR(r.loss, 0.31326168751822286, 1e-12);
  // Single candidate: zero loss, zero gradient.
  const std::vector<ExampleTriplet> one = {x};
  const auto r1 = relevance_nll_loss(a, one, 0, p, enc);
  EXPECT_EQ(r1.loss, 0.0);
  for (double g : r1.grad_phi.values) EXPECT_EQ(g, 0.0);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  const auto enc = small_enc(32, 4);
  Rng rng(5);
  const auto bank = topic_bank("hi", 2, {"alpha", "beta", "gamma"});
  auto params = init_params(enc, 17);
  for (auto& v : params.psi.data()) v += 0.1 * (rng.uniform() - 0.5);
  const auto anchor = triplet("a", "t", "alpha query", "some GOOD", Polarity::kPositive);
  std::vector<ContextPair> pairs;
  for (const auto& p : bank.positives) {
    for (const auto& n : bank.negatives) pairs.push_back({p, n, "hi"});
  }
  const std::size_t target = 7;
  const auto r = pairwise_nll_loss(anchor, pairs, target, params, enc);
  const double h = 1e-5;
  auto check = [&](DenseMatrix& m, const SparseRowGradient& g) {
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
      for (std::size_t j = 0; j < enc.d_out; ++j) {
        double& w = m.row(g.rows[i])[j];
        const double orig = w;
        w = orig + h;
        const double up = dense_loss(anchor, pairs, target, params, enc);
        w = orig - h;
        const double down = dense_loss(anchor, pairs, target, params, enc);
        w = orig;
        const double numeric = (up - down) / (2 * h);
        EXPECT_NEAR(g.row(i)[j], numeric, 1e-7 + 1e-5 * std::abs(numeric));
      }
    }
  };
  check(params.phi, r.grad_phi);
  check(params.psi, r.grad_psi);
}

TEST(Loss, RowsOutsideTheGradientHaveNoEffect) {
  const auto enc = small_enc(1 << 10, 4);
  const auto bank = topic_bank("hi", 1, {"alpha", "beta"});
  auto params = init_params(enc, 2);
  const auto anchor = triplet("a", "t", "alpha", "x GOOD", Polarity::kPositive);
  std::vector<ContextPair> pairs = {{bank.positives[0], bank.negatives[0], "hi"},
                                    {bank.positives[1], bank.negatives[1], "hi"}};
  const auto r = pairwise_nll_loss(anchor, pairs, 0, params, enc);
  std::vector<bool> touched(enc.d_in, false);
  for (auto row : r.grad_phi.rows) touched[row] = true;
  for (auto row : r.grad_psi.rows) touched[row] = true;
  for (std::size_t row = 0; row < enc.d_in; ++row) {
    if (touched[row]) continue;
    params.phi.row(row)[0] += 1.0;
    params.psi.row(row)[0] += 1.0;
  }
  EXPECT_EQ(pairwise_nll_loss(anchor, pairs, 0, params, enc).loss, r.loss);
}

TEST(Fit, DeterministicAndDecreasing) {
  const auto enc = small_enc(1 << 12, 8);
  const auto target = topic_bank("t", 3, {"alpha", "beta", "gamma", "delta"});
  const auto aux = topic_bank("hi", 4, {"alpha", "beta", "gamma", "delta"});
  SyntheticOracle oracle;
  TrainConfig cfg;
  cfg.F = 4;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  cfg.encoder = enc;
  cfg.seed = 3;
  const auto init = initial_params(cfg, "hi");
  const auto set = prepare_training_set(target, aux, init, oracle, nullptr, cfg);
  ASSERT_EQ(set.samples.size(), target.size());
  for (const auto& s : set.samples) EXPECT_EQ(s.candidates.size(), 16u);
  const auto a = fit(set, init, cfg);
  const auto b = fit(set, init, cfg);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.epochs.size(), 30u);
  EXPECT_LT(a.epochs.back().mean_loss, a.epochs.front().mean_loss);
  EXPECT_GE(set.top1_rate(a.params), set.top1_rate(init));
  EXPECT_NE(format_metrics(a.epochs).find("\"mean_loss\""), std::string::npos);
}

TEST(Fit, CapLimitsPairs) {
  const auto enc = small_enc(1 << 10, 4);
  const auto target = topic_bank("t", 1, {"alpha"});
  const auto aux = topic_bank("hi", 3, {"alpha", "beta"});
  SyntheticOracle oracle;
  TrainConfig cfg;
  cfg.F = 5;
  cfg.max_pairs_per_sample = 7;
  cfg.encoder = enc;
  const auto set = prepare_training_set(target, aux, initial_params(cfg, "hi"), oracle, nullptr, cfg);
  for (const auto& s : set.samples) EXPECT_EQ(s.candidates.size(), 7u);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.F = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_loss_mode("relevance"), LossMode::kRelevance);
  EXPECT_THROW(parse_loss_mode("listwise"), ConfigError);
}

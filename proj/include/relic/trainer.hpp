#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/encoder.hpp"
#include "relic/reward.hpp"

namespace relic {

enum class LossMode { kPairwise, kRelevance };

std::string_view loss_mode_name(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct TrainConfig {
  int F = 25;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int epochs = 120;
  LossMode loss_mode = LossMode::kPairwise;
  std::uint64_t seed = 0;
  /// Cap on |E| per sample; 0 means F * F (no cap).
  int max_pairs_per_sample = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  EncoderConfig encoder;
  /// Concurrent reward requests while scoring candidate pairs.
  int score_parallelism = 1;

  void validate() const;
};

/// Top-F positives and negatives of an auxiliary bank for one anchor,
/// descending by phi(anchor) . psi(item), ties in bank order.
struct CandidateSet {
  ExampleTriplet anchor;
  std::vector<ExampleTriplet> positives;
  std::vector<ExampleTriplet> negatives;
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

/// The untrained retriever used for aux language `language` under `cfg`.
RetrieverParams initial_params(const TrainConfig& cfg, std::string_view language);

/// An example never serves as its own candidate (same language and id).
CandidateSet mine_candidates(const ExampleTriplet& anchor, const ExampleBank& bank,
                             const RetrieverParams& params, int F, const EncoderConfig& cfg);

/// Row-major product positives x negatives (outer loop over positives),
/// truncated to `cap` pairs.
std::vector<ContextPair> build_pair_set(const CandidateSet& cands, std::size_t cap);

/// Reward of the anchor's own response with this single pair as context.
double score_pair(const ContextPair& pair, const ExampleTriplet& anchor, RewardModel& model,
                  ScoreCache* cache);

/// Reward of the anchor's response with one unpaired example as context.
double score_single(const ExampleTriplet& example, const ExampleTriplet& anchor,
                    RewardModel& model, ScoreCache* cache);

/// argmax of polarity * score; ties resolve to the lowest index.
std::size_t select_target_pair(std::span<const double> scores, int polarity);

/// Gradient restricted to a set of rows, rows ascending, values row-major.
struct SparseRowGradient {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
  std::size_t d_out = 0;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * d_out, d_out}; }
};

struct LossResult {
  double loss = 0.0;
  SparseRowGradient grad_phi;
  SparseRowGradient grad_psi;
};

/// -log softmax(z)[target] with z_e = phi(anchor) . psi(e) over the pair set,
/// and its exact gradient with respect to both projections.
LossResult pairwise_nll_loss(const ExampleTriplet& anchor, std::span<const ContextPair> pairs,
                             std::size_t target_index, const RetrieverParams& params,
                             const EncoderConfig& cfg);

/// Same objective over single examples (relevance / EPR-style training).
LossResult relevance_nll_loss(const ExampleTriplet& anchor, std::span<const ExampleTriplet> items,
                              std::size_t target_index, const RetrieverParams& params,
                              const EncoderConfig& cfg);

/// Shared sparse blocks; a candidate vector is scale * (sum of its blocks).
struct BlockStore {
  std::vector<SparseVector> blocks;
};

struct Candidate {
  std::array<std::uint32_t, 3> blocks{};
  std::uint8_t block_count = 0;
  double scale = 0.0;
};

/// One training anchor with its mined candidates and reward-selected target.
struct TrainingSample {
  ExampleTriplet anchor;
  FeatureVector anchor_features;
  std::vector<Candidate> candidates;
  /// Human-readable candidate ids ("pos|neg" for pairs, the item id for singles).
  std::vector<std::string> candidate_ids;
  std::vector<double> rewards;
  std::size_t target = 0;
};

struct TrainingSet {
  std::string language;
  LossMode mode = LossMode::kPairwise;
  EncoderConfig encoder;
  BlockStore store;
  std::vector<TrainingSample> samples;

  /// Fraction of anchors whose target ranks first under `params`
  /// (descending logit, ties by candidate index).
  double top1_rate(const RetrieverParams& params) const;
  /// Logits of every candidate of sample `i`.
  std::vector<double> logits(std::size_t i, const RetrieverParams& params) const;
};

/// Mines candidates with `params` (one-shot), scores them with the reward
/// model and selects each anchor's target.
TrainingSet prepare_training_set(const ExampleBank& target_bank, const ExampleBank& aux_bank,
                                 const RetrieverParams& params, RewardModel& model,
                                 ScoreCache* cache, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  RetrieverParams params;
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on the mean per-sample NLL, updating only rows touched by
/// each minibatch.
TrainResult fit(const TrainingSet& set, RetrieverParams params, const TrainConfig& cfg,
                const EpochCallback& on_epoch = {});

TrainResult train_retriever(const ExampleBank& target_bank, const ExampleBank& aux_bank,
                            RewardModel& model, const TrainConfig& cfg, ScoreCache* cache = nullptr,
                            const EpochCallback& on_epoch = {});

/// One independent retriever per selected auxiliary language.
std::map<std::string, TrainResult> train_all(const ExampleBank& target_bank,
                                             const AuxSelection& selection,
                                             const std::map<std::string, ExampleBank>& banks,
                                             RewardModel& model, const TrainConfig& cfg,
                                             ScoreCache* cache = nullptr);

/// Metrics file: one {"epoch", "mean_loss", "wall_ms"} record per line.
std::string format_metrics(const std::vector<EpochRecord>& epochs);

}  // namespace relic

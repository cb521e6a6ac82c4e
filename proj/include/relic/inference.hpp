#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/encoder.hpp"
#include "relic/reward.hpp"

namespace relic {

struct InferenceConfig {
  int C = 8;
  int top_m_per_polarity = 50;
  /// Character budget for the rendered context; 0 disables truncation.
  std::size_t token_budget = 6000;
  EncoderConfig encoder;

  void validate() const;
};

struct ScoredPair {
  ContextPair pair;
  double score = 0.0;
};

/// "<positive id>|<negative id>"
std::string pair_id(const ContextPair& pair);

struct PairBank {
  std::string language;
  std::vector<ContextPair> pairs;
  std::vector<Embedding> pair_embeddings;
};

/// One auxiliary bank prepared for repeated retrieval under fixed params:
/// items are encoded and projected once, pairs are assembled per query.
class PairIndex {
 public:
  PairIndex(ExampleBank bank, RetrieverParams params, EncoderConfig cfg);

  const std::string& language() const { return bank_.language; }
  const RetrieverParams& params() const { return params_; }
  const EncoderConfig& encoder() const { return cfg_; }

  Embedding embed_query(std::string_view query, std::string_view response) const;

  /// Top-M positives and negatives by single-item similarity, their M x M
  /// product (positives outer), each pair embedded under psi.
  PairBank build(std::string_view query, std::string_view response, int M) const;

 private:
  ExampleBank bank_;
  RetrieverParams params_;
  EncoderConfig cfg_;
  std::vector<EncodedItem> pos_items_;
  std::vector<EncodedItem> neg_items_;
  std::vector<Embedding> pos_raw_;  // psi^T counts
  std::vector<Embedding> neg_raw_;
  std::vector<double> pos_norm2_;
  std::vector<double> neg_norm2_;
  std::vector<Embedding> pos_unit_;  // psi^T counts / |counts|
  std::vector<Embedding> neg_unit_;
};

PairBank build_pair_bank(const ExampleBank& aux_bank, const RetrieverParams& params,
                         std::string_view query, std::string_view response, int M,
                         const EncoderConfig& cfg);

/// Top-K pairs by phi(test) . psi(pair), descending, ties by pair index.
std::vector<ScoredPair> retrieve_top_k(const PairBank& bank, std::string_view query,
                                       std::string_view response, const RetrieverParams& params,
                                       int K, const EncoderConfig& cfg);

struct RetrievedContext {
  std::vector<ScoredPair> pairs;  // ascending by score
  std::vector<std::string> languages_used;
  bool shortfall = false;  // fewer than C pairs were available
  bool truncated = false;  // pairs were dropped to fit the budget
};

/// Characters the pair contributes to the rendered context.
std::size_t context_cost(const ContextPair& pair);

/// Slots per language: floor(C/P) each, remainder one apiece to the most
/// similar auxiliary languages. Exposed for testing.
std::map<std::string, int> allocate_slots(const std::vector<std::string>& languages, int C,
                                          const AuxSelection& aux);

RetrievedContext assemble_context(const std::map<std::string, std::vector<ScoredPair>>& per_language,
                                  const InferenceConfig& cfg, const AuxSelection& aux);

/// Retrieval over every index, then assembly.
RetrievedContext retrieve_context(std::string_view query, std::string_view response,
                                  const std::vector<const PairIndex*>& indexes,
                                  const InferenceConfig& cfg, const AuxSelection& aux);

/// Renders the context prompt (zero-shot when the context is empty) and scores it.
RewardScore score_with_context(std::string_view query, std::string_view response,
                               std::string_view target_language, const RetrievedContext& ctx,
                               RewardModel& model, ScoreCache* cache);

RenderedPrompt render_context(std::string_view query, std::string_view response,
                              std::string_view target_language, const RetrievedContext& ctx);

}  // namespace relic

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/inference.hpp"
#include "relic/reward.hpp"

namespace relic {

enum class Strategy { kZeroShot, kRandom, kBm25, kTopK, kEpr, kRelic };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
std::vector<Strategy> parse_strategy_list(std::string_view csv);
const std::vector<Strategy>& all_strategies();

struct EvalRecord {
  std::string pair_id;
  double score_preferred = 0.0;
  double score_rejected = 0.0;
  bool correct = false;
  Strategy strategy = Strategy::kZeroShot;
  std::string language;
};

/// Mean of correct flags. Throws DataError on empty input.
double pairwise_accuracy(std::span<const EvalRecord> records);

/// Okapi BM25 over whitespace-split, ASCII-lowercased tokens, with
/// idf = ln(1 + (N - n + 0.5) / (n + 0.5)).
class Bm25Index {
 public:
  explicit Bm25Index(const std::vector<std::string>& docs, double k1 = 1.2, double b = 0.75);

  std::vector<double> scores(std::string_view query) const;
  /// Descending by score, ties by document index.
  std::vector<std::size_t> rank(std::string_view query) const;
  std::size_t size() const { return doc_len_.size(); }

 private:
  double k1_;
  double b_;
  double avg_len_ = 0.0;
  std::vector<double> doc_len_;
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings_;
};

std::vector<std::string> bm25_tokenize(std::string_view text);

std::vector<std::size_t> bm25_rank(std::string_view query, const std::vector<std::string>& corpus,
                                   double k1 = 1.2, double b = 0.75);

enum class Bm25Template { kPaired, kSingles };

struct EvalConfig {
  InferenceConfig inference;
  std::uint64_t seed = 0;
  Bm25Template bm25_template = Bm25Template::kPaired;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  /// Concurrent test items.
  int parallelism = 1;
};

/// Everything a strategy may draw on. Banks hold the selected auxiliary
/// languages; retrievers are keyed by strategy, then language.
struct EvalResources {
  const AuxSelection* selection = nullptr;
  const std::map<std::string, ExampleBank>* banks = nullptr;
  std::map<Strategy, std::map<std::string, RetrieverParams>> retrievers;
};

/// Context chosen for one side of one test pair.
struct SideContext {
  std::vector<ContextPair> pairs;        // prompt order
  std::vector<ExampleTriplet> singles;   // BM25 singles template only
  std::vector<double> scores;
};

class StrategyRunner {
 public:
  StrategyRunner(Strategy strategy, const EvalResources& res, const EvalConfig& cfg);

  Strategy strategy() const { return strategy_; }
  SideContext context(const PreferencePair& pair, bool preferred) const;
  RenderedPrompt prompt(const PreferencePair& pair, bool preferred) const;

 private:
  Strategy strategy_;
  const EvalResources& res_;
  EvalConfig cfg_;
  std::vector<std::string> languages_;
  std::vector<PairIndex> indexes_;
  std::vector<ExampleTriplet> pool_;  // BM25 documents
  std::unique_ptr<Bm25Index> bm25_;
};

/// Scores both sides of every test pair with independently chosen contexts.
std::vector<EvalRecord> run_strategy(Strategy strategy, std::span<const PreferencePair> test_set,
                                     const EvalResources& res, RewardModel& model,
                                     ScoreCache* cache, const EvalConfig& cfg);

struct Report {
  std::vector<std::string> languages;
  std::vector<Strategy> strategies;
  std::map<std::pair<Strategy, std::string>, double> accuracy;
  std::map<std::pair<Strategy, std::string>, std::size_t> counts;
};

Report build_report(std::span<const EvalRecord> records);
/// Aligned table (strategies as rows, languages as columns) plus a gain row:
/// relic minus the best other strategy.
std::string format_report(const Report& report);
std::string report_records(const Report& report);

std::string serialize_eval_records(std::span<const EvalRecord> records);
std::vector<EvalRecord> parse_eval_records(std::string_view text, std::string_view source = "<records>");
void save_eval_records(std::span<const EvalRecord> records, const std::filesystem::path& path);
std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path);

/// One {"strategy", "language", "class", "pair_id", "score"} row per scored response.
std::string export_distributions(std::span<const EvalRecord> records);
void export_distributions(std::span<const EvalRecord> records, const std::filesystem::path& path);

}  // namespace relic

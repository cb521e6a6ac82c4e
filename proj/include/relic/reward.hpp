#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relic/corpus.hpp"

namespace relic {

enum class Speaker { kUser, kAssistant };

std::string_view speaker_name(Speaker s);

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

/// A structured reward-model input: system text, alternating user/assistant
/// turns ending in the user turn that carries the evaluated query, and the
/// response being scored.
struct RenderedPrompt {
  std::string system;
  std::vector<Turn> turns;
  std::string final_response;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

inline constexpr std::string_view kZeroShotSystem =
    "You are an accurate reward model. Your goal is to evaluate a (Query, Response) pair and "
    "output a numerical reward score that reflects how well the response answers the query. A "
    "higher score means the response is of higher quality, safer, and relevant. A lower score "
    "means the response is incorrect, irrelevant, unsafe, or otherwise poor.";

inline constexpr std::string_view kPositiveMarker = "[Positive response]";
inline constexpr std::string_view kNegativeMarker = "[Negative response]";

RenderedPrompt render_zero_shot(std::string_view query, std::string_view response);

/// One user/assistant exchange per pair member, positive first, pairs in the
/// given order. Throws InvariantError on an empty context.
RenderedPrompt render_icl(std::span<const ContextPair> context, std::string_view query,
                          std::string_view response, std::string_view target_language);

/// Unpaired variant: one labeled exchange per example, in the given order.
RenderedPrompt render_icl_singles(std::span<const ExampleTriplet> examples, std::string_view query,
                                  std::string_view response, std::string_view target_language);

/// Plain-text view ("System: ...", "User: ...", "Assistant: ...", one per line).
std::string to_text(const RenderedPrompt& prompt);

/// Length-prefixed serialization; injective over prompts.
std::string canonical_serialization(const RenderedPrompt& prompt);

struct RewardScore {
  double value = 0.0;
};

/// A scalar reward backend. score() counts backend requests.
class RewardModel {
 public:
  virtual ~RewardModel() = default;

  RewardScore score(const RenderedPrompt& prompt) {
    requests_.fetch_add(1, std::memory_order_relaxed);
    return do_score(prompt);
  }

  std::uint64_t requests() const { return requests_.load(std::memory_order_relaxed); }

 protected:
  virtual RewardScore do_score(const RenderedPrompt& prompt) = 0;

 private:
  std::atomic<std::uint64_t> requests_{0};
};

struct SyntheticOracleConfig {
  double beta = 0.5;
  std::string good_marker = "GOOD";
};

/// First whitespace-delimited token of a query.
std::string_view topic_token(std::string_view query);

/// q * (1 + beta * m): q = +1 when the response contains the good marker,
/// else -1; m counts positive-labeled exchanges whose query shares the
/// evaluated query's topic token.
RewardScore synthetic_oracle_score(const SyntheticOracleConfig& cfg, const RenderedPrompt& prompt);

class SyntheticOracle : public RewardModel {
 public:
  explicit SyntheticOracle(SyntheticOracleConfig cfg = {});

  const SyntheticOracleConfig& config() const { return cfg_; }

 protected:
  RewardScore do_score(const RenderedPrompt& prompt) override;

 private:
  SyntheticOracleConfig cfg_;
};

/// Score memo keyed by content_hash(canonical_serialization(prompt)).
/// Optionally backed by an append-only file of 24-byte records
/// (key, score bits, checksum); a corrupt tail is dropped on open.
class ScoreCache {
 public:
  ScoreCache() = default;
  ~ScoreCache();
  ScoreCache(const ScoreCache&) = delete;
  ScoreCache& operator=(const ScoreCache&) = delete;

  /// Loads existing entries and appends new ones to `path`. Returns the
  /// number of entries dropped from a corrupt tail.
  std::size_t open(const std::filesystem::path& path);

  std::optional<double> lookup(ContentHash key) const;
  void insert(ContentHash key, double value);
  std::size_t size() const;
  void flush();

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::uint64_t, double> entries_;
  std::ofstream file_;
};

/// Cached scoring: a hit never reaches the backend. Non-finite backend
/// scores raise BackendError and leave the cache untouched. `cache` may be null.
RewardScore score(RewardModel& model, const RenderedPrompt& prompt, ScoreCache* cache);

/// Scores many prompts with up to `parallelism` concurrent backend calls.
/// Results are positionally aligned with `prompts`.
std::vector<RewardScore> score_all(RewardModel& model, std::span<const RenderedPrompt> prompts,
                                   ScoreCache* cache, int parallelism = 1);

}  // namespace relic

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/eval.hpp"
#include "relic/inference.hpp"
#include "relic/reward.hpp"
#include "relic/trainer.hpp"

namespace relic {

/// Fixed artifact names inside a run directory.
namespace run_files {
inline constexpr std::string_view kConfig = "config.json";
inline constexpr std::string_view kAuxSelection = "aux_selection.jsonl";
inline constexpr std::string_view kParams = "params";
inline constexpr std::string_view kRetrieval = "retrieval.jsonl";
inline constexpr std::string_view kRecords = "records.jsonl";
inline constexpr std::string_view kReport = "report.txt";
inline constexpr std::string_view kReportRecords = "report.jsonl";
inline constexpr std::string_view kDistributions = "distributions.jsonl";
inline constexpr std::string_view kCache = "cache.bin";
}  // namespace run_files

struct RunConfig {
  std::uint64_t seed = 7;
  std::filesystem::path target;
  std::filesystem::path aux_dir;
  std::filesystem::path test;
  std::filesystem::path run_dir;

  EncoderConfig encoder;
  TrainConfig train;
  InferenceConfig inference;
  AuxSelectConfig aux;
  std::vector<Strategy> strategies = all_strategies();
  Bm25Template bm25_template = Bm25Template::kPaired;

  bool use_cache = true;
  /// Use the target bank as its own (and only) auxiliary bank.
  bool without_aux = false;
  int parallelism = 1;
  /// Written verbatim to config.json.
  std::string config_echo;

  void validate() const;
};

using LogFn = std::function<void(const std::string&)>;

/// Language of the first record in a bank file.
std::string sniff_language(const std::filesystem::path& path);
ExampleBank load_target_bank(const std::filesystem::path& path);
/// Every <lang>.jsonl file in `dir`, keyed by language.
std::map<std::string, ExampleBank> load_aux_dir(const std::filesystem::path& dir);

/// The selection used when the target bank stands in for auxiliary data.
AuxSelection self_selection(const ExampleBank& target);

void save_retrievers(const std::map<std::string, TrainResult>& trained,
                     const std::filesystem::path& dir);
std::map<std::string, RetrieverParams> load_retrievers(const std::filesystem::path& dir,
                                                       const std::vector<std::string>& languages);

/// One {"id", "side", "pair_ids", "scores", "languages"} record per test response.
std::string retrieval_records(const StrategyRunner& runner, std::span<const PreferencePair> test);

/// Stage outputs are written here first and merged into the run directory on
/// commit; an uncommitted stage is removed on destruction.
class StagingDir {
 public:
  StagingDir(std::filesystem::path run_dir, std::string_view stage);
  ~StagingDir();
  StagingDir(const StagingDir&) = delete;
  StagingDir& operator=(const StagingDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  void commit();

 private:
  std::filesystem::path run_dir_;
  std::filesystem::path path_;
  bool committed_ = false;
};

struct PipelineResult {
  AuxSelection selection;
  std::vector<EvalRecord> records;
  Report report;
  std::string report_text;
};

/// select-aux, train, retrieve, evaluate, report. Failures are rethrown
/// tagged with the stage name.
PipelineResult run_pipeline(const RunConfig& cfg, RewardModel& model, const LogFn& log = {});

}  // namespace relic

#include "relic/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "relic/error.hpp"

namespace relic {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

template <typename F>
auto in_stage(std::string_view stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("[{}] {}", stage, e.what()));
  } catch (const std::exception& e) {
    throw Error(ExitCode::kInternal, fmt::format("[{}] {}", stage, e.what()));
  }
}

void merge_into(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  for (const auto& entry : fs::directory_iterator(from)) {
    const fs::path dst = to / entry.path().filename();
    if (entry.is_directory()) {
      merge_into(entry.path(), dst);
    } else {
      fs::rename(entry.path(), dst);
    }
  }
}

bool needs(const RunConfig& cfg, Strategy s) {
  return std::find(cfg.strategies.begin(), cfg.strategies.end(), s) != cfg.strategies.end();
}

}  // namespace

void RunConfig::validate() const {
  if (target.empty()) throw ConfigError("target bank path is required");
  if (test.empty()) throw ConfigError("test set path is required");
  if (!without_aux && aux_dir.empty()) throw ConfigError("auxiliary directory is required");
  if (run_dir.empty()) throw ConfigError("run directory is required");
  if (strategies.empty()) throw ConfigError("no strategies selected");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  for (const auto& p : {target, test}) {
    if (!fs::is_regular_file(p)) throw ConfigError(fmt::format("no such file: {}", p.string()));
  }
  if (!without_aux && !fs::is_directory(aux_dir)) {
    throw ConfigError(fmt::format("no such directory: {}", aux_dir.string()));
  }
  train.validate();
  inference.validate();
}

std::string sniff_language(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return Json::parse(line).at("language").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  throw DataError(fmt::format("{}: no records", path.string()));
}

ExampleBank load_target_bank(const fs::path& path) {
  return load_bank(path, sniff_language(path));
}

std::map<std::string, ExampleBank> load_aux_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(fmt::format("no such directory: {}", dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, ExampleBank> banks;
  for (const auto& f : files) {
    const std::string lang = f.stem().string();
    banks.emplace(lang, load_bank(f, lang));
  }
  if (banks.empty()) throw DataError(fmt::format("{}: no auxiliary banks", dir.string()));
  return banks;
}

AuxSelection self_selection(const ExampleBank& target) {
  AuxSelection sel;
  sel.similarities[target.language] = 1.0;
  sel.selected = {target.language};
  return sel;
}

void save_retrievers(const std::map<std::string, TrainResult>& trained, const fs::path& dir) {
  for (const auto& [lang, result] : trained) {
    save_params(result.params, dir / (lang + ".bin"));
    write_file(dir / (lang + ".metrics.jsonl"), format_metrics(result.epochs));
  }
}

std::map<std::string, RetrieverParams> load_retrievers(const fs::path& dir,
                                                       const std::vector<std::string>& languages) {
  std::map<std::string, RetrieverParams> out;
  for (const auto& lang : languages) out.emplace(lang, load_params(dir / (lang + ".bin")));
  return out;
}

std::string retrieval_records(const StrategyRunner& runner, std::span<const PreferencePair> test) {
  std::string out;
  for (const auto& pair : test) {
    for (const bool preferred : {true, false}) {
      const auto ctx = runner.context(pair, preferred);
      Json rec;
      rec["id"] = pair.id;
      rec["side"] = preferred ? "preferred" : "rejected";
      Json ids = Json::array();
      Json langs = Json::array();
      for (const auto& p : ctx.pairs) {
        ids.push_back(pair_id(p));
        langs.push_back(p.language);
      }
      rec["pair_ids"] = ids;
      rec["scores"] = ctx.scores;
      rec["languages"] = langs;
      out += rec.dump() + "\n";
    }
  }
  return out;
}

StagingDir::StagingDir(fs::path run_dir, std::string_view stage)
    : run_dir_(std::move(run_dir)), path_(run_dir_ / fmt::format(".staging-{}", stage)) {
  fs::remove_all(path_);
  fs::create_directories(path_);
}

StagingDir::~StagingDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
}

void StagingDir::commit() {
  merge_into(path_, run_dir_);
  fs::remove_all(path_);
  committed_ = true;
}

PipelineResult run_pipeline(const RunConfig& base, RewardModel& model, const LogFn& log) {
  RunConfig cfg = base;
  cfg.train.seed = cfg.seed;
  cfg.train.encoder = cfg.encoder;
  cfg.inference.encoder = cfg.encoder;
  cfg.aux.encoder = cfg.encoder;
  cfg.validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  fs::create_directories(cfg.run_dir);
  if (!cfg.config_echo.empty()) write_file(cfg.run_dir / run_files::kConfig, cfg.config_echo);

  ScoreCache cache;
  ScoreCache* cache_ptr = nullptr;
  if (cfg.use_cache) {
    cache.open(cfg.run_dir / run_files::kCache);
    cache_ptr = &cache;
  }

  PipelineResult result;
  const auto [target, test] = in_stage("load", [&] {
    return std::make_pair(load_target_bank(cfg.target), load_preference_set(cfg.test));
  });
  if (test.empty()) throw DataError("[load] test set is empty");

  std::map<std::string, ExampleBank> banks;
  in_stage("select-aux", [&] {
    StagingDir stage(cfg.run_dir, "select-aux");
    if (cfg.without_aux) {
      result.selection = self_selection(target);
      banks.emplace(target.language, target);
    } else {
      auto all = load_aux_dir(cfg.aux_dir);
      std::vector<ExampleBank> candidates;
      for (const auto& [lang, bank] : all) candidates.push_back(bank);
      result.selection = select_auxiliary(target, candidates, cfg.aux);
      for (const auto& lang : result.selection.selected) banks.emplace(lang, std::move(all.at(lang)));
    }
    save_aux_selection(result.selection, stage.path() / run_files::kAuxSelection);
    stage.commit();
    say(fmt::format("selected auxiliary languages: {}", fmt::join(result.selection.selected, ", ")));
    return 0;
  });

  EvalResources res;
  res.selection = &result.selection;
  res.banks = &banks;

  auto train_mode = [&](LossMode mode, Strategy strategy) {
    const std::string name(loss_mode_name(mode));
    in_stage("train-" + name, [&] {
      StagingDir stage(cfg.run_dir, "train-" + name);
      TrainConfig tc = cfg.train;
      tc.loss_mode = mode;
      std::map<std::string, TrainResult> trained;
      for (const auto& lang : result.selection.selected) {
        say(fmt::format("training {} retriever for {}", name, lang));
        auto r = train_retriever(target, banks.at(lang), model, tc, cache_ptr,
                                 [&](const EpochRecord& e) {
                                   if (e.epoch == 1 || e.epoch % 20 == 0 || e.epoch == tc.epochs) {
                                     say(fmt::format("  epoch {:3d}  loss {:.6f}", e.epoch, e.mean_loss));
                                   }
                                 });
        res.retrievers[strategy][lang] = r.params;
        trained.emplace(lang, std::move(r));
      }
      save_retrievers(trained, stage.path() / run_files::kParams / name);
      if (cache_ptr) cache_ptr->flush();
      stage.commit();
      return 0;
    });
  };
  if (needs(cfg, Strategy::kRelic)) train_mode(LossMode::kPairwise, Strategy::kRelic);
  if (needs(cfg, Strategy::kEpr)) train_mode(LossMode::kRelevance, Strategy::kEpr);
  if (needs(cfg, Strategy::kTopK)) {
    for (const auto& lang : result.selection.selected) {
      res.retrievers[Strategy::kTopK][lang] = initial_params(cfg.train, lang);
    }
  }

  EvalConfig ec;
  ec.inference = cfg.inference;
  ec.seed = cfg.seed;
  ec.bm25_template = cfg.bm25_template;
  ec.parallelism = cfg.parallelism;

  if (needs(cfg, Strategy::kRelic)) {
    in_stage("retrieve", [&] {
      StagingDir stage(cfg.run_dir, "retrieve");
      const StrategyRunner runner(Strategy::kRelic, res, ec);
      write_file(stage.path() / run_files::kRetrieval, retrieval_records(runner, test));
      stage.commit();
      return 0;
    });
  }

  in_stage("evaluate", [&] {
    StagingDir stage(cfg.run_dir, "evaluate");
    for (auto s : cfg.strategies) {
      auto recs = run_strategy(s, test, res, model, cache_ptr, ec);
      say(fmt::format("{}: accuracy {:.4f}", strategy_name(s), pairwise_accuracy(recs)));
      result.records.insert(result.records.end(), recs.begin(), recs.end());
    }
    save_eval_records(result.records, stage.path() / run_files::kRecords);
    export_distributions(result.records, stage.path() / run_files::kDistributions);
    if (cache_ptr) cache_ptr->flush();
    stage.commit();
    return 0;
  });

  in_stage("report", [&] {
    StagingDir stage(cfg.run_dir, "report");
    result.report = build_report(result.records);
    result.report_text = format_report(result.report);
    write_file(stage.path() / run_files::kReport, result.report_text);
    write_file(stage.path() / run_files::kReportRecords, report_records(result.report));
    stage.commit();
    return 0;
  });
  return result;
}

}  // namespace relic

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/error.hpp"
#include "relic/eval.hpp"
#include "relic/inference.hpp"
#include "relic/pipeline.hpp"
#include "relic/reward.hpp"
#include "relic/synth.hpp"
#include "relic/trainer.hpp"
#include "relic/wire.hpp"

namespace fs = std::filesystem;
using namespace relic;

namespace {

/// JSON config files for CLI11: one object per subcommand, keys are long flag names.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return to_json(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, "", {}, items);
    return items;
  }

 private:
  static nlohmann::ordered_json to_json(const CLI::App* app, bool default_also) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->get_type_size() != 0) {
        if (opt->count() == 1) {
          j[name] = opt->results().at(0);
        } else if (opt->count() > 1) {
          j[name] = opt->results();
        } else if (default_also && !opt->get_default_str().empty()) {
          j[name] = opt->get_default_str();
        }
      } else if (opt->count() > 0 || default_also) {
        j[name] = opt->count() > 0;
      }
    }
    return j;
  }

  static void collect(const nlohmann::json& j, const std::string& name,
                      std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) collect(*it, it.key(), parents, out);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = parents;
    auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      if (v.is_number()) return v.dump();
      throw CLI::ConversionError("unsupported config value " + v.dump());
    };
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    out.push_back(std::move(item));
  }
};

struct ModelOptions {
  std::string url;
  bool oracle = false;
  double beta = 0.5;
  double timeout = 30.0;
};

void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--model-url", m.url, "Reward model endpoint (http://host:port)")
      ->envname("RELIC_MODEL_URL");
  sub->add_flag("--oracle", m.oracle, "Use the in-process synthetic oracle");
  sub->add_option("--beta", m.beta, "Synthetic oracle context weight")->capture_default_str();
  sub->add_option("--timeout", m.timeout, "Backend request timeout in seconds")->capture_default_str();
}

std::unique_ptr<RewardModel> make_model(const ModelOptions& m) {
  if (m.oracle && !m.url.empty()) throw ConfigError("give either --model-url or --oracle, not both");
  if (!m.oracle && m.url.empty()) {
    throw ConfigError("no reward model: pass --model-url (or set RELIC_MODEL_URL) or --oracle");
  }
  if (m.oracle) return std::make_unique<SyntheticOracle>(SyntheticOracleConfig{m.beta, "GOOD"});
  return std::make_unique<HttpRewardModel>(m.url, m.timeout);
}

void add_encoder_options(CLI::App* sub, EncoderConfig& e) {
  sub->add_option("--d-in", e.d_in, "Hashed feature dimension")->capture_default_str();
  sub->add_option("--d-out", e.d_out, "Embedding dimension")->capture_default_str();
}

void add_train_options(CLI::App* sub, TrainConfig& t) {
  sub->add_option("--f", t.F, "Candidates per polarity")->capture_default_str();
  sub->add_option("--epochs", t.epochs)->capture_default_str();
  sub->add_option("--lr", t.learning_rate)->capture_default_str();
  sub->add_option("--batch", t.batch_size)->capture_default_str();
  sub->add_option("--max-pairs", t.max_pairs_per_sample, "Cap on pairs per anchor (0 = F*F)")
      ->capture_default_str();
  sub->add_option("--score-parallelism", t.score_parallelism)->capture_default_str();
}

void add_inference_options(CLI::App* sub, InferenceConfig& i) {
  sub->add_option("--c", i.C, "Total in-context pairs")->capture_default_str();
  sub->add_option("--m", i.top_m_per_polarity, "Pair bank width per polarity")->capture_default_str();
  sub->add_option("--token-budget", i.token_budget, "Context character budget (0 = none)")
      ->capture_default_str();
}

void log_line(const std::string& msg) { fmt::print(stderr, "{}\n", msg); }

void open_cache(ScoreCache& cache, const std::string& path) {
  cache.open(path);
}

EncoderConfig encoder_from(const std::map<std::string, RetrieverParams>& params, EncoderConfig base) {
  if (!params.empty()) {
    base.d_in = params.begin()->second.d_in();
    base.d_out = params.begin()->second.d_out();
  }
  for (const auto& [lang, p] : params) {
    if (p.d_in() != base.d_in || p.d_out() != base.d_out) {
      throw DataError(fmt::format("retriever for '{}' has a different shape", lang));
    }
  }
  return base;
}

std::map<std::string, ExampleBank> selected_banks(const fs::path& aux_dir, const AuxSelection& sel) {
  auto all = load_aux_dir(aux_dir);
  std::map<std::string, ExampleBank> out;
  for (const auto& lang : sel.selected) {
    auto it = all.find(lang);
    if (it == all.end()) throw DataError(fmt::format("no bank for selected language '{}'", lang));
    out.emplace(lang, std::move(it->second));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise-trained in-context example retrieval for reward models"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags override its values");
  app.require_subcommand(1);
  app.fallthrough();

  // ingest
  std::string ingest_path, ingest_language, ingest_kind = "bank", ingest_out;
  bool ingest_validate_only = false;
  auto* ingest = app.add_subcommand("ingest", "Validate (and optionally normalize) a record file");
  ingest->add_option("--path", ingest_path)->required();
  ingest->add_option("--language", ingest_language, "Expected language (default: first record)");
  ingest->add_option("--kind", ingest_kind, "bank|test")->capture_default_str();
  ingest->add_flag("--validate-only", ingest_validate_only);
  ingest->add_option("--out", ingest_out, "Write the normalized file here");

  // synth-gen
  SyntheticCorpusSpec synth;
  std::string synth_out;
  auto* synth_gen = app.add_subcommand("synth-gen", "Generate the synthetic topic corpus");
  synth_gen->add_option("--out", synth_out)->required();
  synth_gen->add_option("--seed", synth.seed)->capture_default_str();
  synth_gen->add_option("--topics", synth.num_topics)->capture_default_str();
  synth_gen->add_option("--target-size", synth.target_size)->capture_default_str();
  synth_gen->add_option("--aux-size", synth.aux_size)->capture_default_str();
  synth_gen->add_option("--test-size", synth.test_size)->capture_default_str();
  synth_gen->add_option("--noise", synth.noise_rate)->capture_default_str();
  synth_gen->add_option("--target-flip", synth.target_flip_rate)->capture_default_str();
  synth_gen->add_option("--topic-coverage", synth.target_topic_coverage)->capture_default_str();
  synth_gen->add_option("--target-language", synth.target_language)->capture_default_str();
  synth_gen->add_option("--related", synth.related_languages)->capture_default_str();
  synth_gen->add_option("--unrelated", synth.unrelated_languages)->capture_default_str();

  // select-aux
  AuxSelectConfig aux_cfg;
  std::string sel_target, sel_candidates, sel_out;
  auto* select = app.add_subcommand("select-aux", "Rank auxiliary banks against the target bank");
  select->add_option("--target", sel_target)->required();
  select->add_option("--candidates", sel_candidates)->required();
  select->add_option("--gamma", aux_cfg.gamma_percentile)->capture_default_str();
  select->add_option("--min-selected", aux_cfg.min_selected)->capture_default_str();
  select->add_option("--out", sel_out, "Selection record file");
  add_encoder_options(select, aux_cfg.encoder);

  // train
  TrainConfig train_cfg;
  std::string train_loss = "pairwise", train_target, train_aux_dir, train_sel, train_out, train_cache;
  ModelOptions train_model;
  auto* train = app.add_subcommand("train", "Train one retriever per selected auxiliary language");
  train->add_option("--target", train_target)->required();
  train->add_option("--aux-dir", train_aux_dir)->required();
  train->add_option("--aux-selection", train_sel)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--seed", train_cfg.seed)->capture_default_str();
  train->add_option("--cache", train_cache, "Score cache file");
  train->add_option("--loss", train_loss, "pairwise|relevance")->capture_default_str();
  add_train_options(train, train_cfg);
  add_encoder_options(train, train_cfg.encoder);
  add_model_options(train, train_model);

  // retrieve
  InferenceConfig ret_cfg;
  std::string ret_test, ret_retrievers, ret_aux_dir, ret_sel, ret_out;
  auto* retrieve = app.add_subcommand("retrieve", "Retrieve context pairs for every test response");
  retrieve->add_option("--test", ret_test)->required();
  retrieve->add_option("--retrievers", ret_retrievers)->required();
  retrieve->add_option("--aux-dir", ret_aux_dir)->required();
  retrieve->add_option("--aux-selection", ret_sel)->required();
  retrieve->add_option("--out", ret_out)->required();
  add_inference_options(retrieve, ret_cfg);

  // evaluate
  EvalConfig eval_cfg;
  std::string ev_test, ev_aux_dir, ev_sel, ev_strategies = "zero_shot,random,bm25,topk,epr,relic";
  std::string ev_relic, ev_epr, ev_records, ev_report, ev_dist, ev_cache, ev_bm25 = "paired";
  ModelOptions ev_model;
  auto* evaluate = app.add_subcommand("evaluate", "Score test pairs under each strategy");
  evaluate->add_option("--test", ev_test)->required();
  evaluate->add_option("--aux-dir", ev_aux_dir);
  evaluate->add_option("--aux-selection", ev_sel);
  evaluate->add_option("--strategies", ev_strategies)->capture_default_str();
  evaluate->add_option("--retrievers", ev_relic, "Pairwise-trained retriever directory");
  evaluate->add_option("--epr-retrievers", ev_epr, "Relevance-trained retriever directory");
  evaluate->add_option("--records", ev_records)->required();
  evaluate->add_option("--report", ev_report);
  evaluate->add_option("--distributions", ev_dist);
  evaluate->add_option("--cache", ev_cache, "Score cache file");
  evaluate->add_option("--seed", eval_cfg.seed)->capture_default_str();
  evaluate->add_option("--bm25-template", ev_bm25, "paired|singles")->capture_default_str();
  evaluate->add_option("--parallelism", eval_cfg.parallelism)->capture_default_str();
  add_inference_options(evaluate, eval_cfg.inference);
  add_encoder_options(evaluate, eval_cfg.inference.encoder);
  add_model_options(evaluate, ev_model);

  // report
  std::vector<std::string> rep_records;
  std::string rep_out, rep_json;
  auto* report = app.add_subcommand("report", "Merge record files into the accuracy grid");
  report->add_option("--records", rep_records)->required();
  report->add_option("--out", rep_out, "Text report (default: stdout)");
  report->add_option("--json", rep_json, "Machine-readable report records");

  // oracle-serve
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  SyntheticOracleConfig serve_cfg;
  auto* serve = app.add_subcommand("oracle-serve", "Serve the synthetic oracle over HTTP");
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port)->capture_default_str();
  serve->add_option("--beta", serve_cfg.beta)->capture_default_str();

  // run
  RunConfig run_cfg;
  std::string run_strategies = "zero_shot,random,bm25,topk,epr,relic";
  std::string run_bm25 = "paired";
  bool run_no_cache = false;
  ModelOptions run_model;
  auto* run = app.add_subcommand("run", "Full pipeline: select-aux, train, retrieve, evaluate, report");
  run->alias("pipeline");
  run->add_option("--target", run_cfg.target)->required();
  run->add_option("--aux-dir", run_cfg.aux_dir);
  run->add_option("--test", run_cfg.test)->required();
  run->add_option("--out", run_cfg.run_dir, "Run directory")->required();
  run->add_option("--seed", run_cfg.seed)->capture_default_str();
  run->add_option("--strategies", run_strategies)->capture_default_str();
  run->add_option("--gamma", run_cfg.aux.gamma_percentile)->capture_default_str();
  run->add_option("--min-selected", run_cfg.aux.min_selected)->capture_default_str();
  run->add_option("--bm25-template", run_bm25, "paired|singles")->capture_default_str();
  run->add_option("--parallelism", run_cfg.parallelism)->capture_default_str();
  run->add_flag("--no-cache", run_no_cache, "Do not persist or reuse reward scores");
  run->add_flag("--without-aux", run_cfg.without_aux, "Retrieve from the target bank itself");
  add_train_options(run, run_cfg.train);
  add_inference_options(run, run_cfg.inference);
  add_encoder_options(run, run_cfg.encoder);
  add_model_options(run, run_model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*ingest) {
      if (ingest_kind == "bank") {
        const std::string lang = ingest_language.empty() ? sniff_language(ingest_path) : ingest_language;
        const auto bank = load_bank(ingest_path, lang);
        fmt::print("{}: {} positives, {} negatives\n", bank.language, bank.positives.size(),
                   bank.negatives.size());
        if (!ingest_validate_only && !ingest_out.empty()) save_bank(bank, ingest_out);
      } else if (ingest_kind == "test") {
        const auto pairs = load_preference_set(ingest_path);
        fmt::print("{} preference pairs\n", pairs.size());
        if (!ingest_validate_only && !ingest_out.empty()) save_preference_set(pairs, ingest_out);
      } else {
        throw ConfigError(fmt::format("unknown --kind '{}' (bank|test)", ingest_kind));
      }
    } else if (*synth_gen) {
      const auto corpus = generate_corpus(synth);
      write_corpus(corpus, synth_out);
      fmt::print("wrote {} target, {} auxiliary banks, {} test pairs to {}\n", corpus.target.size(),
                 corpus.aux.size(), corpus.test.size(), synth_out);
    } else if (*select) {
      const auto target = load_target_bank(sel_target);
      std::vector<ExampleBank> candidates;
      for (auto& [lang, bank] : load_aux_dir(sel_candidates)) candidates.push_back(std::move(bank));
      const auto sel = select_auxiliary(target, candidates, aux_cfg);
      fmt::print("{}", format_aux_selection(sel));
      if (!sel_out.empty()) save_aux_selection(sel, sel_out);
    } else if (*train) {
      train_cfg.loss_mode = parse_loss_mode(train_loss);
      train_cfg.validate();
      auto model = make_model(train_model);
      const auto target = load_target_bank(train_target);
      const auto sel = load_aux_selection(train_sel);
      const auto banks = selected_banks(train_aux_dir, sel);
      ScoreCache cache;
      if (!train_cache.empty()) open_cache(cache, train_cache);
      StagingDir stage(train_out, "train");
      std::map<std::string, TrainResult> trained;
      for (const auto& lang : sel.selected) {
        log_line(fmt::format("training {} retriever for {}", train_loss, lang));
        trained.emplace(lang, train_retriever(target, banks.at(lang), *model, train_cfg,
                                              train_cache.empty() ? nullptr : &cache,
                                              [](const EpochRecord& e) {
                                                log_line(fmt::format("  epoch {:3d}  loss {:.6f}",
                                                                     e.epoch, e.mean_loss));
                                              }));
      }
      save_retrievers(trained, stage.path());
      stage.commit();
    } else if (*retrieve) {
      const auto test = load_preference_set(ret_test);
      const auto sel = load_aux_selection(ret_sel);
      const auto banks = selected_banks(ret_aux_dir, sel);
      EvalResources res;
      res.selection = &sel;
      res.banks = &banks;
      res.retrievers[Strategy::kRelic] = load_retrievers(ret_retrievers, sel.selected);
      EvalConfig ec;
      ec.inference = ret_cfg;
      ec.inference.encoder = encoder_from(res.retrievers[Strategy::kRelic], ret_cfg.encoder);
      const StrategyRunner runner(Strategy::kRelic, res, ec);
      write_file(ret_out, retrieval_records(runner, test));
    } else if (*evaluate) {
      const auto strategies = parse_strategy_list(ev_strategies);
      eval_cfg.bm25_template = ev_bm25 == "singles" ? Bm25Template::kSingles : Bm25Template::kPaired;
      if (ev_bm25 != "singles" && ev_bm25 != "paired") {
        throw ConfigError(fmt::format("unknown --bm25-template '{}'", ev_bm25));
      }
      auto model = make_model(ev_model);
      const auto test = load_preference_set(ev_test);
      AuxSelection sel;
      std::map<std::string, ExampleBank> banks;
      if (!ev_sel.empty()) {
        if (ev_aux_dir.empty()) throw ConfigError("--aux-selection needs --aux-dir");
        sel = load_aux_selection(ev_sel);
        banks = selected_banks(ev_aux_dir, sel);
      }
      EvalResources res;
      res.selection = &sel;
      res.banks = &banks;
      if (!ev_relic.empty()) res.retrievers[Strategy::kRelic] = load_retrievers(ev_relic, sel.selected);
      if (!ev_epr.empty()) res.retrievers[Strategy::kEpr] = load_retrievers(ev_epr, sel.selected);
      for (const auto& [strategy, params] : res.retrievers) {
        eval_cfg.inference.encoder = encoder_from(params, eval_cfg.inference.encoder);
      }
      TrainConfig init_cfg;
      init_cfg.seed = eval_cfg.seed;
      init_cfg.encoder = eval_cfg.inference.encoder;
      for (const auto& lang : sel.selected) {
        res.retrievers[Strategy::kTopK][lang] = initial_params(init_cfg, lang);
      }
      ScoreCache cache;
      if (!ev_cache.empty()) open_cache(cache, ev_cache);
      std::vector<EvalRecord> records;
      for (auto s : strategies) {
        auto recs = run_strategy(s, test, res, *model, ev_cache.empty() ? nullptr : &cache, eval_cfg);
        log_line(fmt::format("{}: accuracy {:.4f}", strategy_name(s), pairwise_accuracy(recs)));
        records.insert(records.end(), recs.begin(), recs.end());
      }
      save_eval_records(records, ev_records);
      if (!ev_dist.empty()) export_distributions(records, ev_dist);
      const auto text = format_report(build_report(records));
      if (!ev_report.empty()) write_file(ev_report, text);
      fmt::print("{}", text);
    } else if (*report) {
      std::vector<EvalRecord> records;
      for (const auto& f : rep_records) {
        auto recs = load_eval_records(f);
        records.insert(records.end(), recs.begin(), recs.end());
      }
      const auto rep = build_report(records);
      const auto text = format_report(rep);
      if (rep_out.empty()) {
        fmt::print("{}", text);
      } else {
        write_file(rep_out, text);
      }
      if (!rep_json.empty()) write_file(rep_json, report_records(rep));
    } else if (*serve) {
      OracleServer server(serve_cfg);
      log_line(fmt::format("serving synthetic oracle on http://{}:{}/v1/score", serve_host, serve_port));
      server.serve(serve_host, serve_port);
    } else if (*run) {
      run_cfg.strategies = parse_strategy_list(run_strategies);
      if (run_bm25 != "singles" && run_bm25 != "paired") {
        throw ConfigError(fmt::format("unknown --bm25-template '{}'", run_bm25));
      }
      run_cfg.bm25_template = run_bm25 == "singles" ? Bm25Template::kSingles : Bm25Template::kPaired;
      run_cfg.use_cache = !run_no_cache;
      auto model = make_model(run_model);
      nlohmann::ordered_json echo;
      echo["run"] = nlohmann::ordered_json::parse(run->config_to_str(true, true));
      run_cfg.config_echo = echo.dump(2) + "\n";
      const auto result = run_pipeline(run_cfg, *model, log_line);
      fmt::print("{}", result.report_text);
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return static_cast<int>(ExitCode::kInternal);
  }
  return 0;
}

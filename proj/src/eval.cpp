#include "relic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "relic/error.hpp"
#include "relic/rng.hpp"

namespace relic {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kStrategyNames[] = {"zero_shot", "random", "bm25", "topk", "epr", "relic"};

std::string test_text(const PreferencePair& pair, bool preferred) {
  return pair.query + "\n" + (preferred ? pair.preferred : pair.rejected);
}

}  // namespace

std::string_view strategy_name(Strategy s) { return kStrategyNames[static_cast<int>(s)]; }

Strategy parse_strategy(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kStrategyNames); ++i) {
    if (kStrategyNames[i] == name) return static_cast<Strategy>(i);
  }
  throw ConfigError(fmt::format("unknown strategy '{}'", name));
}

std::vector<Strategy> parse_strategy_list(std::string_view csv) {
  std::vector<Strategy> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = std::min(csv.find(',', start), csv.size());
    const auto item = csv.substr(start, end - start);
    if (!item.empty()) {
      const Strategy s = parse_strategy(item);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("no strategies given");
  return out;
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {Strategy::kZeroShot, Strategy::kRandom, Strategy::kBm25,
                                            Strategy::kTopK,     Strategy::kEpr,    Strategy::kRelic};
  return all;
}

double pairwise_accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) throw DataError("pairwise accuracy of an empty record set");
  std::size_t correct = 0;
  for (const auto& r : records) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::vector<std::string> bm25_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Bm25Index::Bm25Index(const std::vector<std::string>& docs, double k1, double b) : k1_(k1), b_(b) {
  if (docs.empty()) throw DataError("BM25 corpus is empty");
  double total = 0.0;
  for (std::uint32_t d = 0; d < docs.size(); ++d) {
    const auto tokens = bm25_tokenize(docs[d]);
    doc_len_.push_back(static_cast<double>(tokens.size()));
    total += static_cast<double>(tokens.size());
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, n] : tf) postings_[term].emplace_back(d, n);
  }
  avg_len_ = total / static_cast<double>(docs.size());
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
  std::vector<double> out(doc_len_.size(), 0.0);
  const double N = static_cast<double>(doc_len_.size());
  for (const auto& term : bm25_tokenize(query)) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double n = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (N - n + 0.5) / (n + 0.5));
    for (const auto& [d, tf_count] : it->second) {
      const double tf = tf_count;
      const double norm = avg_len_ > 0.0 ? doc_len_[d] / avg_len_ : 0.0;
      out[d] += idf * tf * (k1_ + 1.0) / (tf + k1_ * (1.0 - b_ + b_ * norm));
    }
  }
  return out;
}

std::vector<std::size_t> Bm25Index::rank(std::string_view query) const {
  const auto s = scores(query);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return idx;
}

std::vector<std::size_t> bm25_rank(std::string_view query, const std::vector<std::string>& corpus,
                                   double k1, double b) {
  return Bm25Index(corpus, k1, b).rank(query);
}

StrategyRunner::StrategyRunner(Strategy strategy, const EvalResources& res, const EvalConfig& cfg)
    : strategy_(strategy), res_(res), cfg_(cfg) {
  cfg_.inference.validate();
  if (strategy_ == Strategy::kZeroShot) return;
  if (res_.selection == nullptr || res_.banks == nullptr || res_.selection->selected.empty()) {
    throw ConfigError(fmt::format("strategy {} needs an auxiliary selection and banks",
                                  strategy_name(strategy_)));
  }
  languages_ = res_.selection->selected;
  for (const auto& lang : languages_) {
    if (!res_.banks->contains(lang)) {
      throw DataError(fmt::format("no bank for selected language '{}'", lang));
    }
  }
  if (strategy_ == Strategy::kBm25) {
    std::vector<std::string> docs;
    for (const auto& lang : languages_) {
      const auto& bank = res_.banks->at(lang);
      for (const auto& t : bank.positives) pool_.push_back(t);
      for (const auto& t : bank.negatives) pool_.push_back(t);
    }
    for (const auto& t : pool_) docs.push_back(item_text(t));
    bm25_ = std::make_unique<Bm25Index>(docs, cfg_.bm25_k1, cfg_.bm25_b);
  } else if (strategy_ == Strategy::kTopK || strategy_ == Strategy::kEpr ||
             strategy_ == Strategy::kRelic) {
    const auto it = res_.retrievers.find(strategy_);
    if (it == res_.retrievers.end()) {
      throw ConfigError(fmt::format("strategy {} has no retrievers", strategy_name(strategy_)));
    }
    indexes_.reserve(languages_.size());
    for (const auto& lang : languages_) {
      const auto p = it->second.find(lang);
      if (p == it->second.end()) {
        throw ConfigError(
            fmt::format("strategy {} has no retriever for '{}'", strategy_name(strategy_), lang));
      }
      indexes_.emplace_back(res_.banks->at(lang), p->second, cfg_.inference.encoder);
    }
  }
}

SideContext StrategyRunner::context(const PreferencePair& pair, bool preferred) const {
  SideContext out;
  const auto C = static_cast<std::size_t>(cfg_.inference.C);
  switch (strategy_) {
    case Strategy::kZeroShot:
      break;
    case Strategy::kRandom: {
      Rng rng(derive_seed(cfg_.seed, "random-baseline:" + pair.id +
                                         (preferred ? ":preferred" : ":rejected")));
      std::vector<std::uint64_t> offsets;
      std::uint64_t total = 0;
      for (const auto& lang : languages_) {
        offsets.push_back(total);
        const auto& bank = res_.banks->at(lang);
        total += static_cast<std::uint64_t>(bank.positives.size()) * bank.negatives.size();
      }
      std::set<std::uint64_t> drawn;
      while (drawn.size() < std::min<std::uint64_t>(C, total)) {
        const auto k = rng.below(total);
        if (!drawn.insert(k).second) continue;
        const auto l = static_cast<std::size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), k) - offsets.begin() - 1);
        const auto& bank = res_.banks->at(languages_[l]);
        const auto local = k - offsets[l];
        out.pairs.push_back({bank.positives[local / bank.negatives.size()],
                             bank.negatives[local % bank.negatives.size()], bank.language});
      }
      break;
    }
    case Strategy::kBm25: {
      const auto ranking = bm25_->rank(test_text(pair, preferred));
      const auto scores = bm25_->scores(test_text(pair, preferred));
      if (cfg_.bm25_template == Bm25Template::kSingles) {
        for (std::size_t r = 0; r < ranking.size() && out.singles.size() < 2 * C; ++r) {
          out.singles.push_back(pool_[ranking[r]]);
          out.scores.push_back(scores[ranking[r]]);
        }
        std::reverse(out.singles.begin(), out.singles.end());
        std::reverse(out.scores.begin(), out.scores.end());
        break;
      }
      // Greedy pairing within a language: each positive meets the next negative.
      std::map<std::string, std::vector<std::size_t>> pending_pos;
      std::map<std::string, std::vector<std::size_t>> pending_neg;
      for (std::size_t r = 0; r < ranking.size() && out.pairs.size() < C; ++r) {
        const auto& t = pool_[ranking[r]];
        auto& mine = t.polarity == Polarity::kPositive ? pending_pos[t.language] : pending_neg[t.language];
        auto& other = t.polarity == Polarity::kPositive ? pending_neg[t.language] : pending_pos[t.language];
        if (other.empty()) {
          mine.push_back(ranking[r]);
          continue;
        }
        const auto partner = other.front();
        other.erase(other.begin());
        const auto& p = t.polarity == Polarity::kPositive ? t : pool_[partner];
        const auto& n = t.polarity == Polarity::kPositive ? pool_[partner] : t;
        out.pairs.push_back({p, n, t.language});
        out.scores.push_back(scores[ranking[r]]);
      }
      std::reverse(out.pairs.begin(), out.pairs.end());
      std::reverse(out.scores.begin(), out.scores.end());
      break;
    }
    case Strategy::kTopK:
    case Strategy::kEpr:
    case Strategy::kRelic: {
      std::vector<const PairIndex*> ptrs;
      for (const auto& idx : indexes_) ptrs.push_back(&idx);
      const std::string& response = preferred ? pair.preferred : pair.rejected;
      const auto ctx = retrieve_context(pair.query, response, ptrs, cfg_.inference, *res_.selection);
      for (const auto& p : ctx.pairs) {
        out.pairs.push_back(p.pair);
        out.scores.push_back(p.score);
      }
      break;
    }
  }
  return out;
}

RenderedPrompt StrategyRunner::prompt(const PreferencePair& pair, bool preferred) const {
  const auto ctx = context(pair, preferred);
  const std::string& response = preferred ? pair.preferred : pair.rejected;
  if (!ctx.singles.empty()) return render_icl_singles(ctx.singles, pair.query, response, pair.language);
  if (!ctx.pairs.empty()) return render_icl(ctx.pairs, pair.query, response, pair.language);
  return render_zero_shot(pair.query, response);
}

std::vector<EvalRecord> run_strategy(Strategy strategy, std::span<const PreferencePair> test_set,
                                     const EvalResources& res, RewardModel& model,
                                     ScoreCache* cache, const EvalConfig& cfg) {
  const StrategyRunner runner(strategy, res, cfg);
  std::vector<EvalRecord> out(test_set.size());
  auto work = [&](std::size_t i) {
    const auto& pair = test_set[i];
    EvalRecord& r = out[i];
    r.pair_id = pair.id;
    r.strategy = strategy;
    r.language = pair.language;
    r.score_preferred = score(model, runner.prompt(pair, true), cache).value;
    r.score_rejected = score(model, runner.prompt(pair, false), cache).value;
    r.correct = r.score_preferred > r.score_rejected;
  };
  const auto workers = static_cast<std::size_t>(std::max(1, cfg.parallelism));
  if (workers == 1 || test_set.size() < 2) {
    for (std::size_t i = 0; i < test_set.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, test_set.size()); ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const auto i = next.fetch_add(1);
          if (i >= test_set.size()) return;
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next.store(test_set.size());
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Report build_report(std::span<const EvalRecord> records) {
  Report report;
  std::set<std::string> languages;
  std::set<Strategy> strategies;
  std::map<std::pair<Strategy, std::string>, std::size_t> correct;
  for (const auto& r : records) {
    languages.insert(r.language);
    strategies.insert(r.strategy);
    const auto key = std::make_pair(r.strategy, r.language);
    ++report.counts[key];
    correct[key] += r.correct ? 1 : 0;
  }
  report.languages.assign(languages.begin(), languages.end());
  for (auto s : all_strategies()) {
    if (strategies.contains(s)) report.strategies.push_back(s);
  }
  for (const auto& [key, n] : report.counts) {
    report.accuracy[key] = static_cast<double>(correct[key]) / static_cast<double>(n);
  }
  return report;
}

namespace {

std::optional<double> gain(const Report& report, const std::string& lang) {
  const auto relic = report.accuracy.find({Strategy::kRelic, lang});
  if (relic == report.accuracy.end()) return std::nullopt;
  std::optional<double> best;
  for (auto s : report.strategies) {
    if (s == Strategy::kRelic) continue;
    const auto it = report.accuracy.find({s, lang});
    if (it != report.accuracy.end() && (!best || it->second > *best)) best = it->second;
  }
  if (!best) return std::nullopt;
  return relic->second - *best;
}

}  // namespace

std::string format_report(const Report& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"strategy"};
  for (const auto& lang : report.languages) header.push_back(lang);
  rows.push_back(header);
  for (auto s : report.strategies) {
    std::vector<std::string> row = {std::string(strategy_name(s))};
    for (const auto& lang : report.languages) {
      const auto it = report.accuracy.find({s, lang});
      row.push_back(it == report.accuracy.end() ? "-" : fmt::format("{:.4f}", it->second));
    }
    rows.push_back(row);
  }
  std::vector<std::string> gain_row = {"gain"};
  for (const auto& lang : report.languages) {
    const auto g = gain(report, lang);
    gain_row.push_back(g ? fmt::format("{:+.4f}", *g) : "-");
  }
  rows.push_back(gain_row);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == rows.size() - 1) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      if (c == 0) {
        out += cell + std::string(width[c] - cell.size(), ' ');
      } else {
        out += "  " + std::string(width[c] - cell.size(), ' ') + cell;
      }
    }
    out += "\n";
  }
  return out;
}

std::string report_records(const Report& report) {
  std::string out;
  for (const auto& lang : report.languages) {
    for (auto s : report.strategies) {
      const auto it = report.accuracy.find({s, lang});
      if (it == report.accuracy.end()) continue;
      Json rec;
      rec["language"] = lang;
      rec["strategy"] = strategy_name(s);
      rec["accuracy"] = it->second;
      rec["n"] = report.counts.at({s, lang});
      out += rec.dump() + "\n";
    }
    if (const auto g = gain(report, lang)) {
      Json rec;
      rec["language"] = lang;
      rec["strategy"] = "gain";
      rec["accuracy"] = *g;
      out += rec.dump() + "\n";
    }
  }
  return out;
}

std::string serialize_eval_records(std::span<const EvalRecord> records) {
  std::string out;
  for (const auto& r : records) {
    Json rec;
    rec["strategy"] = strategy_name(r.strategy);
    rec["language"] = r.language;
    rec["pair_id"] = r.pair_id;
    rec["score_preferred"] = r.score_preferred;
    rec["score_rejected"] = r.score_rejected;
    rec["correct"] = r.correct;
    out += rec.dump() + "\n";
  }
  return out;
}

std::vector<EvalRecord> parse_eval_records(std::string_view text, std::string_view source) {
  std::vector<EvalRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = Json::parse(line);
      EvalRecord r;
      r.strategy = parse_strategy(j.at("strategy").get<std::string>());
      r.language = j.at("language").get<std::string>();
      r.pair_id = j.at("pair_id").get<std::string>();
      r.score_preferred = j.at("score_preferred").get<double>();
      r.score_rejected = j.at("score_rejected").get<double>();
      r.correct = j.at("correct").get<bool>();
      if (r.correct != (r.score_preferred > r.score_rejected)) {
        throw DataError("correct flag disagrees with scores");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    } catch (const Error& e) {
      throw DataError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  return out;
}

void save_eval_records(std::span<const EvalRecord> records, const std::filesystem::path& path) {
  write_file(path, serialize_eval_records(records));
}

std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path) {
  return parse_eval_records(read_file(path), path.string());
}

std::string export_distributions(std::span<const EvalRecord> records) {
  std::string out;
  for (const auto& r : records) {
    for (int side = 0; side < 2; ++side) {
      Json rec;
      rec["strategy"] = strategy_name(r.strategy);
      rec["language"] = r.language;
      rec["class"] = side == 0 ? "preferred" : "rejected";
      rec["pair_id"] = r.pair_id;
      rec["score"] = side == 0 ? r.score_preferred : r.score_rejected;
      out += rec.dump() + "\n";
    }
  }
  return out;
}

void export_distributions(std::span<const EvalRecord> records, const std::filesystem::path& path) {
  write_file(path, export_distributions(records));
}

}  // namespace relic

#include "relic/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "relic/error.hpp"

namespace relic {
namespace {

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t exchange_cost(const ExampleTriplet& t) {
  const auto marker = t.polarity == Polarity::kPositive ? kPositiveMarker : kNegativeMarker;
  return code_points(t.query) + code_points(t.response) + 1 + marker.size();
}

std::vector<std::size_t> top_m(const std::vector<Embedding>& items, const Embedding& q,
                               std::size_t m) {
  std::vector<double> s(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) s[i] = similarity(q, items[i]);
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  m = std::min(m, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                    [&](std::size_t a, std::size_t b) { return s[a] != s[b] ? s[a] > s[b] : a < b; });
  idx.resize(m);
  return idx;
}

double aux_similarity(const AuxSelection& aux, const std::string& lang) {
  const auto it = aux.similarities.find(lang);
  return it == aux.similarities.end() ? -std::numeric_limits<double>::infinity() : it->second;
}

}  // namespace

void InferenceConfig::validate() const {
  if (C < 1) throw ConfigError("C must be at least 1");
  if (top_m_per_polarity < 1) throw ConfigError("M must be at least 1");
}

std::string pair_id(const ContextPair& pair) { return pair.positive.id + "|" + pair.negative.id; }

PairIndex::PairIndex(ExampleBank bank, RetrieverParams params, EncoderConfig cfg)
    : bank_(std::move(bank)), params_(std::move(params)), cfg_(cfg) {
  if (bank_.positives.empty() || bank_.negatives.empty()) {
    throw DataError(fmt::format("bank '{}' has an empty partition", bank_.language));
  }
  if (params_.d_in() != cfg_.d_in || params_.d_out() != cfg_.d_out) {
    throw InvariantError("retriever shape does not match encoder config");
  }
  auto prepare = [&](const std::vector<ExampleTriplet>& src, std::vector<EncodedItem>& items,
                     std::vector<Embedding>& raw, std::vector<double>& norm2,
                     std::vector<Embedding>& unit) {
    for (const auto& t : src) {
      items.push_back(encode_item(t, cfg_));
      raw.push_back(embed(params_.psi, items.back().counts));
      norm2.push_back(items.back().counts.squared_norm());
      // Single-item similarity uses unit-norm items.
      unit.push_back(embed(params_.psi, normalized(items.back().counts)));
    }
  };
  prepare(bank_.positives, pos_items_, pos_raw_, pos_norm2_, pos_unit_);
  prepare(bank_.negatives, neg_items_, neg_raw_, neg_norm2_, neg_unit_);
}

Embedding PairIndex::embed_query(std::string_view query, std::string_view response) const {
  std::string text(query);
  text += '\n';
  text += response;
  return embed(params_.phi, featurize(text, cfg_));
}

PairBank PairIndex::build(std::string_view query, std::string_view response, int M) const {
  if (M < 1) throw ConfigError("M must be at least 1");
  const Embedding q = embed_query(query, response);
  const auto pos = top_m(pos_unit_, q, static_cast<std::size_t>(M));
  const auto neg = top_m(neg_unit_, q, static_cast<std::size_t>(M));

  PairBank out;
  out.language = bank_.language;
  const std::size_t d = params_.d_out();
  for (auto i : pos) {
    for (auto j : neg) {
      const auto& a = pos_items_[i];
      const auto& b = neg_items_[j];
      const SparseVector boundary = pair_boundary_counts(a, b, cfg_);
      const double norm2 = pos_norm2_[i] + neg_norm2_[j] + boundary.squared_norm() +
                           2.0 * (dot(a.counts, b.counts) + dot(a.counts, boundary) +
                                  dot(b.counts, boundary));
      const double scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
      Embedding e;
      e.values.assign(d, 0.0);
      embed_accumulate(params_.psi, boundary, 1.0, e.values);
      for (std::size_t k = 0; k < d; ++k) {
        e.values[k] = (pos_raw_[i].values[k] + neg_raw_[j].values[k] + e.values[k]) * scale;
      }
      out.pairs.push_back({bank_.positives[i], bank_.negatives[j], bank_.language});
      out.pair_embeddings.push_back(std::move(e));
    }
  }
  return out;
}

PairBank build_pair_bank(const ExampleBank& aux_bank, const RetrieverParams& params,
                         std::string_view query, std::string_view response, int M,
                         const EncoderConfig& cfg) {
  return PairIndex(aux_bank, params, cfg).build(query, response, M);
}

std::vector<ScoredPair> retrieve_top_k(const PairBank& bank, std::string_view query,
                                       std::string_view response, const RetrieverParams& params,
                                       int K, const EncoderConfig& cfg) {
  if (K < 1) throw ConfigError("K must be at least 1");
  if (bank.pairs.empty()) throw DataError(fmt::format("pair bank '{}' is empty", bank.language));
  std::string text(query);
  text += '\n';
  text += response;
  const Embedding q = embed(params.phi, featurize(text, cfg));
  const auto idx = top_m(bank.pair_embeddings, q, static_cast<std::size_t>(K));
  std::vector<ScoredPair> out;
  for (auto i : idx) out.push_back({bank.pairs[i], similarity(q, bank.pair_embeddings[i])});
  return out;
}

std::size_t context_cost(const ContextPair& pair) {
  return exchange_cost(pair.positive) + exchange_cost(pair.negative);
}

std::map<std::string, int> allocate_slots(const std::vector<std::string>& languages, int C,
                                          const AuxSelection& aux) {
  if (languages.empty()) throw InvariantError("slot allocation needs at least one language");
  std::vector<std::string> order = languages;
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double sa = aux_similarity(aux, a);
    const double sb = aux_similarity(aux, b);
    return sa != sb ? sa > sb : a < b;
  });
  const int P = static_cast<int>(order.size());
  const int K = C / P;
  const int rem = C - P * K;
  std::map<std::string, int> out;
  for (int r = 0; r < P; ++r) out[order[static_cast<std::size_t>(r)]] = K + (r < rem ? 1 : 0);
  return out;
}

RetrievedContext assemble_context(const std::map<std::string, std::vector<ScoredPair>>& per_language,
                                  const InferenceConfig& cfg, const AuxSelection& aux) {
  cfg.validate();
  std::vector<std::string> languages;
  for (const auto& [lang, _] : per_language) languages.push_back(lang);
  const auto slots = allocate_slots(languages, cfg.C, aux);

  RetrievedContext ctx;
  std::vector<std::string> by_similarity = languages;
  std::sort(by_similarity.begin(), by_similarity.end(), [&](const auto& a, const auto& b) {
    const double sa = aux_similarity(aux, a);
    const double sb = aux_similarity(aux, b);
    return sa != sb ? sa > sb : a < b;
  });
  for (const auto& lang : by_similarity) {
    const auto& list = per_language.at(lang);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(slots.at(lang)), list.size());
    ctx.pairs.insert(ctx.pairs.end(), list.begin(), list.begin() + static_cast<std::ptrdiff_t>(take));
  }
  ctx.shortfall = ctx.pairs.size() < static_cast<std::size_t>(cfg.C);
  std::stable_sort(ctx.pairs.begin(), ctx.pairs.end(),
                   [](const ScoredPair& a, const ScoredPair& b) { return a.score < b.score; });

  if (cfg.token_budget > 0) {
    std::size_t cost = 0;
    for (const auto& p : ctx.pairs) cost += context_cost(p.pair);
    std::size_t drop = 0;
    while (drop < ctx.pairs.size() && cost > cfg.token_budget) {
      cost -= context_cost(ctx.pairs[drop].pair);
      ++drop;
    }
    if (drop > 0) {
      ctx.truncated = true;
      ctx.pairs.erase(ctx.pairs.begin(), ctx.pairs.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
  for (const auto& lang : by_similarity) {
    const bool used = std::any_of(ctx.pairs.begin(), ctx.pairs.end(),
                                  [&](const ScoredPair& p) { return p.pair.language == lang; });
    if (used) ctx.languages_used.push_back(lang);
  }
  return ctx;
}

RetrievedContext retrieve_context(std::string_view query, std::string_view response,
                                  const std::vector<const PairIndex*>& indexes,
                                  const InferenceConfig& cfg, const AuxSelection& aux) {
  cfg.validate();
  std::map<std::string, std::vector<ScoredPair>> per_language;
  for (const PairIndex* index : indexes) {
    const PairBank bank = index->build(query, response, cfg.top_m_per_polarity);
    per_language[index->language()] =
        retrieve_top_k(bank, query, response, index->params(), cfg.C, index->encoder());
  }
  return assemble_context(per_language, cfg, aux);
}

RenderedPrompt render_context(std::string_view query, std::string_view response,
                              std::string_view target_language, const RetrievedContext& ctx) {
  if (ctx.pairs.empty()) return render_zero_shot(query, response);
  std::vector<ContextPair> pairs;
  for (const auto& p : ctx.pairs) pairs.push_back(p.pair);
  return render_icl(pairs, query, response, target_language);
}

RewardScore score_with_context(std::string_view query, std::string_view response,
                               std::string_view target_language, const RetrievedContext& ctx,
                               RewardModel& model, ScoreCache* cache) {
  return score(model, render_context(query, response, target_language, ctx), cache);
}

}  // namespace relic

#include "relic/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/core.h>
#include <json.hpp>

#include "relic/error.hpp"
#include "relic/rng.hpp"

namespace relic {
namespace {

/// Gradient rows allocated on first touch.
class RowGradient {
 public:
  RowGradient(std::size_t d_in, std::size_t d_out) : slot_(d_in, -1), d_out_(d_out) {}

  double* row(std::uint32_t r) {
    if (slot_[r] < 0) {
      slot_[r] = static_cast<std::int32_t>(rows_.size());
      rows_.push_back(r);
      values_.resize(values_.size() + d_out_, 0.0);
    }
    return values_.data() + static_cast<std::size_t>(slot_[r]) * d_out_;
  }

  const std::vector<std::uint32_t>& rows() const { return rows_; }
  const double* slot_values(std::size_t slot) const { return values_.data() + slot * d_out_; }

  void clear() {
    for (auto r : rows_) slot_[r] = -1;
    rows_.clear();
    values_.clear();
  }

  SparseRowGradient to_sparse() const {
    std::vector<std::size_t> order(rows_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rows_[a] < rows_[b]; });
    SparseRowGradient out;
    out.d_out = d_out_;
    for (auto i : order) {
      out.rows.push_back(rows_[i]);
      out.values.insert(out.values.end(), values_.begin() + i * d_out_,
                        values_.begin() + (i + 1) * d_out_);
    }
    return out;
  }

 private:
  std::vector<std::int32_t> slot_;
  std::vector<std::uint32_t> rows_;
  std::vector<double> values_;
  std::size_t d_out_;
};

/// psi^T * block, memoized until the parameters change.
class BlockEmbeddingCache {
 public:
  BlockEmbeddingCache(std::size_t blocks, std::size_t d_out)
      : values_(blocks * d_out), stamp_(blocks, 0), d_out_(d_out) {}

  void invalidate() { ++generation_; }

  std::span<const double> get(std::uint32_t b, const BlockStore& store, const DenseMatrix& psi) {
    std::span<double> out(values_.data() + static_cast<std::size_t>(b) * d_out_, d_out_);
    if (stamp_[b] != generation_) {
      std::fill(out.begin(), out.end(), 0.0);
      embed_accumulate(psi, store.blocks[b], 1.0, out);
      stamp_[b] = generation_;
    }
    return out;
  }

 private:
  std::vector<double> values_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t generation_ = 1;
  std::size_t d_out_;
};

struct Scratch {
  explicit Scratch(std::size_t blocks) : coef(blocks, 0.0) {}
  std::vector<double> coef;
  std::vector<std::uint32_t> touched;
};

std::vector<double> candidate_logits(const FeatureVector& anchor, const BlockStore& store,
                                     std::span<const Candidate> cands,
                                     const RetrieverParams& params, BlockEmbeddingCache& cache,
                                     std::vector<double>* psi_out, std::vector<double>& phi_a) {
  const std::size_t d = params.d_out();
  phi_a.assign(d, 0.0);
  embed_accumulate(params.phi, anchor, 1.0, phi_a);
  std::vector<double> z(cands.size());
  std::vector<double> local(d);
  if (psi_out != nullptr) psi_out->assign(cands.size() * d, 0.0);
  for (std::size_t e = 0; e < cands.size(); ++e) {
    std::span<double> psi_e = psi_out != nullptr ? std::span<double>(psi_out->data() + e * d, d)
                                                 : std::span<double>(local);
    std::fill(psi_e.begin(), psi_e.end(), 0.0);
    const auto& c = cands[e];
    for (std::uint8_t k = 0; k < c.block_count; ++k) {
      const auto block = cache.get(c.blocks[k], store, params.psi);
      for (std::size_t j = 0; j < d; ++j) psi_e[j] += block[j];
    }
    for (std::size_t j = 0; j < d; ++j) psi_e[j] *= c.scale;
    z[e] = dot(std::span<const double>(phi_a), std::span<const double>(psi_e));
    if (!std::isfinite(z[e])) throw InvariantError("non-finite retrieval logit");
  }
  return z;
}

// Softmax NLL of the target candidate; accumulates grad_scale * gradient.
double nll_step(const FeatureVector& anchor, const BlockStore& store,
                std::span<const Candidate> cands, std::size_t target,
                const RetrieverParams& params, BlockEmbeddingCache& cache, Scratch& scratch,
                RowGradient* grad_phi, RowGradient* grad_psi, double grad_scale) {
  if (cands.empty()) throw InvariantError("empty candidate set");
  if (target >= cands.size()) throw InvariantError("target index out of range");
  const std::size_t d = params.d_out();
  std::vector<double> phi_a;
  std::vector<double> psi;
  const bool want_grad = grad_phi != nullptr && grad_psi != nullptr;
  const auto z = candidate_logits(anchor, store, cands, params, cache, want_grad ? &psi : nullptr,
                                  phi_a);

  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  const double loss = lse - z[target];
  if (!want_grad) return loss;

  std::vector<double> g_phi_a(d, 0.0);
  for (std::size_t e = 0; e < cands.size(); ++e) {
    const double g = (std::exp(z[e] - lse) - (e == target ? 1.0 : 0.0)) * grad_scale;
    if (g == 0.0) continue;
    const double* psi_e = psi.data() + e * d;
    for (std::size_t j = 0; j < d; ++j) g_phi_a[j] += g * psi_e[j];
    const auto& c = cands[e];
    for (std::uint8_t k = 0; k < c.block_count; ++k) {
      const auto b = c.blocks[k];
      if (scratch.coef[b] == 0.0) scratch.touched.push_back(b);
      scratch.coef[b] += g * c.scale;
    }
  }

  for (std::size_t k = 0; k < anchor.indices.size(); ++k) {
    double* row = grad_phi->row(anchor.indices[k]);
    const double w = anchor.values[k];
    for (std::size_t j = 0; j < d; ++j) row[j] += w * g_phi_a[j];
  }
  for (auto b : scratch.touched) {
    const double coef = scratch.coef[b];
    scratch.coef[b] = 0.0;
    const auto& block = store.blocks[b];
    for (std::size_t k = 0; k < block.indices.size(); ++k) {
      double* row = grad_psi->row(block.indices[k]);
      const double w = coef * block.values[k];
      for (std::size_t j = 0; j < d; ++j) row[j] += w * phi_a[j];
    }
  }
  scratch.touched.clear();
  return loss;
}

double combined_squared_norm(const SparseVector& a, const SparseVector& b, const SparseVector& c) {
  return a.squared_norm() + b.squared_norm() + c.squared_norm() +
         2.0 * (dot(a, b) + dot(a, c) + dot(b, c));
}

double inverse_norm(double squared) { return squared > 0.0 ? 1.0 / std::sqrt(squared) : 0.0; }

LossResult loss_with_gradients(const FeatureVector& anchor, const BlockStore& store,
                               const std::vector<Candidate>& cands, std::size_t target,
                               const RetrieverParams& params) {
  BlockEmbeddingCache cache(store.blocks.size(), params.d_out());
  Scratch scratch(store.blocks.size());
  RowGradient gphi(params.d_in(), params.d_out());
  RowGradient gpsi(params.d_in(), params.d_out());
  LossResult out;
  out.loss = nll_step(anchor, store, cands, target, params, cache, scratch, &gphi, &gpsi, 1.0);
  out.grad_phi = gphi.to_sparse();
  out.grad_psi = gpsi.to_sparse();
  return out;
}

// Indices of the top-F entries by score (descending, ties by position).
std::vector<std::size_t> top_indices(const std::vector<double>& scores,
                                     const std::vector<bool>& excluded, int F) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!excluded[i]) idx.push_back(i);
  }
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(F, 0)), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  idx.resize(keep);
  return idx;
}

bool same_example(const ExampleTriplet& a, const ExampleTriplet& b) {
  return a.language == b.language && a.id == b.id;
}

std::vector<double> item_scores(const std::vector<double>& phi_a,
                                const std::vector<Embedding>& items) {
  std::vector<double> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out[i] = dot(std::span<const double>(phi_a), std::span<const double>(items[i].values));
  }
  return out;
}

std::vector<bool> exclusions(const ExampleTriplet& anchor, const std::vector<ExampleTriplet>& items) {
  std::vector<bool> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[i] = same_example(anchor, items[i]);
  return out;
}

void adam_update(DenseMatrix& param, DenseMatrix& m, DenseMatrix& v, const RowGradient& grad,
                 const TrainConfig& cfg, double bias1, double bias2) {
  const std::size_t d = param.cols();
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  for (std::size_t slot = 0; slot < grad.rows().size(); ++slot) {
    const auto r = grad.rows()[slot];
    const double* g = grad.slot_values(slot);
    auto p = param.row(r);
    auto mr = m.row(r);
    auto vr = v.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      mr[j] = b1 * mr[j] + (1.0 - b1) * g[j];
      vr[j] = b2 * vr[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = mr[j] / bias1;
      const double vhat = vr[j] / bias2;
      p[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

}  // namespace

std::string_view loss_mode_name(LossMode mode) {
  return mode == LossMode::kPairwise ? "pairwise" : "relevance";
}

LossMode parse_loss_mode(std::string_view name) {
  if (name == "pairwise") return LossMode::kPairwise;
  if (name == "relevance") return LossMode::kRelevance;
  throw ConfigError(fmt::format("unknown loss mode '{}' (pairwise|relevance)", name));
}

void TrainConfig::validate() const {
  if (F < 1) throw ConfigError("F must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (max_pairs_per_sample < 0) throw ConfigError("max_pairs_per_sample must be non-negative");
  if (encoder.d_in == 0 || encoder.d_out == 0) throw ConfigError("encoder dims must be positive");
}

RetrieverParams initial_params(const TrainConfig& cfg, std::string_view language) {
  return init_params(cfg.encoder, derive_seed(cfg.seed, "init:" + std::string(language)));
}

CandidateSet mine_candidates(const ExampleTriplet& anchor, const ExampleBank& bank,
                             const RetrieverParams& params, int F, const EncoderConfig& cfg) {
  if (bank.positives.empty() || bank.negatives.empty()) {
    throw DataError(fmt::format("bank '{}' has an empty partition", bank.language));
  }
  const Embedding phi_a = embed(params.phi, featurize(item_text(anchor), cfg));
  CandidateSet out;
  out.anchor = anchor;
  auto fill = [&](const std::vector<ExampleTriplet>& items, std::vector<ExampleTriplet>& dst,
                  std::vector<double>& dst_scores) {
    std::vector<double> scores(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      scores[i] = similarity(phi_a, embed(params.psi, featurize(item_text(items[i]), cfg)));
    }
    for (auto i : top_indices(scores, exclusions(anchor, items), F)) {
      dst.push_back(items[i]);
      dst_scores.push_back(scores[i]);
    }
  };
  fill(bank.positives, out.positives, out.positive_scores);
  fill(bank.negatives, out.negatives, out.negative_scores);
  return out;
}

std::vector<ContextPair> build_pair_set(const CandidateSet& cands, std::size_t cap) {
  std::vector<ContextPair> pairs;
  for (const auto& pos : cands.positives) {
    for (const auto& neg : cands.negatives) {
      if (pairs.size() >= cap) return pairs;
      pairs.push_back({pos, neg, pos.language});
    }
  }
  return pairs;
}

double score_pair(const ContextPair& pair, const ExampleTriplet& anchor, RewardModel& model,
                  ScoreCache* cache) {
  const ContextPair ctx[] = {pair};
  return score(model, render_icl(ctx, anchor.query, anchor.response, anchor.language), cache).value;
}

double score_single(const ExampleTriplet& example, const ExampleTriplet& anchor,
                    RewardModel& model, ScoreCache* cache) {
  const ExampleTriplet ctx[] = {example};
  return score(model, render_icl_singles(ctx, anchor.query, anchor.response, anchor.language),
               cache)
      .value;
}

std::size_t select_target_pair(std::span<const double> scores, int polarity) {
  if (scores.empty()) throw InvariantError("select_target_pair on empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (polarity * scores[i] > polarity * scores[best]) best = i;
  }
  return best;
}

LossResult pairwise_nll_loss(const ExampleTriplet& anchor, std::span<const ContextPair> pairs,
                             std::size_t target_index, const RetrieverParams& params,
                             const EncoderConfig& cfg) {
  if (pairs.empty()) throw InvariantError("empty pair set");
  BlockStore store;
  std::vector<Candidate> cands;
  for (const auto& p : pairs) {
    const auto pos = encode_item(p.positive, cfg);
    const auto neg = encode_item(p.negative, cfg);
    auto boundary = pair_boundary_counts(pos, neg, cfg);
    Candidate c;
    c.scale = inverse_norm(combined_squared_norm(pos.counts, neg.counts, boundary));
    c.block_count = 3;
    const auto base = static_cast<std::uint32_t>(store.blocks.size());
    c.blocks = {base, base + 1, base + 2};
    store.blocks.push_back(pos.counts);
    store.blocks.push_back(neg.counts);
    store.blocks.push_back(std::move(boundary));
    cands.push_back(c);
  }
  return loss_with_gradients(featurize(item_text(anchor), cfg), store, cands, target_index, params);
}

LossResult relevance_nll_loss(const ExampleTriplet& anchor, std::span<const ExampleTriplet> items,
                              std::size_t target_index, const RetrieverParams& params,
                              const EncoderConfig& cfg) {
  if (items.empty()) throw InvariantError("empty candidate set");
  BlockStore store;
  std::vector<Candidate> cands;
  for (const auto& item : items) {
    auto counts = encode_item(item, cfg).counts;
    Candidate c;
    c.scale = inverse_norm(counts.squared_norm());
    c.block_count = 1;
    c.blocks[0] = static_cast<std::uint32_t>(store.blocks.size());
    store.blocks.push_back(std::move(counts));
    cands.push_back(c);
  }
  return loss_with_gradients(featurize(item_text(anchor), cfg), store, cands, target_index, params);
}

std::vector<double> TrainingSet::logits(std::size_t i, const RetrieverParams& params) const {
  BlockEmbeddingCache cache(store.blocks.size(), params.d_out());
  std::vector<double> phi_a;
  const auto& s = samples.at(i);
  return candidate_logits(s.anchor_features, store, s.candidates, params, cache, nullptr, phi_a);
}

double TrainingSet::top1_rate(const RetrieverParams& params) const {
  if (samples.empty()) return 0.0;
  BlockEmbeddingCache cache(store.blocks.size(), params.d_out());
  std::vector<double> phi_a;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    const auto z =
        candidate_logits(s.anchor_features, store, s.candidates, params, cache, nullptr, phi_a);
    bool top = true;
    for (std::size_t e = 0; e < z.size() && top; ++e) {
      if (e == s.target) continue;
      if (z[e] > z[s.target] || (z[e] == z[s.target] && e < s.target)) top = false;
    }
    if (top) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainingSet prepare_training_set(const ExampleBank& target_bank, const ExampleBank& aux_bank,
                                 const RetrieverParams& params, RewardModel& model,
                                 ScoreCache* cache, const TrainConfig& cfg) {
  cfg.validate();
  if (target_bank.empty()) throw DataError("target bank is empty");
  if (aux_bank.positives.empty() || aux_bank.negatives.empty()) {
    throw DataError(fmt::format("auxiliary bank '{}' has an empty partition", aux_bank.language));
  }
  const EncoderConfig& enc = cfg.encoder;
  if (params.d_in() != enc.d_in || params.d_out() != enc.d_out) {
    throw InvariantError("retriever shape does not match encoder config");
  }

  TrainingSet set;
  set.language = aux_bank.language;
  set.mode = cfg.loss_mode;
  set.encoder = enc;

  // Item blocks: positives occupy [0, P), negatives [P, P + N).
  std::vector<EncodedItem> pos_items;
  std::vector<EncodedItem> neg_items;
  std::vector<Embedding> pos_emb;
  std::vector<Embedding> neg_emb;
  for (const auto& t : aux_bank.positives) pos_items.push_back(encode_item(t, enc));
  for (const auto& t : aux_bank.negatives) neg_items.push_back(encode_item(t, enc));
  for (const auto& it : pos_items) {
    set.store.blocks.push_back(it.counts);
    pos_emb.push_back(embed(params.psi, normalized(it.counts)));
  }
  for (const auto& it : neg_items) {
    set.store.blocks.push_back(it.counts);
    neg_emb.push_back(embed(params.psi, normalized(it.counts)));
  }
  const auto neg_base = static_cast<std::uint32_t>(pos_items.size());
  std::map<std::pair<std::u32string, std::u32string>, std::uint32_t> boundary_ids;

  const std::size_t cap = cfg.max_pairs_per_sample > 0
                              ? static_cast<std::size_t>(cfg.max_pairs_per_sample)
                              : static_cast<std::size_t>(cfg.F) * static_cast<std::size_t>(cfg.F);

  std::vector<const ExampleTriplet*> anchors;
  for (const auto& t : target_bank.positives) anchors.push_back(&t);
  for (const auto& t : target_bank.negatives) anchors.push_back(&t);

  for (const ExampleTriplet* anchor : anchors) {
    TrainingSample sample;
    sample.anchor = *anchor;
    sample.anchor_features = featurize(item_text(*anchor), enc);
    const Embedding phi_a = embed(params.phi, sample.anchor_features);
    const auto pos_top = top_indices(item_scores(phi_a.values, pos_emb),
                                     exclusions(*anchor, aux_bank.positives), cfg.F);
    const auto neg_top = top_indices(item_scores(phi_a.values, neg_emb),
                                     exclusions(*anchor, aux_bank.negatives), cfg.F);

    std::vector<RenderedPrompt> prompts;
    if (cfg.loss_mode == LossMode::kPairwise) {
      for (auto i : pos_top) {
        for (auto j : neg_top) {
          if (sample.candidates.size() >= cap) break;
          const auto key = std::make_pair(pos_items[i].tail, neg_items[j].head);
          auto it = boundary_ids.find(key);
          if (it == boundary_ids.end()) {
            it = boundary_ids
                     .emplace(key, static_cast<std::uint32_t>(set.store.blocks.size()))
                     .first;
            set.store.blocks.push_back(pair_boundary_counts(pos_items[i], neg_items[j], enc));
          }
          Candidate c;
          c.block_count = 3;
          c.blocks = {static_cast<std::uint32_t>(i), neg_base + static_cast<std::uint32_t>(j),
                      it->second};
          c.scale = inverse_norm(combined_squared_norm(
              pos_items[i].counts, neg_items[j].counts, set.store.blocks[it->second]));
          sample.candidates.push_back(c);
          const auto& pos = aux_bank.positives[i];
          const auto& neg = aux_bank.negatives[j];
          sample.candidate_ids.push_back(pos.id + "|" + neg.id);
          const ContextPair ctx[] = {{pos, neg, aux_bank.language}};
          prompts.push_back(render_icl(ctx, anchor->query, anchor->response, anchor->language));
        }
      }
    } else {
      auto add_single = [&](const ExampleTriplet& item, std::uint32_t block) {
        Candidate c;
        c.block_count = 1;
        c.blocks[0] = block;
        c.scale = inverse_norm(set.store.blocks[block].squared_norm());
        sample.candidates.push_back(c);
        sample.candidate_ids.push_back(item.id);
        const ExampleTriplet ctx[] = {item};
        prompts.push_back(
            render_icl_singles(ctx, anchor->query, anchor->response, anchor->language));
      };
      for (auto i : pos_top) add_single(aux_bank.positives[i], static_cast<std::uint32_t>(i));
      for (auto j : neg_top) {
        add_single(aux_bank.negatives[j], neg_base + static_cast<std::uint32_t>(j));
      }
    }
    if (sample.candidates.empty()) {
      throw DataError(fmt::format("anchor '{}' has an empty candidate set", anchor->id));
    }
    for (const auto& s : score_all(model, prompts, cache, cfg.score_parallelism)) {
      sample.rewards.push_back(s.value);
    }
    sample.target = select_target_pair(sample.rewards, sign(anchor->polarity));
    set.samples.push_back(std::move(sample));
  }
  return set;
}

TrainResult fit(const TrainingSet& set, RetrieverParams params, const TrainConfig& cfg,
                const EpochCallback& on_epoch) {
  cfg.validate();
  if (set.samples.empty()) throw DataError("no training samples");
  const std::size_t d_in = params.d_in();
  const std::size_t d_out = params.d_out();

  DenseMatrix m_phi(d_in, d_out), v_phi(d_in, d_out), m_psi(d_in, d_out), v_psi(d_in, d_out);
  RowGradient g_phi(d_in, d_out);
  RowGradient g_psi(d_in, d_out);
  BlockEmbeddingCache cache(set.store.blocks.size(), d_out);
  Scratch scratch(set.store.blocks.size());

  Rng shuffle(derive_seed(cfg.seed, "shuffle:" + set.language));
  std::vector<std::size_t> order(set.samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      g_phi.clear();
      g_psi.clear();
      cache.invalidate();
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = set.samples[order[k]];
        total += nll_step(s.anchor_features, set.store, s.candidates, s.target, params, cache,
                          scratch, &g_phi, &g_psi, scale);
      }
      ++result.steps;
      const auto t = static_cast<double>(result.steps);
      const double bias1 = 1.0 - std::pow(cfg.adam_beta1, t);
      const double bias2 = 1.0 - std::pow(cfg.adam_beta2, t);
      adam_update(params.phi, m_phi, v_phi, g_phi, cfg, bias1, bias2);
      adam_update(params.psi, m_psi, v_psi, g_psi, cfg, bias1, bias2);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = total / static_cast<double>(set.samples.size());
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.params = std::move(params);
  return result;
}

TrainResult train_retriever(const ExampleBank& target_bank, const ExampleBank& aux_bank,
                            RewardModel& model, const TrainConfig& cfg, ScoreCache* cache,
                            const EpochCallback& on_epoch) {
  RetrieverParams init = initial_params(cfg, aux_bank.language);
  const TrainingSet set = prepare_training_set(target_bank, aux_bank, init, model, cache, cfg);
  return fit(set, std::move(init), cfg, on_epoch);
}

std::map<std::string, TrainResult> train_all(const ExampleBank& target_bank,
                                             const AuxSelection& selection,
                                             const std::map<std::string, ExampleBank>& banks,
                                             RewardModel& model, const TrainConfig& cfg,
                                             ScoreCache* cache) {
  if (selection.selected.empty()) throw DataError("auxiliary selection is empty");
  std::map<std::string, TrainResult> out;
  for (const auto& lang : selection.selected) {
    const auto it = banks.find(lang);
    if (it == banks.end()) throw DataError(fmt::format("no bank for selected language '{}'", lang));
    out.emplace(lang, train_retriever(target_bank, it->second, model, cfg, cache));
  }
  return out;
}

std::string format_metrics(const std::vector<EpochRecord>& epochs) {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json rec;
    rec["epoch"] = e.epoch;
    rec["mean_loss"] = e.mean_loss;
    rec["wall_ms"] = e.wall_ms;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace relic

// Acceptance checks A1-A10. Usage: relic_acceptance [ID...]; with no IDs
// every check runs. Prints one PASS/FAIL line per check; exits non-zero if
// any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <fmt/format.h>

#include "relic/auxselect.hpp"
#include "relic/corpus.hpp"
#include "relic/encoder.hpp"
#include "relic/error.hpp"
#include "relic/eval.hpp"
#include "relic/inference.hpp"
#include "relic/pipeline.hpp"
#include "relic/reward.hpp"
#include "relic/rng.hpp"
#include "relic/synth.hpp"
#include "relic/trainer.hpp"
#include "relic/wire.hpp"

namespace fs = std::filesystem;
using namespace relic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Removed on scope exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / fmt::format("relic-accept-{}-{:x}", tag, rd());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string random_word(Rng& rng, int min_len = 2, int max_len = 7) {
  static constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
  const auto n = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::string w;
  for (int i = 0; i < n; ++i) w += kLetters[rng.below(kLetters.size())];
  return w;
}

std::string random_words(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i > 0) s += ' ';
    s += random_word(rng);
  }
  return s;
}

// ---------------------------------------------------------------- A1

/// Dense reference loss built from whole-text featurization.
double reference_loss(const ExampleTriplet& anchor, const std::vector<ContextPair>& pairs,
                      std::size_t target, const RetrieverParams& p, const EncoderConfig& enc) {
  const auto qa = embed(p.phi, featurize(item_text(anchor), enc));
  std::vector<double> z;
  for (const auto& e : pairs) {
    z.push_back(similarity(qa, embed(p.psi, featurize(pair_text(e.positive, e.negative), enc))));
  }
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum) - z[target];
}

Outcome a1() {
  const auto t0 = Clock::now();
  EncoderConfig enc;
  enc.d_in = 32;
  enc.d_out = 4;
  const double h = 1e-5;
  const int trials = 120;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(1, fmt::format("a1:{}", trial)));
    RetrieverParams p;
    p.phi = random_matrix(enc.d_in, enc.d_out, rng.next());
    p.psi = random_matrix(enc.d_in, enc.d_out, rng.next());
    const auto anchor = ExampleTriplet{"a", "t", random_words(rng, 3), random_words(rng, 4),
                                       rng.bernoulli(0.5) ? Polarity::kPositive : Polarity::kNegative};
    const auto n_pairs = 1 + rng.below(10);
    std::vector<ContextPair> pairs;
    for (std::uint64_t i = 0; i < n_pairs; ++i) {
      pairs.push_back({{fmt::format("p{}", i), "x", random_words(rng, 3), random_words(rng, 3), Polarity::kPositive},
                       {fmt::format("n{}", i), "x", random_words(rng, 3), random_words(rng, 3), Polarity::kNegative},
                       "x"});
    }
    const auto target = static_cast<std::size_t>(rng.below(n_pairs));
    const auto r = pairwise_nll_loss(anchor, pairs, target, p, enc);

    std::vector<double> analytic(2 * enc.d_in * enc.d_out, 0.0);
    std::vector<double> numeric(analytic.size(), 0.0);
    auto scatter = [&](const SparseRowGradient& g, std::size_t offset) {
      for (std::size_t i = 0; i < g.rows.size(); ++i) {
        for (std::size_t j = 0; j < enc.d_out; ++j) analytic[offset + g.rows[i] * enc.d_out + j] = g.row(i)[j];
      }
    };
    scatter(r.grad_phi, 0);
    scatter(r.grad_psi, enc.d_in * enc.d_out);
    std::size_t k = 0;
    for (auto* m : {&p.phi, &p.psi}) {
      for (auto& w : m->data()) {
        const double orig = w;
        w = orig + h;
        const double up = reference_loss(anchor, pairs, target, p, enc);
        w = orig - h;
        const double down = reference_loss(anchor, pairs, target, p, enc);
        w = orig;
        numeric[k++] = (up - down) / (2 * h);
      }
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double denom = std::sqrt(std::max(na, nn));
    const double rel = denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
    worst = std::max(worst, rel);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          fmt::format("{} instances, worst relative error {:.3e}, {:.1f} s", trials, worst, secs)};
}

// ---------------------------------------------------------------- A2

Outcome a2() {
  const auto t0 = Clock::now();
  EncoderConfig enc;
  enc.d_in = 4096;
  enc.d_out = 16;
  int mismatches = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(2, fmt::format("a2:{}", trial)));
    ExampleBank bank;
    bank.language = "x";
    const auto n_pos = 3 + rng.below(98);
    const auto n_neg = 3 + rng.below(98);
    for (std::uint64_t i = 0; i < n_pos; ++i) {
      bank.positives.push_back({fmt::format("p{}", i), "x", random_words(rng, 3), random_words(rng, 4), Polarity::kPositive});
    }
    for (std::uint64_t i = 0; i < n_neg; ++i) {
      bank.negatives.push_back({fmt::format("n{}", i), "x", random_words(rng, 3), random_words(rng, 4), Polarity::kNegative});
    }
    RetrieverParams p;
    p.phi = random_matrix(enc.d_in, enc.d_out, rng.next());
    p.psi = random_matrix(enc.d_in, enc.d_out, rng.next());
    const auto query = random_words(rng, 4);
    const auto response = random_words(rng, 5);
    const int M = static_cast<int>(std::max(n_pos, n_neg));
    const auto pb = build_pair_bank(bank, p, query, response, M, enc);

    const auto q = embed(p.phi, featurize(query + "\n" + response, enc));
    std::vector<double> s;
    std::vector<std::string> ids;
    for (const auto& pos : bank.positives) {
      for (const auto& neg : bank.negatives) {
        s.push_back(similarity(q, embed(p.psi, featurize(pair_text(pos, neg), enc))));
        ids.push_back(pos.id + "|" + neg.id);
      }
    }
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
    for (int K : {1, 4, 8}) {
      const auto top = retrieve_top_k(pb, query, response, p, K, enc);
      bool same = top.size() == static_cast<std::size_t>(K);
      for (int k = 0; same && k < K; ++k) same = pair_id(top[k].pair) == ids[order[k]];
      if (!same) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0,
          fmt::format("{} trials x K in {{1,4,8}}, {} mismatches, {:.1f} s", trials, mismatches, secs)};
}

// ---------------------------------------------------------------- A3 / A4

/// Training settings shared by every training-dependent check: the
/// optimizer defaults suit fine-tuning a pretrained encoder, while the
/// hashed projection here is trained from scratch.
void desk_training(TrainConfig& t) {
  t.learning_rate = 1e-2;
  t.epochs = 30;
}

RunConfig synthetic_run(const fs::path& corpus, const fs::path& run_dir) {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.target = corpus / "target.jsonl";
  cfg.aux_dir = corpus / "aux";
  cfg.test = corpus / "test.jsonl";
  cfg.run_dir = run_dir;
  cfg.train.seed = cfg.seed;
  desk_training(cfg.train);
  return cfg;
}

double accuracy_of(const PipelineResult& r, Strategy s) {
  std::vector<EvalRecord> subset;
  for (const auto& rec : r.records) {
    if (rec.strategy == s) subset.push_back(rec);
  }
  return pairwise_accuracy(subset);
}

fs::path seed7_corpus(const fs::path& dir) {
  SyntheticCorpusSpec spec;  // seed 7, 1000/5000/700, 20 topics, noise 0.05
  write_corpus(generate_corpus(spec), dir);
  return dir;
}

void progress(const std::string& msg) { fmt::print(stderr, "  {}\n", msg); }

Outcome a3() {
  const auto t0 = Clock::now();
  ScratchDir dir("a3");
  const auto corpus = seed7_corpus(dir.path() / "corpus");
  auto cfg = synthetic_run(corpus, dir.path() / "run");
  cfg.strategies = {Strategy::kZeroShot, Strategy::kRandom, Strategy::kRelic};
  SyntheticOracle oracle;
  const auto r = run_pipeline(cfg, oracle, progress);
  const double zero = accuracy_of(r, Strategy::kZeroShot);
  const double rnd = accuracy_of(r, Strategy::kRandom);
  const double relic = accuracy_of(r, Strategy::kRelic);
  const double secs = seconds_since(t0);
  return {relic >= rnd + 0.10 && relic > zero && secs < 15 * 60,
          fmt::format("relic {:.4f}, random {:.4f} (need relic >= {:.4f}), zero_shot {:.4f}, {:.0f} s",
                      relic, rnd, rnd + 0.10, zero, secs)};
}

Outcome a4() {
  const auto t0 = Clock::now();
  ScratchDir dir("a4");
  const auto corpus = seed7_corpus(dir.path() / "corpus");
  SyntheticOracle oracle;
  auto with_aux = synthetic_run(corpus, dir.path() / "with");
  with_aux.strategies = {Strategy::kEpr, Strategy::kRelic};
  const auto r1 = run_pipeline(with_aux, oracle, progress);
  auto without = synthetic_run(corpus, dir.path() / "without");
  without.strategies = {Strategy::kRelic};
  without.without_aux = true;
  const auto r2 = run_pipeline(without, oracle, progress);
  const double pairwise = accuracy_of(r1, Strategy::kRelic);
  const double relevance = accuracy_of(r1, Strategy::kEpr);
  const double no_aux = accuracy_of(r2, Strategy::kRelic);
  const double secs = seconds_since(t0);
  return {pairwise >= relevance && pairwise >= no_aux && secs < 30 * 60,
          fmt::format("pairwise {:.4f} vs relevance {:.4f}; with aux {:.4f} vs without {:.4f}; {:.0f} s",
                      pairwise, relevance, pairwise, no_aux, secs)};
}

// ---------------------------------------------------------------- A5

/// 200 anchors over 20 topics; the auxiliary bank holds one positive per
/// topic and three topic-free negatives, and responses never contradict
/// their labels.
std::pair<ExampleBank, ExampleBank> planted_corpus() {
  Rng rng(derive_seed(5, "planted"));
  std::vector<std::string> topics, fillers;
  for (int i = 0; i < 20; ++i) topics.push_back("t" + random_word(rng, 4, 7));
  for (int i = 0; i < 300; ++i) fillers.push_back(random_word(rng, 3, 7));
  auto text = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
      if (i > 0) s += ' ';
      s += fillers[rng.below(fillers.size())];
    }
    return s;
  };
  ExampleBank target{"tgt", {}, {}};
  ExampleBank aux{"aux", {}, {}};
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    ExampleTriplet t{fmt::format("tgt-{:03d}", i), "tgt", topics[i % 20] + " " + text(6),
                     text(8) + (pos ? " GOOD" : ""), pos ? Polarity::kPositive : Polarity::kNegative};
    (pos ? target.positives : target.negatives).push_back(std::move(t));
  }
  for (int k = 0; k < 20; ++k) {
    aux.positives.push_back({fmt::format("aux-p{:02d}", k), "aux", topics[k] + " " + text(6),
                             text(8) + " GOOD", Polarity::kPositive});
  }
  for (int k = 0; k < 3; ++k) {
    aux.negatives.push_back({fmt::format("aux-n{:02d}", k), "aux", text(7), text(8), Polarity::kNegative});
  }
  return {target, aux};
}

Outcome a5() {
  const auto t0 = Clock::now();
  const auto [target, aux] = planted_corpus();
  TrainConfig cfg;
  cfg.seed = 5;
  desk_training(cfg);
  SyntheticOracle oracle;
  const auto init = initial_params(cfg, aux.language);
  const auto set = prepare_training_set(target, aux, init, oracle, nullptr, cfg);
  const double before = set.top1_rate(init);
  const auto trained = train_retriever(target, aux, oracle, cfg);
  const double after = set.top1_rate(trained.params);
  const double secs = seconds_since(t0);
  return {after >= 0.90 && before <= 0.30 && secs < 5 * 60,
          fmt::format("top-1 {:.3f} before, {:.3f} after training on {} anchors, {:.1f} s", before,
                      after, set.samples.size(), secs)};
}

// ---------------------------------------------------------------- A6

Outcome a6() {
  SyntheticCorpusSpec spec;
  spec.seed = 6;
  spec.num_topics = 10;
  spec.target_size = 200;
  spec.aux_size = 200;
  spec.test_size = 1;
  spec.target_language = "tgt";
  spec.related_languages = {"shared"};
  spec.unrelated_languages.clear();
  for (int i = 1; i <= 8; ++i) spec.unrelated_languages.push_back(fmt::format("other{}", i));
  const auto corpus = generate_corpus(spec);
  AuxSelectConfig cfg;
  cfg.gamma_percentile = 95.0;
  const auto sel = select_auxiliary(corpus.target, corpus.aux, cfg);
  auto self_cfg = cfg;
  const auto self = select_auxiliary(corpus.target, {corpus.target}, self_cfg);
  const double self_cos = self.similarities.at("tgt");
  std::string sims;
  for (const auto& [lang, c] : sel.similarities) sims += fmt::format(" {}={:.3f}", lang, c);
  const bool exact = sel.selected == std::vector<std::string>{"shared"};
  return {exact && std::abs(self_cos - 1.0) <= 1e-12,
          fmt::format("selected [{}];{}; self cosine 1{:+.1e}", fmt::join(sel.selected, ","), sims,
                      self_cos - 1.0)};
}

// ---------------------------------------------------------------- A7

Outcome a7() {
  const fs::path dir = RELIC_GOLDEN_DIR;
  auto t = [](const char* id, const char* lang, const char* q, const char* r, Polarity p) {
    return ExampleTriplet{id, lang, q, r, p};
  };
  const auto bn_pos = t("b1", "bn", "dedala how to cook rice", "boil it GOOD", Polarity::kPositive);
  const auto bn_neg = t("b2", "bn", "dedala how to cook rice", "burn it", Polarity::kNegative);
  const auto hi_pos = t("h1", "hi", "kounu when does it open", "at nine GOOD", Polarity::kPositive);
  const auto hi_neg = t("h2", "hi", "kounu when does it open", "never", Polarity::kNegative);
  const std::string query = "kounu market hours today";
  const std::string response = "opens at nine GOOD";

  const std::vector<ContextPair> pairs = {{bn_pos, bn_neg, "bn"}, {hi_pos, hi_neg, "hi"}};
  const std::vector<ExampleTriplet> singles = {bn_neg, bn_pos};
  const std::map<std::string, std::string> rendered = {
      {"zero_shot.txt", to_text(render_zero_shot(query, response))},
      {"icl_pairs.txt", to_text(render_icl(pairs, query, response, "brx"))},
      {"icl_singles.txt", to_text(render_icl_singles(singles, query, response, "brx"))},
  };
  std::vector<std::string> bad;
  for (const auto& [name, text] : rendered) {
    if (read_file(dir / name) != text) bad.push_back(name);
  }
  const auto& icl = rendered.at("icl_pairs.txt");
  const bool markers = icl.find(kPositiveMarker) != std::string::npos &&
                       icl.find(kNegativeMarker) != std::string::npos;
  const auto exchanges = render_icl(pairs, query, response, "brx").turns.size();
  const bool expansion = exchanges == 2 * 2 * pairs.size() + 1;
  return {bad.empty() && markers && expansion,
          bad.empty() ? fmt::format("{} goldens match byte-for-byte; {} turns for C = {}",
                                    rendered.size(), exchanges, pairs.size())
                      : fmt::format("mismatch in {}", fmt::join(bad, ", "))};
}

// ---------------------------------------------------------------- A8

/// Scores transformed by a -> scale * a + shift before comparison.
std::vector<EvalRecord> records_from(const std::vector<std::pair<double, double>>& scores,
                                     double scale = 1.0, double shift = 0.0) {
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = scale * scores[i].first + shift;
    const double r = scale * scores[i].second + shift;
    out.push_back({fmt::format("p{}", i), p, r, p > r, Strategy::kRelic, "x"});
  }
  return out;
}

Outcome a8() {
  const std::vector<std::pair<double, double>> all = {{2, 1}, {0.5, -1}, {3, 2.5}};
  const std::vector<std::pair<double, double>> tied = {{1, 1}, {-2, -2}, {0, 0}};
  const std::vector<std::pair<double, double>> two = {{2, 1}, {1, 2}, {3, 0}};
  const double a = pairwise_accuracy(records_from(all));
  const double b = pairwise_accuracy(records_from(tied));
  const double c = pairwise_accuracy(records_from(two));
  bool invariant = true;
  Rng rng(8);
  for (int trial = 0; trial < 200 && invariant; ++trial) {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 25; ++i) {
      // Quantized scores so ties occur.
      s.emplace_back(std::round(rng.uniform(-3, 3) * 2) / 2, std::round(rng.uniform(-3, 3) * 2) / 2);
    }
    const double scale = std::exp2(static_cast<double>(rng.below(8)) - 3.0);
    const double shift = std::round(rng.uniform(-10, 10));
    invariant = pairwise_accuracy(records_from(s)) == pairwise_accuracy(records_from(s, scale, shift));
  }
  const bool ok = a == 1.0 && b == 0.0 && std::abs(c - 0.6667) < 5e-5 && invariant;
  return {ok, fmt::format("all-correct {:.4f}, all-tied {:.4f}, two-of-three {:.4f}, affine-invariant {}",
                          a, b, c, invariant ? "yes" : "no")};
}

// ---------------------------------------------------------------- A9

Outcome a9() {
  const auto t0 = Clock::now();
  ScratchDir dir("a9");
  SyntheticCorpusSpec spec;
  spec.num_topics = 8;
  spec.target_size = 200;
  spec.aux_size = 600;
  spec.test_size = 100;
  write_corpus(generate_corpus(spec), dir.path() / "corpus");
  auto make = [&](const std::string& name, bool cache) {
    auto cfg = synthetic_run(dir.path() / "corpus", dir.path() / name);
    cfg.encoder.d_in = std::size_t{1} << 16;
    cfg.encoder.d_out = 32;
    cfg.train.encoder = cfg.inference.encoder = cfg.aux.encoder = cfg.encoder;
    cfg.train.epochs = 5;
    cfg.use_cache = cache;
    return cfg;
  };
  SyntheticOracle oracle;
  std::map<std::string, std::string> reports, records;
  for (const auto& [name, cache] : std::vector<std::pair<std::string, bool>>{
           {"first", true}, {"second", true}, {"uncached", false}}) {
    const auto cfg = make(name, cache);
    run_pipeline(cfg, oracle);
    reports[name] = read_file(cfg.run_dir / run_files::kReport);
    records[name] = read_file(cfg.run_dir / run_files::kRecords);
  }
  // A warm cache from the first run must not change anything either.
  const auto warm = make("first", true);
  const auto before_requests = oracle.requests();
  run_pipeline(warm, oracle);
  const bool warm_hit = oracle.requests() == before_requests;
  reports["warm"] = read_file(warm.run_dir / run_files::kReport);
  records["warm"] = read_file(warm.run_dir / run_files::kRecords);

  bool same = true;
  for (const auto& [name, text] : reports) same = same && text == reports["first"] && records[name] == records["first"];
  const double secs = seconds_since(t0);
  return {same && warm_hit,
          fmt::format("reports and records identical across 2 runs, cache off, warm cache: {}; "
                      "warm run reached the backend: {}; {:.0f} s",
                      same ? "yes" : "no", warm_hit ? "no" : "yes", secs)};
}

// ---------------------------------------------------------------- A10

RenderedPrompt random_prompt(Rng& rng) {
  static const std::vector<std::string> kPieces = {
      "GOOD", "good", "kounu", "dedala", "[Positive response]", "[Negative response]",
      "\xe0\xa6\x95\xe0\xa6\xbe", "\"quoted\"", "back\\slash", "tab\there", "line\nbreak", "\x1f", " "};
  auto text = [&](int max_pieces) {
    std::string s;
    const auto n = 1 + rng.below(static_cast<std::uint64_t>(max_pieces));
    for (std::uint64_t i = 0; i < n; ++i) {
      s += rng.bernoulli(0.5) ? kPieces[rng.below(kPieces.size())] : random_word(rng);
      if (rng.bernoulli(0.6)) s += ' ';
    }
    return s;
  };
  RenderedPrompt p;
  p.system = text(6);
  const auto exchanges = rng.below(5);
  for (std::uint64_t i = 0; i < exchanges; ++i) {
    p.turns.push_back({Speaker::kUser, text(4)});
    std::string reply = text(4);
    if (rng.bernoulli(0.8)) {
      reply += "\n";
      reply += rng.bernoulli(0.5) ? kPositiveMarker : kNegativeMarker;
    }
    p.turns.push_back({Speaker::kAssistant, reply});
  }
  p.turns.push_back({Speaker::kUser, text(4)});
  p.final_response = text(5);
  return p;
}

Outcome a10() {
  const auto t0 = Clock::now();
  SyntheticOracleConfig oc;
  OracleServer server(oc);
  const int port = server.start("127.0.0.1", 0);
  HttpRewardModel remote(fmt::format("http://127.0.0.1:{}", port), 10.0);
  Rng rng(10);
  int mismatches = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto p = random_prompt(rng);
    const double local = synthetic_oracle_score(oc, p).value;
    const double wire = remote.score(p).value;
    if (local != wire) ++mismatches;
  }
  server.stop();
  return {mismatches == 0, fmt::format("{} requests over port {}, {} mismatches, {:.1f} s", n, port,
                                       mismatches, seconds_since(t0))};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& checks() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool all_pass = true;
  for (const auto& [id, fn] : checks()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    fmt::print("{} {}: {}\n", id, o.pass ? "PASS" : "FAIL", o.detail);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}

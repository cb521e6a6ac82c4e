#include "relic/synth.hpp"

#include <algorithm>
#include <set>

#include <fmt/core.h>

#include "relic/error.hpp"
#include "relic/rng.hpp"

namespace relic {
namespace {

constexpr int kQueryFillers = 4;
constexpr int kResponseFillers = 6;
constexpr int kStyleWords = 3;
constexpr int kVocabShared = 30;
constexpr int kVocabOwn = 30;
constexpr int kStyleVocab = 8;

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}

  std::string fresh() {
    static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                   "r", "s", "t", "v", "z", "ch", "sh", "th"};
    static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    for (;;) {
      std::string w;
      const auto syllables = 2 + rng_.below(2);
      for (std::uint64_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.below(std::size(kOnsets))];
        w += kVowels[rng_.below(std::size(kVowels))];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> fresh(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(fresh());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

enum class Kind { kGood, kBad, kDeceptive, kClumsy };

struct Language {
  std::string tag;
  std::vector<std::string> vocab;
  const std::vector<std::string>* topics = nullptr;
};

struct Generator {
  const SyntheticCorpusSpec& spec;
  Rng rng;
  std::vector<std::string> deceptive_style;
  std::vector<std::string> clumsy_style;

  const std::string& pick(const std::vector<std::string>& words) {
    return words[rng.below(words.size())];
  }

  std::string query(const Language& lang, const std::string& topic) {
    std::string q = topic;
    for (int i = 0; i < kQueryFillers; ++i) q += " " + pick(lang.vocab);
    return q;
  }

  std::string response(const Language& lang, Kind kind) {
    std::vector<std::string> words;
    for (int i = 0; i < kResponseFillers; ++i) words.push_back(pick(lang.vocab));
    if (kind == Kind::kDeceptive || kind == Kind::kClumsy) {
      const auto& style = kind == Kind::kDeceptive ? deceptive_style : clumsy_style;
      for (int i = 0; i < kStyleWords; ++i) words.push_back(pick(style));
    }
    if (kind == Kind::kGood || kind == Kind::kDeceptive) {
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                   spec.good_marker);
    }
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
  }

  ExampleBank bank(const Language& lang, int size, double flip_rate, std::size_t topic_count) {
    ExampleBank out;
    out.language = lang.tag;
    for (int i = 0; i < size; ++i) {
      const bool positive = i % 2 == 0;
      const bool flipped = rng.bernoulli(flip_rate);
      const Kind kind = positive ? (flipped ? Kind::kClumsy : Kind::kGood)
                                 : (flipped ? Kind::kDeceptive : Kind::kBad);
      ExampleTriplet t;
      t.id = fmt::format("{}-{:05d}", lang.tag, i);
      t.language = lang.tag;
      t.query = query(lang, (*lang.topics)[rng.below(topic_count)]);
      t.response = response(lang, kind);
      t.polarity = positive ? Polarity::kPositive : Polarity::kNegative;
      (positive ? out.positives : out.negatives).push_back(std::move(t));
    }
    return out;
  }
};

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (num_topics < 1) throw ConfigError("num_topics must be at least 1");
  if (target_size < 2 || aux_size < 2) throw ConfigError("bank sizes must be at least 2");
  if (test_size < 1) throw ConfigError("test size must be at least 1");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw ConfigError("noise_rate must be in [0, 0.5)");
  if (!(target_flip_rate >= 0.0 && target_flip_rate < 0.5)) {
    throw ConfigError("target_flip_rate must be in [0, 0.5)");
  }
  if (!(target_topic_coverage > 0.0 && target_topic_coverage <= 1.0)) {
    throw ConfigError("target_topic_coverage must be in (0, 1]");
  }
  if (good_marker.empty()) throw ConfigError("good_marker must be non-empty");
  std::set<std::string> tags = {target_language};
  for (const auto* list : {&related_languages, &unrelated_languages}) {
    for (const auto& l : *list) {
      if (l.empty()) throw ConfigError("empty language tag");
      if (!tags.insert(l).second) throw ConfigError(fmt::format("duplicate language '{}'", l));
    }
  }
  if (related_languages.empty() && unrelated_languages.empty()) {
    throw ConfigError("at least one auxiliary language is required");
  }
}

SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Generator gen{spec, Rng(derive_seed(spec.seed, "corpus")), {}, {}};
  WordMaker words(gen.rng);

  const auto shared_topics = words.fresh(spec.num_topics);
  const auto disjoint_topics = words.fresh(spec.num_topics);
  const auto shared_vocab = words.fresh(kVocabShared);
  gen.deceptive_style = words.fresh(kStyleVocab);
  gen.clumsy_style = words.fresh(kStyleVocab);

  auto make_language = [&](const std::string& tag, bool related) {
    Language lang;
    lang.tag = tag;
    if (related) {
      lang.vocab = words.fresh(kVocabOwn);
      lang.vocab.insert(lang.vocab.end(), shared_vocab.begin(), shared_vocab.end());
    } else {
      lang.vocab = words.fresh(kVocabOwn + kVocabShared);
    }
    lang.topics = related ? &shared_topics : &disjoint_topics;
    return lang;
  };

  const Language target = make_language(spec.target_language, true);
  const auto covered = std::max<std::size_t>(
      1, static_cast<std::size_t>(spec.target_topic_coverage * spec.num_topics + 0.5));

  SyntheticCorpus out;
  out.target = gen.bank(target, spec.target_size, spec.target_flip_rate, covered);
  for (const auto& tag : spec.related_languages) {
    out.aux.push_back(gen.bank(make_language(tag, true), spec.aux_size, spec.noise_rate,
                               shared_topics.size()));
  }
  for (const auto& tag : spec.unrelated_languages) {
    out.aux.push_back(gen.bank(make_language(tag, false), spec.aux_size, spec.noise_rate,
                               disjoint_topics.size()));
  }
  for (int i = 0; i < spec.test_size; ++i) {
    PreferencePair p;
    p.id = fmt::format("{}-test-{:04d}", target.tag, i);
    p.language = target.tag;
    p.query = gen.query(target, shared_topics[gen.rng.below(shared_topics.size())]);
    p.preferred = gen.response(target, gen.rng.bernoulli(spec.target_flip_rate) ? Kind::kClumsy : Kind::kGood);
    p.rejected = gen.response(target, gen.rng.bernoulli(spec.target_flip_rate) ? Kind::kDeceptive : Kind::kBad);
    out.test.push_back(std::move(p));
  }
  return out;
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  save_bank(corpus.target, dir / "target.jsonl");
  for (const auto& bank : corpus.aux) save_bank(bank, dir / "aux" / (bank.language + ".jsonl"));
  save_preference_set(corpus.test, dir / "test.jsonl");
}

}  // namespace relic

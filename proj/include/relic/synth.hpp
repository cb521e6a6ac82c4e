#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relic/corpus.hpp"

namespace relic {

/// Topic-tagged stand-in corpus for the synthetic oracle.
///
/// Responses come in four kinds: good (marker, +), bad (no marker, -),
/// deceptive (marker but -, with its own style words) and clumsy (no marker
/// but +, with other style words). Deceptive and clumsy responses appear at
/// `noise_rate` in auxiliary banks and at `target_flip_rate` in the target
/// bank and test set, where the reward signal is meant to be unreliable.
struct SyntheticCorpusSpec {
  std::uint64_t seed = 7;
  int num_topics = 20;
  int target_size = 1000;
  int aux_size = 5000;
  int test_size = 700;
  std::string target_language = "brx";
  std::vector<std::string> related_languages = {"hi", "bn"};
  std::vector<std::string> unrelated_languages = {"en"};
  double noise_rate = 0.05;
  double target_flip_rate = 0.25;
  /// Fraction of topics that occur in the target bank.
  double target_topic_coverage = 1.0;
  std::string good_marker = "GOOD";

  void validate() const;
};

struct SyntheticCorpus {
  ExampleBank target;
  std::vector<ExampleBank> aux;
  std::vector<PreferencePair> test;
};

SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec);

/// Layout: target.jsonl, aux/<lang>.jsonl, test.jsonl.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace relic

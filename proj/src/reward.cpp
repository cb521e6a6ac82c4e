#include "relic/reward.hpp"

#include <bit>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "relic/error.hpp"
#include "relic/hash.hpp"

namespace relic {
namespace {

constexpr std::size_t kCacheRecordSize = 24;

std::string icl_system(const std::vector<std::string>& aux_languages,
                       std::string_view target_language) {
  std::string aux;
  for (std::size_t i = 0; i < aux_languages.size(); ++i) {
    if (i > 0) aux += ", ";
    aux += aux_languages[i];
  }
  return fmt::format(
      "The following are (Query, Response) examples in {}. Each is labeled as [positive "
      "response] or [negative response]. Positive and Negative examples appear in any order. "
      "The final example in {} language is for evaluation.",
      aux, target_language);
}

void note_language(std::vector<std::string>& seen, const std::string& lang) {
  for (const auto& s : seen) {
    if (s == lang) return;
  }
  seen.push_back(lang);
}

void push_example(RenderedPrompt& prompt, const ExampleTriplet& t) {
  const auto marker = t.polarity == Polarity::kPositive ? kPositiveMarker : kNegativeMarker;
  prompt.turns.push_back({Speaker::kUser, t.query});
  prompt.turns.push_back({Speaker::kAssistant, t.response + "\n" + std::string(marker)});
}

void check_inputs(std::string_view query, std::string_view response) {
  if (query.empty()) throw InvariantError("cannot render a prompt with an empty query");
  if (response.empty()) throw InvariantError("cannot render a prompt with an empty response");
}

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
}

std::uint64_t record_checksum(std::uint64_t key, std::uint64_t bits) {
  char buf[16];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<char>((key >> (8 * i)) & 0xFF);
    buf[8 + i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  return xxh64(std::string_view(buf, 16), 0x5c0e);
}

std::uint64_t le64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::string_view speaker_name(Speaker s) { return s == Speaker::kUser ? "user" : "assistant"; }

RenderedPrompt render_zero_shot(std::string_view query, std::string_view response) {
  check_inputs(query, response);
  RenderedPrompt prompt;
  prompt.system = std::string(kZeroShotSystem);
  prompt.turns.push_back({Speaker::kUser, std::string(query)});
  prompt.final_response = std::string(response);
  return prompt;
}

RenderedPrompt render_icl(std::span<const ContextPair> context, std::string_view query,
                          std::string_view response, std::string_view target_language) {
  if (context.empty()) throw InvariantError("render_icl needs at least one context pair");
  check_inputs(query, response);
  RenderedPrompt prompt;
  std::vector<std::string> languages;
  for (const auto& pair : context) {
    note_language(languages, pair.language);
    push_example(prompt, pair.positive);
    push_example(prompt, pair.negative);
  }
  prompt.system = icl_system(languages, target_language);
  prompt.turns.push_back({Speaker::kUser, std::string(query)});
  prompt.final_response = std::string(response);
  return prompt;
}

RenderedPrompt render_icl_singles(std::span<const ExampleTriplet> examples, std::string_view query,
                                  std::string_view response, std::string_view target_language) {
  if (examples.empty()) throw InvariantError("render_icl_singles needs at least one example");
  check_inputs(query, response);
  RenderedPrompt prompt;
  std::vector<std::string> languages;
  for (const auto& t : examples) {
    note_language(languages, t.language);
    push_example(prompt, t);
  }
  prompt.system = icl_system(languages, target_language);
  prompt.turns.push_back({Speaker::kUser, std::string(query)});
  prompt.final_response = std::string(response);
  return prompt;
}

std::string to_text(const RenderedPrompt& prompt) {
  std::string out = "System: " + prompt.system + "\n";
  for (const auto& turn : prompt.turns) {
    out += turn.speaker == Speaker::kUser ? "User: " : "Assistant: ";
    out += turn.text;
    out += '\n';
  }
  out += "Assistant: " + prompt.final_response + "\n";
  return out;
}

std::string canonical_serialization(const RenderedPrompt& prompt) {
  std::string out;
  append_field(out, prompt.system);
  out += std::to_string(prompt.turns.size());
  out += '|';
  for (const auto& turn : prompt.turns) {
    out += turn.speaker == Speaker::kUser ? 'u' : 'a';
    append_field(out, turn.text);
  }
  append_field(out, prompt.final_response);
  return out;
}

std::string_view topic_token(std::string_view query) {
  const auto begin = query.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = query.find_first_of(" \t\r\n", begin);
  return query.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
}

RewardScore synthetic_oracle_score(const SyntheticOracleConfig& cfg, const RenderedPrompt& prompt) {
  const double q =
      prompt.final_response.find(cfg.good_marker) != std::string::npos ? 1.0 : -1.0;
  std::string_view topic;
  if (!prompt.turns.empty() && prompt.turns.back().speaker == Speaker::kUser) {
    topic = topic_token(prompt.turns.back().text);
  }
  int matched = 0;
  for (std::size_t i = 1; i + 1 < prompt.turns.size(); ++i) {
    const auto& turn = prompt.turns[i];
    const auto& prev = prompt.turns[i - 1];
    if (turn.speaker != Speaker::kAssistant || prev.speaker != Speaker::kUser) continue;
    if (!std::string_view(turn.text).ends_with(kPositiveMarker)) continue;
    if (!topic.empty() && topic_token(prev.text) == topic) ++matched;
  }
  return {q * (1.0 + cfg.beta * matched)};
}

SyntheticOracle::SyntheticOracle(SyntheticOracleConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.beta < 0.0) throw ConfigError("oracle beta must be non-negative");
}

RewardScore SyntheticOracle::do_score(const RenderedPrompt& prompt) {
  return synthetic_oracle_score(cfg_, prompt);
}

ScoreCache::~ScoreCache() {
  try {
    flush();
  } catch (...) {
  }
}

std::size_t ScoreCache::open(const std::filesystem::path& path) {
  std::unique_lock lock(mu_);
  std::size_t valid_bytes = 0;
  std::size_t dropped = 0;
  if (std::filesystem::exists(path)) {
    const std::string bytes = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t whole = bytes.size() / kCacheRecordSize;
    std::size_t i = 0;
    for (; i < whole; ++i) {
      const auto* rec = p + i * kCacheRecordSize;
      const std::uint64_t key = le64(rec);
      const std::uint64_t bits = le64(rec + 8);
      if (le64(rec + 16) != record_checksum(key, bits)) break;
      entries_[key] = std::bit_cast<double>(bits);
    }
    valid_bytes = i * kCacheRecordSize;
    if (valid_bytes != bytes.size()) {
      dropped = (bytes.size() - valid_bytes + kCacheRecordSize - 1) / kCacheRecordSize;
      std::cerr << fmt::format("warning: score cache '{}': dropping {} corrupt tail entr{}\n",
                               path.string(), dropped, dropped == 1 ? "y" : "ies");
      std::filesystem::resize_file(path, valid_bytes);
    }
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  file_.open(path, std::ios::binary | std::ios::app);
  if (!file_) throw DataError(fmt::format("cannot open score cache '{}'", path.string()));
  return dropped;
}

std::optional<double> ScoreCache::lookup(ContentHash key) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(key.value);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::insert(ContentHash key, double value) {
  std::unique_lock lock(mu_);
  if (!entries_.emplace(key.value, value).second) return;
  if (file_.is_open()) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    char buf[kCacheRecordSize];
    const std::uint64_t words[3] = {key.value, bits, record_checksum(key.value, bits)};
    for (int w = 0; w < 3; ++w) {
      for (int i = 0; i < 8; ++i) buf[8 * w + i] = static_cast<char>((words[w] >> (8 * i)) & 0xFF);
    }
    file_.write(buf, kCacheRecordSize);
  }
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void ScoreCache::flush() {
  std::unique_lock lock(mu_);
  if (file_.is_open()) file_.flush();
}

RewardScore score(RewardModel& model, const RenderedPrompt& prompt, ScoreCache* cache) {
  ContentHash key;
  if (cache != nullptr) {
    key = content_hash(canonical_serialization(prompt));
    if (auto hit = cache->lookup(key)) return {*hit};
  }
  const RewardScore s = model.score(prompt);
  if (!std::isfinite(s.value)) {
    throw BackendError(fmt::format("reward backend returned a non-finite score ({})", s.value));
  }
  if (cache != nullptr) cache->insert(key, s.value);
  return s;
}

std::vector<RewardScore> score_all(RewardModel& model, std::span<const RenderedPrompt> prompts,
                                   ScoreCache* cache, int parallelism) {
  std::vector<RewardScore> out(prompts.size());
  if (parallelism <= 1 || prompts.size() <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) out[i] = score(model, prompts[i], cache);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        out[i] = score(model, prompts[i], cache);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = prompts.size();
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), prompts.size());
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace relic

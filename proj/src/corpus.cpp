#include "relic/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/core.h>
#include <json.hpp>

#include "relic/error.hpp"
#include "relic/hash.hpp"

namespace relic {
namespace {

using ordered_json = nlohmann::ordered_json;

// Content hashes are only valid across runs if this never changes.
constexpr std::uint64_t kContentHashSeed = 0x52454c4943ULL;

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!is_blank(line)) fn(line_no, line);
    start = end + 1;
  }
}

std::string required_text(const nlohmann::json& record, const char* field,
                          std::string_view source, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw DataError(fmt::format("{}:{}: missing field '{}'", source, line_no, field));
  }
  if (!it->is_string()) {
    throw DataError(fmt::format("{}:{}: field '{}' must be a string", source, line_no, field));
  }
  return it->get<std::string>();
}

nlohmann::json parse_record(std::string_view line, std::string_view source, std::size_t line_no) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("{}:{}: malformed record: {}", source, line_no, e.what()));
  }
  if (!record.is_object()) {
    throw DataError(fmt::format("{}:{}: record is not an object", source, line_no));
  }
  return record;
}

}  // namespace

std::string_view label_string(Polarity p) { return p == Polarity::kPositive ? "+" : "-"; }

std::string item_text(const ExampleTriplet& t) { return t.query + "\n" + t.response; }

ContentHash content_hash(std::string_view bytes) { return {xxh64(bytes, kContentHashSeed)}; }

ContentHash content_hash(const ExampleTriplet& t) {
  std::string canonical;
  canonical.reserve(t.language.size() + t.query.size() + t.response.size() + 4);
  canonical += t.language;
  canonical += '\x1f';
  canonical += t.query;
  canonical += '\x1f';
  canonical += t.response;
  canonical += '\x1f';
  canonical += label_string(t.polarity);
  return content_hash(std::string_view(canonical));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

ExampleBank parse_bank(std::string_view text, std::string_view expected_language,
                       std::string_view source) {
  ExampleBank bank;
  bank.language = std::string(expected_language);
  std::unordered_set<std::string> ids;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto record = parse_record(line, source, line_no);
    ExampleTriplet t;
    t.id = required_text(record, "id", source, line_no);
    t.language = required_text(record, "language", source, line_no);
    t.query = required_text(record, "query", source, line_no);
    t.response = required_text(record, "response", source, line_no);
    const std::string label = required_text(record, "label", source, line_no);

    if (label == "+") {
      t.polarity = Polarity::kPositive;
    } else if (label == "-") {
      t.polarity = Polarity::kNegative;
    } else {
      throw DataError(fmt::format("{}:{}: label '{}' is not \"+\" or \"-\"", source, line_no, label));
    }
    if (t.language != expected_language) {
      throw DataError(fmt::format("{}:{}: language '{}' does not match bank language '{}'",
                                  source, line_no, t.language, expected_language));
    }
    if (t.id.empty()) throw DataError(fmt::format("{}:{}: empty id", source, line_no));
    if (is_blank(t.query)) throw DataError(fmt::format("{}:{}: empty query", source, line_no));
    if (is_blank(t.response)) {
      throw DataError(fmt::format("{}:{}: empty response", source, line_no));
    }
    if (!ids.insert(t.id).second) {
      throw DataError(fmt::format("{}:{}: duplicate id '{}'", source, line_no, t.id));
    }
    auto& part = t.polarity == Polarity::kPositive ? bank.positives : bank.negatives;
    part.push_back(std::move(t));
  });
  return bank;
}

ExampleBank load_bank(const std::filesystem::path& path, std::string_view expected_language) {
  return parse_bank(read_file(path), expected_language, path.string());
}

std::string serialize_triplets(const std::vector<ExampleTriplet>& items) {
  std::string out;
  for (const auto& t : items) {
    ordered_json record;
    record["id"] = t.id;
    record["language"] = t.language;
    record["query"] = t.query;
    record["response"] = t.response;
    record["label"] = std::string(label_string(t.polarity));
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_bank(const ExampleBank& bank, const std::filesystem::path& path) {
  std::vector<ExampleTriplet> all = bank.positives;
  all.insert(all.end(), bank.negatives.begin(), bank.negatives.end());
  write_file(path, serialize_triplets(all));
}

std::vector<PreferencePair> parse_preference_set(std::string_view text, std::string_view source) {
  std::vector<PreferencePair> pairs;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto record = parse_record(line, source, line_no);
    PreferencePair p;
    p.id = required_text(record, "id", source, line_no);
    p.language = required_text(record, "language", source, line_no);
    p.query = required_text(record, "query", source, line_no);
    p.preferred = required_text(record, "chosen", source, line_no);
    p.rejected = required_text(record, "rejected", source, line_no);
    if (p.id.empty() || is_blank(p.query) || is_blank(p.preferred) || is_blank(p.rejected)) {
      throw DataError(fmt::format("{}:{}: empty text field", source, line_no));
    }
    if (p.preferred == p.rejected) {
      throw DataError(fmt::format("{}:{}: chosen and rejected responses are identical", source,
                                  line_no));
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

std::vector<PreferencePair> load_preference_set(const std::filesystem::path& path) {
  return parse_preference_set(read_file(path), path.string());
}

void save_preference_set(const std::vector<PreferencePair>& pairs,
                         const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : pairs) {
    ordered_json record;
    record["id"] = p.id;
    record["language"] = p.language;
    record["query"] = p.query;
    record["chosen"] = p.preferred;
    record["rejected"] = p.rejected;
    out += record.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace relic

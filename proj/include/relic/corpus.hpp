#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace relic {

/// Label of an example: reward-aligned (+1) or not (-1).
enum class Polarity : int { kPositive = 1, kNegative = -1 };

inline int sign(Polarity p) { return static_cast<int>(p); }

/// ASCII "+" / "-" as used in record files.
std::string_view label_string(Polarity p);

/// One (query, response, label) record in one language.
struct ExampleTriplet {
  std::string id;
  std::string language;
  std::string query;
  std::string response;
  Polarity polarity = Polarity::kPositive;

  friend bool operator==(const ExampleTriplet&, const ExampleTriplet&) = default;
};

/// Text the dual encoder sees for a single example: query, newline, response.
std::string item_text(const ExampleTriplet& t);

/// A language-tagged example bank split into positives (D+) and negatives
/// (D-). Both partitions keep file order.
struct ExampleBank {
  std::string language;
  std::vector<ExampleTriplet> positives;
  std::vector<ExampleTriplet> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
  bool empty() const { return size() == 0; }

  const std::vector<ExampleTriplet>& partition(Polarity p) const {
    return p == Polarity::kPositive ? positives : negatives;
  }

  friend bool operator==(const ExampleBank&, const ExampleBank&) = default;
};

/// One positive and one negative exemplar from the same auxiliary bank.
struct ContextPair {
  ExampleTriplet positive;
  ExampleTriplet negative;
  std::string language;

  friend bool operator==(const ContextPair&, const ContextPair&) = default;
};

/// A held-out test record (x, y+, y-).
struct PreferencePair {
  std::string id;
  std::string language;
  std::string query;
  std::string preferred;
  std::string rejected;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct ContentHash {
  std::uint64_t value = 0;

  friend auto operator<=>(const ContentHash&, const ContentHash&) = default;
};

/// Hash of the canonical serialization language\x1Fquery\x1Fresponse\x1Flabel.
ContentHash content_hash(const ExampleTriplet& t);

/// Hash of an arbitrary canonical serialization (rendered prompts, n-grams).
ContentHash content_hash(std::string_view bytes);

/// Loads a bank from a line-delimited record file with fields
/// id, language, query, response, label. Blank lines are skipped.
/// Throws DataError naming the offending line.
ExampleBank load_bank(const std::filesystem::path& path, std::string_view expected_language);

/// Parses bank records from an in-memory buffer; `source` labels error messages.
ExampleBank parse_bank(std::string_view text, std::string_view expected_language,
                       std::string_view source = "<memory>");

/// Writes positives then negatives, one record per line.
void save_bank(const ExampleBank& bank, const std::filesystem::path& path);

/// Serializes triplets in the given order (the bank file layout).
std::string serialize_triplets(const std::vector<ExampleTriplet>& items);

/// Loads preference pairs with fields id, language, query, chosen, rejected.
std::vector<PreferencePair> load_preference_set(const std::filesystem::path& path);

std::vector<PreferencePair> parse_preference_set(std::string_view text,
                                                 std::string_view source = "<memory>");

void save_preference_set(const std::vector<PreferencePair>& pairs,
                         const std::filesystem::path& path);

/// Reads a whole file; throws DataError when missing or unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace relic

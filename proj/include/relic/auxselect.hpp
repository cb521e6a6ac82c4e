#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relic/corpus.hpp"
#include "relic/encoder.hpp"

namespace relic {

struct AuxSelectConfig {
  double gamma_percentile = 95.0;
  int min_selected = 1;
  std::uint64_t reference_seed = 0x5eed;
  EncoderConfig encoder;
};

struct AuxSelection {
  std::map<std::string, double> similarities;
  std::vector<std::string> selected;  // descending by similarity

  friend bool operator==(const AuxSelection&, const AuxSelection&) = default;
};

/// dot(u, v) / (|u| |v|). Throws DataError when either vector is zero.
double cosine(const Embedding& u, const Embedding& v);

/// Linear interpolation between closest ranks ("inclusive" definition):
/// position p/100 * (n - 1) in the sorted values.
double percentile(std::vector<double> values, double p);

/// The fixed reference projection shared by all banks.
DenseMatrix reference_matrix(const AuxSelectConfig& cfg);

/// Keeps candidates whose mean-embedding cosine to the target is at least
/// the gamma-th percentile of all candidate scores, padding to min_selected
/// by score. Ties order by language tag.
AuxSelection select_auxiliary(const ExampleBank& target, const std::vector<ExampleBank>& candidates,
                              const AuxSelectConfig& cfg);

/// Record file: one {"language", "cosine", "selected", "rank"} line per candidate.
void save_aux_selection(const AuxSelection& sel, const std::filesystem::path& path);
AuxSelection load_aux_selection(const std::filesystem::path& path);
std::string format_aux_selection(const AuxSelection& sel);

}  // namespace relic

#include "relic/auxselect.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>
#include <json.hpp>

#include "relic/error.hpp"

namespace relic {

double cosine(const Embedding& u, const Embedding& v) {
  const double nu = std::sqrt(similarity(u, u));
  const double nv = std::sqrt(similarity(v, v));
  if (nu == 0.0 || nv == 0.0) throw DataError("cosine of a zero-norm embedding");
  return similarity(u, v) / (nu * nv);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvariantError("percentile of an empty set");
  if (p < 0.0 || p > 100.0) throw ConfigError(fmt::format("percentile {} outside [0, 100]", p));
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

DenseMatrix reference_matrix(const AuxSelectConfig& cfg) {
  return random_matrix(cfg.encoder.d_in, cfg.encoder.d_out, cfg.reference_seed);
}

AuxSelection select_auxiliary(const ExampleBank& target, const std::vector<ExampleBank>& candidates,
                              const AuxSelectConfig& cfg) {
  if (candidates.empty()) throw DataError("no auxiliary candidate banks");
  if (cfg.min_selected < 1) throw ConfigError("min_selected must be at least 1");
  if (cfg.gamma_percentile < 0.0 || cfg.gamma_percentile > 100.0) {
    throw ConfigError(fmt::format("gamma {} outside [0, 100]", cfg.gamma_percentile));
  }

  const DenseMatrix rho = reference_matrix(cfg);
  const Embedding target_mean = mean_bank_embedding(target, rho, cfg.encoder);

  AuxSelection sel;
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& bank : candidates) {
    const double sim = cosine(mean_bank_embedding(bank, rho, cfg.encoder), target_mean);
    if (!sel.similarities.emplace(bank.language, sim).second) {
      throw DataError(fmt::format("duplicate candidate language '{}'", bank.language));
    }
    scored.emplace_back(bank.language, sim);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<double> values;
  for (const auto& [lang, sim] : scored) values.push_back(sim);
  const double cutoff = percentile(values, cfg.gamma_percentile);

  for (std::size_t i = 0; i < scored.size(); ++i) {
    const bool above = scored[i].second >= cutoff;
    const bool forced = i < static_cast<std::size_t>(cfg.min_selected);
    if (above || forced) sel.selected.push_back(scored[i].first);
  }
  return sel;
}

std::string format_aux_selection(const AuxSelection& sel) {
  std::vector<std::pair<std::string, double>> rows(sel.similarities.begin(), sel.similarities.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::string out = fmt::format("{:<12} {:>10}  {}\n", "language", "cosine", "selected");
  for (const auto& [lang, sim] : rows) {
    const bool chosen =
        std::find(sel.selected.begin(), sel.selected.end(), lang) != sel.selected.end();
    out += fmt::format("{:<12} {:>10.6f}  {}\n", lang, sim, chosen ? "yes" : "no");
  }
  return out;
}

void save_aux_selection(const AuxSelection& sel, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [lang, sim] : sel.similarities) {
    const auto it = std::find(sel.selected.begin(), sel.selected.end(), lang);
    nlohmann::ordered_json rec;
    rec["language"] = lang;
    rec["cosine"] = sim;
    rec["selected"] = it != sel.selected.end();
    rec["rank"] = it != sel.selected.end() ? static_cast<int>(it - sel.selected.begin()) : -1;
    out += rec.dump() + "\n";
  }
  write_file(path, out);
}

AuxSelection load_aux_selection(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  AuxSelection sel;
  std::vector<std::pair<int, std::string>> ranked;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto lang = rec.at("language").get<std::string>();
      sel.similarities[lang] = rec.at("cosine").get<double>();
      if (rec.at("selected").get<bool>()) ranked.emplace_back(rec.at("rank").get<int>(), lang);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}: malformed aux-selection record: {}", path.string(), e.what()));
    }
  }
  std::sort(ranked.begin(), ranked.end());
  for (auto& [rank, lang] : ranked) sel.selected.push_back(std::move(lang));
  if (sel.selected.empty()) throw DataError(fmt::format("{}: no selected languages", path.string()));
  return sel;
}

}  // namespace relic

#pragma once

// Scoring and cross-lingual transfer ratio.
//
//   xltr(s, t) = (|C_s ∩ C_t| / |C_s| - A_r) / (1 - A_r)
//
// C_x is the set of item ids answered correctly in language x and A_r the
// accuracy of uniform random guessing. Intersection is by item id, and the
// result is reported unclipped (it is negative for below-chance overlap).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kfr/core.hpp"
#include "kfr/dataset.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/stats.hpp"

namespace kfr {

inline constexpr double kDefaultRandomAccuracyMcq = 0.25;
inline constexpr double kDefaultRandomAccuracyBoolean = 0.5;
inline constexpr double kDefaultFcltThreshold = 0.95;

struct PredictionSet {
  LanguageTag language;
  std::map<std::uint64_t, std::string> entries;
};

struct ResultSet {
  LanguageTag language;
  std::set<std::uint64_t> correct_ids;
  std::set<std::uint64_t> total_ids;

  double accuracy() const {
    if (total_ids.empty()) throw DomainError("accuracy of an empty result set");
    return static_cast<double>(correct_ids.size()) / static_cast<double>(total_ids.size());
  }
};

inline bool is_choice_letter(std::string_view s) { return s.size() == 1 && s[0] >= 'A' && s[0] <= 'D'; }
inline bool is_boolean_answer(std::string_view s) { return s == "Yes" || s == "No"; }

inline ResultSet score(const Dataset& dataset, const PredictionSet& predictions) {
  if (!predictions.language.empty() && predictions.language != dataset.manifest.language)
    throw AlignmentError("predictions are for '" + predictions.language.code() + "' but the dataset is '" +
                         dataset.manifest.language.code() + "'");
  if (predictions.entries.empty()) throw DomainError("no predictions to score");

  std::map<std::uint64_t, char> answers;
  for (const auto& item : dataset.items) answers.emplace(item.item_id, item.answer);

  ResultSet r;
  r.language = dataset.manifest.language;
  for (const auto& [id, pred] : predictions.entries) {
    const auto it = answers.find(id);
    if (it == answers.end()) throw AlignmentError("prediction for unknown item_id " + std::to_string(id));
    if (!is_choice_letter(pred)) throw ValidationError("prediction '" + pred + "' for item " + std::to_string(id) + " is not one of A-D");
    r.total_ids.insert(id);
    if (pred[0] == it->second) r.correct_ids.insert(id);
  }
  return r;
}

namespace detail {

inline void check_random_accuracy(double a) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("random accuracy must lie in (0, 1)");
}

}  // namespace detail

inline double xltr(const ResultSet& source, const ResultSet& target, double random_accuracy) {
  detail::check_random_accuracy(random_accuracy);
  if (source.total_ids != target.total_ids)
    throw AlignmentError("result sets for '" + source.language.code() + "' and '" + target.language.code() + "' cover different items");
  if (source.correct_ids.empty()) throw DomainError("xltr undefined: source '" + source.language.code() + "' has no correct answers");
  std::size_t overlap = 0;
  for (auto id : source.correct_ids) overlap += target.correct_ids.contains(id) ? 1 : 0;
  const double ratio = static_cast<double>(overlap) / static_cast<double>(source.correct_ids.size());
  return (ratio - random_accuracy) / (1.0 - random_accuracy);
}

// ---------------------------------------------------------------------------
// Transfer matrix
// ---------------------------------------------------------------------------

struct TransferMatrix {
  std::vector<LanguageTag> languages;
  std::map<std::pair<LanguageTag, LanguageTag>, double> xltr;
  std::map<std::pair<LanguageTag, LanguageTag>, Interval> ci;
  std::map<std::pair<LanguageTag, LanguageTag>, bool> fclt;
  std::map<LanguageTag, double> accuracy;
  double random_accuracy = kDefaultRandomAccuracyMcq;
  double fclt_threshold = kDefaultFcltThreshold;
};

namespace detail {

struct PairOutcome {
  bool source_correct;
  bool target_correct;
};

inline double xltr_from_outcomes(std::span<const PairOutcome> items, double random_accuracy) {
  std::size_t src = 0, both = 0;
  for (const auto& o : items) {
    src += o.source_correct ? 1 : 0;
    both += (o.source_correct && o.target_correct) ? 1 : 0;
  }
  if (src == 0) return std::nan("");
  return (static_cast<double>(both) / static_cast<double>(src) - random_accuracy) / (1.0 - random_accuracy);
}

}  // namespace detail

/// XLTR for every ordered pair, FCLT flags and (optionally) per-pair
/// bootstrap intervals over items. Languages are sorted by tag.
inline TransferMatrix transfer_matrix(std::vector<ResultSet> results, double random_accuracy,
                                      double fclt_threshold = kDefaultFcltThreshold,
                                      std::optional<BootstrapConfig> bootstrap = std::nullopt) {
  detail::check_random_accuracy(random_accuracy);
  if (results.size() < 2) throw DomainError("transfer matrix needs at least 2 languages");
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.language < b.language; });
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].language == results[i - 1].language) throw ValidationError("duplicate language '" + results[i].language.code() + "'");

  TransferMatrix m;
  m.random_accuracy = random_accuracy;
  m.fclt_threshold = fclt_threshold;
  for (const auto& r : results) {
    m.languages.push_back(r.language);
    m.accuracy[r.language] = r.accuracy();
  }
  for (std::size_t s = 0; s < results.size(); ++s) {
    for (std::size_t t = 0; t < results.size(); ++t) {
      const auto key = std::make_pair(results[s].language, results[t].language);
      double value = 0.0;
      try {
        value = xltr(results[s], results[t], random_accuracy);
      } catch (const Error& e) {
        throw AlignmentError("pair (" + key.first.code() + ", " + key.second.code() + "): " + e.what());
      }
      m.xltr[key] = value;
      m.fclt[key] = value >= fclt_threshold;

      if (bootstrap) {
        std::vector<detail::PairOutcome> outcomes;
        outcomes.reserve(results[s].total_ids.size());
        for (auto id : results[s].total_ids)
          outcomes.push_back({results[s].correct_ids.contains(id), results[t].correct_ids.contains(id)});
        Rng rng(derive_seed(bootstrap->seed, s * results.size() + t));
        m.ci[key] = bootstrap_ci<detail::PairOutcome>(
            [&](std::span<const detail::PairOutcome> xs) { return detail::xltr_from_outcomes(xs, random_accuracy); },
            std::span<const detail::PairOutcome>(outcomes), bootstrap->iterations, bootstrap->level, rng);
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Predictions: one {"item_id", "prediction"} record per line.
inline PredictionSet read_predictions(const std::filesystem::path& path, const LanguageTag& language = {}) {
  PredictionSet p;
  p.language = language;
  for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    std::uint64_t id = 0;
    std::string pred;
    try {
      id = j.at("item_id").get<std::uint64_t>();
      pred = j.at("prediction").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("prediction schema error: ") + e.what());
    }
    if (!is_choice_letter(pred) && !is_boolean_answer(pred)) throw ValidationError("prediction '" + pred + "' is outside {A,B,C,D,Yes,No}");
    if (!p.entries.emplace(id, pred).second) throw ValidationError("duplicate prediction for item_id " + std::to_string(id));
  });
  return p;
}

inline void write_predictions(const PredictionSet& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [id, pred] : p.entries) out << nlohmann::json{{"item_id", id}, {"prediction", pred}}.dump() << '\n';
}

/// Result file: {"language", "items": [{"item_id", "correct"}...]}.
inline nlohmann::json to_json(const ResultSet& r) {
  nlohmann::json items = nlohmann::json::array();
  for (auto id : r.total_ids) items.push_back({{"item_id", id}, {"correct", r.correct_ids.contains(id)}});
  return {{"language", r.language.code()}, {"items", items}};
}

inline ResultSet result_set_from_json(const nlohmann::json& j) {
  ResultSet r;
  try {
    r.language = LanguageTag(j.at("language").get<std::string>());
    for (const auto& item : j.at("items")) {
      const auto id = item.at("item_id").get<std::uint64_t>();
      if (!r.total_ids.insert(id).second) throw ValidationError("duplicate item_id " + std::to_string(id) + " in result set");
      if (item.at("correct").get<bool>()) r.correct_ids.insert(id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("result set schema error: ") + e.what());
  }
  return r;
}

inline void write_result_set(const ResultSet& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(r).dump() << '\n';
}

inline ResultSet read_result_set(const std::filesystem::path& path) {
  try {
    return result_set_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": parse error: " + e.what());
  }
}

}  // namespace kfr

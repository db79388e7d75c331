#pragma once

// Per-language resource packs. A pack is a JSON document (see
// docs/pack-format.md); a PackSet is a group of packs whose list fields are
// positionally aligned, so that index i means the same word, entity or
// category in every language.

#include <algorithm>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfr/core.hpp"
#include "kfr/rules.hpp"

namespace kfr {

/// ISO-639-1 style language code: non-empty lowercase ASCII.
class LanguageTag {
 public:
  LanguageTag() = default;
  explicit LanguageTag(std::string code) : code_(std::move(code)) {
    if (code_.empty()) throw ValidationError("language tag is empty");
    for (char c : code_)
      if (c < 'a' || c > 'z') throw ValidationError("language tag '" + code_ + "' is not lowercase ASCII");
  }

  const std::string& code() const noexcept { return code_; }
  bool empty() const noexcept { return code_.empty(); }

  auto operator<=>(const LanguageTag&) const = default;

 private:
  std::string code_;
};

// Slots each proposition template form must carry, exactly once each.
inline const std::map<std::string, std::vector<std::string>, std::less<>>& proposition_template_slots() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> slots{
      {"affirmative", {"entity", "category"}},
      {"negative", {"entity", "category"}},
      {"conjunction", {"entity", "category", "category2"}},
      {"disjunction", {"entity", "category", "category2"}},
      {"universal", {"category", "category2"}},
      {"conditional", {"antecedent", "consequent"}},
      {"sentence", {"text"}},
  };
  return slots;
}

inline const std::vector<std::string>& prompt_template_slots() {
  static const std::vector<std::string> slots{"rule", "input", "optA", "optB", "optC", "optD"};
  return slots;
}

// Every rule_phrases key a generator or renderer reads, with its slots.
inline const std::map<std::string, std::vector<std::string>, std::less<>>& required_rule_phrases() {
  static const auto table = [] {
    std::map<std::string, std::vector<std::string>, std::less<>> t;
    for (auto r : kAllArithmeticRules) t[std::string(to_string(r))] = {};
    for (auto r : kAllInferenceRules) t[std::string(to_string(r))] = {};
    t[std::string(to_string(SymbolicOpKind::repetition))] = {"pos"};
    t[std::string(to_string(SymbolicOpKind::addition))] = {"word", "pos"};
    t[std::string(to_string(SymbolicOpKind::deletion))] = {"pos"};
    t[std::string(to_string(SymbolicOpKind::reordering))] = {"pos1", "pos2"};
    t["ordinal"] = {"n"};
    t["step_separator"] = {};
    t["list_separator"] = {};
    t["sentence_separator"] = {};
    return t;
  }();
  return table;
}

struct LexiconPack {
  LanguageTag language;
  std::vector<std::string> words;
  std::vector<std::string> entities;
  std::vector<std::string> categories;
  std::map<std::string, std::string, std::less<>> proposition_templates;
  std::string prompt_template;
  std::map<std::string, std::string, std::less<>> rule_phrases;
  std::string question_suffix;

  const std::string& phrase(std::string_view key) const {
    const auto it = rule_phrases.find(key);
    if (it == rule_phrases.end()) throw ValidationError("pack '" + language.code() + "' has no rule phrase '" + std::string(key) + "'");
    return it->second;
  }

  const std::string& proposition_template(std::string_view form) const {
    const auto it = proposition_templates.find(form);
    if (it == proposition_templates.end())
      throw ValidationError("pack '" + language.code() + "' has no proposition template '" + std::string(form) + "'");
    return it->second;
  }

  /// Ordinal for a 1-based position: `ordinal_<n>` override, else `ordinal`.
  std::string ordinal(int n) const {
    const auto it = rule_phrases.find("ordinal_" + std::to_string(n));
    if (it != rule_phrases.end()) return it->second;
    return fill_template(phrase("ordinal"), {{"n", std::to_string(n)}});
  }

  bool operator==(const LexiconPack&) const = default;
};

namespace detail {

inline void check_slots_exactly_once(const std::string& what, const std::string& tmpl, const std::vector<std::string>& declared) {
  const auto found = template_slots(tmpl);
  for (const auto& slot : declared) {
    const auto n = std::count(found.begin(), found.end(), slot);
    if (n != 1)
      throw ValidationError(what + " must contain {" + slot + "} exactly once (found " + std::to_string(n) + ")");
  }
  for (const auto& slot : found)
    if (std::find(declared.begin(), declared.end(), slot) == declared.end())
      throw ValidationError(what + " has undeclared slot {" + slot + "}");
}

inline void check_list(const std::string& lang, const char* field, const std::vector<std::string>& items) {
  if (items.empty()) throw ValidationError("pack '" + lang + "': " + field + " is empty");
  std::set<std::string_view> seen;
  for (const auto& s : items) {
    if (s.empty()) throw ValidationError("pack '" + lang + "': " + field + " contains an empty entry");
    if (!seen.insert(s).second) throw ValidationError("pack '" + lang + "': duplicate entry \"" + s + "\" in " + field);
  }
}

inline bool ends_with_question_mark(std::string_view s) {
  for (std::string_view q : {"?", "\xEF\xBC\x9F" /* U+FF1F */, "\xD8\x9F" /* U+061F */, "\xCD\xBE" /* U+037E */})
    if (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) return true;
  return false;
}

}  // namespace detail

/// Throws ValidationError naming the first violated invariant.
inline void validate_pack(const LexiconPack& p) {
  const auto& lang = p.language.code();
  if (p.language.empty()) throw ValidationError("pack has no language");
  detail::check_list(lang, "words", p.words);
  detail::check_list(lang, "entities", p.entities);
  detail::check_list(lang, "categories", p.categories);

  for (const auto& [form, slots] : proposition_template_slots()) {
    const auto it = p.proposition_templates.find(form);
    if (it == p.proposition_templates.end())
      throw ValidationError("pack '" + lang + "': proposition_templates is missing \"" + form + "\"");
    detail::check_slots_exactly_once("pack '" + lang + "': proposition template \"" + form + "\"", it->second, slots);
  }

  detail::check_slots_exactly_once("pack '" + lang + "': prompt_template", p.prompt_template, prompt_template_slots());

  for (const auto& [key, slots] : required_rule_phrases()) {
    const auto it = p.rule_phrases.find(key);
    if (it == p.rule_phrases.end()) throw ValidationError("pack '" + lang + "': rule_phrases is missing \"" + key + "\"");
    detail::check_slots_exactly_once("pack '" + lang + "': rule phrase \"" + key + "\"", it->second, slots);
  }

  if (p.question_suffix.empty()) throw ValidationError("pack '" + lang + "': question_suffix is empty");
  if (!detail::ends_with_question_mark(p.question_suffix))
    throw ValidationError("pack '" + lang + "': question_suffix must end with a question mark");
}

inline nlohmann::json to_json(const LexiconPack& p) {
  nlohmann::json j;
  j["language"] = p.language.code();
  j["words"] = p.words;
  j["entities"] = p.entities;
  j["categories"] = p.categories;
  j["proposition_templates"] = nlohmann::json::object();
  for (const auto& [k, v] : p.proposition_templates) j["proposition_templates"][k] = v;
  j["prompt_template"] = p.prompt_template;
  j["rule_phrases"] = nlohmann::json::object();
  for (const auto& [k, v] : p.rule_phrases) j["rule_phrases"][k] = v;
  j["question_suffix"] = p.question_suffix;
  return j;
}

/// Parses and validates pack text. `expected` (when non-empty) must match
/// the pack's own `language` field.
inline LexiconPack parse_pack(std::string_view text, const LanguageTag& expected = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("pack parse error: ") + e.what());
  }
  LexiconPack p;
  try {
    if (!j.is_object()) throw ParseError("pack must be a JSON object");
    p.language = LanguageTag(j.at("language").get<std::string>());
    p.words = j.at("words").get<std::vector<std::string>>();
    p.entities = j.at("entities").get<std::vector<std::string>>();
    p.categories = j.at("categories").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("proposition_templates").items()) p.proposition_templates[k] = v.get<std::string>();
    p.prompt_template = j.at("prompt_template").get<std::string>();
    for (const auto& [k, v] : j.at("rule_phrases").items()) p.rule_phrases[k] = v.get<std::string>();
    p.question_suffix = j.at("question_suffix").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pack schema error: ") + e.what());
  }
  if (!expected.empty() && expected != p.language)
    throw ValidationError("pack declares language '" + p.language.code() + "' but '" + expected.code() + "' was requested");
  validate_pack(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LexiconPack load_pack(const std::filesystem::path& path, const LanguageTag& language) {
  if (!std::filesystem::exists(path)) throw Error("no pack for language '" + language.code() + "' at " + path.string());
  return parse_pack(read_file(path), language);
}

/// Stable checksum of a pack's canonical serialization.
inline std::string pack_checksum(const LexiconPack& p) { return hex64(fnv1a64(to_json(p).dump())); }

class PackSet {
 public:
  const LexiconPack& at(const LanguageTag& lang) const {
    const auto it = packs_.find(lang);
    if (it == packs_.end()) throw Error("no pack for language '" + lang.code() + "'");
    return it->second;
  }
  bool contains(const LanguageTag& lang) const { return packs_.contains(lang); }
  std::size_t size() const { return packs_.size(); }
  auto begin() const { return packs_.begin(); }
  auto end() const { return packs_.end(); }

 private:
  friend PackSet validate_pack_set(std::vector<LexiconPack> packs);
  std::map<LanguageTag, LexiconPack> packs_;
};

/// Checks positional alignment of every list field across languages.
inline PackSet validate_pack_set(std::vector<LexiconPack> packs) {
  if (packs.empty()) throw ValidationError("pack set is empty");
  PackSet set;
  for (auto& p : packs) {
    const auto lang = p.language;
    if (!set.packs_.emplace(lang, std::move(p)).second) throw ValidationError("duplicate pack for language '" + lang.code() + "'");
  }
  const auto& ref = set.packs_.begin()->second;
  for (const auto& [lang, p] : set.packs_) {
    auto check = [&](const char* field, std::size_t a, std::size_t b) {
      if (a != b)
        throw AlignmentError(std::string("packs misaligned on \"") + field + "\": " + ref.language.code() + " has " +
                             std::to_string(a) + ", " + lang.code() + " has " + std::to_string(b));
    };
    check("words", ref.words.size(), p.words.size());
    check("entities", ref.entities.size(), p.entities.size());
    check("categories", ref.categories.size(), p.categories.size());
  }
  return set;
}

/// Loads `<dir>/<lang>.json` for each language and aligns them.
inline PackSet load_pack_set(const std::filesystem::path& dir, const std::vector<LanguageTag>& languages) {
  std::vector<LexiconPack> packs;
  for (const auto& lang : languages) packs.push_back(load_pack(dir / (lang.code() + ".json"), lang));
  return validate_pack_set(std::move(packs));
}

}  // namespace kfr

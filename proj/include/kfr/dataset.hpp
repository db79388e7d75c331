#pragma once

// Rendered multiple-choice items, prompt rendering, dataset generation and
// the line-delimited dataset file format (docs/formats.md).

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kfr/arithmetic.hpp"
#include "kfr/core.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/logic.hpp"
#include "kfr/rules.hpp"
#include "kfr/symbolic.hpp"

namespace kfr {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::array<char, 4> kLetters{'A', 'B', 'C', 'D'};

using Instance = std::variant<ArithmeticInstance, SymbolicInstance, LogicInstance>;

struct ItemMeta {
  std::uint64_t seed = 0;
  std::string rule;
  int step_count = 1;
  /// order[k] is the canonical index (0 = correct, 1..3 = distractors)
  /// of the option shown at position k.
  std::array<int, 4> order{0, 1, 2, 3};

  bool operator==(const ItemMeta&) const = default;
};

struct MCQItem {
  std::uint64_t item_id = 0;
  LanguageTag language;
  Task task{};
  std::string rule_text;
  std::string input_text;
  std::array<std::string, 4> options;
  char answer = 'A';
  ItemMeta meta;

  std::size_t answer_index() const { return static_cast<std::size_t>(answer - 'A'); }
  bool operator==(const MCQItem&) const = default;
};

struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  Task task{};
  LanguageTag language;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string pack_checksum;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  std::vector<MCQItem> items;
  DatasetManifest manifest;

  bool operator==(const Dataset&) const = default;
};

/// Number of balance classes per task: rules, or step counts for symbolic.
constexpr std::size_t balance_classes(Task task) {
  switch (task) {
    case Task::arithmetic: return kAllArithmeticRules.size();
    case Task::symbolic: return static_cast<std::size_t>(kMaxSymbolicSteps);
    case Task::logical: return kAllInferenceRules.size();
  }
  return 1;
}

/// Default item counts per task (test-set sizes used for transfer runs).
constexpr std::size_t default_count(Task task) {
  switch (task) {
    case Task::arithmetic: return 800;
    case Task::symbolic: return 500;
    case Task::logical: return 500;
  }
  return 0;
}

inline std::uint64_t make_item_id(Task task, std::uint64_t seed, std::size_t index) {
  return fnv1a64(std::string(to_string(task)) + ":" + std::to_string(seed) + ":" + std::to_string(index));
}

inline Task task_of(const Instance& inst) {
  if (std::holds_alternative<ArithmeticInstance>(inst)) return Task::arithmetic;
  if (std::holds_alternative<SymbolicInstance>(inst)) return Task::symbolic;
  return Task::logical;
}

/// Runs the generator's soundness + uniqueness oracle. Throws ValidationError.
inline void check_instance(const Instance& inst) {
  std::visit(
      [](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, ArithmeticInstance>) check_arithmetic_instance(i);
        else if constexpr (std::is_same_v<T, SymbolicInstance>) check_symbolic_instance(i);
        else check_logic_instance(i);
      },
      inst);
}

/// Rule text, input text and the four options in canonical order (correct first).
struct RenderedInstance {
  std::string rule_text;
  std::string input_text;
  std::array<std::string, 4> options;
};

inline RenderedInstance render_instance(const Instance& inst, const LexiconPack& pack) {
  RenderedInstance r;
  if (const auto* a = std::get_if<ArithmeticInstance>(&inst)) {
    r.rule_text = render_arithmetic_rule(a->rule, pack);
    r.input_text = render_numbers(a->inputs, pack);
    r.options = {render_numbers(a->correct, pack), render_numbers(a->distractors[0], pack), render_numbers(a->distractors[1], pack),
                 render_numbers(a->distractors[2], pack)};
  } else if (const auto* s = std::get_if<SymbolicInstance>(&inst)) {
    r.rule_text = render_symbolic_rule(s->program, pack);
    r.input_text = render_words(s->words, pack);
    r.options = {render_words(s->correct, pack), render_words(s->distractors[0], pack), render_words(s->distractors[1], pack),
                 render_words(s->distractors[2], pack)};
  } else {
    const auto& l = std::get<LogicInstance>(inst);
    r.rule_text = pack.phrase(to_string(l.rule));
    r.input_text = render_premises(l.premises, pack);
    r.options = {render_proposition(l.correct, pack), render_proposition(l.distractors[0], pack),
                 render_proposition(l.distractors[1], pack), render_proposition(l.distractors[2], pack)};
  }
  return r;
}

inline std::string rule_identifier(const Instance& inst) {
  if (const auto* a = std::get_if<ArithmeticInstance>(&inst)) return std::string(to_string(a->rule));
  if (const auto* l = std::get_if<LogicInstance>(&inst)) return std::string(to_string(l->rule));
  std::string out;
  for (const auto& op : std::get<SymbolicInstance>(inst).program.ops()) {
    if (!out.empty()) out += "+";
    out += to_string(op.kind);
  }
  return out;
}

/// Renders an instance in `pack`'s language with a uniformly shuffled option order.
/// The caller owns item_id and meta.seed.
inline MCQItem assemble_item(const Instance& inst, const LexiconPack& pack, Rng& rng) {
  auto rendered = render_instance(inst, pack);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (rendered.options[i] == rendered.options[j]) throw ValidationError("rendered options collide: \"" + rendered.options[i] + "\"");

  MCQItem item;
  item.language = pack.language;
  item.task = task_of(inst);
  item.rule_text = std::move(rendered.rule_text);
  item.input_text = std::move(rendered.input_text);
  rng.shuffle(std::span<int>(item.meta.order));
  for (std::size_t k = 0; k < 4; ++k) {
    item.options[k] = rendered.options[static_cast<std::size_t>(item.meta.order[k])];
    if (item.meta.order[k] == 0) item.answer = kLetters[k];
  }
  item.meta.rule = rule_identifier(inst);
  if (const auto* s = std::get_if<SymbolicInstance>(&inst)) item.meta.step_count = static_cast<int>(s->program.size());
  return item;
}

/// Options in canonical order (correct first), undoing the presentation shuffle.
inline std::array<std::string, 4> canonical_options(const MCQItem& item) {
  std::array<std::string, 4> out;
  for (std::size_t k = 0; k < 4; ++k) out[static_cast<std::size_t>(item.meta.order[k])] = item.options[k];
  return out;
}

inline std::string render_prompt(const MCQItem& item, const LexiconPack& pack, bool interp_mode) {
  auto prompt = fill_template(pack.prompt_template, {{"rule", item.rule_text},
                                                     {"input", item.input_text},
                                                     {"optA", item.options[0]},
                                                     {"optB", item.options[1]},
                                                     {"optC", item.options[2]},
                                                     {"optD", item.options[3]}});
  if (interp_mode) {
    prompt += '\n';
    prompt += pack.question_suffix;
  }
  return prompt;
}

namespace detail {

inline std::uint64_t permutation_seed(std::uint64_t item_seed) { return derive_seed(item_seed, 0x5045524Dull); }

struct ItemPlan {
  std::uint64_t seed;
  std::string rule;  // arithmetic/logic rule id; symbolic: pinned single-step op or empty
  int step_count;
};

inline ItemPlan plan_item(Task task, std::uint64_t base_seed, std::size_t index) {
  const auto seed = derive_seed(base_seed, index);
  switch (task) {
    case Task::arithmetic: return {seed, std::string(to_string(kAllArithmeticRules[index % kAllArithmeticRules.size()])), 1};
    case Task::logical: return {seed, std::string(to_string(kAllInferenceRules[index % kAllInferenceRules.size()])), 1};
    case Task::symbolic: {
      const int steps = static_cast<int>(index % 3) + 1;
      const std::string pinned = steps == 1 ? std::string(to_string(kAllSymbolicOps[(index / 3) % kAllSymbolicOps.size()])) : "";
      return {seed, pinned, steps};
    }
  }
  return {seed, "", 1};
}

}  // namespace detail

/// Draws the instance for (task, rule, steps, seed). Pure in its arguments;
/// only list lengths of `pack` matter, so aligned packs yield the same instance.
inline Instance sample_instance(Task task, const std::string& rule, int step_count, std::uint64_t seed, const LexiconPack& pack) {
  Rng rng(seed);
  switch (task) {
    case Task::arithmetic: return sample_arithmetic_instance(parse_arithmetic_rule(rule), rng);
    case Task::logical: return sample_logic_instance(parse_inference_rule(rule), pack, rng);
    case Task::symbolic: {
      std::optional<SymbolicOpKind> pinned;
      if (step_count == 1 && !rule.empty()) pinned = parse_symbolic_op(rule);
      return sample_symbolic_instance(step_count, pack, rng, pinned);
    }
  }
  throw DomainError("unknown task");
}

inline std::vector<Dataset> generate_dataset(Task task, const std::vector<LanguageTag>& languages, std::size_t count, std::uint64_t seed,
                                             const PackSet& packs) {
  if (languages.empty()) throw ValidationError("no languages requested");
  const auto classes = balance_classes(task);
  if (count == 0 || count % classes != 0)
    throw DomainError("count " + std::to_string(count) + " is not a positive multiple of " + std::to_string(classes) + " (" +
                      std::string(to_string(task)) + " balance classes)");
  for (const auto& lang : languages)
    if (!packs.contains(lang)) throw AlignmentError("no pack for language '" + lang.code() + "'");

  std::vector<Dataset> out(languages.size());
  for (std::size_t l = 0; l < languages.size(); ++l) {
    const auto& pack = packs.at(languages[l]);
    out[l].manifest = {kDatasetSchemaVersion, task, languages[l], count, seed, pack_checksum(pack)};
    out[l].items.reserve(count);
  }

  const auto& reference = packs.at(languages.front());
  for (std::size_t i = 0; i < count; ++i) {
    const auto plan = detail::plan_item(task, seed, i);
    const auto inst = sample_instance(task, plan.rule, plan.step_count, plan.seed, reference);
    for (std::size_t l = 0; l < languages.size(); ++l) {
      Rng perm(detail::permutation_seed(plan.seed));
      auto item = assemble_item(inst, packs.at(languages[l]), perm);
      item.item_id = make_item_id(task, seed, i);
      item.meta.seed = plan.seed;
      out[l].items.push_back(std::move(item));
    }
  }
  return out;
}

/// Regenerates the item's instance from its meta and checks that the
/// oracle passes and the stored text matches. Throws ValidationError.
inline void revalidate_item(const MCQItem& item, const LexiconPack& pack) {
  const std::string pinned = item.task == Task::symbolic ? (item.meta.step_count == 1 ? item.meta.rule : "") : item.meta.rule;
  Instance inst;
  try {
    inst = sample_instance(item.task, pinned, item.meta.step_count, item.meta.seed, pack);
  } catch (const Error& e) {
    throw ValidationError("item " + std::to_string(item.item_id) + ": cannot regenerate: " + e.what());
  }
  check_instance(inst);
  const auto rendered = render_instance(inst, pack);
  if (rendered.options != canonical_options(item) || rendered.rule_text != item.rule_text || rendered.input_text != item.input_text)
    throw ValidationError("item " + std::to_string(item.item_id) + ": stored text differs from regenerated instance");
  if (item.options[item.answer_index()] != rendered.options[0])
    throw ValidationError("item " + std::to_string(item.item_id) + ": answer letter does not point at the correct option");
}

/// Structural item invariants.
inline void validate_item(const MCQItem& item) {
  if (item.answer < 'A' || item.answer > 'D') throw ValidationError("answer must be one of A-D");
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (item.options[i] == item.options[j]) throw ValidationError("options are not pairwise distinct");
  auto order = item.meta.order;
  std::sort(order.begin(), order.end());
  if (order != std::array<int, 4>{0, 1, 2, 3}) throw ValidationError("meta.order is not a permutation of 0..3");
  if (item.meta.order[item.answer_index()] != 0) throw ValidationError("answer letter disagrees with meta.order");
}

/// Unique ids, a single language and exact per-class balance.
inline void validate_dataset(const Dataset& d) {
  std::set<std::uint64_t> ids;
  std::map<std::string, std::size_t> per_class;
  for (const auto& item : d.items) {
    validate_item(item);
    if (!ids.insert(item.item_id).second) throw ValidationError("duplicate item_id " + std::to_string(item.item_id));
    if (item.language != d.manifest.language) throw ValidationError("dataset mixes languages");
    if (item.task != d.manifest.task) throw ValidationError("dataset mixes tasks");
    per_class[item.task == Task::symbolic ? std::to_string(item.meta.step_count) : item.meta.rule]++;
  }
  if (d.manifest.count != d.items.size())
    throw ValidationError("manifest count " + std::to_string(d.manifest.count) + " != " + std::to_string(d.items.size()) + " items");
  if (!d.items.empty()) {
    if (per_class.size() != balance_classes(d.manifest.task)) throw ValidationError("dataset is missing a balance class");
    const auto expected = d.items.size() / balance_classes(d.manifest.task);
    for (const auto& [cls, n] : per_class)
      if (n != expected) throw ValidationError("class '" + cls + "' has " + std::to_string(n) + " items, expected " + std::to_string(expected));
  }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const MCQItem& item) {
  return {{"item_id", item.item_id},
          {"language", item.language.code()},
          {"task", to_string(item.task)},
          {"rule_text", item.rule_text},
          {"input_text", item.input_text},
          {"options", item.options},
          {"answer", std::string(1, item.answer)},
          {"meta", {{"seed", item.meta.seed}, {"rule", item.meta.rule}, {"step_count", item.meta.step_count}, {"order", item.meta.order}}}};
}

inline MCQItem item_from_json(const nlohmann::json& j) {
  MCQItem item;
  try {
    item.item_id = j.at("item_id").get<std::uint64_t>();
    item.language = LanguageTag(j.at("language").get<std::string>());
    item.task = parse_task(j.at("task").get<std::string>());
    item.rule_text = j.at("rule_text").get<std::string>();
    item.input_text = j.at("input_text").get<std::string>();
    const auto options = j.at("options").get<std::vector<std::string>>();
    if (options.size() != 4) throw ValidationError("item has " + std::to_string(options.size()) + " options, expected 4");
    std::copy(options.begin(), options.end(), item.options.begin());
    const auto answer = j.at("answer").get<std::string>();
    if (answer.size() != 1) throw ValidationError("answer must be a single letter");
    item.answer = answer[0];
    const auto& meta = j.at("meta");
    item.meta.seed = meta.at("seed").get<std::uint64_t>();
    item.meta.rule = meta.at("rule").get<std::string>();
    item.meta.step_count = meta.at("step_count").get<int>();
    const auto order = meta.at("order").get<std::vector<int>>();
    if (order.size() != 4) throw ValidationError("meta.order must have 4 entries");
    std::copy(order.begin(), order.end(), item.meta.order.begin());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("item schema error: ") + e.what());
  }
  validate_item(item);
  return item;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  return {{"schema_version", m.schema_version}, {"task", to_string(m.task)}, {"language", m.language.code()},
          {"count", m.count},                   {"seed", m.seed},            {"pack_checksum", m.pack_checksum}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kDatasetSchemaVersion)
      throw ValidationError("dataset schema_version " + std::to_string(m.schema_version) + " is not supported (expected " +
                            std::to_string(kDatasetSchemaVersion) + ")");
    m.task = parse_task(j.at("task").get<std::string>());
    m.language = LanguageTag(j.at("language").get<std::string>());
    m.count = j.at("count").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.pack_checksum = j.at("pack_checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest schema error: ") + e.what());
  }
  return m;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p += ".manifest.json";
  return p;
}

inline void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  validate_dataset(d);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& item : d.items) out << to_json(item).dump() << '\n';
    if (!out) throw Error("write failed for " + path.string());
  }
  std::ofstream man(manifest_path(path), std::ios::binary | std::ios::trunc);
  if (!man) throw Error("cannot write " + manifest_path(path).string());
  man << to_json(d.manifest).dump(2) << '\n';
}

/// Calls `fn(line_number, json)` for each non-blank line of a JSONL file.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    }
    try {
      fn(line_no, j);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  Dataset d;
  const auto mpath = manifest_path(path);
  if (!std::filesystem::exists(mpath)) throw Error("missing manifest " + mpath.string());
  try {
    d.manifest = manifest_from_json(nlohmann::json::parse(read_file(mpath)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(mpath.string() + ": parse error: " + e.what());
  }
  for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) { d.items.push_back(item_from_json(j)); });
  validate_dataset(d);
  return d;
}

/// Writes one JSON record {"item_id", "prompt"} per line.
inline void write_prompts(const Dataset& d, const LexiconPack& pack, bool interp_mode, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& item : d.items)
    out << nlohmann::json{{"item_id", item.item_id}, {"prompt", render_prompt(item, pack, interp_mode)}}.dump() << '\n';
}

}  // namespace kfr

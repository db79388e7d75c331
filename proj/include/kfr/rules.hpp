#pragma once

// Rule identifiers shared by the generators, the lexicon packs (which carry
// one phrasing per identifier) and the dataset files (which record them).

#include <array>
#include <string>
#include <string_view>

#include "kfr/core.hpp"

namespace kfr {

enum class Task { arithmetic, symbolic, logical };

enum class ArithmeticRule {
  addition,
  subtraction,
  multiplication,
  division,
  equality,
  geometric_progression,
  arithmetic_progression,
  sorting,
};

enum class SymbolicOpKind { repetition, addition, deletion, reordering };

enum class InferenceRule {
  implication_elimination,
  conjunction_introduction,
  conjunction_elimination,
  disjunction_introduction,
  disjunction_elimination,
  proof_by_contradiction,
};

inline constexpr std::array kAllTasks{Task::arithmetic, Task::symbolic, Task::logical};

inline constexpr std::array kAllArithmeticRules{
    ArithmeticRule::addition,         ArithmeticRule::subtraction,           ArithmeticRule::multiplication,
    ArithmeticRule::division,         ArithmeticRule::equality,              ArithmeticRule::geometric_progression,
    ArithmeticRule::arithmetic_progression, ArithmeticRule::sorting,
};

inline constexpr std::array kAllSymbolicOps{SymbolicOpKind::repetition, SymbolicOpKind::addition,
                                            SymbolicOpKind::deletion, SymbolicOpKind::reordering};

inline constexpr std::array kAllInferenceRules{
    InferenceRule::implication_elimination,  InferenceRule::conjunction_introduction,
    InferenceRule::conjunction_elimination,  InferenceRule::disjunction_introduction,
    InferenceRule::disjunction_elimination,  InferenceRule::proof_by_contradiction,
};

constexpr std::string_view to_string(Task t) {
  switch (t) {
    case Task::arithmetic: return "arithmetic";
    case Task::symbolic: return "symbolic";
    case Task::logical: return "logical";
  }
  return "?";
}

constexpr std::string_view to_string(ArithmeticRule r) {
  switch (r) {
    case ArithmeticRule::addition: return "addition";
    case ArithmeticRule::subtraction: return "subtraction";
    case ArithmeticRule::multiplication: return "multiplication";
    case ArithmeticRule::division: return "division";
    case ArithmeticRule::equality: return "equality";
    case ArithmeticRule::geometric_progression: return "geometric_progression";
    case ArithmeticRule::arithmetic_progression: return "arithmetic_progression";
    case ArithmeticRule::sorting: return "sorting";
  }
  return "?";
}

// The symbolic op phrase keys differ from the op kind names so that
// "addition" stays unambiguous inside a pack's rule_phrases map.
constexpr std::string_view to_string(SymbolicOpKind k) {
  switch (k) {
    case SymbolicOpKind::repetition: return "repeat_word";
    case SymbolicOpKind::addition: return "insert_word";
    case SymbolicOpKind::deletion: return "delete_word";
    case SymbolicOpKind::reordering: return "swap_words";
  }
  return "?";
}

constexpr std::string_view to_string(InferenceRule r) {
  switch (r) {
    case InferenceRule::implication_elimination: return "implication_elimination";
    case InferenceRule::conjunction_introduction: return "conjunction_introduction";
    case InferenceRule::conjunction_elimination: return "conjunction_elimination";
    case InferenceRule::disjunction_introduction: return "disjunction_introduction";
    case InferenceRule::disjunction_elimination: return "disjunction_elimination";
    case InferenceRule::proof_by_contradiction: return "proof_by_contradiction";
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::array<Enum, N>& all, std::string_view what) {
  for (auto e : all)
    if (to_string(e) == name) return e;
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

inline Task parse_task(std::string_view s) { return parse_enum(s, kAllTasks, "task"); }
inline ArithmeticRule parse_arithmetic_rule(std::string_view s) { return parse_enum(s, kAllArithmeticRules, "arithmetic rule"); }
inline SymbolicOpKind parse_symbolic_op(std::string_view s) { return parse_enum(s, kAllSymbolicOps, "symbolic op"); }
inline InferenceRule parse_inference_rule(std::string_view s) { return parse_enum(s, kAllInferenceRules, "inference rule"); }

}  // namespace kfr

#pragma once

// Arithmetic transformations over integers in [0, 999].
//
// Rule semantics:
//   addition, subtraction, multiplication, division   [a, b] -> [a op b]
//     subtraction requires a >= b; division requires b != 0 and b | a
//   equality                 [x]    -> [x]
//   sorting                  [a, b] -> [min, max]
//   arithmetic_progression   [a, b] -> [2b - a]
//   geometric_progression    [a, b] -> [b * (b / a)], a != 0, b / a integer >= 2
// Every input and output value must lie in [0, 999]; out-of-range results are
// a DomainError, never clamped.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kfr/core.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/rules.hpp"

namespace kfr {

inline constexpr int kArithmeticMin = 0;
inline constexpr int kArithmeticMax = 999;

using Numbers = std::vector<int>;

struct ArithmeticInstance {
  ArithmeticRule rule{};
  Numbers inputs;
  Numbers correct;
  std::array<Numbers, 3> distractors;

  bool operator==(const ArithmeticInstance&) const = default;
};

constexpr std::size_t arithmetic_arity(ArithmeticRule r) { return r == ArithmeticRule::equality ? 1 : 2; }

namespace detail {

inline void require_range(int v, ArithmeticRule rule, const char* what) {
  if (v < kArithmeticMin || v > kArithmeticMax)
    throw DomainError(std::string(to_string(rule)) + ": " + what + " " + std::to_string(v) + " outside [0, 999]");
}

}  // namespace detail

inline Numbers apply_arithmetic_rule(ArithmeticRule rule, std::span<const int> inputs) {
  if (inputs.size() != arithmetic_arity(rule))
    throw DomainError(std::string(to_string(rule)) + " takes " + std::to_string(arithmetic_arity(rule)) + " input(s), got " +
                      std::to_string(inputs.size()));
  for (int v : inputs) detail::require_range(v, rule, "input");

  const int a = inputs[0];
  const int b = inputs.size() > 1 ? inputs[1] : 0;
  Numbers out;
  switch (rule) {
    case ArithmeticRule::addition: out = {a + b}; break;
    case ArithmeticRule::subtraction:
      if (a < b) throw DomainError("subtraction: negative result");
      out = {a - b};
      break;
    case ArithmeticRule::multiplication: out = {a * b}; break;
    case ArithmeticRule::division:
      if (b == 0) throw DomainError("division: divisor is zero");
      if (a % b != 0) throw DomainError("division: not exact");
      out = {a / b};
      break;
    case ArithmeticRule::equality: out = {a}; break;
    case ArithmeticRule::geometric_progression: {
      if (a == 0) throw DomainError("geometric_progression: first term is zero");
      if (b % a != 0) throw DomainError("geometric_progression: ratio is not an integer");
      const int ratio = b / a;
      if (ratio < 2) throw DomainError("geometric_progression: ratio must be >= 2");
      out = {b * ratio};
      break;
    }
    case ArithmeticRule::arithmetic_progression: out = {2 * b - a}; break;
    case ArithmeticRule::sorting: out = {std::min(a, b), std::max(a, b)}; break;
  }
  for (int v : out) detail::require_range(v, rule, "result");
  return out;
}

namespace detail {

// Rule-shaped input proposals. Each proposal is still checked by
// apply_arithmetic_rule; the shapes only keep the acceptance rate away from
// zero for rules whose valid region is a sliver of [0, 999]^2.
inline Numbers propose_arithmetic_inputs(ArithmeticRule rule, Rng& rng) {
  auto any = [&] { return static_cast<int>(rng.uniform(kArithmeticMin, kArithmeticMax)); };
  switch (rule) {
    case ArithmeticRule::equality: return {any()};
    case ArithmeticRule::multiplication: {
      const int a = any();
      const int b = static_cast<int>(rng.uniform(0, a == 0 ? kArithmeticMax : kArithmeticMax / a));
      return rng.bernoulli(0.5) ? Numbers{a, b} : Numbers{b, a};
    }
    case ArithmeticRule::division: {
      const int b = static_cast<int>(rng.uniform(1, kArithmeticMax));
      const int q = static_cast<int>(rng.uniform(0, kArithmeticMax / b));
      return {b * q, b};
    }
    case ArithmeticRule::geometric_progression: {
      const int a = static_cast<int>(rng.uniform(1, kArithmeticMax / 4));
      const int max_ratio = static_cast<int>(std::sqrt(static_cast<double>(kArithmeticMax) / a));
      const int r = static_cast<int>(rng.uniform(2, std::max(2, max_ratio)));
      return {a, a * r};
    }
    default: return {any(), any()};
  }
}

inline Numbers random_option_like(const Numbers& correct, ArithmeticRule rule, Rng& rng) {
  Numbers out(correct.size());
  for (auto& v : out) v = static_cast<int>(rng.uniform(kArithmeticMin, kArithmeticMax));
  // Sorted answers get sorted distractors so ordering alone never gives the answer away.
  if (rule == ArithmeticRule::sorting) std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline ArithmeticInstance sample_arithmetic_instance(ArithmeticRule rule, Rng& rng, int max_retries = kDefaultMaxRetries) {
  ArithmeticInstance inst;
  inst.rule = rule;

  bool ok = false;
  for (int attempt = 0; attempt < max_retries && !ok; ++attempt) {
    auto inputs = detail::propose_arithmetic_inputs(rule, rng);
    try {
      inst.correct = apply_arithmetic_rule(rule, inputs);
      inst.inputs = std::move(inputs);
      ok = true;
    } catch (const DomainError&) {
    }
  }
  if (!ok) throw ExhaustedError("arithmetic sampler exhausted for rule " + std::string(to_string(rule)));

  std::size_t filled = 0;
  for (int attempt = 0; attempt < max_retries && filled < 3; ++attempt) {
    auto candidate = detail::random_option_like(inst.correct, rule, rng);
    if (candidate == inst.correct) continue;
    if (std::find(inst.distractors.begin(), inst.distractors.begin() + static_cast<std::ptrdiff_t>(filled), candidate) !=
        inst.distractors.begin() + static_cast<std::ptrdiff_t>(filled))
      continue;
    inst.distractors[filled++] = std::move(candidate);
  }
  if (filled < 3) throw ExhaustedError("arithmetic distractor sampler exhausted");
  return inst;
}

/// Soundness, uniqueness and range checks. Throws ValidationError.
inline void check_arithmetic_instance(const ArithmeticInstance& inst) {
  Numbers expected;
  try {
    expected = apply_arithmetic_rule(inst.rule, inst.inputs);
  } catch (const DomainError& e) {
    throw ValidationError(std::string("arithmetic instance inputs invalid: ") + e.what());
  }
  if (expected != inst.correct) throw ValidationError("arithmetic instance: correct option does not follow from the rule");
  std::array<const Numbers*, 4> options{&inst.correct, &inst.distractors[0], &inst.distractors[1], &inst.distractors[2]};
  int matches = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i]->size() != expected.size()) throw ValidationError("arithmetic instance: option shape differs from answer");
    for (int v : *options[i])
      if (v < kArithmeticMin || v > kArithmeticMax) throw ValidationError("arithmetic instance: option value out of range");
    if (*options[i] == expected) ++matches;
    for (std::size_t j = 0; j < i; ++j)
      if (*options[i] == *options[j]) throw ValidationError("arithmetic instance: duplicate options");
  }
  if (matches != 1) throw ValidationError("arithmetic instance: answer is not unique");
}

inline std::string render_numbers(const Numbers& values, const LexiconPack& pack) {
  std::vector<std::string> parts;
  parts.reserve(values.size());
  for (int v : values) parts.push_back(std::to_string(v));
  return join(parts, pack.phrase("list_separator"));
}

inline std::string render_arithmetic_rule(ArithmeticRule rule, const LexiconPack& pack) { return pack.phrase(to_string(rule)); }

}  // namespace kfr

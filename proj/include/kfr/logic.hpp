#pragma once

// Propositional inference over "entity is category" statements.
//
// Rule schemas (X an entity, A/B/C categories, L/M literals about X):
//   implication_elimination   {L, L -> M}                          => M
//   conjunction_introduction  {X is A, X is B}                     => X is A and B
//   conjunction_elimination   {X is A and B}                       => X is A
//   disjunction_introduction  {X is A} with B fresh                => X is A or B
//   disjunction_elimination   {X is A or B, A -> M, B -> M}        => M
//   proof_by_contradiction    {L -> M, not M}                      => not L
// An implication is either an entity conditional ("Suppose X is A, then X is
// B") or a universal conditional ("Everything that is A is B") instantiated
// at X.
//
// The one-step closure of a premise set is the unique-answer oracle: an
// instance is emitted only if exactly one option lies in
// premises + closure(premises).

#include <algorithm>
#include <array>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kfr/core.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/rules.hpp"

namespace kfr {

inline constexpr std::size_t kLogicPremiseCount = 8;

enum class PropForm { affirmative, negative, conjunction, disjunction, conditional, universal };

/// `entity is category`, possibly negated.
struct Literal {
  int entity = -1;
  int category = -1;
  bool negated = false;

  Literal negate() const { return {entity, category, !negated}; }
  auto operator<=>(const Literal&) const = default;
};

struct Proposition {
  PropForm form{};
  int entity = -1;  // unused for universal
  int cat1 = -1;
  int cat2 = -1;      // conjunction, disjunction, conditional, universal
  bool neg1 = false;  // conditional antecedent
  bool neg2 = false;  // conditional consequent

  static Proposition atom(int e, int c) { return {PropForm::affirmative, e, c, -1, false, false}; }
  static Proposition negation(int e, int c) { return {PropForm::negative, e, c, -1, false, false}; }
  static Proposition conjunction(int e, int a, int b) { return {PropForm::conjunction, e, a, b, false, false}; }
  static Proposition disjunction(int e, int a, int b) { return {PropForm::disjunction, e, a, b, false, false}; }
  static Proposition universal(int a, int b) { return {PropForm::universal, -1, a, b, false, false}; }
  static Proposition conditional(int e, int a, bool neg_a, int b, bool neg_b) {
    return {PropForm::conditional, e, a, b, neg_a, neg_b};
  }
  static Proposition of(const Literal& l) { return l.negated ? negation(l.entity, l.category) : atom(l.entity, l.category); }

  bool is_literal() const { return form == PropForm::affirmative || form == PropForm::negative; }
  Literal literal() const { return {entity, cat1, form == PropForm::negative}; }

  auto operator<=>(const Proposition&) const = default;
};

using PropositionSet = std::set<Proposition>;

struct LogicInstance {
  std::vector<Proposition> premises;
  InferenceRule rule{};
  std::vector<int> used;  // indices into premises, in schema order
  Proposition correct;
  std::array<Proposition, 3> distractors;

  bool operator==(const LogicInstance&) const = default;
};

namespace detail {

struct Implication {
  Literal antecedent;
  Literal consequent;
};

// The implication a premise expresses about `entity`, if any.
inline std::optional<Implication> implication_for(const Proposition& p, int entity) {
  if (p.form == PropForm::conditional && p.entity == entity)
    return Implication{{entity, p.cat1, p.neg1}, {entity, p.cat2, p.neg2}};
  if (p.form == PropForm::universal) return Implication{{entity, p.cat1, false}, {entity, p.cat2, false}};
  return std::nullopt;
}

[[noreturn]] inline void schema_mismatch(InferenceRule rule, const char* why) {
  throw DomainError(std::string(to_string(rule)) + ": " + why);
}

}  // namespace detail

/// Applies `rule` to premises given in schema order. `fresh_category` is the
/// introduced disjunct for disjunction_introduction and ignored otherwise.
inline Proposition apply_inference_rule(InferenceRule rule, std::span<const Proposition> in, int fresh_category = -1) {
  auto arity = [&](std::size_t n) {
    if (in.size() != n) detail::schema_mismatch(rule, "wrong number of premises");
  };
  switch (rule) {
    case InferenceRule::implication_elimination: {
      arity(2);
      if (!in[0].is_literal()) detail::schema_mismatch(rule, "first premise must be a literal");
      const auto fact = in[0].literal();
      const auto impl = detail::implication_for(in[1], fact.entity);
      if (!impl || impl->antecedent != fact) detail::schema_mismatch(rule, "second premise is not an implication from the first");
      return Proposition::of(impl->consequent);
    }
    case InferenceRule::conjunction_introduction: {
      arity(2);
      if (in[0].form != PropForm::affirmative || in[1].form != PropForm::affirmative || in[0].entity != in[1].entity ||
          in[0].cat1 == in[1].cat1)
        detail::schema_mismatch(rule, "needs two distinct affirmative statements about one entity");
      return Proposition::conjunction(in[0].entity, in[0].cat1, in[1].cat1);
    }
    case InferenceRule::conjunction_elimination: {
      arity(1);
      if (in[0].form != PropForm::conjunction) detail::schema_mismatch(rule, "premise is not a conjunction");
      return Proposition::atom(in[0].entity, in[0].cat1);
    }
    case InferenceRule::disjunction_introduction: {
      arity(1);
      if (in[0].form != PropForm::affirmative) detail::schema_mismatch(rule, "premise is not affirmative");
      if (fresh_category < 0 || fresh_category == in[0].cat1) detail::schema_mismatch(rule, "needs a distinct fresh category");
      return Proposition::disjunction(in[0].entity, in[0].cat1, fresh_category);
    }
    case InferenceRule::disjunction_elimination: {
      arity(3);
      if (in[0].form != PropForm::disjunction) detail::schema_mismatch(rule, "first premise is not a disjunction");
      const int x = in[0].entity;
      const auto left = detail::implication_for(in[1], x);
      const auto right = detail::implication_for(in[2], x);
      if (!left || !right || left->antecedent != Literal{x, in[0].cat1, false} || right->antecedent != Literal{x, in[0].cat2, false} ||
          left->consequent != right->consequent)
        detail::schema_mismatch(rule, "implications do not cover both disjuncts with one conclusion");
      return Proposition::of(left->consequent);
    }
    case InferenceRule::proof_by_contradiction: {
      arity(2);
      if (!in[1].is_literal()) detail::schema_mismatch(rule, "second premise must be a literal");
      const auto fact = in[1].literal();
      const auto impl = detail::implication_for(in[0], fact.entity);
      if (!impl || impl->consequent.negate() != fact) detail::schema_mismatch(rule, "second premise does not contradict the consequent");
      return Proposition::of(impl->antecedent.negate());
    }
  }
  detail::schema_mismatch(rule, "unknown rule");
}

/// Categories mentioned by a set of propositions, sorted and unique.
inline std::vector<int> categories_of(std::span<const Proposition> props) {
  std::set<int> out;
  for (const auto& p : props) {
    if (p.cat1 >= 0) out.insert(p.cat1);
    if (p.cat2 >= 0) out.insert(p.cat2);
  }
  return {out.begin(), out.end()};
}

/// All conclusions reachable by one application of any rule to premises.
/// Disjunction introduction draws its new disjunct from the premises'
/// categories plus `extra_categories` (typically the option categories).
inline PropositionSet one_step_closure(std::span<const Proposition> premises, std::span<const int> extra_categories = {}) {
  PropositionSet out;

  std::set<int> scope;
  std::set<int> entities;
  std::vector<Literal> facts;
  for (const auto& p : premises) {
    if (p.cat1 >= 0) scope.insert(p.cat1);
    if (p.cat2 >= 0) scope.insert(p.cat2);
    if (p.entity >= 0) entities.insert(p.entity);
    if (p.is_literal()) facts.push_back(p.literal());
  }
  scope.insert(extra_categories.begin(), extra_categories.end());

  std::vector<detail::Implication> implications;
  for (const auto& p : premises) {
    if (p.form == PropForm::conditional) {
      implications.push_back(*detail::implication_for(p, p.entity));
    } else if (p.form == PropForm::universal) {
      for (int e : entities) implications.push_back(*detail::implication_for(p, e));
    }
  }

  for (const auto& f : facts) {
    for (const auto& impl : implications) {
      if (impl.antecedent == f) out.insert(Proposition::of(impl.consequent));          // implication elimination
      if (impl.consequent.negate() == f) out.insert(Proposition::of(impl.antecedent.negate()));  // proof by contradiction
    }
    if (!f.negated) {
      for (const auto& g : facts)
        if (!g.negated && g.entity == f.entity && g.category != f.category)
          out.insert(Proposition::conjunction(f.entity, f.category, g.category));
      for (int c : scope)
        if (c != f.category) {
          out.insert(Proposition::disjunction(f.entity, f.category, c));
          out.insert(Proposition::disjunction(f.entity, c, f.category));
        }
    }
  }

  for (const auto& p : premises) {
    if (p.form == PropForm::conjunction) {
      out.insert(Proposition::atom(p.entity, p.cat1));
      out.insert(Proposition::atom(p.entity, p.cat2));
    } else if (p.form == PropForm::disjunction) {
      const Literal left{p.entity, p.cat1, false};
      const Literal right{p.entity, p.cat2, false};
      for (const auto& a : implications)
        if (a.antecedent == left)
          for (const auto& b : implications)
            if (b.antecedent == right && b.consequent == a.consequent) out.insert(Proposition::of(a.consequent));
    }
  }
  return out;
}

/// Throws ValidationError unless the instance is sound, its answer is the
/// only option in premises + closure, and the answer depends on `used`.
inline void check_logic_instance(const LogicInstance& inst) {
  if (inst.premises.size() != kLogicPremiseCount) throw ValidationError("logic instance must have exactly 8 premises");
  std::vector<Proposition> used;
  for (int i : inst.used) {
    if (i < 0 || static_cast<std::size_t>(i) >= inst.premises.size()) throw ValidationError("logic instance: used index out of range");
    used.push_back(inst.premises[static_cast<std::size_t>(i)]);
  }
  const int fresh = inst.rule == InferenceRule::disjunction_introduction ? inst.correct.cat2 : -1;
  Proposition derived;
  try {
    derived = apply_inference_rule(inst.rule, used, fresh);
  } catch (const DomainError& e) {
    throw ValidationError(std::string("logic instance: ") + e.what());
  }
  if (derived != inst.correct) throw ValidationError("logic instance: correct option does not follow from the used premises");

  const std::array<Proposition, 4> options{inst.correct, inst.distractors[0], inst.distractors[1], inst.distractors[2]};
  const auto option_cats = categories_of(options);
  const auto closure = one_step_closure(inst.premises, option_cats);
  int derivable = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (options[i] == options[j]) throw ValidationError("logic instance: duplicate options");
    const bool in_premises = std::find(inst.premises.begin(), inst.premises.end(), options[i]) != inst.premises.end();
    if (in_premises || closure.contains(options[i])) {
      if (i != 0) throw ValidationError("logic instance: a distractor is derivable");
      ++derivable;
    }
  }
  if (derivable != 1) throw ValidationError("logic instance: correct option is not derivable");

  std::vector<Proposition> rest;
  for (std::size_t i = 0; i < inst.premises.size(); ++i)
    if (std::find(inst.used.begin(), inst.used.end(), static_cast<int>(i)) == inst.used.end()) rest.push_back(inst.premises[i]);
  if (std::find(rest.begin(), rest.end(), inst.correct) != rest.end() || one_step_closure(rest, option_cats).contains(inst.correct))
    throw ValidationError("logic instance: answer is derivable without the used premises");
}

namespace detail {

// Picks `k` distinct values from `pool`, falling back to the whole range
// [0, total) when the pool is too small.
inline std::vector<int> pick_distinct(const std::vector<int>& pool, std::size_t k, std::size_t total, Rng& rng) {
  std::vector<int> out;
  if (pool.size() >= k) {
    for (auto i : rng.distinct_indices(pool.size(), k)) out.push_back(pool[i]);
  } else {
    for (auto i : rng.distinct_indices(total, k)) out.push_back(static_cast<int>(i));
  }
  return out;
}

inline std::vector<int> all_except(std::size_t total, const std::vector<int>& excluded) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(total); ++i)
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) out.push_back(i);
  return out;
}

inline Proposition random_implication(int x, int a, int b, Rng& rng) {
  return rng.bernoulli(0.5) ? Proposition::universal(a, b) : Proposition::conditional(x, a, false, b, false);
}

inline Proposition random_filler(int e, int a, int b, Rng& rng) {
  switch (rng.index(6)) {
    case 0: return Proposition::atom(e, a);
    case 1: return Proposition::negation(e, a);
    case 2: return Proposition::conjunction(e, a, b);
    case 3: return Proposition::disjunction(e, a, b);
    case 4: return Proposition::universal(a, b);
    default: return Proposition::conditional(e, a, rng.bernoulli(0.25), b, rng.bernoulli(0.25));
  }
}

// A proposition with the same form as `shape`, over the given entity/categories.
inline Proposition reshape(const Proposition& shape, int e, int a, int b) {
  Proposition p = shape;
  p.entity = shape.form == PropForm::universal ? -1 : e;
  p.cat1 = a;
  p.cat2 = shape.cat2 >= 0 ? b : -1;
  return p;
}

}  // namespace detail

/// Samples an 8-premise instance for `rule`. Needs at least 4 entities and
/// 8 categories in the pack.
inline LogicInstance sample_logic_instance(InferenceRule rule, const LexiconPack& pack, Rng& rng, int max_retries = kDefaultMaxRetries) {
  const std::size_t n_entities = pack.entities.size();
  const std::size_t n_categories = pack.categories.size();
  if (n_entities < 4 || n_categories < 8) throw DomainError("logic generation needs >= 4 entities and >= 8 categories");

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const int x = static_cast<int>(rng.index(n_entities));
    const auto cats = rng.distinct_indices(n_categories, 3);
    const int a = static_cast<int>(cats[0]);
    const int b = static_cast<int>(cats[1]);
    const int c = static_cast<int>(cats[2]);

    std::vector<Proposition> required;
    switch (rule) {
      case InferenceRule::implication_elimination:
        required = {Proposition::atom(x, a), detail::random_implication(x, a, b, rng)};
        break;
      case InferenceRule::conjunction_introduction: required = {Proposition::atom(x, a), Proposition::atom(x, b)}; break;
      case InferenceRule::conjunction_elimination: required = {Proposition::conjunction(x, a, b)}; break;
      case InferenceRule::disjunction_introduction: required = {Proposition::atom(x, a)}; break;
      case InferenceRule::disjunction_elimination:
        required = {Proposition::disjunction(x, a, b), detail::random_implication(x, a, c, rng), detail::random_implication(x, b, c, rng)};
        break;
      case InferenceRule::proof_by_contradiction:
        required = {detail::random_implication(x, a, b, rng), Proposition::negation(x, b)};
        break;
    }

    const auto rule_cats = categories_of(required);
    const auto filler_entities = detail::all_except(n_entities, {x});
    const auto filler_cats = detail::all_except(n_categories, rule_cats);
    std::vector<Proposition> premises = required;
    while (premises.size() < kLogicPremiseCount) {
      const int e = filler_entities[rng.index(filler_entities.size())];
      const auto fc = detail::pick_distinct(filler_cats, 2, n_categories, rng);
      auto p = detail::random_filler(e, fc[0], fc[1], rng);
      if (std::find(premises.begin(), premises.end(), p) == premises.end()) premises.push_back(p);
    }

    // Shuffle while tracking where the required premises land.
    std::vector<int> order(premises.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(std::span<int>(order));
    LogicInstance inst;
    inst.rule = rule;
    inst.premises.resize(premises.size());
    std::vector<int> where(premises.size());
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
      inst.premises[slot] = premises[static_cast<std::size_t>(order[slot])];
      where[static_cast<std::size_t>(order[slot])] = static_cast<int>(slot);
    }
    for (std::size_t i = 0; i < required.size(); ++i) inst.used.push_back(where[i]);

    int fresh = -1;
    if (rule == InferenceRule::disjunction_introduction) {
      const auto unused = detail::all_except(n_categories, categories_of(inst.premises));
      fresh = unused.empty() ? b : unused[rng.index(unused.size())];
    }
    inst.correct = apply_inference_rule(rule, required, fresh);

    // Distractors: slot 0 recombines premise entities/categories, slot 1 is
    // fresh random, slot 2 either.
    std::vector<int> premise_entities;
    for (const auto& p : inst.premises)
      if (p.entity >= 0 && std::find(premise_entities.begin(), premise_entities.end(), p.entity) == premise_entities.end())
        premise_entities.push_back(p.entity);
    const auto premise_cats = categories_of(inst.premises);

    bool filled = true;
    for (std::size_t slot = 0; slot < 3 && filled; ++slot) {
      const bool recombine = slot == 0 || (slot == 2 && rng.bernoulli(0.5));
      bool placed = false;
      for (int tries = 0; tries < 64 && !placed; ++tries) {
        Proposition cand;
        if (recombine) {
          const auto pc = detail::pick_distinct(premise_cats, 2, n_categories, rng);
          cand = detail::reshape(inst.correct, premise_entities[rng.index(premise_entities.size())], pc[0], pc[1]);
        } else {
          const auto rc = rng.distinct_indices(n_categories, 2);
          cand = detail::reshape(inst.correct, static_cast<int>(rng.index(n_entities)), static_cast<int>(rc[0]), static_cast<int>(rc[1]));
        }
        if (cand == inst.correct) continue;
        if (std::find(inst.distractors.begin(), inst.distractors.begin() + static_cast<std::ptrdiff_t>(slot), cand) !=
            inst.distractors.begin() + static_cast<std::ptrdiff_t>(slot))
          continue;
        if (std::find(inst.premises.begin(), inst.premises.end(), cand) != inst.premises.end()) continue;
        const std::array<Proposition, 1> one{cand};
        if (one_step_closure(inst.premises, categories_of(one)).contains(cand)) continue;
        inst.distractors[slot] = cand;
        placed = true;
      }
      filled = placed;
    }
    if (!filled) continue;

    try {
      check_logic_instance(inst);
    } catch (const ValidationError&) {
      continue;
    }
    return inst;
  }
  throw ExhaustedError("logic sampler exhausted for rule " + std::string(to_string(rule)));
}

namespace detail {

inline std::string render_clause(const Literal& l, const LexiconPack& pack) {
  return fill_template(pack.proposition_template(l.negated ? "negative" : "affirmative"),
                       {{"entity", pack.entities.at(static_cast<std::size_t>(l.entity))},
                        {"category", pack.categories.at(static_cast<std::size_t>(l.category))}});
}

}  // namespace detail

inline std::string render_proposition(const Proposition& p, const LexiconPack& pack) {
  auto cat = [&](int i) { return pack.categories.at(static_cast<std::size_t>(i)); };
  std::string body;
  switch (p.form) {
    case PropForm::affirmative:
    case PropForm::negative: body = detail::render_clause(p.literal(), pack); break;
    case PropForm::conjunction:
    case PropForm::disjunction:
      body = fill_template(pack.proposition_template(p.form == PropForm::conjunction ? "conjunction" : "disjunction"),
                           {{"entity", pack.entities.at(static_cast<std::size_t>(p.entity))}, {"category", cat(p.cat1)}, {"category2", cat(p.cat2)}});
      break;
    case PropForm::universal:
      body = fill_template(pack.proposition_template("universal"), {{"category", cat(p.cat1)}, {"category2", cat(p.cat2)}});
      break;
    case PropForm::conditional:
      body = fill_template(pack.proposition_template("conditional"),
                           {{"antecedent", detail::render_clause({p.entity, p.cat1, p.neg1}, pack)},
                            {"consequent", detail::render_clause({p.entity, p.cat2, p.neg2}, pack)}});
      break;
  }
  return fill_template(pack.proposition_template("sentence"), {{"text", body}});
}

inline std::string render_premises(std::span<const Proposition> premises, const LexiconPack& pack) {
  std::vector<std::string> parts;
  for (const auto& p : premises) parts.push_back(render_proposition(p, pack));
  return join(parts, pack.phrase("sentence_separator"));
}

}  // namespace kfr

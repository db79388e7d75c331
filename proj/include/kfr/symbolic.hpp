#pragma once

// Symbolic word-list transformations. Words are lexicon indices, so one
// instance renders into every aligned language.
//
// Ops (positions are 1-based):
//   repetition(k)       duplicate the word at k in place     [a,b] -> [a,b,b] for k=2
//   addition(k, w)      insert lexicon word w at position k  (k may be |list| + 1)
//   deletion(k)         remove the word at k
//   reordering(i, j)    swap the words at i and j

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kfr/core.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/rules.hpp"

namespace kfr {

using WordList = std::vector<int>;

inline constexpr int kMinSymbolicWords = 3;
inline constexpr int kMaxSymbolicWords = 5;
inline constexpr int kMaxSymbolicSteps = 3;

struct SymbolicOp {
  SymbolicOpKind kind{};
  int pos = 1;
  int pos2 = 0;  // reordering only
  int word = -1; // addition only

  static SymbolicOp repetition(int k) { return {SymbolicOpKind::repetition, k, 0, -1}; }
  static SymbolicOp addition(int k, int word) { return {SymbolicOpKind::addition, k, 0, word}; }
  static SymbolicOp deletion(int k) { return {SymbolicOpKind::deletion, k, 0, -1}; }
  static SymbolicOp reordering(int i, int j) { return {SymbolicOpKind::reordering, i, j, -1}; }

  auto operator<=>(const SymbolicOp&) const = default;
};

class SymbolicProgram {
 public:
  explicit SymbolicProgram(std::vector<SymbolicOp> ops) : ops_(std::move(ops)) {
    if (ops_.empty() || ops_.size() > static_cast<std::size_t>(kMaxSymbolicSteps))
      throw ValidationError("symbolic program must have 1 to 3 ops, got " + std::to_string(ops_.size()));
  }

  const std::vector<SymbolicOp>& ops() const noexcept { return ops_; }
  std::size_t size() const noexcept { return ops_.size(); }

  auto operator<=>(const SymbolicProgram&) const = default;

 private:
  std::vector<SymbolicOp> ops_;
};

struct SymbolicInstance {
  WordList words;
  SymbolicProgram program{{SymbolicOp::repetition(1)}};
  WordList correct;
  std::array<WordList, 3> distractors;

  bool operator==(const SymbolicInstance&) const = default;
};

inline WordList apply_symbolic_op(const SymbolicOp& op, WordList words) {
  const int n = static_cast<int>(words.size());
  auto check = [&](int k, int hi, const char* what) {
    if (k < 1 || k > hi)
      throw DomainError(std::string(what) + " position " + std::to_string(k) + " out of range for " + std::to_string(n) + " words");
  };
  switch (op.kind) {
    case SymbolicOpKind::repetition:
      check(op.pos, n, "repetition");
      words.insert(words.begin() + op.pos, words[static_cast<std::size_t>(op.pos - 1)]);
      break;
    case SymbolicOpKind::addition:
      check(op.pos, n + 1, "addition");
      if (op.word < 0) throw DomainError("addition: no word given");
      words.insert(words.begin() + (op.pos - 1), op.word);
      break;
    case SymbolicOpKind::deletion:
      check(op.pos, n, "deletion");
      words.erase(words.begin() + (op.pos - 1));
      break;
    case SymbolicOpKind::reordering:
      check(op.pos, n, "reordering");
      check(op.pos2, n, "reordering");
      std::swap(words[static_cast<std::size_t>(op.pos - 1)], words[static_cast<std::size_t>(op.pos2 - 1)]);
      break;
  }
  return words;
}

inline WordList apply_symbolic_program(const SymbolicProgram& program, WordList words) {
  for (const auto& op : program.ops()) words = apply_symbolic_op(op, std::move(words));
  return words;
}

namespace detail {

inline SymbolicOp random_symbolic_op(SymbolicOpKind kind, const WordList& current, std::size_t vocab, Rng& rng) {
  const int n = static_cast<int>(current.size());
  switch (kind) {
    case SymbolicOpKind::repetition: return SymbolicOp::repetition(static_cast<int>(rng.uniform(1, n)));
    case SymbolicOpKind::addition: {
      // Prefer a word not already present so the insertion is visible.
      int word = static_cast<int>(rng.index(vocab));
      for (int tries = 0; tries < 16 && std::find(current.begin(), current.end(), word) != current.end(); ++tries)
        word = static_cast<int>(rng.index(vocab));
      return SymbolicOp::addition(static_cast<int>(rng.uniform(1, n + 1)), word);
    }
    case SymbolicOpKind::deletion: return SymbolicOp::deletion(static_cast<int>(rng.uniform(1, n)));
    case SymbolicOpKind::reordering: {
      if (n < 2) throw DomainError("reordering needs two words");
      const auto picks = rng.distinct_indices(static_cast<std::size_t>(n), 2);
      return SymbolicOp::reordering(static_cast<int>(picks[0]) + 1, static_cast<int>(picks[1]) + 1);
    }
  }
  throw DomainError("unknown symbolic op");
}

inline WordList random_word_list(std::size_t length, std::size_t vocab, Rng& rng) {
  WordList out;
  if (vocab >= length) {
    for (auto i : rng.distinct_indices(vocab, length)) out.push_back(static_cast<int>(i));
  } else {
    for (std::size_t i = 0; i < length; ++i) out.push_back(static_cast<int>(rng.index(vocab)));
  }
  return out;
}

// Replaces 1-2 positions of `correct` with words absent from it.
inline std::optional<WordList> substitution_variant(const WordList& correct, std::size_t vocab, Rng& rng) {
  std::vector<int> fresh;
  for (int w = 0; w < static_cast<int>(vocab); ++w)
    if (std::find(correct.begin(), correct.end(), w) == correct.end()) fresh.push_back(w);
  if (fresh.empty()) return std::nullopt;
  const std::size_t k = std::min<std::size_t>(correct.size(), static_cast<std::size_t>(rng.uniform(1, 2)));
  WordList out = correct;
  for (auto pos : rng.distinct_indices(correct.size(), k)) out[pos] = fresh[rng.index(fresh.size())];
  return out;
}

}  // namespace detail

/// `single_kind` pins the op kind of a one-step program (used for per-op
/// balance of one-step items); it is ignored for longer programs.
inline SymbolicInstance sample_symbolic_instance(int step_count, const LexiconPack& pack, Rng& rng,
                                                 std::optional<SymbolicOpKind> single_kind = std::nullopt,
                                                 int max_retries = kDefaultMaxRetries) {
  if (step_count < 1 || step_count > kMaxSymbolicSteps) throw DomainError("step_count must be 1, 2 or 3");
  const std::size_t vocab = pack.words.size();
  if (vocab == 0) throw DomainError("pack has no words");

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const auto n = static_cast<std::size_t>(rng.uniform(kMinSymbolicWords, kMaxSymbolicWords));
    WordList words = detail::random_word_list(n, vocab, rng);

    std::vector<SymbolicOp> ops;
    WordList current = words;
    bool valid = true;
    for (int step = 0; step < step_count && valid; ++step) {
      const auto kind = (step_count == 1 && single_kind) ? *single_kind : kAllSymbolicOps[rng.index(kAllSymbolicOps.size())];
      try {
        ops.push_back(detail::random_symbolic_op(kind, current, vocab, rng));
        current = apply_symbolic_op(ops.back(), std::move(current));
      } catch (const DomainError&) {
        valid = false;
      }
      if (current.empty()) valid = false;
    }
    if (!valid) continue;

    SymbolicInstance inst{words, SymbolicProgram(std::move(ops)), current, {}};

    // Slot 0: fully random; slot 1: substitution; slot 2: either.
    bool filled = true;
    for (std::size_t slot = 0; slot < 3 && filled; ++slot) {
      const bool substitute = slot == 1 || (slot == 2 && rng.bernoulli(0.5));
      bool placed = false;
      for (int tries = 0; tries < max_retries && !placed; ++tries) {
        std::optional<WordList> cand = substitute ? detail::substitution_variant(inst.correct, vocab, rng)
                                                  : std::optional<WordList>(detail::random_word_list(inst.correct.size(), vocab, rng));
        if (!cand) break;
        if (*cand == inst.correct) continue;
        if (std::find(inst.distractors.begin(), inst.distractors.begin() + static_cast<std::ptrdiff_t>(slot), *cand) !=
            inst.distractors.begin() + static_cast<std::ptrdiff_t>(slot))
          continue;
        inst.distractors[slot] = std::move(*cand);
        placed = true;
      }
      filled = placed;
    }
    if (filled) return inst;
  }
  throw ExhaustedError("symbolic sampler exhausted for step_count " + std::to_string(step_count));
}

/// Soundness, consistent length and uniqueness. Throws ValidationError.
inline void check_symbolic_instance(const SymbolicInstance& inst) {
  if (inst.words.size() < static_cast<std::size_t>(kMinSymbolicWords) || inst.words.size() > static_cast<std::size_t>(kMaxSymbolicWords))
    throw ValidationError("symbolic instance: input must have 3-5 words");
  WordList expected;
  try {
    expected = apply_symbolic_program(inst.program, inst.words);
  } catch (const DomainError& e) {
    throw ValidationError(std::string("symbolic instance: program invalid: ") + e.what());
  }
  if (expected.empty()) throw ValidationError("symbolic instance: program empties the list");
  if (expected != inst.correct) throw ValidationError("symbolic instance: correct option does not follow from the program");
  std::array<const WordList*, 4> options{&inst.correct, &inst.distractors[0], &inst.distractors[1], &inst.distractors[2]};
  int matches = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i]->size() != expected.size()) throw ValidationError("symbolic instance: option lengths differ");
    if (*options[i] == expected) ++matches;
    for (std::size_t j = 0; j < i; ++j)
      if (*options[i] == *options[j]) throw ValidationError("symbolic instance: duplicate options");
  }
  if (matches != 1) throw ValidationError("symbolic instance: answer is not unique");
}

inline std::string render_symbolic_op(const SymbolicOp& op, const LexiconPack& pack) {
  const auto& tmpl = pack.phrase(to_string(op.kind));
  switch (op.kind) {
    case SymbolicOpKind::repetition:
    case SymbolicOpKind::deletion: return fill_template(tmpl, {{"pos", pack.ordinal(op.pos)}});
    case SymbolicOpKind::addition:
      return fill_template(tmpl, {{"pos", pack.ordinal(op.pos)}, {"word", pack.words.at(static_cast<std::size_t>(op.word))}});
    case SymbolicOpKind::reordering:
      return fill_template(tmpl, {{"pos1", pack.ordinal(op.pos)}, {"pos2", pack.ordinal(op.pos2)}});
  }
  return {};
}

inline std::string render_symbolic_rule(const SymbolicProgram& program, const LexiconPack& pack) {
  std::vector<std::string> parts;
  for (const auto& op : program.ops()) parts.push_back(render_symbolic_op(op, pack));
  return join(parts, pack.phrase("step_separator"));
}

inline std::string render_words(const WordList& words, const LexiconPack& pack) {
  std::vector<std::string> parts;
  for (int w : words) parts.push_back(pack.words.at(static_cast<std::size_t>(w)));
  return join(parts, pack.phrase("list_separator"));
}

}  // namespace kfr

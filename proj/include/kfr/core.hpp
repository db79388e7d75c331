#pragma once

// Shared plumbing: error types, the portable random stream, stable hashing
// and the slot-template filler used by every renderer.

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kfr {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON, JSONL, config).
struct ParseError : Error {
  using Error::Error;
};

// A well-formed object violates a documented invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Inputs outside the domain of a rule or op (arity, range, divisibility).
struct DomainError : Error {
  using Error::Error;
};

// A rejection sampler ran out of retries.
struct ExhaustedError : Error {
  using Error::Error;
};

// Parallel data (packs, result sets, dumps) does not line up.
struct AlignmentError : Error {
  using Error::Error;
};

// Binary dump layout problems.
struct FormatError : Error {
  using Error::Error;
};

inline constexpr int kDefaultMaxRetries = 1000;

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

/// Derives an independent stream seed from a base seed and a tag.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
  return splitmix64(splitmix64(base) ^ splitmix64(tag + 0x632BE59BD9B4E019ull));
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

/// Seeded random stream.
///
/// mt19937_64's output sequence is fixed by the standard, but the standard
/// distributions are not, so the integer and real mappings are done here to
/// keep generated datasets identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw DomainError("Rng::uniform: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo);
    if (span == std::numeric_limits<std::uint64_t>::max()) return lo + static_cast<std::int64_t>(next_u64());
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
  }

  std::size_t index(std::size_t n) {
    if (n == 0) throw DomainError("Rng::index: empty range");
    return static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(n) - 1));
  }

  /// Uniform real in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  /// k distinct indices from [0, n), in sampling order.
  std::vector<std::size_t> distinct_indices(std::size_t n, std::size_t k) {
    if (k > n) throw DomainError("Rng::distinct_indices: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + index(n - i)]);
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Slot templates
// ---------------------------------------------------------------------------

/// Names of all `{slot}` occurrences in a template, in order of appearance.
inline std::vector<std::string> template_slots(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string_view::npos) {
    const auto close = tmpl.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    out.emplace_back(tmpl.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

/// Replaces every `{name}` with its value. Unknown slots are an error.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto name = tmpl.substr(open + 1, close - open - 1);
    const auto it = values.find(name);
    if (it == values.end()) throw ValidationError("template slot {" + std::string(name) + "} has no value");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

inline std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace kfr

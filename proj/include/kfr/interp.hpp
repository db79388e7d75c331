#pragma once

// Cross-lingual computational similarity over last-token activation dumps.
//
// CS(x)  = sum_n sum_{a != b} cos(h_n^a(x), h_n^b(x)) / (|L| (|L|-1) N)
// NAO(x) = |L| * |intersection_l S^l(x)| / sum_l |S^l(x)|
//
// h_n^a(x) is the output of transformer block n (1..N) for sample x in
// language a. S^l(x) is the set of FFN neurons (layer, index) whose absolute
// activation strictly exceeds the threshold; overall NAO pools neurons over
// all layers, layer-wise NAO restricts to one layer. Reported scores average
// the per-sample values; samples where every S^l is empty are skipped and
// counted.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kfr/core.hpp"
#include "kfr/lexicon.hpp"
#include "kfr/stats.hpp"

namespace kfr {

inline constexpr std::size_t kDefaultInterpSamples = 100;
inline constexpr double kDefaultLayerThreshold = 0.4;

inline std::vector<double> default_thresholds() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

struct DumpInfo {
  std::string model_id;
  LanguageTag language;
  std::string prompt_checksum;
  std::string extraction_timestamp;

  bool operator==(const DumpInfo&) const = default;
};

struct ActivationSample {
  std::uint64_t id = 0;
  std::vector<float> hidden;  // n_layers x hidden_dim, layer-major
  std::vector<float> ffn;     // n_layers x ffn_dim, layer-major

  bool operator==(const ActivationSample&) const = default;
};

/// Last-token hidden states and FFN activations for one (model, language).
class ActivationDump {
 public:
  ActivationDump() = default;
  ActivationDump(DumpInfo info, std::uint32_t n_layers, std::uint32_t hidden_dim, std::uint32_t ffn_dim)
      : info_(std::move(info)), n_layers_(n_layers), hidden_dim_(hidden_dim), ffn_dim_(ffn_dim) {
    if (n_layers == 0 || hidden_dim == 0 || ffn_dim == 0) throw ValidationError("dump dimensions must be positive");
  }

  void add_sample(std::uint64_t id, std::vector<float> hidden, std::vector<float> ffn) {
    if (hidden.size() != std::size_t{n_layers_} * hidden_dim_ || ffn.size() != std::size_t{n_layers_} * ffn_dim_)
      throw ValidationError("sample " + std::to_string(id) + " has inconsistent dimensions");
    for (float v : hidden)
      if (!std::isfinite(v)) throw ValidationError("sample " + std::to_string(id) + " has a non-finite hidden value");
    for (float v : ffn)
      if (!std::isfinite(v)) throw ValidationError("sample " + std::to_string(id) + " has a non-finite ffn value");
    if (!index_.emplace(id, samples_.size()).second) throw ValidationError("duplicate sample id " + std::to_string(id));
    samples_.push_back({id, std::move(hidden), std::move(ffn)});
  }

  const DumpInfo& info() const noexcept { return info_; }
  DumpInfo& info() noexcept { return info_; }
  const LanguageTag& language() const noexcept { return info_.language; }
  std::uint32_t n_layers() const noexcept { return n_layers_; }
  std::uint32_t hidden_dim() const noexcept { return hidden_dim_; }
  std::uint32_t ffn_dim() const noexcept { return ffn_dim_; }
  const std::vector<ActivationSample>& samples() const noexcept { return samples_; }

  const ActivationSample& sample(std::uint64_t id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw AlignmentError("sample " + std::to_string(id) + " missing from dump for '" + info_.language.code() + "'");
    return samples_[it->second];
  }
  bool contains(std::uint64_t id) const { return index_.contains(id); }

  /// Layer is 1-based.
  std::span<const float> hidden(std::uint64_t id, std::uint32_t layer) const {
    return slice(sample(id).hidden, layer, hidden_dim_);
  }
  std::span<const float> ffn(std::uint64_t id, std::uint32_t layer) const { return slice(sample(id).ffn, layer, ffn_dim_); }

  bool operator==(const ActivationDump& o) const {
    return info_ == o.info_ && n_layers_ == o.n_layers_ && hidden_dim_ == o.hidden_dim_ && ffn_dim_ == o.ffn_dim_ && samples_ == o.samples_;
  }

 private:
  std::span<const float> slice(const std::vector<float>& v, std::uint32_t layer, std::uint32_t dim) const {
    if (layer < 1 || layer > n_layers_) throw DomainError("layer " + std::to_string(layer) + " outside 1.." + std::to_string(n_layers_));
    return std::span<const float>(v).subspan(std::size_t{layer - 1} * dim, dim);
  }

  DumpInfo info_;
  std::uint32_t n_layers_ = 0;
  std::uint32_t hidden_dim_ = 0;
  std::uint32_t ffn_dim_ = 0;
  std::vector<ActivationSample> samples_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

using DumpSet = std::map<LanguageTag, ActivationDump>;

struct NeuronRef {
  std::uint32_t layer = 1;  // 1-based
  std::uint32_t index = 1;  // 1-based
  auto operator<=>(const NeuronRef&) const = default;
};

namespace detail {

inline void check_dump_set(const DumpSet& dumps, bool hidden, bool ffn) {
  if (dumps.size() < 2) throw DomainError("cross-lingual metrics need at least 2 languages");
  const auto& ref = dumps.begin()->second;
  for (const auto& [lang, d] : dumps) {
    if (d.n_layers() != ref.n_layers() || (hidden && d.hidden_dim() != ref.hidden_dim()) || (ffn && d.ffn_dim() != ref.ffn_dim()))
      throw AlignmentError("dump for '" + lang.code() + "' has different dimensions from '" + dumps.begin()->first.code() + "'");
  }
}

struct LayerNorms {
  std::vector<std::span<const float>> vectors;  // one per language
  std::vector<double> norms;
};

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

// Mean pairwise cosine at one layer, over unordered language pairs (equal to
// the ordered-pair mean since cosine is symmetric).
inline double layer_cs(const DumpSet& dumps, std::uint64_t id, std::uint32_t layer) {
  std::vector<std::span<const float>> vs;
  std::vector<double> norms;
  vs.reserve(dumps.size());
  for (const auto& [lang, d] : dumps) {
    vs.push_back(d.hidden(id, layer));
    const double n = std::sqrt(dot(vs.back(), vs.back()));
    if (n == 0.0) throw DomainError("zero-norm hidden state: sample " + std::to_string(id) + ", layer " + std::to_string(layer) + ", '" + lang.code() + "'");
    norms.push_back(n);
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < vs.size(); ++a)
    for (std::size_t b = a + 1; b < vs.size(); ++b, ++pairs) sum += dot(vs[a], vs[b]) / (norms[a] * norms[b]);
  return sum / static_cast<double>(pairs);
}

}  // namespace detail

/// CS for one sample, averaged over all layers and language pairs.
inline double cs(const DumpSet& dumps, std::uint64_t sample_id) {
  detail::check_dump_set(dumps, true, false);
  const auto n = dumps.begin()->second.n_layers();
  double sum = 0.0;
  for (std::uint32_t layer = 1; layer <= n; ++layer) sum += detail::layer_cs(dumps, sample_id, layer);
  return sum / static_cast<double>(n);
}

/// Per-layer CS averaged over samples; entry n-1 is layer n.
inline std::vector<double> cs_per_layer(const DumpSet& dumps, std::span<const std::uint64_t> sample_ids) {
  detail::check_dump_set(dumps, true, false);
  if (sample_ids.empty()) throw DomainError("no samples");
  const auto n = dumps.begin()->second.n_layers();
  std::vector<double> out(n, 0.0);
  for (auto id : sample_ids)
    for (std::uint32_t layer = 1; layer <= n; ++layer) out[layer - 1] += detail::layer_cs(dumps, id, layer);
  for (auto& v : out) v /= static_cast<double>(sample_ids.size());
  return out;
}

inline double cs_mean(const DumpSet& dumps, std::span<const std::uint64_t> sample_ids) {
  if (sample_ids.empty()) throw DomainError("no samples");
  double sum = 0.0;
  for (auto id : sample_ids) sum += cs(dumps, id);
  return sum / static_cast<double>(sample_ids.size());
}

/// Neurons of one layer whose |activation| > threshold.
inline std::vector<NeuronRef> activated_set(const ActivationDump& dump, std::uint64_t sample_id, std::uint32_t layer, double threshold) {
  if (!(threshold > 0.0)) throw DomainError("activation threshold must be positive");
  const auto values = dump.ffn(sample_id, layer);
  std::vector<NeuronRef> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::fabs(static_cast<double>(values[i])) > threshold) out.push_back({layer, static_cast<std::uint32_t>(i + 1)});
  return out;
}

/// Layer scope for NAO: nullopt pools all layers.
using LayerScope = std::optional<std::uint32_t>;

/// NAO for one sample, or nullopt when every activated set is empty.
inline std::optional<double> try_nao(const DumpSet& dumps, std::uint64_t sample_id, double threshold, LayerScope scope = std::nullopt) {
  detail::check_dump_set(dumps, false, true);
  if (!(threshold > 0.0)) throw DomainError("activation threshold must be positive");
  const auto& ref = dumps.begin()->second;
  const std::uint32_t first = scope ? *scope : 1;
  const std::uint32_t last = scope ? *scope : ref.n_layers();
  const auto n_langs = dumps.size();

  // Count, per neuron, how many languages activate it: the intersection is
  // the neurons every language activates, and the total of the per-language
  // set sizes is the sum of the counts.
  std::size_t intersection = 0;
  std::size_t total = 0;
  std::vector<std::span<const float>> rows(n_langs);
  for (std::uint32_t layer = first; layer <= last; ++layer) {
    std::size_t l = 0;
    for (const auto& [lang, d] : dumps) rows[l++] = d.ffn(sample_id, layer);
    for (std::size_t i = 0; i < ref.ffn_dim(); ++i) {
      std::size_t count = 0;
      for (const auto& row : rows) count += std::fabs(static_cast<double>(row[i])) > threshold ? 1 : 0;
      total += count;
      intersection += count == n_langs ? 1 : 0;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(n_langs * intersection) / static_cast<double>(total);
}

inline double nao(const DumpSet& dumps, std::uint64_t sample_id, double threshold, LayerScope scope = std::nullopt) {
  const auto v = try_nao(dumps, sample_id, threshold, scope);
  if (!v) throw DomainError("NAO undefined for sample " + std::to_string(sample_id) + ": no neuron is activated in any language");
  return *v;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Metric { cs, nao };
enum class Scope { overall, per_layer };

struct SimilarityReport {
  Metric metric{};
  Scope scope{};
  std::optional<double> threshold;
  /// One value for overall reports, N for per-layer reports (NaN where no
  /// sample was usable).
  std::vector<double> values;
  std::vector<std::optional<Interval>> ci;
  std::size_t sample_count = 0;
  std::vector<std::size_t> skipped;  // per value; always 0 for CS
};

namespace detail {

inline void summarize(SimilarityReport& r, const std::vector<std::vector<double>>& per_value, const std::optional<BootstrapConfig>& boot,
                      std::uint64_t stream) {
  for (std::size_t k = 0; k < per_value.size(); ++k) {
    const auto& xs = per_value[k];
    r.skipped.push_back(r.sample_count - xs.size());
    r.values.push_back(xs.empty() ? std::nan("") : mean(xs));
    if (boot && xs.size() >= 2)
      r.ci.push_back(bootstrap_mean_ci(xs, *boot, stream * 1000003ull + k));
    else
      r.ci.push_back(std::nullopt);
  }
}

}  // namespace detail

inline SimilarityReport cs_report(const DumpSet& dumps, std::span<const std::uint64_t> ids, Scope scope,
                                  const std::optional<BootstrapConfig>& boot = std::nullopt) {
  detail::check_dump_set(dumps, true, false);
  if (ids.empty()) throw DomainError("no samples");
  SimilarityReport r{Metric::cs, scope, std::nullopt, {}, {}, ids.size(), {}};
  const auto n = dumps.begin()->second.n_layers();
  std::vector<std::vector<double>> per_value(scope == Scope::overall ? 1 : n);
  for (auto id : ids) {
    if (scope == Scope::overall) {
      per_value[0].push_back(cs(dumps, id));
    } else {
      for (std::uint32_t layer = 1; layer <= n; ++layer) per_value[layer - 1].push_back(detail::layer_cs(dumps, id, layer));
    }
  }
  detail::summarize(r, per_value, boot, scope == Scope::overall ? 1 : 2);
  return r;
}

inline SimilarityReport nao_report(const DumpSet& dumps, std::span<const std::uint64_t> ids, double threshold, Scope scope,
                                   const std::optional<BootstrapConfig>& boot = std::nullopt) {
  detail::check_dump_set(dumps, false, true);
  if (ids.empty()) throw DomainError("no samples");
  SimilarityReport r{Metric::nao, scope, threshold, {}, {}, ids.size(), {}};
  const auto n = dumps.begin()->second.n_layers();
  std::vector<std::vector<double>> per_value(scope == Scope::overall ? 1 : n);
  for (auto id : ids) {
    if (scope == Scope::overall) {
      if (auto v = try_nao(dumps, id, threshold)) per_value[0].push_back(*v);
    } else {
      for (std::uint32_t layer = 1; layer <= n; ++layer)
        if (auto v = try_nao(dumps, id, threshold, layer)) per_value[layer - 1].push_back(*v);
    }
  }
  // Stream tag mixes in the threshold so sweep rows draw independent resamples.
  detail::summarize(r, per_value, boot, 3 + static_cast<std::uint64_t>(std::llround(threshold * 1e6)));
  return r;
}

/// Overall NAO at each threshold.
inline std::vector<SimilarityReport> threshold_sweep(const DumpSet& dumps, std::span<const std::uint64_t> ids, std::span<const double> thresholds,
                                                     const std::optional<BootstrapConfig>& boot = std::nullopt) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw DomainError("thresholds must be positive");
    if (i && !(thresholds[i] > thresholds[i - 1])) throw DomainError("thresholds must be strictly increasing");
  }
  std::vector<SimilarityReport> out;
  for (double t : thresholds) out.push_back(nao_report(dumps, ids, t, Scope::overall, boot));
  return out;
}

/// Sorted sample ids present in every dump, truncated to `limit` (0 = all).
inline std::vector<std::uint64_t> common_sample_ids(const DumpSet& dumps, std::size_t limit = 0) {
  std::vector<std::uint64_t> out;
  if (dumps.empty()) return out;
  std::vector<std::uint64_t> ids;
  for (const auto& s : dumps.begin()->second.samples()) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) {
    bool everywhere = true;
    for (const auto& [lang, d] : dumps) everywhere = everywhere && d.contains(id);
    if (everywhere) out.push_back(id);
    if (limit && out.size() == limit) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary dump format (little-endian)
//   "KFRA" | u32 version=1 | u32 n_layers | u32 hidden_dim | u32 ffn_dim |
//   u32 n_samples | per sample: u64 id, f32[n_layers*hidden_dim],
//   f32[n_layers*ffn_dim]
// Sidecar "<path>.manifest.json": model_id, language, prompt_checksum,
// extraction_timestamp.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kDumpMagic{'K', 'F', 'R', 'A'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderBytes = 24;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])} << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])} << (8 * i);
  return v;
}

inline std::filesystem::path dump_manifest_path(const std::filesystem::path& p) {
  auto m = p;
  m += ".manifest.json";
  return m;
}

}  // namespace detail

inline std::string encode_dump(const ActivationDump& dump) {
  std::string out(kDumpMagic.begin(), kDumpMagic.end());
  detail::put_u32(out, kDumpVersion);
  detail::put_u32(out, dump.n_layers());
  detail::put_u32(out, dump.hidden_dim());
  detail::put_u32(out, dump.ffn_dim());
  detail::put_u32(out, static_cast<std::uint32_t>(dump.samples().size()));
  for (const auto& s : dump.samples()) {
    detail::put_u64(out, s.id);
    for (float v : s.hidden) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    for (float v : s.ffn) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline ActivationDump decode_dump(std::string_view bytes, DumpInfo info = {}) {
  if (bytes.size() < kDumpHeaderBytes) throw FormatError("dump truncated: header needs 24 bytes, got " + std::to_string(bytes.size()));
  if (!std::equal(kDumpMagic.begin(), kDumpMagic.end(), bytes.begin())) throw FormatError("bad dump magic (expected \"KFRA\")");
  const auto version = detail::get_u32(bytes, 4);
  if (version != kDumpVersion) throw FormatError("unsupported dump version " + std::to_string(version));
  const auto n_layers = detail::get_u32(bytes, 8);
  const auto hidden_dim = detail::get_u32(bytes, 12);
  const auto ffn_dim = detail::get_u32(bytes, 16);
  const auto n_samples = detail::get_u32(bytes, 20);
  if (n_layers == 0 || hidden_dim == 0 || ffn_dim == 0) throw FormatError("dump header has a zero dimension");

  const std::uint64_t floats_per_sample = std::uint64_t{n_layers} * (std::uint64_t{hidden_dim} + ffn_dim);
  const std::uint64_t expected = kDumpHeaderBytes + std::uint64_t{n_samples} * (8 + 4 * floats_per_sample);
  if (bytes.size() < expected)
    throw FormatError("dump truncated: expected " + std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
  if (bytes.size() > expected) throw FormatError("dump has " + std::to_string(bytes.size() - expected) + " trailing bytes");

  ActivationDump dump(std::move(info), n_layers, hidden_dim, ffn_dim);
  std::size_t at = kDumpHeaderBytes;
  auto floats = [&](std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) {
      x = std::bit_cast<float>(detail::get_u32(bytes, at));
      at += 4;
    }
    return v;
  };
  for (std::uint32_t s = 0; s < n_samples; ++s) {
    const auto id = detail::get_u64(bytes, at);
    at += 8;
    auto hidden = floats(std::size_t{n_layers} * hidden_dim);
    auto ffn = floats(std::size_t{n_layers} * ffn_dim);
    dump.add_sample(id, std::move(hidden), std::move(ffn));
  }
  return dump;
}

inline nlohmann::json to_json(const DumpInfo& info) {
  return {{"model_id", info.model_id},
          {"language", info.language.code()},
          {"prompt_checksum", info.prompt_checksum},
          {"extraction_timestamp", info.extraction_timestamp}};
}

inline void write_dump(const ActivationDump& dump, const std::filesystem::path& path) {
  const auto bytes = encode_dump(dump);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
  }
  std::ofstream man(detail::dump_manifest_path(path), std::ios::binary | std::ios::trunc);
  man << to_json(dump.info()).dump(2) << '\n';
}

/// Reads a dump and, when present, its sidecar manifest.
inline ActivationDump read_dump(const std::filesystem::path& path) {
  DumpInfo info;
  const auto mpath = detail::dump_manifest_path(path);
  if (std::filesystem::exists(mpath)) {
    try {
      const auto j = nlohmann::json::parse(read_file(mpath));
      info.model_id = j.value("model_id", "");
      const auto lang = j.value("language", "");
      if (!lang.empty()) info.language = LanguageTag(lang);
      info.prompt_checksum = j.value("prompt_checksum", "");
      info.extraction_timestamp = j.value("extraction_timestamp", "");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(mpath.string() + ": " + e.what());
    }
  }
  try {
    return decode_dump(read_file(path), std::move(info));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace kfr

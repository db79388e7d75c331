// kfr: dataset generation, scoring, transfer matrices and CS/NAO reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfr/kfr.hpp"

#ifndef KFR_DEFAULT_PACK_DIR
#define KFR_DEFAULT_PACK_DIR "data/packs"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<kfr::LanguageTag> parse_langs(const std::vector<std::string>& raw) {
  std::vector<kfr::LanguageTag> out;
  for (const auto& s : raw) out.emplace_back(s);
  if (out.empty()) throw kfr::ValidationError("--langs is empty");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw kfr::Error("cannot write " + path.string());
  out << text;
  if (!out) throw kfr::Error("write failed for " + path.string());
}

void write_run_manifest(const fs::path& path, const std::string& command, const json& config) {
  write_text(path, json{{"command", command}, {"config", config}}.dump(2) + "\n");
}

std::string fmt(double v, int precision = 6) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

std::string with_suffix(const std::string& prefix, const std::string& suffix) { return prefix + suffix; }

// ---------------------------------------------------------------------------
// generate / prompts
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string task = "arithmetic";
  std::vector<std::string> langs{"en"};
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string packs = KFR_DEFAULT_PACK_DIR;
  std::string out;
  bool prompts = false;
  bool interp = false;
};

void cmd_generate(const GenerateArgs& a) {
  const auto task = kfr::parse_task(a.task);
  const auto langs = parse_langs(a.langs);
  auto count = a.count;
  if (count == 0) {
    // round the default up so every balance class gets the same share
    const auto k = kfr::balance_classes(task);
    count = (kfr::default_count(task) + k - 1) / k * k;
  }
  const auto packs = kfr::load_pack_set(a.packs, langs);
  const auto datasets = kfr::generate_dataset(task, langs, count, a.seed, packs);

  fs::create_directories(a.out);
  for (const auto& d : datasets) {
    const auto stem = std::string(kfr::to_string(task)) + "." + d.manifest.language.code();
    const auto path = fs::path(a.out) / (stem + ".jsonl");
    kfr::write_dataset(d, path);
    if (a.prompts) kfr::write_prompts(d, packs.at(d.manifest.language), a.interp, fs::path(a.out) / (stem + ".prompts.jsonl"));
    std::cout << path.string() << ": " << d.items.size() << " items\n";
  }
  write_run_manifest(fs::path(a.out) / (std::string(kfr::to_string(task)) + ".run.json"), "generate",
                     {{"task", a.task}, {"langs", a.langs}, {"count", count}, {"seed", a.seed}, {"packs", fs::absolute(a.packs).string()},
                      {"out", a.out}, {"prompts", a.prompts}, {"interp", a.interp}});
}

struct PromptsArgs {
  std::string dataset;
  std::string packs = KFR_DEFAULT_PACK_DIR;
  std::string out;
  bool interp = false;
};

void cmd_prompts(const PromptsArgs& a) {
  const auto d = kfr::read_dataset(a.dataset);
  const auto pack = kfr::load_pack(fs::path(a.packs) / (d.manifest.language.code() + ".json"), d.manifest.language);
  if (kfr::pack_checksum(pack) != d.manifest.pack_checksum)
    std::cerr << "warning: pack checksum differs from the one the dataset was generated with\n";
  kfr::write_prompts(d, pack, a.interp, a.out);
  std::cout << a.out << ": " << d.items.size() << " prompts\n";
}

// ---------------------------------------------------------------------------
// score / xltr
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string dataset;
  std::string predictions;
  std::string lang;
  std::string out;
};

void cmd_score(const ScoreArgs& a) {
  const auto d = kfr::read_dataset(a.dataset);
  const auto preds = kfr::read_predictions(a.predictions, a.lang.empty() ? kfr::LanguageTag{} : kfr::LanguageTag(a.lang));
  const auto r = kfr::score(d, preds);
  kfr::write_result_set(r, a.out);
  std::cout << r.language.code() << ": " << r.correct_ids.size() << "/" << r.total_ids.size() << " correct (accuracy "
            << fmt(r.accuracy(), 4) << ")\n";
}

struct XltrArgs {
  std::vector<std::string> results;
  double random_accuracy = kfr::kDefaultRandomAccuracyMcq;
  double fclt_threshold = kfr::kDefaultFcltThreshold;
  int bootstrap = 0;
  double level = 0.99;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_xltr(const XltrArgs& a) {
  std::vector<kfr::ResultSet> sets;
  for (const auto& p : a.results) sets.push_back(kfr::read_result_set(p));
  std::optional<kfr::BootstrapConfig> boot;
  if (a.bootstrap > 0) boot = kfr::BootstrapConfig{a.bootstrap, a.level, a.seed};
  const auto m = kfr::transfer_matrix(sets, a.random_accuracy, a.fclt_threshold, boot);

  std::ostringstream tsv;
  tsv << "source\ttarget\txltr\tci_lo\tci_hi\tfclt\n";
  json rows = json::array();
  std::cout << "XLTR (A_r = " << fmt(m.random_accuracy, 3) << ", FCLT >= " << fmt(m.fclt_threshold, 3) << ")\n";
  std::cout << std::setw(8) << "src\\tgt";
  for (const auto& t : m.languages) std::cout << std::setw(12) << t.code();
  std::cout << "\n";
  for (const auto& s : m.languages) {
    std::cout << std::setw(8) << s.code();
    for (const auto& t : m.languages) {
      const auto key = std::make_pair(s, t);
      const double v = m.xltr.at(key);
      std::cout << std::setw(11) << fmt(v, 4) << (m.fclt.at(key) && s != t ? "*" : " ");
      const auto ci = m.ci.find(key);
      tsv << s.code() << '\t' << t.code() << '\t' << fmt(v, 9) << '\t' << (ci != m.ci.end() ? fmt(ci->second.lo, 9) : "") << '\t'
          << (ci != m.ci.end() ? fmt(ci->second.hi, 9) : "") << '\t' << (m.fclt.at(key) ? 1 : 0) << '\n';
      json row{{"source", s.code()}, {"target", t.code()}, {"xltr", v}, {"fclt", m.fclt.at(key)}};
      if (ci != m.ci.end()) row["ci"] = {ci->second.lo, ci->second.hi};
      rows.push_back(row);
    }
    std::cout << "\n";
  }
  std::cout << "(* = FCLT)\n";
  for (const auto& [lang, acc] : m.accuracy) std::cout << "accuracy " << lang.code() << ": " << fmt(acc, 4) << "\n";
  if (boot) {
    for (const auto& [key, ci] : m.ci)
      if (key.first != key.second)
        std::cout << key.first.code() << "->" << key.second.code() << " " << fmt(a.level * 100, 0) << "% CI [" << fmt(ci.lo, 4) << ", "
                  << fmt(ci.hi, 4) << "]\n";
  }

  if (!a.out.empty()) {
    json acc = json::object();
    for (const auto& [lang, v] : m.accuracy) acc[lang.code()] = v;
    write_text(with_suffix(a.out, ".tsv"), tsv.str());
    write_text(with_suffix(a.out, ".json"), json{{"random_accuracy", m.random_accuracy},
                                                 {"fclt_threshold", m.fclt_threshold},
                                                 {"accuracy", acc},
                                                 {"pairs", rows}}
                                                    .dump(2) +
                                                "\n");
    write_run_manifest(with_suffix(a.out, ".run.json"), "xltr",
                       {{"results", a.results}, {"random_accuracy", a.random_accuracy}, {"fclt_threshold", a.fclt_threshold},
                        {"bootstrap", a.bootstrap}, {"level", a.level}, {"seed", a.seed}, {"out", a.out}});
  }
}

// ---------------------------------------------------------------------------
// interp-cs / interp-nao / report
// ---------------------------------------------------------------------------

struct InterpArgs {
  std::vector<std::string> dumps;
  std::size_t samples = kfr::kDefaultInterpSamples;
  std::vector<double> thresholds = kfr::default_thresholds();
  double layer_threshold = kfr::kDefaultLayerThreshold;
  int bootstrap = 1000;
  double level = 0.99;
  std::uint64_t seed = 0;
  std::string out;
};

// Accepts "path" (language from the sidecar manifest) or "lang=path".
kfr::DumpSet load_dumps(const std::vector<std::string>& specs) {
  kfr::DumpSet dumps;
  for (const auto& spec : specs) {
    std::string path = spec;
    kfr::LanguageTag lang;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      lang = kfr::LanguageTag(spec.substr(0, eq));
      path = spec.substr(eq + 1);
    }
    auto dump = kfr::read_dump(path);
    if (!lang.empty()) dump.info().language = lang;
    if (dump.language().empty()) throw kfr::ValidationError(path + ": no language (give it as lang=path or in the manifest)");
    const auto key = dump.language();
    if (!dumps.emplace(key, std::move(dump)).second) throw kfr::ValidationError("two dumps for language '" + key.code() + "'");
  }
  return dumps;
}

std::string ci_cells(const std::optional<kfr::Interval>& ci) {
  return ci ? fmt(ci->lo, 9) + "\t" + fmt(ci->hi, 9) : "\t";
}

json report_json(const kfr::SimilarityReport& r) {
  json ci = json::array();
  for (const auto& c : r.ci) ci.push_back(c ? json{c->lo, c->hi} : json(nullptr));
  json values = json::array();
  for (double v : r.values) values.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  return {{"metric", r.metric == kfr::Metric::cs ? "cs" : "nao"},
          {"scope", r.scope == kfr::Scope::overall ? "overall" : "per_layer"},
          {"threshold", r.threshold ? json(*r.threshold) : json(nullptr)},
          {"values", values},
          {"ci", ci},
          {"sample_count", r.sample_count},
          {"skipped", r.skipped}};
}

void cmd_interp(const InterpArgs& a, bool with_cs, bool with_nao, const std::string& command) {
  const auto dumps = load_dumps(a.dumps);
  const auto ids = kfr::common_sample_ids(dumps, a.samples);
  if (ids.empty()) throw kfr::AlignmentError("no sample id is present in every dump");
  std::optional<kfr::BootstrapConfig> boot;
  if (a.bootstrap > 0) boot = kfr::BootstrapConfig{a.bootstrap, a.level, a.seed};

  std::cout << "languages:";
  for (const auto& [lang, d] : dumps) std::cout << " " << lang.code();
  std::cout << "  samples: " << ids.size() << "  layers: " << dumps.begin()->second.n_layers() << "\n";

  json reports = json::array();
  if (with_cs) {
    const auto overall = kfr::cs_report(dumps, ids, kfr::Scope::overall, boot);
    const auto layers = kfr::cs_report(dumps, ids, kfr::Scope::per_layer, boot);
    std::ostringstream tsv;
    tsv << "scope\tlayer\tvalue\tci_lo\tci_hi\tsamples\n";
    tsv << "overall\t\t" << fmt(overall.values[0], 9) << '\t' << ci_cells(overall.ci[0]) << '\t' << overall.sample_count << '\n';
    std::cout << "CS overall: " << fmt(overall.values[0]) << (overall.ci[0] ? "  CI [" + fmt(overall.ci[0]->lo) + ", " + fmt(overall.ci[0]->hi) + "]" : "")
              << "\n";
    for (std::size_t l = 0; l < layers.values.size(); ++l) {
      tsv << "layer\t" << l + 1 << '\t' << fmt(layers.values[l], 9) << '\t' << ci_cells(layers.ci[l]) << '\t' << layers.sample_count << '\n';
      std::cout << "  CS layer " << std::setw(3) << l + 1 << ": " << fmt(layers.values[l]) << "\n";
    }
    if (!a.out.empty()) write_text(with_suffix(a.out, ".cs.tsv"), tsv.str());
    reports.push_back(report_json(overall));
    reports.push_back(report_json(layers));
  }
  if (with_nao) {
    const auto sweep = kfr::threshold_sweep(dumps, ids, a.thresholds, boot);
    std::ostringstream tsv;
    tsv << "threshold\tvalue\tci_lo\tci_hi\tsamples\tskipped\n";
    for (const auto& r : sweep) {
      tsv << fmt(*r.threshold, 4) << '\t' << fmt(r.values[0], 9) << '\t' << ci_cells(r.ci[0]) << '\t' << r.sample_count << '\t' << r.skipped[0] << '\n';
      std::cout << "NAO @ " << fmt(*r.threshold, 2) << ": " << fmt(r.values[0]) << (r.skipped[0] ? "  (skipped " + std::to_string(r.skipped[0]) + ")" : "")
                << "\n";
      reports.push_back(report_json(r));
    }
    const auto layers = kfr::nao_report(dumps, ids, a.layer_threshold, kfr::Scope::per_layer, boot);
    std::ostringstream ltsv;
    ltsv << "layer\tthreshold\tvalue\tci_lo\tci_hi\tsamples\tskipped\n";
    for (std::size_t l = 0; l < layers.values.size(); ++l) {
      ltsv << l + 1 << '\t' << fmt(a.layer_threshold, 4) << '\t' << fmt(layers.values[l], 9) << '\t' << ci_cells(layers.ci[l]) << '\t'
           << layers.sample_count << '\t' << layers.skipped[l] << '\n';
      std::cout << "  NAO layer " << std::setw(3) << l + 1 << " @ " << fmt(a.layer_threshold, 2) << ": " << fmt(layers.values[l]) << "\n";
    }
    reports.push_back(report_json(layers));
    if (!a.out.empty()) {
      write_text(with_suffix(a.out, ".nao_sweep.tsv"), tsv.str());
      write_text(with_suffix(a.out, ".nao_layers.tsv"), ltsv.str());
    }
  }
  if (!a.out.empty()) {
    write_text(with_suffix(a.out, ".json"), reports.dump(2) + "\n");
    write_run_manifest(with_suffix(a.out, ".run.json"), command,
                       {{"dumps", a.dumps}, {"samples", a.samples}, {"thresholds", a.thresholds}, {"layer_threshold", a.layer_threshold},
                        {"bootstrap", a.bootstrap}, {"level", a.level}, {"seed", a.seed}, {"out", a.out}});
  }
}

void add_interp_options(CLI::App* sub, InterpArgs& a, bool nao) {
  sub->add_option("--dumps", a.dumps, "Dump files, as path or lang=path")->required()->expected(2, -1);
  sub->add_option("--samples", a.samples, "Number of common samples to use (0 = all)")->capture_default_str();
  if (nao) {
    sub->add_option("--thresholds", a.thresholds, "Activation thresholds for the overall NAO sweep")->delimiter(',')->capture_default_str();
    sub->add_option("--layer-threshold", a.layer_threshold, "Threshold for layer-wise NAO")->capture_default_str();
  }
  sub->add_option("--bootstrap", a.bootstrap, "Bootstrap iterations (0 disables intervals)")->capture_default_str();
  sub->add_option("--level", a.level, "Confidence level")->capture_default_str();
  sub->add_option("--seed", a.seed, "Bootstrap seed")->capture_default_str();
  sub->add_option("--out", a.out, "Output prefix for .tsv/.json reports");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-free reasoning dataset generator and cross-lingual metrics"};
  app.set_config("--config", "", "TOML/INI file with option overrides");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate parallel datasets for one task");
  g->add_option("--task", gen.task, "arithmetic | symbolic | logical")->required();
  g->add_option("--langs", gen.langs, "Comma-separated language codes")->delimiter(',')->capture_default_str();
  g->add_option("--count", gen.count, "Items per language (default 800/501/504 by task)");
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--packs", gen.packs, "Directory of <lang>.json lexicon packs")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_flag("--prompts", gen.prompts, "Also write rendered prompts");
  g->add_flag("--interp", gen.interp, "Render prompts with the trailing question suffix");

  PromptsArgs pr;
  auto* p = app.add_subcommand("prompts", "Render a dataset's prompts, one JSON record per line");
  p->add_option("--dataset", pr.dataset)->required();
  p->add_option("--packs", pr.packs)->capture_default_str();
  p->add_option("--out", pr.out)->required();
  p->add_flag("--interp", pr.interp, "Append the question suffix (for activation extraction)");

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Score predictions against a dataset");
  s->add_option("--dataset", sc.dataset)->required();
  s->add_option("--predictions", sc.predictions)->required();
  s->add_option("--lang", sc.lang, "Language of the predictions (checked against the dataset)");
  s->add_option("--out", sc.out, "Result file")->required();

  XltrArgs xa;
  auto* x = app.add_subcommand("xltr", "Cross-lingual transfer matrix from result files");
  x->add_option("--results", xa.results)->required()->expected(2, -1);
  x->add_option("--random-accuracy", xa.random_accuracy, "Chance accuracy (0.25 for 4-choice, 0.5 for yes/no)")->capture_default_str();
  x->add_option("--fclt-threshold", xa.fclt_threshold)->capture_default_str();
  x->add_option("--bootstrap", xa.bootstrap, "Bootstrap iterations for per-pair intervals (0 = none)")->capture_default_str();
  x->add_option("--level", xa.level)->capture_default_str();
  x->add_option("--seed", xa.seed)->capture_default_str();
  x->add_option("--out", xa.out, "Output prefix");

  InterpArgs ca, na, ra;
  auto* ics = app.add_subcommand("interp-cs", "Hidden-state cosine similarity, overall and per layer");
  add_interp_options(ics, ca, false);
  auto* ina = app.add_subcommand("interp-nao", "Neuron activation overlap: threshold sweep and per layer");
  add_interp_options(ina, na, true);
  auto* rep = app.add_subcommand("report", "CS and NAO together");
  add_interp_options(rep, ra, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (g->parsed()) cmd_generate(gen);
    else if (p->parsed()) cmd_prompts(pr);
    else if (s->parsed()) cmd_score(sc);
    else if (x->parsed()) cmd_xltr(xa);
    else if (ics->parsed()) cmd_interp(ca, true, false, "interp-cs");
    else if (ina->parsed()) cmd_interp(na, false, true, "interp-nao");
    else if (rep->parsed()) cmd_interp(ra, true, true, "report");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

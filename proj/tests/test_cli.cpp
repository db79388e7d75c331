#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kfr/kfr.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using testing_support::TempDir;

struct Invocation {
  int status;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  TempDir dir;

  Invocation run(const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + KFR_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    return {WEXITSTATUS(raw), kfr::read_file(out), kfr::read_file(err)};
  }
  std::string p(const std::string& name) { return (dir / name).string(); }

  static std::size_t line_count(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
    return n;
  }

  void write_results(const std::string& name, const std::string& lang, const std::set<std::uint64_t>& correct, int total) {
    std::set<std::uint64_t> ids;
    for (int i = 1; i <= total; ++i) ids.insert(static_cast<std::uint64_t>(i));
    kfr::write_result_set({kfr::LanguageTag(lang), correct, ids}, dir / name);
  }
};

TEST_F(CliTest, GenerateWritesParallelFiles) {
  const auto r = run("generate --task arithmetic --langs en,de --count 800 --seed 7 --out " + p("out"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(dir / "out" / "arithmetic.en.jsonl"), 800u);
  EXPECT_EQ(line_count(dir / "out" / "arithmetic.de.jsonl"), 800u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "arithmetic.en.jsonl.manifest.json"));
  const auto manifest = nlohmann::json::parse(kfr::read_file(dir / "out" / "arithmetic.run.json"));
  EXPECT_EQ(manifest["config"]["seed"], 7);
  EXPECT_EQ(manifest["config"]["count"], 800);
  EXPECT_EQ(kfr::read_dataset(dir / "out" / "arithmetic.de.jsonl").items.size(), 800u);
}

TEST_F(CliTest, GenerateIsReproducibleFromManifest) {
  ASSERT_EQ(run("generate --task symbolic --langs en --count 30 --seed 3 --out " + p("a")).status, 0);
  const auto cfg = nlohmann::json::parse(kfr::read_file(dir / "a" / "symbolic.run.json"))["config"];
  ASSERT_EQ(run("generate --task " + cfg["task"].get<std::string>() + " --langs en --count " + std::to_string(cfg["count"].get<int>()) +
                " --seed " + std::to_string(cfg["seed"].get<int>()) + " --packs " + cfg["packs"].get<std::string>() + " --out " + p("b"))
                .status,
            0);
  EXPECT_EQ(kfr::read_file(dir / "a" / "symbolic.en.jsonl"), kfr::read_file(dir / "b" / "symbolic.en.jsonl"));
}

TEST_F(CliTest, GenerateDefaultCountsAreBalanced) {
  for (const auto& [task, expected] : {std::pair{"symbolic", 501u}, std::pair{"logical", 504u}}) {
    const auto r = run(std::string("generate --task ") + task + " --out " + p("d"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(line_count(dir / "d" / (std::string(task) + ".en.jsonl")), expected);
  }
}

TEST_F(CliTest, GenerateErrors) {
  auto r = run("generate --task logical --langs en,he --count 6 --out " + p("o"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("'he'"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);  // single diagnostic line

  r = run("generate --task arithmetic --langs en --count 801 --out " + p("o"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("multiple of 8"), std::string::npos) << r.err;

  r = run("generate --task poetry --out " + p("o"));
  EXPECT_NE(r.status, 0);
}

TEST_F(CliTest, ConfigFileOverrides) {
  std::ofstream(dir / "run.toml") << "[generate]\ntask = \"logical\"\ncount = 12\nseed = 5\n";
  const auto r = run("--config " + p("run.toml") + " generate --out " + p("cfg"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(dir / "cfg" / "logical.en.jsonl"), 12u);
}

TEST_F(CliTest, ScoreThenXltr) {
  ASSERT_EQ(run("generate --task logical --langs en,de --count 12 --seed 1 --out " + p("d")).status, 0);
  for (const char* lang : {"en", "de"}) {
    const auto d = kfr::read_dataset(dir / "d" / (std::string("logical.") + lang + ".jsonl"));
    kfr::PredictionSet preds{d.manifest.language, {}};
    for (const auto& item : d.items) preds.entries[item.item_id] = std::string(1, item.answer);
    kfr::write_predictions(preds, dir / (std::string("pred.") + lang + ".jsonl"));
    const auto r = run(std::string("score --dataset ") + p("d/logical." + std::string(lang) + ".jsonl") + " --predictions " +
                       p("pred." + std::string(lang) + ".jsonl") + " --out " + p("res." + std::string(lang) + ".json"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("12/12"), std::string::npos);
  }
  const auto r = run("xltr --results " + p("res.en.json") + " " + p("res.de.json") + " --out " + p("m"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(kfr::read_file(dir / "m.json"));
  for (const auto& row : j["pairs"]) EXPECT_EQ(row["xltr"].get<double>(), 1.0);
}

TEST_F(CliTest, XltrHandCaseFromFiles) {
  write_results("s.json", "en", {1, 2, 3, 4}, 6);
  write_results("t.json", "de", {1, 2, 5}, 6);
  auto r = run("xltr --results " + p("s.json") + " " + p("t.json") + " --out " + p("m"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto tsv = kfr::read_file(dir / "m.tsv");
  EXPECT_NE(tsv.find("en\tde\t0.333333333\t"), std::string::npos) << tsv;

  write_results("tb.json", "de", {1, 2, 3, 5}, 6);
  r = run("xltr --random-accuracy 0.5 --results " + p("s.json") + " " + p("tb.json") + " --bootstrap 200 --out " + p("b"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(kfr::read_file(dir / "b.json"));
  for (const auto& row : j["pairs"])
    if (row["source"] == "en" && row["target"] == "de") {
      EXPECT_DOUBLE_EQ(row["xltr"].get<double>(), (0.75 - 0.5) / 0.5);
      EXPECT_TRUE(row.contains("ci"));
    }
}

TEST_F(CliTest, XltrMisalignedResults) {
  write_results("s.json", "en", {1, 2}, 6);
  write_results("t.json", "de", {1, 2}, 5);
  const auto r = run("xltr --results " + p("s.json") + " " + p("t.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("different items"), std::string::npos) << r.err;
}

TEST_F(CliTest, ReportOnIdenticalDumps) {
  auto dumps = oracle::synthetic_dumps({"en"}, 3, 8, 16, 120, 2);
  auto d = dumps.begin()->second;
  kfr::write_dump(d, dir / "en.kfra");
  d.info().language = kfr::LanguageTag("de");
  kfr::write_dump(d, dir / "de.kfra");
  const auto r = run("report --dumps " + p("en.kfra") + " " + p("de.kfra") + " --bootstrap 200 --out " + p("rep"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(dir / "rep.nao_sweep.tsv"), 1u + 9u);
  EXPECT_EQ(line_count(dir / "rep.nao_layers.tsv"), 1u + 3u);
  EXPECT_EQ(line_count(dir / "rep.cs.tsv"), 1u + 1u + 3u);
  const auto j = nlohmann::json::parse(kfr::read_file(dir / "rep.json"));
  for (const auto& rep : j) {
    EXPECT_EQ(rep["sample_count"], 100);  // default --samples
    for (const auto& v : rep["values"])
      if (!v.is_null()) {
        EXPECT_NEAR(v.get<double>(), 1.0, 1e-12);
      }
  }
  EXPECT_EQ(nlohmann::json::parse(kfr::read_file(dir / "rep.run.json"))["config"]["layer_threshold"], 0.4);
}

TEST_F(CliTest, InterpLanguageOverrideAndErrors) {
  auto dumps = oracle::synthetic_dumps({"en", "de"}, 2, 4, 4, 10, 3);
  for (const auto& [lang, d] : dumps) {
    auto copy = d;
    copy.info().language = kfr::LanguageTag{};
    const auto bytes = kfr::encode_dump(copy);
    std::ofstream(dir / (lang.code() + ".bin"), std::ios::binary) << bytes;
  }
  auto r = run("interp-cs --dumps en=" + p("en.bin") + " de=" + p("de.bin") + " --bootstrap 0");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("CS overall"), std::string::npos);

  r = run("interp-nao --dumps " + p("en.bin") + " " + p("de.bin"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("no language"), std::string::npos) << r.err;

  std::ofstream(dir / "bad.bin", std::ios::binary) << "NOPE";
  r = run("interp-cs --dumps en=" + p("en.bin") + " de=" + p("bad.bin"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("truncated"), std::string::npos) << r.err;
}

TEST_F(CliTest, PromptsSubcommand) {
  ASSERT_EQ(run("generate --task symbolic --langs en --count 3 --out " + p("d")).status, 0);
  const auto r = run("prompts --dataset " + p("d/symbolic.en.jsonl") + " --interp --out " + p("prompts.jsonl"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(dir / "prompts.jsonl"), 3u);
}

}  // namespace

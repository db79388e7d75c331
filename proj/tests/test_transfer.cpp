#include <gtest/gtest.h>

#include <fstream>

#include "kfr/transfer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using kfr::LanguageTag;
using kfr::ResultSet;
using testing_support::TempDir;

ResultSet make(const std::string& lang, std::set<std::uint64_t> correct, std::set<std::uint64_t> total) {
  return ResultSet{LanguageTag(lang), std::move(correct), std::move(total)};
}

const std::set<std::uint64_t> ids1to6{1, 2, 3, 4, 5, 6};

TEST(Xltr, HandCase) {
  const auto s = make("en", {1, 2, 3, 4}, ids1to6);
  const auto t = make("de", {1, 2, 5}, ids1to6);
  EXPECT_DOUBLE_EQ(kfr::xltr(s, t, 0.25), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(oracle::xltr({1, 2, 3, 4}, {1, 2, 5}, 0.25), 1.0 / 3.0);
}

TEST(Xltr, FixedPoints) {
  const auto s = make("en", {1, 2, 3, 4}, ids1to6);
  EXPECT_EQ(kfr::xltr(s, s, 0.25), 1.0);
  const auto chance = make("de", {1, 5, 6}, ids1to6);  // 1 of 4 = A_r
  EXPECT_EQ(kfr::xltr(s, chance, 0.25), 0.0);
  const auto none = make("de", {5}, ids1to6);
  EXPECT_DOUBLE_EQ(kfr::xltr(s, none, 0.25), -1.0 / 3.0);  // unclipped
}

TEST(Xltr, Errors) {
  const auto s = make("en", {}, ids1to6);
  EXPECT_THROW(kfr::xltr(s, s, 0.25), kfr::DomainError);
  const auto a = make("en", {1}, ids1to6);
  const auto b = make("de", {1}, {1, 2, 3});
  EXPECT_THROW(kfr::xltr(a, b, 0.25), kfr::AlignmentError);
  EXPECT_THROW(kfr::xltr(a, a, 1.0), kfr::DomainError);
}

TEST(Xltr, RandomizedAgainstOracle) {
  kfr::Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.uniform(4, 200));
    std::set<std::uint64_t> total;
    std::vector<int> cs, ct;
    std::set<std::uint64_t> sc, tc;
    for (int id = 0; id < n; ++id) {
      total.insert(static_cast<std::uint64_t>(id));
      if (rng.bernoulli(0.6)) { cs.push_back(id); sc.insert(static_cast<std::uint64_t>(id)); }
      if (rng.bernoulli(0.6)) { ct.push_back(id); tc.insert(static_cast<std::uint64_t>(id)); }
    }
    if (cs.empty()) continue;
    const double ar = rng.bernoulli(0.5) ? 0.25 : 0.5;
    const auto s = ResultSet{LanguageTag("en"), sc, total};
    const auto t = ResultSet{LanguageTag("de"), tc, total};
    const double v = kfr::xltr(s, t, ar);
    ASSERT_NEAR(v, oracle::xltr(cs, ct, ar), 1e-12);
    ASSERT_GE(v, -ar / (1 - ar) - 1e-12);
    ASSERT_LE(v, 1.0 + 1e-12);
    ASSERT_EQ(kfr::xltr(s, s, ar), 1.0);
  }
}

// Growing the overlap never lowers XLTR.
TEST(Xltr, MonotoneInOverlap) {
  std::set<std::uint64_t> total, src;
  for (std::uint64_t i = 0; i < 40; ++i) total.insert(i);
  for (std::uint64_t i = 0; i < 20; ++i) src.insert(i);
  const auto s = ResultSet{LanguageTag("en"), src, total};
  double prev = -10;
  std::set<std::uint64_t> tgt;
  for (std::uint64_t i = 0; i <= 20; ++i) {
    const double v = kfr::xltr(s, ResultSet{LanguageTag("de"), tgt, total}, 0.25);
    EXPECT_GT(v, prev);
    prev = v;
    tgt.insert(i);
  }
}

TEST(Matrix, IdenticalSetsAndCounts) {
  const auto en = make("en", {1, 2, 3}, ids1to6);
  auto de = en;
  de.language = LanguageTag("de");
  auto fr = en;
  fr.language = LanguageTag("fr");
  const auto m = kfr::transfer_matrix({en, de, fr}, 0.25);
  EXPECT_EQ(m.languages.size(), 3u);
  std::size_t off = 0;
  for (const auto& [key, v] : m.xltr)
    if (key.first != key.second) {
      ++off;
      EXPECT_EQ(v, 1.0);
      EXPECT_TRUE(m.fclt.at(key));
    }
  EXPECT_EQ(off, 6u);
  EXPECT_DOUBLE_EQ(m.accuracy.at(LanguageTag("en")), 0.5);
  EXPECT_THROW(kfr::transfer_matrix({en}, 0.25), kfr::DomainError);
  EXPECT_THROW(kfr::transfer_matrix({en, en}, 0.25), kfr::ValidationError);
}

TEST(Matrix, FcltThreshold) {
  const auto s = make("en", {1, 2, 3, 4}, ids1to6);
  const auto t = make("de", {1, 2, 5}, ids1to6);
  const auto m = kfr::transfer_matrix({s, t}, 0.25);
  const auto key = std::make_pair(LanguageTag("en"), LanguageTag("de"));
  EXPECT_FALSE(m.fclt.at(key));
  EXPECT_TRUE(kfr::transfer_matrix({s, t}, 0.25, 0.3).fclt.at(key));
}

TEST(Matrix, BootstrapIsReproducibleAndContainsPoint) {
  std::set<std::uint64_t> total, a, b;
  kfr::Rng rng(2);
  for (std::uint64_t i = 0; i < 200; ++i) {
    total.insert(i);
    if (rng.bernoulli(0.7)) a.insert(i);
    if (rng.bernoulli(0.7)) b.insert(i);
  }
  const std::vector<ResultSet> sets{{LanguageTag("en"), a, total}, {LanguageTag("de"), b, total}};
  const kfr::BootstrapConfig cfg{500, 0.99, 7};
  const auto m1 = kfr::transfer_matrix(sets, 0.25, 0.95, cfg);
  const auto m2 = kfr::transfer_matrix(sets, 0.25, 0.95, cfg);
  EXPECT_EQ(m1.ci, m2.ci);
  for (const auto& [key, ci] : m1.ci) {
    EXPECT_LE(ci.lo, m1.xltr.at(key));
    EXPECT_GE(ci.hi, m1.xltr.at(key));
  }
}

TEST(Bootstrap, ConstantStatistic) {
  std::vector<double> xs(50, 3.5);
  kfr::Rng rng(1);
  const auto ci = kfr::bootstrap_ci<double>([](std::span<const double>) { return 0.42; }, std::span<const double>(xs), 200, 0.95, rng);
  EXPECT_EQ(ci.lo, 0.42);
  EXPECT_EQ(ci.hi, 0.42);
  const auto m = kfr::bootstrap_mean_ci(xs, {200, 0.99, 3});
  EXPECT_EQ(m.lo, 3.5);
  EXPECT_EQ(m.hi, 3.5);
}

TEST(Bootstrap, Preconditions) {
  std::vector<double> xs{1, 2, 3};
  EXPECT_THROW(kfr::bootstrap_mean_ci(xs, {99, 0.99, 0}), kfr::DomainError);
  EXPECT_THROW(kfr::bootstrap_mean_ci(xs, {100, 1.0, 0}), kfr::DomainError);
  EXPECT_THROW(kfr::bootstrap_mean_ci(std::vector<double>{1}, {100, 0.9, 0}), kfr::DomainError);
  EXPECT_EQ(kfr::bootstrap_mean_ci(xs, {100, 0.9, 5}), kfr::bootstrap_mean_ci(xs, {100, 0.9, 5}));
}

TEST(Bootstrap, CoverageOnBernoulli) {
  int covered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    kfr::Rng data(kfr::derive_seed(99, static_cast<std::uint64_t>(trial)));
    std::vector<double> xs(100);
    for (auto& x : xs) x = data.bernoulli(0.7) ? 1.0 : 0.0;
    const auto ci = kfr::bootstrap_mean_ci(xs, {1000, 0.99, static_cast<std::uint64_t>(trial)});
    covered += (ci.lo <= 0.7 && 0.7 <= ci.hi) ? 1 : 0;
  }
  EXPECT_GE(covered, 190);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> xs{0, 10, 20, 30};
  EXPECT_DOUBLE_EQ(kfr::quantile_sorted(xs, 0.5), 15.0);
  EXPECT_DOUBLE_EQ(kfr::quantile_sorted(xs, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(kfr::quantile_sorted(xs, 1.0), 30.0);
}

class ScoreTest : public ::testing::Test {
 protected:
  kfr::Dataset d = [] {
    const auto packs = kfr::validate_pack_set({oracle::load("en")});
    return kfr::generate_dataset(kfr::Task::logical, {LanguageTag("en")}, 6, 1, packs)[0];
  }();
  kfr::PredictionSet preds(int correct_count) const {
    kfr::PredictionSet p{LanguageTag("en"), {}};
    for (std::size_t i = 0; i < 4; ++i) {
      const char right = d.items[i].answer;
      const char wrong = right == 'A' ? 'B' : 'A';
      p.entries[d.items[i].item_id] = std::string(1, static_cast<int>(i) < correct_count ? right : wrong);
    }
    return p;
  }
};

TEST_F(ScoreTest, Accuracy) {
  EXPECT_DOUBLE_EQ(kfr::score(d, preds(2)).accuracy(), 0.5);
  const auto all = kfr::score(d, preds(4));
  EXPECT_EQ(all.correct_ids, all.total_ids);
}

TEST_F(ScoreTest, Errors) {
  EXPECT_THROW(kfr::score(d, kfr::PredictionSet{LanguageTag("en"), {}}), kfr::DomainError);
  auto unknown = preds(1);
  unknown.entries[12345] = "A";
  EXPECT_THROW(kfr::score(d, unknown), kfr::AlignmentError);
  auto wrong_lang = preds(1);
  wrong_lang.language = LanguageTag("de");
  EXPECT_THROW(kfr::score(d, wrong_lang), kfr::AlignmentError);
}

TEST_F(ScoreTest, RandomPredictionsGiveChanceTransfer) {
  const auto packs = kfr::validate_pack_set({oracle::load("en"), oracle::load("de")});
  const auto ds = kfr::generate_dataset(kfr::Task::arithmetic, {LanguageTag("en"), LanguageTag("de")}, 8000, 4, packs);
  kfr::Rng rng(8);
  std::vector<kfr::ResultSet> results;
  for (const auto& dd : ds) {
    kfr::PredictionSet p{dd.manifest.language, {}};
    for (const auto& item : dd.items) p.entries[item.item_id] = std::string(1, static_cast<char>('A' + rng.index(4)));
    results.push_back(kfr::score(dd, p));
  }
  EXPECT_NEAR(results[0].accuracy(), 0.25, 0.02);
  EXPECT_NEAR(kfr::xltr(results[0], results[1], 0.25), 0.0, 0.05);
}

TEST(Files, PredictionsAndResultsRoundTrip) {
  TempDir dir;
  const kfr::PredictionSet p{LanguageTag("en"), {{1, "A"}, {2, "Yes"}, {3, "D"}}};
  kfr::write_predictions(p, dir / "p.jsonl");
  EXPECT_EQ(kfr::read_predictions(dir / "p.jsonl", LanguageTag("en")).entries, p.entries);

  const auto r = make("en", {1, 3}, {1, 2, 3});
  kfr::write_result_set(r, dir / "r.json");
  const auto back = kfr::read_result_set(dir / "r.json");
  EXPECT_EQ(back.correct_ids, r.correct_ids);
  EXPECT_EQ(back.total_ids, r.total_ids);
  EXPECT_EQ(back.language, r.language);

  std::ofstream(dir / "bad.jsonl") << R"({"item_id": 1, "prediction": "E"})" << "\n";
  EXPECT_THROW(kfr::read_predictions(dir / "bad.jsonl"), kfr::ValidationError);
}

}  // namespace

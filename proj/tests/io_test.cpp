#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tre/io.hpp"

namespace {

using tre::io::json;

TEST(CountReport, Layout) {
  const auto s = tre::ingest_bytes(std::string("abab"));
  const auto j = tre::io::count_report(tre::count_ngrams(s, 2), s.symbols());
  EXPECT_EQ(j["order"], 2);
  EXPECT_EQ(j["window_total"], 3);
  ASSERT_EQ(j["counts"].size(), 2u);
  EXPECT_EQ(j["counts"][0]["key"], 1);  // (a, b) = 0 * 2 + 1
  EXPECT_EQ(j["counts"][0]["tuple"], json::array({"a", "b"}));
  EXPECT_EQ(j["counts"][0]["count"], 2);
  EXPECT_EQ(j["counts"][1]["tuple"], json::array({"b", "a"}));
  EXPECT_EQ(j["counts"][1]["count"], 1);
}

TEST(TransitionFile, ParsesAndRenormalizes) {
  const auto p = tre::io::transition_from_json(
      json::parse(R"({"alphabet_size": 2, "rows": [[0.9, 0.1], [0.2, 0.8000000001]]})"));
  EXPECT_NEAR(p(1, 1), 0.8000000001 / 1.0000000001, 1e-15);
  EXPECT_NEAR(p(1, 0) + p(1, 1), 1.0, 1e-15);
  EXPECT_THROW(tre::io::transition_from_json(json::parse(
                   R"({"alphabet_size": 2, "rows": [[0.9, 0.2], [0.2, 0.8]]})")),
               tre::format_error);
  EXPECT_THROW(tre::io::transition_from_json(json::parse(
                   R"({"alphabet_size": 3, "rows": [[0.9, 0.1], [0.2, 0.8]]})")),
               tre::format_error);
  EXPECT_THROW(tre::io::transition_from_json(json::parse(R"({"rows": []})")),
               tre::format_error);
}

TEST(ModelFile, JointRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = tre::make_random_chain(2 + rng() % 4, rng());
    const auto j = tre::joint_tuple_distribution(p, tre::stationary_distribution(p), 1 + rng() % 3);
    const auto text = tre::io::joint_to_json(j).dump();
    const auto back = tre::io::joint_from_json(json::parse(text));
    ASSERT_EQ(back.table().max_abs_difference(j.table()), 0.0);
    ASSERT_EQ(back.stationary(), j.stationary());
  }
}

TEST(ModelFile, JointRenormalizationTolerance) {
  const auto ok = json::parse(R"({"order": 1, "alphabet_size": 2, "kind": "joint",
      "entries": [{"key": 0, "prob": 0.25}, {"key": 1, "prob": 0.25},
                  {"tuple": [1, 0], "prob": 0.25}, {"tuple": [1, 1], "prob": 0.2500000005}]})");
  const auto j = tre::io::joint_from_json(ok);
  EXPECT_NEAR(j.table().total(), 1.0, 1e-15);
  EXPECT_TRUE(j.stationary());
  auto bad = ok;
  bad["entries"][3]["prob"] = 0.26;
  EXPECT_THROW(tre::io::joint_from_json(bad), tre::format_error);
  auto flagged = json::parse(R"({"order": 1, "alphabet_size": 2, "kind": "joint",
      "stationary": true, "entries": [{"key": 1, "prob": 0.7}, {"key": 2, "prob": 0.3}]})");
  EXPECT_THROW(tre::io::joint_from_json(flagged), tre::non_stationary_error);
  flagged.erase("stationary");
  EXPECT_FALSE(tre::io::joint_from_json(flagged).stationary());
}

TEST(ModelFile, ConditionalEntriesAndRoundTrip) {
  const auto j = json::parse(R"({"order": 1, "alphabet_size": 2, "kind": "conditional",
      "entries": [{"context_key": 0, "symbol": 0, "prob": 0.9},
                  {"context": [0], "symbol": 1, "prob": 0.1},
                  {"key": 2, "prob": 0.2}, {"tuple": [1, 1], "prob": 0.8}]})");
  const auto m = tre::io::conditional_from_json(j);
  EXPECT_DOUBLE_EQ(m->prob(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(m->prob(1, 0), 0.2);
  const auto back = tre::io::conditional_from_json(tre::io::conditional_to_json(*m));
  EXPECT_EQ(back->rows(), m->rows());

  auto bad = j;
  bad["entries"][0]["prob"] = 0.5;
  EXPECT_THROW(tre::io::conditional_from_json(bad), tre::format_error);
  auto kind = j;
  kind["kind"] = "mystery";
  EXPECT_THROW(tre::io::model_from_json(kind), tre::format_error);
}

TEST(ModelFile, TrainedModelExportsSeenContexts) {
  const auto s = tre::ingest_bytes(std::string("abcabcabd"));
  const auto m = tre::train_ngram_model(s, 2, 0.5);
  const auto back = tre::io::conditional_from_json(tre::io::conditional_to_json(*m));
  for (auto ctx : m->contexts())
    for (tre::symbol_id x = 0; x < 4; ++x)
      EXPECT_NEAR(back->prob(ctx, x), m->prob(ctx, x), 1e-15);
}

TEST(Reports, UnitsConversion) {
  tre::delta_h_report r;
  r.delta_h_per_symbol = std::numbers::ln2;
  r.threshold = 1e-4;
  const auto nats = tre::io::delta_h_report_to_json(r, tre::io::units::nats);
  const auto bits = tre::io::delta_h_report_to_json(r, tre::io::units::bits);
  EXPECT_EQ(nats["units"], "nats");
  EXPECT_EQ(bits["units"], "bits");
  EXPECT_NEAR(bits["delta_h_per_symbol"].get<double>(), 1.0, 1e-15);
  EXPECT_EQ(nats["direction_verdict"], "indistinguishable");
}

TEST(Reports, TheoremReportFields) {
  tre::theorem_report r;
  r.length = 10;
  r.h_forward = 3.0;
  r.h_backward = 2.0;
  r.boundary_term = 1.0;
  r.residual = 0.0;
  const auto j = tre::io::theorem_report_to_json(r, tre::io::units::nats);
  for (const char* f : {"h_forward", "h_backward", "boundary_term", "residual",
                        "c_bound", "h1", "h2", "h1_rev", "h2_rev", "units"})
    EXPECT_TRUE(j.contains(f)) << f;
  EXPECT_DOUBLE_EQ(j["per_symbol_gap"].get<double>(), 0.1);
  r.residual.reset();
  EXPECT_TRUE(tre::io::theorem_report_to_json(r, tre::io::units::nats)["residual"].is_null());
}

TEST(Reports, SymmetryCsv) {
  tre::symmetry_report r;
  r.order = 1;
  r.alphabet_size = 2;
  r.rows = {{3, 0.5, 0.25, 0.25}, {1, 0.1, 0.1, 0.0}};
  const auto csv = tre::io::symmetry_report_to_csv(r);
  EXPECT_EQ(csv, "key,tuple,lhs,rhs,abs_gap\n3,1 1,0.5,0.25,0.25\n1,0 1,0.10000000000000001,0.10000000000000001,0\n");
  const auto j = tre::io::symmetry_report_to_json(r, tre::io::units::nats);
  EXPECT_EQ(j["rows"][0]["tuple"], json::array({1, 1}));
  EXPECT_TRUE(j.contains("convention"));
}

}  // namespace

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "tre/models.hpp"
#include "tre/synth.hpp"

namespace {

using ids = std::vector<tre::symbol_id>;

tre::sequence make(ids v, std::size_t a) {
  return tre::sequence(
      std::make_shared<const tre::alphabet>(tre::alphabet::indexed(a)),
      std::move(v));
}

tre::joint_distribution joint(std::size_t a, std::size_t m,
                              const std::map<ids, double>& entries,
                              bool stationary) {
  tre::prob_table t(a, m);
  for (const auto& [tuple, p] : entries) t.set(t.codec().encode(tuple), p);
  return tre::joint_distribution(std::move(t), stationary);
}

tre::joint_distribution uniform_joint(std::size_t a, std::size_t m) {
  tre::prob_table t(a, m);
  const double p = 1.0 / static_cast<double>(t.codec().space());
  for (tre::tuple_key k = 0; k < t.codec().space(); ++k) t.set(k, p);
  return tre::joint_distribution(std::move(t), true);
}

// P = [[0.9, 0.1], [0.2, 0.8]], pi = (2/3, 1/3)
tre::joint_distribution two_state_joint(std::size_t m = 2) {
  const auto p = tre::transition_matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  return tre::joint_tuple_distribution(p, oracle::two_state_pi(0.1, 0.2), m);
}

double p(const tre::conditional_model& m, ids ctx, tre::symbol_id s) {
  return m.prob(std::span<const tre::symbol_id>(ctx), s);
}

TEST(JointDistribution, Validation) {
  EXPECT_THROW(joint(2, 2, {{{0, 1}, 0.5}}, false), tre::format_error);
  EXPECT_THROW(joint(2, 2, {{{0, 1}, 1.5}, {{1, 1}, -0.5}}, false),
               tre::format_error);
  // Leading marginal (0.7, 0.3) vs trailing (0.3, 0.7).
  EXPECT_THROW(joint(2, 2, {{{0, 1}, 0.7}, {{1, 0}, 0.3}}, true),
               tre::non_stationary_error);
  const auto j = tre::joint_distribution::detect(
      uniform_joint(2, 3).table());
  EXPECT_TRUE(j.stationary());
  EXPECT_FALSE(tre::joint_distribution::detect(
                   joint(2, 2, {{{0, 1}, 0.7}, {{1, 0}, 0.3}}, false).table())
                   .stationary());
}

TEST(ConditionalFromJoint, Examples) {
  const auto u = tre::conditional_from_joint(uniform_joint(2, 2));
  EXPECT_DOUBLE_EQ(p(*u, {0}, 1), 0.5);

  const auto d = tre::conditional_from_joint(joint(2, 2, {{{0, 1}, 1.0}}, false));
  EXPECT_DOUBLE_EQ(p(*d, {0}, 1), 1.0);
  EXPECT_FALSE(d->reachable(1));
  EXPECT_THROW(p(*d, {1}, 0), tre::zero_context_error);

  const auto c = tre::conditional_from_joint(two_state_joint());
  EXPECT_NEAR(p(*c, {0}, 1), 0.1, 1e-15);
  EXPECT_NEAR(p(*c, {1}, 0), 0.2, 1e-15);
}

TEST(ReverseJoint, Examples) {
  const auto sym = joint(2, 2, {{{0, 0}, 0.4}, {{0, 1}, 0.1}, {{1, 0}, 0.1}, {{1, 1}, 0.4}}, true);
  EXPECT_EQ(tre::reverse_joint(sym).table().max_abs_difference(sym.table()), 0.0);

  const auto j = joint(2, 2, {{{0, 1}, 0.7}, {{1, 0}, 0.3}}, false);
  const auto r = tre::reverse_joint(j);
  EXPECT_DOUBLE_EQ(r.prob(ids{1, 0}), 0.7);
  EXPECT_DOUBLE_EQ(r.prob(ids{0, 1}), 0.3);
  EXPECT_FALSE(r.stationary());
  EXPECT_TRUE(tre::reverse_joint(two_state_joint(3)).stationary());
}

TEST(ReverseJoint, InvolutionOnRandomJoints) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t a = 2 + rng() % 4;
    const std::size_t m = 1 + rng() % 4;
    tre::prob_table t(a, m);
    double total = 0.0;
    std::vector<double> w(t.codec().space());
    for (auto& x : w) total += (x = u(rng));
    for (tre::tuple_key k = 0; k < w.size(); ++k) t.set(k, w[k] / total);
    if (std::fabs(t.total() - 1.0) > 1e-12) continue;
    const auto j = tre::joint_distribution::detect(t);
    const auto back = tre::reverse_joint(tre::reverse_joint(j));
    ASSERT_EQ(back.table().max_abs_difference(j.table()), 0.0);
    ASSERT_EQ(back.stationary(), j.stationary());
    ASSERT_NEAR(tre::reverse_joint(j).table().total(), 1.0, 1e-12);
  }
}

TEST(BayesReverse, IidUniformIsSelfReverse) {
  const tre::uniform_model fwd(1, 2);
  tre::prob_table marg(2, 1);
  marg.set(0, 0.5);
  marg.set(1, 0.5);
  const auto rev = tre::bayes_reverse_conditional(fwd, marg);
  for (tre::symbol_id c = 0; c < 2; ++c)
    for (tre::symbol_id s = 0; s < 2; ++s)
      EXPECT_DOUBLE_EQ(rev->prob(c, s), 0.5);
}

TEST(BayesReverse, TwoStateChainByHand) {
  const auto j = two_state_joint();
  const auto fwd = tre::conditional_from_joint(j);
  const auto rev = tre::bayes_reverse_conditional(*fwd, j.leading_marginal());
  // p_rev(0 | 1) = p(1 | 0) pi(0) / pi(1) = 0.1 * (2/3) / (1/3)
  EXPECT_NEAR(p(*rev, {1}, 0), 0.2, 1e-14);
  EXPECT_NEAR(p(*rev, {1}, 1), 0.8, 1e-14);
  // A 2-state chain is always reversible.
  EXPECT_NEAR(p(*rev, {0}, 1), 0.1, 1e-14);
}

TEST(BayesReverse, ReversibleChainMatchesForward) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto pm = tre::make_reversible_chain(2 + seed % 5, seed);
    const auto pi = tre::stationary_distribution(pm);
    ASSERT_LE(tre::detailed_balance_residual(pm, pi), 1e-12);
    for (std::size_t m = 2; m <= 4; ++m) {
      const auto j = tre::joint_tuple_distribution(pm, pi, m);
      const auto fwd = tre::conditional_from_joint(j);
      const auto rev = tre::bayes_reverse_conditional(*fwd, j.leading_marginal());
      for (const auto& [ctx, row] : fwd->rows())
        for (tre::symbol_id s = 0; s < pm.size(); ++s)
          ASSERT_NEAR(rev->prob(ctx, s), row[s], 1e-12);
    }
  }
}

TEST(BayesReverse, ZeroDenominatorContextsAreUnreachable) {
  // Context (1) never follows anything, so reverse context (1) is empty.
  const auto j = joint(2, 2, {{{0, 0}, 1.0}}, true);
  const auto fwd = tre::conditional_from_joint(j);
  const auto rev = tre::bayes_reverse_conditional(*fwd, j.leading_marginal());
  EXPECT_DOUBLE_EQ(rev->prob(0, 0), 1.0);
  EXPECT_THROW(rev->prob(1, 0), tre::zero_context_error);
}

TEST(ModelProperty, RoutesToReverseAgreeAndDoubleReversalReturns) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t a = 2 + rng() % 5;
    const std::size_t m = 1 + rng() % 4;
    const auto pm = tre::make_random_chain(a, rng());
    const auto j = tre::joint_tuple_distribution(pm, tre::stationary_distribution(pm), m);
    const auto marg = j.leading_marginal();
    const auto fwd = tre::conditional_from_joint(j);
    const auto via_joint = tre::conditional_from_joint(tre::reverse_joint(j));
    const auto via_bayes = tre::bayes_reverse_conditional(*fwd, marg);
    const auto back = tre::bayes_reverse_conditional(*via_bayes, marg.reversed());
    for (const auto& [ctx, row] : via_joint->rows())
      for (tre::symbol_id s = 0; s < a; ++s) {
        ASSERT_NEAR(via_bayes->prob(ctx, s), row[s], 1e-12);
        ASSERT_NEAR(back->prob(ctx, s), fwd->prob(ctx, s), 1e-12);
      }
    // Reconstruction: P(s | t) p(t) == J(t s).
    j.table().for_each([&](tre::tuple_key k, double pj) {
      const auto ctx = j.codec().drop_last(k);
      ASSERT_NEAR(fwd->prob(ctx, j.codec().last(k)) * marg[ctx], pj, 1e-12);
    });
  }
}

TEST(TrainNgram, Examples) {
  const auto s = make({0, 1, 0, 1, 0}, 2);
  const auto mle = tre::train_ngram_model(s, 1, 0.0);
  EXPECT_DOUBLE_EQ(p(*mle, {0}, 1), 1.0);
  EXPECT_DOUBLE_EQ(p(*mle, {1}, 0), 1.0);
  EXPECT_EQ(mle->trained_direction(), tre::direction::forward);

  const auto add1 = tre::train_ngram_model(s, 1, 1.0, tre::direction::backward);
  EXPECT_DOUBLE_EQ(p(*add1, {0}, 1), 0.75);
  EXPECT_EQ(add1->trained_direction(), tre::direction::backward);

  const auto uni = tre::train_ngram_model(s, 0, 0.5);
  EXPECT_DOUBLE_EQ(p(*uni, {}, 0), (3 + 0.5) / (5 + 1.0));
  EXPECT_DOUBLE_EQ(p(*uni, {}, 1), (2 + 0.5) / (5 + 1.0));
}

TEST(TrainNgram, Errors) {
  const auto s = make({0, 0, 0, 1}, 3);
  const auto mle = tre::train_ngram_model(s, 1, 0.0);
  EXPECT_THROW(p(*mle, {2}, 0), tre::zero_context_error);
  // Last symbol never starts a window.
  EXPECT_THROW(p(*mle, {1}, 0), tre::zero_context_error);
  const auto smooth = tre::train_ngram_model(s, 1, 0.5);
  EXPECT_DOUBLE_EQ(p(*smooth, {2}, 0), 1.0 / 3.0);
  EXPECT_THROW(tre::train_ngram_model(s, 4, 1.0), tre::order_error);
  EXPECT_THROW(tre::train_ngram_model(s, 1, -1.0), tre::format_error);
  EXPECT_THROW(tre::train_ngram_model(s, 13, 1.0), tre::order_error);
}

TEST(TrainNgram, RowsSumToOne) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t a = 2 + rng() % 6;
    const std::size_t n = rng() % 4;
    const double k = (trial % 3) * 0.5;
    const auto s = make(oracle::random_ids(rng, n + 1 + rng() % 200, a), a);
    const auto m = tre::train_ngram_model(s, n, k);
    for (tre::tuple_key ctx = 0; ctx < m->context_codec().space(); ++ctx) {
      if (!m->reachable(ctx)) continue;
      tre::compensated_sum sum;
      for (tre::symbol_id x = 0; x < a; ++x) sum += m->prob(ctx, x);
      ASSERT_NEAR(sum.value(), 1.0, 1e-12);
    }
  }
}

TEST(TableModel, RejectsBadRows) {
  EXPECT_THROW(tre::table_model(1, 2, {{0, {0.5, 0.4}}}), tre::format_error);
  EXPECT_THROW(tre::table_model(1, 2, {{0, {1.0}}}), tre::format_error);
  EXPECT_THROW(tre::table_model(1, 2, {{5, {0.5, 0.5}}}), tre::format_error);
}

}  // namespace

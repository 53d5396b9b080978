#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "tre/ngram.hpp"

namespace {

using ids = std::vector<tre::symbol_id>;

tre::sequence make(ids v, std::size_t a) {
  return tre::sequence(
      std::make_shared<const tre::alphabet>(tre::alphabet::indexed(a)),
      std::move(v));
}

std::uint64_t count(const tre::ngram_table& t, ids tuple) {
  return t.count(std::span<const tre::symbol_id>(tuple));
}

TEST(CountNgrams, Examples) {
  const auto t = tre::count_ngrams(make({0, 1, 0, 1}, 2), 2);
  EXPECT_EQ(t.window_total(), 3u);
  EXPECT_EQ(t.distinct(), 2u);
  EXPECT_EQ(count(t, {0, 1}), 2u);
  EXPECT_EQ(count(t, {1, 0}), 1u);
  EXPECT_EQ(count(t, {0, 0}), 0u);

  const auto u = tre::count_ngrams(make({0, 0, 0}, 1), 1);
  EXPECT_EQ(count(u, {0}), 3u);

  const auto w = tre::count_ngrams(make({0, 1, 2}, 3), 3);
  EXPECT_EQ(w.distinct(), 1u);
  EXPECT_EQ(count(w, {0, 1, 2}), 1u);
}

TEST(CountNgrams, OrderErrors) {
  const auto s = make({0, 1, 0}, 2);
  EXPECT_THROW(tre::count_ngrams(s, 4), tre::order_error);
  EXPECT_THROW(tre::count_ngrams(s, 0), tre::order_error);
  EXPECT_NO_THROW(tre::count_ngrams(s, 3));
}

TEST(Marginals, Examples) {
  const auto t = tre::count_ngrams(make({0, 1, 0, 1}, 2), 2);
  const auto start = tre::start_marginal(t);
  EXPECT_EQ(start.order(), 1u);
  EXPECT_EQ(count(start, {0}), 2u);
  EXPECT_EQ(count(start, {1}), 1u);
  const auto end = tre::end_marginal(t);
  EXPECT_EQ(count(end, {1}), 2u);
  EXPECT_EQ(count(end, {0}), 1u);

  const auto z = tre::count_ngrams(make({0, 0, 0}, 1), 2);
  EXPECT_EQ(count(tre::start_marginal(z), {0}), 2u);
  EXPECT_EQ(count(tre::end_marginal(z), {0}), 2u);
}

TEST(ReverseTable, Examples) {
  const auto t = tre::count_ngrams(make({0, 1, 0, 1}, 2), 2);
  const auto r = tre::reverse_table(t);
  EXPECT_EQ(count(r, {1, 0}), 2u);
  EXPECT_EQ(count(r, {0, 1}), 1u);
  EXPECT_EQ(r, tre::count_ngrams(make({1, 0, 1, 0}, 2), 2));

  const tre::ngram_table pal(2, 1, 5, {{0, 5}});
  EXPECT_EQ(tre::reverse_table(pal), pal);
}

TEST(NgramProperty, MatchesNaiveCounting) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t a = 1 + rng() % 7;
    const std::size_t n = 1 + rng() % 120;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 5);
    const auto v = oracle::random_ids(rng, n, a);
    const auto t = tre::count_ngrams(make(v, a), k);
    const auto naive = oracle::count(v, k);
    ASSERT_EQ(t.window_total(), n - k + 1);
    ASSERT_EQ(t.sum(), n - k + 1);
    ASSERT_EQ(t.distinct(), naive.size());
    for (const auto& [tuple, c] : naive) ASSERT_EQ(t.count(tuple), c);
    for (const auto& [key, c] : t.entries())
      for (auto s : t.codec().decode(key)) ASSERT_LT(s, a);
  }
}

TEST(NgramProperty, ReverseTableEqualsCountOfReverse) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t a = 1 + rng() % 6;
    const std::size_t n = 1 + rng() % 100;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 6);
    const auto s = make(oracle::random_ids(rng, n, a), a);
    ASSERT_EQ(tre::reverse_table(tre::count_ngrams(s, k)),
              tre::count_ngrams(tre::reverse_sequence(s), k));
  }
}

TEST(NgramProperty, BoundaryIdentityAndWindowSums) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t a = 2 + rng() % 5;
    const std::size_t n = 2 + rng() % 80;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(n - 1, 4);
    const auto v = oracle::random_ids(rng, n, a);
    const auto s = make(v, a);
    const auto t = tre::count_ngrams(s, k + 1);
    const auto start = tre::start_marginal(t);
    const auto end = tre::end_marginal(t);
    ASSERT_EQ(start.sum(), n - k);
    ASSERT_EQ(end.sum(), n - k);
    const ids first(v.begin(), v.begin() + k);
    const ids last(v.end() - k, v.end());
    const auto short_counts = oracle::count(v, k);
    for (const auto& [tuple, c] : short_counts) {
      const std::int64_t expect =
          (first != last) ? (tuple == first) - (tuple == last) : 0;
      ASSERT_EQ(static_cast<std::int64_t>(start.count(tuple)) -
                    static_cast<std::int64_t>(end.count(tuple)),
                expect);
      ASSERT_EQ(start.count(tuple), c - (tuple == last));
      ASSERT_EQ(end.count(tuple), c - (tuple == first));
    }
  }
}

TEST(NgramProperty, ChunkedCountingMatchesSequential) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t a = 2 + rng() % 8;
    const std::size_t n = 10 + rng() % 5000;
    const std::size_t k = 1 + rng() % 5;
    const auto s = make(oracle::random_ids(rng, n, a), a);
    const auto seq = tre::count_ngrams(s, k, 1);
    for (unsigned threads : {2u, 3u, 7u, 64u})
      ASSERT_EQ(tre::count_ngrams(s, k, threads), seq);
  }
}

TEST(NgramProperty, SparsePathMatchesNaive) {
  // 200^4 keys exceeds the dense counting limit.
  std::mt19937_64 rng(29);
  const auto v = oracle::random_ids(rng, 20000, 200);
  const auto s = make(v, 200);
  const auto t = tre::count_ngrams(s, 4, 3);
  const auto naive = oracle::count(v, 4);
  ASSERT_EQ(t.distinct(), naive.size());
  for (const auto& [tuple, c] : naive) ASSERT_EQ(t.count(tuple), c);
  EXPECT_EQ(t, tre::count_ngrams(s, 4, 1));
}

}  // namespace

#pragma once

// Test-only reference implementations. They work on plain vectors, count
// with std::map over explicit tuples and evaluate window by window, so they
// share no code path with the library routines they check.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using ids = std::vector<std::uint32_t>;

inline std::map<ids, std::uint64_t> count(const ids& s, std::size_t k) {
  std::map<ids, std::uint64_t> out;
  for (std::size_t i = 0; i + k <= s.size(); ++i)
    ++out[ids(s.begin() + i, s.begin() + i + k)];
  return out;
}

inline std::uint64_t key_of(const ids& t, std::size_t a) {
  std::uint64_t k = 0;
  for (auto s : t) k = k * a + s;
  return k;
}

/// -sum over windows of log p(next | context), plain left-to-right sum.
inline double window_entropy(
    const ids& s, std::size_t n,
    const std::function<double(const ids&, std::uint32_t)>& prob) {
  long double total = 0.0L;
  for (std::size_t i = 0; i + n < s.size(); ++i) {
    ids ctx(s.begin() + i, s.begin() + i + n);
    total -= std::log(static_cast<long double>(prob(ctx, s[i + n])));
  }
  return static_cast<double>(total);
}

inline ids random_ids(std::mt19937_64& rng, std::size_t length,
                      std::size_t alphabet) {
  std::uniform_int_distribution<std::uint32_t> d(
      0, static_cast<std::uint32_t>(alphabet - 1));
  ids out(length);
  for (auto& v : out) v = d(rng);
  return out;
}

/// Stationary law of a 2-state chain, solved in closed form.
inline std::vector<double> two_state_pi(double p01, double p10) {
  return {p10 / (p01 + p10), p01 / (p01 + p10)};
}

}  // namespace oracle

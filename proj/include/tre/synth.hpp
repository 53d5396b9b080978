#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tre/error.hpp"
#include "tre/kahan.hpp"
#include "tre/models.hpp"
#include "tre/sequence.hpp"
#include "tre/tuple_key.hpp"

namespace tre {

/// SplitMix64 (Steele, Lea, Flood 2014). The state advances by the golden
/// gamma 0x9e3779b97f4a7c15 and each output is a fixed mix of the state, so
/// a seed fully determines the stream on every platform.
class splitmix64 {
 public:
  using result_type = std::uint64_t;

  explicit splitmix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Row-stochastic A x A matrix.
class transition_matrix {
 public:
  transition_matrix(std::size_t size, std::vector<double> entries)
      : size_(size), p_(std::move(entries)) {
    if (size == 0) throw format_error("transition matrix must be nonempty");
    if (p_.size() != size * size)
      throw format_error("transition matrix needs " +
                         std::to_string(size * size) + " entries");
    for (std::size_t i = 0; i < size; ++i) {
      compensated_sum s;
      for (double v : row(i)) {
        if (!(v >= 0.0 && v <= 1.0))
          throw format_error("transition probability outside [0, 1] in row " +
                             std::to_string(i));
        s += v;
      }
      if (std::fabs(s.value() - 1.0) > normalization_tolerance)
        throw format_error("transition row " + std::to_string(i) +
                           " sums to " + std::to_string(s.value()));
    }
  }

  static transition_matrix from_rows(
      const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.size())
        throw format_error("transition matrix must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return transition_matrix(rows.size(), std::move(flat));
  }

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return p_[i * size_ + j];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(p_).subspan(i * size_, size_);
  }

  /// x P for a row vector x.
  std::vector<double> left_multiply(std::span<const double> x) const {
    std::vector<double> out(size_, 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
      if (x[i] == 0.0) continue;
      for (std::size_t j = 0; j < size_; ++j) out[j] += x[i] * p_[i * size_ + j];
    }
    return out;
  }

 private:
  std::size_t size_;
  std::vector<double> p_;
};

namespace detail {

inline bool strongly_connected(const transition_matrix& p) {
  const std::size_t a = p.size();
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(a, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < a; ++j) {
        const double w = transpose ? p(j, i) : p(i, j);
        if (w > 0.0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c; });
  };
  return reaches_all(false) && reaches_all(true);
}

inline void check_distribution(std::span<const double> pi, std::size_t size,
                               const char* what) {
  if (pi.size() != size)
    throw format_error(std::string(what) + " has " +
                       std::to_string(pi.size()) + " entries, expected " +
                       std::to_string(size));
  compensated_sum s;
  for (double v : pi) {
    if (!(v >= 0.0 && v <= 1.0))
      throw format_error(std::string(what) + " has an entry outside [0, 1]");
    s += v;
  }
  if (std::fabs(s.value() - 1.0) > normalization_tolerance)
    throw format_error(std::string(what) + " sums to " +
                       std::to_string(s.value()));
}

}  // namespace detail

/// max_j |(pi P)_j - pi_j|
inline double stationarity_residual(const transition_matrix& p,
                                    std::span<const double> pi) {
  const auto next = p.left_multiply(pi);
  double worst = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j)
    worst = std::max(worst, std::fabs(next[j] - pi[j]));
  return worst;
}

struct power_iteration_options {
  double tolerance = 1e-14;
  std::size_t max_iterations = 1'000'000;
};

/// Power iteration pi <- pi P started from a point mass on state 0, so a
/// periodic chain oscillates instead of converging. Reducible chains are
/// rejected up front.
inline std::vector<double> stationary_distribution(
    const transition_matrix& p, power_iteration_options opt = {}) {
  if (!detail::strongly_connected(p))
    throw convergence_error(
        "transition matrix is reducible; no unique stationary distribution");
  std::vector<double> pi(p.size(), 0.0);
  pi[0] = 1.0;
  bool converged = false;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    auto next = p.left_multiply(pi);
    double diff = 0.0;
    for (std::size_t j = 0; j < pi.size(); ++j)
      diff = std::max(diff, std::fabs(next[j] - pi[j]));
    pi = std::move(next);
    if (diff < opt.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw convergence_error(
        "power iteration did not converge; the chain may be periodic");
  compensated_sum s;
  for (double v : pi) s += v;
  for (double& v : pi) v /= s.value();
  if (stationarity_residual(p, pi) > normalization_tolerance)
    throw convergence_error("stationary distribution residual too large");
  return pi;
}

inline std::vector<double> uniform_distribution(std::size_t size) {
  return std::vector<double>(size, 1.0 / static_cast<double>(size));
}

inline std::vector<double> point_distribution(std::size_t size,
                                              std::size_t index) {
  if (index >= size)
    throw bounds_error("initial state " + std::to_string(index) +
                       " outside alphabet of size " + std::to_string(size));
  std::vector<double> out(size, 0.0);
  out[index] = 1.0;
  return out;
}

namespace detail {

inline symbol_id sample(std::span<const double> weights, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    acc += weights[j];
    last_positive = j;
    if (u < acc) return static_cast<symbol_id>(j);
  }
  return static_cast<symbol_id>(last_positive);
}

}  // namespace detail

/// s0 ~ init, s_{t+1} ~ P[s_t]; one splitmix64 draw per symbol.
inline sequence generate_markov(const transition_matrix& p,
                                std::span<const double> init, std::size_t n,
                                std::uint64_t seed) {
  if (n == 0) throw order_error("sequence length must be at least 1");
  detail::check_distribution(init, p.size(), "initial distribution");
  splitmix64 rng(seed);
  std::vector<symbol_id> ids(n);
  ids[0] = detail::sample(init, rng.uniform());
  for (std::size_t t = 1; t < n; ++t)
    ids[t] = detail::sample(p.row(ids[t - 1]), rng.uniform());
  return sequence(std::make_shared<const alphabet>(alphabet::indexed(p.size())),
                  std::move(ids));
}

/// Exact stationary law of m consecutive symbols:
///   J(s0..s_{m-1}) = pi(s0) * prod P[s_i][s_{i+1}].
inline joint_distribution joint_tuple_distribution(const transition_matrix& p,
                                                   std::span<const double> pi,
                                                   std::size_t m) {
  if (m == 0) throw order_error("tuple length must be at least 1");
  detail::check_distribution(pi, p.size(), "stationary distribution");
  if (stationarity_residual(p, pi) > 1e-10)
    throw non_stationary_error(
        "distribution is not stationary for the transition matrix");
  const std::size_t a = p.size();
  std::vector<double> cur(pi.begin(), pi.end());
  for (std::size_t len = 1; len < m; ++len) {
    std::vector<double> next(cur.size() * a);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const std::size_t last = k % a;
      for (std::size_t s = 0; s < a; ++s) next[k * a + s] = cur[k] * p(last, s);
    }
    cur = std::move(next);
  }
  prob_table table(a, m);
  for (std::size_t k = 0; k < cur.size(); ++k)
    if (cur[k] != 0.0) table.set(k, cur[k]);
  return joint_distribution(std::move(table), true);
}

/// P_ij = w_ij / sum_j w_ij for a symmetric nonnegative weight matrix; the
/// result satisfies detailed balance with pi_i proportional to sum_j w_ij.
inline transition_matrix reversible_chain_from_weights(
    std::size_t size, std::span<const double> weights) {
  if (weights.size() != size * size)
    throw format_error("weight matrix must be square");
  std::vector<double> p(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    compensated_sum s;
    for (std::size_t j = 0; j < size; ++j) {
      if (weights[i * size + j] != weights[j * size + i] ||
          weights[i * size + j] < 0.0)
        throw format_error("weights must be symmetric and nonnegative");
      s += weights[i * size + j];
    }
    if (!(s.value() > 0.0)) throw format_error("weight row sums to zero");
    for (std::size_t j = 0; j < size; ++j)
      p[i * size + j] = weights[i * size + j] / s.value();
  }
  return transition_matrix(size, std::move(p));
}

/// Random reversible chain with strictly positive symmetric weights in
/// [0.05, 1.05).
inline transition_matrix make_reversible_chain(std::size_t size,
                                               std::uint64_t seed) {
  if (size < 2) throw order_error("reversible chain needs at least 2 states");
  splitmix64 rng(seed);
  std::vector<double> w(size * size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = i; j < size; ++j)
      w[i * size + j] = w[j * size + i] = 0.05 + rng.uniform();
  return reversible_chain_from_weights(size, w);
}

/// Random chain with every entry positive (irreducible and aperiodic),
/// generally not reversible.
inline transition_matrix make_random_chain(std::size_t size,
                                           std::uint64_t seed) {
  if (size < 1) throw order_error("chain needs at least 1 state");
  splitmix64 rng(seed);
  std::vector<double> p(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    compensated_sum s;
    for (std::size_t j = 0; j < size; ++j) {
      p[i * size + j] = 0.05 + rng.uniform();
      s += p[i * size + j];
    }
    for (std::size_t j = 0; j < size; ++j) p[i * size + j] /= s.value();
  }
  return transition_matrix(size, std::move(p));
}

/// max over i, j of |pi_i P_ij - pi_j P_ji|
inline double detailed_balance_residual(const transition_matrix& p,
                                        std::span<const double> pi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      worst = std::max(worst, std::fabs(pi[i] * p(i, j) - pi[j] * p(j, i)));
  return worst;
}

/// Order-r source over A symbols: rows[t] is P(next | t) for every r-tuple
/// key t. Sampled by expanding to a first-order chain whose states are
/// r-tuples (alphabet product), then projecting back to symbols.
struct higher_order_source {
  std::size_t alphabet_size;
  std::size_t order;
  std::vector<double> rows;  // A^r rows of A entries
};

inline transition_matrix expand_to_first_order(const higher_order_source& src) {
  const tuple_codec states(src.alphabet_size, src.order);
  const std::size_t a = src.alphabet_size;
  const std::size_t n = states.space();
  if (src.rows.size() != n * a)
    throw format_error("higher-order source needs A^r rows of A entries");
  std::vector<double> p(n * n, 0.0);
  for (tuple_key t = 0; t < n; ++t)
    for (symbol_id s = 0; s < a; ++s)
      p[t * n + (states.drop_first(t) * a + s)] += src.rows[t * a + s];
  return transition_matrix(n, std::move(p));
}

/// Symbols of a state sequence from expand_to_first_order: the first
/// state's r symbols followed by the newest symbol of each later state.
inline sequence project_states(const sequence& states,
                               const higher_order_source& src) {
  const tuple_codec codec(src.alphabet_size, src.order);
  std::vector<symbol_id> ids = codec.decode(states[0]);
  for (std::size_t t = 1; t < states.size(); ++t)
    ids.push_back(codec.last(states[t]));
  return sequence(
      std::make_shared<const alphabet>(alphabet::indexed(src.alphabet_size)),
      std::move(ids));
}

}  // namespace tre

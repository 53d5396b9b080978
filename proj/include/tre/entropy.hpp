#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tre/error.hpp"
#include "tre/kahan.hpp"
#include "tre/models.hpp"
#include "tre/ngram.hpp"
#include "tre/sequence.hpp"

namespace tre {

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

enum class zero_policy {
  error,   // throw zero_probability_error naming the tuple
  report,  // total becomes +inf and the tuple is listed in zero_events
};

struct entropy_options {
  zero_policy on_zero = zero_policy::error;
  /// Worker count for counting and for the reduction. The result is
  /// deterministic for a fixed value; 1 gives the sequential sum.
  unsigned threads = 1;
};

struct entropy_report {
  double total_nats = 0.0;
  double per_symbol_nats = 0.0;
  std::uint64_t window_count = 0;
  std::size_t order = 0;
  direction dir = direction::forward;
  /// (n+1)-tuple keys the model gave probability zero.
  std::vector<tuple_key> zero_events;

  bool finite() const noexcept { return std::isfinite(total_nats); }
};

namespace detail {

// Sums f(entry) over table entries in `threads` contiguous blocks, each
// block compensated, blocks combined in order.
template <typename F>
double reduce_entries(const ngram_table& counts, unsigned threads, F f) {
  const auto entries = counts.entries();
  threads = static_cast<unsigned>(
      std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, entries.size())));
  std::vector<compensated_sum> partial(threads);
  const std::size_t step = (entries.size() + threads - 1) / threads;
  auto run = [&](unsigned t) {
    const std::size_t first = std::min(entries.size(), t * step);
    const std::size_t last = std::min(entries.size(), first + step);
    for (std::size_t i = first; i < last; ++i) partial[t] += f(entries[i]);
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) workers.emplace_back(run, t);
  }
  compensated_sum total;
  for (const auto& p : partial) total.add(p);
  return total.value();
}

inline void check_order_fits(const sequence& s, std::size_t n) {
  check_context_order(n);
  if (s.size() < n + 1)
    throw order_error("sequence of length " + std::to_string(s.size()) +
                      " is too short for context order " + std::to_string(n));
}

}  // namespace detail

/// -sum over the (n+1)-windows of S of log M(next | context), evaluated in
/// count-weighted form: -sum over distinct tuples t of #(t) log M(t).
inline entropy_report conditional_entropy(const ngram_table& counts,
                                          const conditional_model& m,
                                          direction dir = direction::forward,
                                          const entropy_options& opt = {}) {
  const std::size_t n = m.order();
  if (counts.order() != n + 1)
    throw order_error("count table order " + std::to_string(counts.order()) +
                      " does not match model order " + std::to_string(n));
  if (counts.alphabet_size() != m.alphabet_size())
    throw order_error("model and sequence alphabets differ in size");
  const auto& codec = counts.codec();

  entropy_report r;
  r.order = n;
  r.dir = dir;
  r.window_count = counts.window_total();

  // Probabilities are looked up sequentially so errors surface in key order.
  std::vector<double> logs(counts.distinct());
  const auto entries = counts.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const tuple_key key = entries[i].first;
    const double p = m.prob(codec.drop_last(key), codec.last(key));
    if (p <= 0.0) {
      if (opt.on_zero == zero_policy::error)
        throw zero_probability_error("observed tuple " +
                                     format_tuple(codec, key) +
                                     " has zero model probability");
      r.zero_events.push_back(key);
      logs[i] = -std::numeric_limits<double>::infinity();
    } else {
      logs[i] = std::log(p);
    }
  }
  if (!r.zero_events.empty()) {
    r.total_nats = std::numeric_limits<double>::infinity();
    r.per_symbol_nats = r.total_nats;
    return r;
  }
  r.total_nats = -detail::reduce_entries(
      counts, opt.threads, [&](const ngram_table::entry& e) {
        const auto i = static_cast<std::size_t>(&e - entries.data());
        return static_cast<double>(e.second) * logs[i];
      });
  // -0.0 from an all-certain model
  if (r.total_nats == 0.0) r.total_nats = 0.0;
  r.per_symbol_nats = r.total_nats / static_cast<double>(r.window_count);
  return r;
}

inline entropy_report conditional_entropy(const sequence& s,
                                          const conditional_model& m,
                                          direction dir = direction::forward,
                                          const entropy_options& opt = {}) {
  detail::check_order_fits(s, m.order());
  return conditional_entropy(count_ngrams(s, m.order() + 1, opt.threads), m,
                             dir, opt);
}

/// H = H1 + H2 with H1 = -sum #(t) log J(t) over (n+1)-tuples and
/// H2 = sum over n-tuples u of #(u .) log p(u), where #(u .) counts windows
/// starting with u and p is the leading marginal of J.
struct entropy_decomposition {
  double h1 = 0.0;
  double h2 = 0.0;
  double total() const noexcept { return h1 + h2; }
};

inline entropy_decomposition decompose_entropy(const ngram_table& counts,
                                               const joint_distribution& j) {
  if (counts.order() != j.tuple_length())
    throw order_error("count table order does not match joint tuple length");
  const auto& codec = counts.codec();
  entropy_decomposition d;
  compensated_sum h1;
  for (const auto& [key, c] : counts.entries()) {
    const double p = j.prob(key);
    if (p <= 0.0)
      throw zero_probability_error("observed tuple " +
                                   format_tuple(codec, key) +
                                   " has zero joint probability");
    h1 += -static_cast<double>(c) * std::log(p);
  }
  const auto starts = start_marginal(counts);
  const auto marginal = j.leading_marginal();
  compensated_sum h2;
  for (const auto& [key, c] : starts.entries()) {
    const double p = marginal[key];
    if (p <= 0.0)
      throw zero_probability_error("context " +
                                   format_tuple(starts.codec(), key) +
                                   " has zero marginal probability");
    h2 += static_cast<double>(c) * std::log(p);
  }
  d.h1 = h1.value();
  d.h2 = h2.value();
  return d;
}

inline entropy_decomposition decompose_entropy(const sequence& s,
                                               const joint_distribution& j) {
  detail::check_order_fits(s, j.context_order());
  return decompose_entropy(count_ngrams(s, j.tuple_length()), j);
}

struct theorem_report {
  std::size_t order = 0;
  std::uint64_t length = 0;
  bool stationary = true;
  double h_forward = 0.0;
  double h_backward = 0.0;
  /// log p(first n-tuple) - log p(last n-tuple); nullopt when a boundary
  /// tuple has zero marginal mass (possible only in report-only mode).
  std::optional<double> boundary_term;
  std::optional<double> residual;
  /// log(max / min) over n-tuples with positive marginal mass.
  double c_bound = 0.0;
  double h1 = 0.0, h2 = 0.0, h1_rev = 0.0, h2_rev = 0.0;

  double gap() const noexcept { return h_forward - h_backward; }
  double per_symbol_gap() const noexcept {
    return gap() / static_cast<double>(length);
  }
};

struct theorem_options {
  /// Accept non-stationary joints (e.g. plug-in estimates) and report the
  /// residual instead of refusing.
  bool report_only = false;
  unsigned threads = 1;
};

/// Tolerance on the residual for exact stationary joints.
inline constexpr double theorem_residual_tolerance = 1e-8;

/// Evaluates S under the conditionals of J and reverse(S) under the
/// conditionals of reverse_joint(J), and compares their difference with the
/// boundary term log p(x_f) - log p(x_l).
inline theorem_report theorem_check(const sequence& s,
                                    const joint_distribution& j,
                                    const theorem_options& opt = {}) {
  const std::size_t n = j.context_order();
  detail::check_order_fits(s, n);
  if (s.alphabet_size() != j.alphabet_size())
    throw order_error("sequence and joint alphabets differ in size");
  if (!j.stationary() && !opt.report_only)
    throw non_stationary_error(
        "joint distribution is not stationary; the forward/backward identity "
        "does not apply (use report-only mode to compute the residual)");

  theorem_report r;
  r.order = n;
  r.length = s.size();
  r.stationary = j.stationary();

  const auto reversed = reverse_sequence(s);
  const auto jr = reverse_joint(j);
  const auto fwd_counts = count_ngrams(s, n + 1, opt.threads);
  const auto bwd_counts = count_ngrams(reversed, n + 1, opt.threads);
  const entropy_options eopt{zero_policy::error, opt.threads};

  r.h_forward = conditional_entropy(fwd_counts, *conditional_from_joint(j),
                                    direction::forward, eopt)
                    .total_nats;
  r.h_backward = conditional_entropy(bwd_counts, *conditional_from_joint(jr),
                                     direction::backward, eopt)
                     .total_nats;
  const auto fd = decompose_entropy(fwd_counts, j);
  const auto bd = decompose_entropy(bwd_counts, jr);
  r.h1 = fd.h1;
  r.h2 = fd.h2;
  r.h1_rev = bd.h1;
  r.h2_rev = bd.h2;

  if (n == 0) {
    r.boundary_term = 0.0;
    r.c_bound = 0.0;
  } else {
    const auto marginal = j.leading_marginal();
    const tuple_codec codec(s.alphabet_size(), n);
    const tuple_key first = codec.encode(tuple_at(s, 0, n));
    const tuple_key last = codec.encode(tuple_at(s, s.size() - n, n));
    const double pf = marginal[first];
    const double pl = marginal[last];
    if (first == last) {
      r.boundary_term = 0.0;
    } else if (pf > 0.0 && pl > 0.0) {
      r.boundary_term = std::log(pf) - std::log(pl);
    } else if (!opt.report_only) {
      throw zero_probability_error(
          "boundary tuple " + format_tuple(codec, pf > 0.0 ? last : first) +
          " has zero marginal probability");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    marginal.for_each([&](tuple_key, double p) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    });
    r.c_bound = std::log(hi) - std::log(lo);
  }
  if (r.boundary_term) r.residual = r.gap() - *r.boundary_term;
  return r;
}

enum class verdict { forward_easier, backward_easier, indistinguishable };

inline const char* to_string(verdict v) {
  switch (v) {
    case verdict::forward_easier:
      return "forward-easier";
    case verdict::backward_easier:
      return "backward-easier";
    default:
      return "indistinguishable";
  }
}

inline constexpr double default_delta_h_threshold = 1e-4;

struct delta_h_options {
  double k_forward = 1.0;
  double k_backward = 1.0;
  double threshold = default_delta_h_threshold;
  unsigned threads = 1;
};

struct delta_h_report {
  double delta_h_per_symbol = 0.0;
  double h_forward_total = 0.0;
  double h_backward_total = 0.0;
  std::size_t order = 0;
  std::uint64_t length = 0;
  double k_forward = 0.0;
  double k_backward = 0.0;
  double threshold = 0.0;
  verdict direction_verdict = verdict::indistinguishable;
};

/// Positive delta (forward cross-entropy larger) means the reverse
/// direction was easier to learn.
inline verdict classify_delta_h(double delta, double threshold) {
  if (!(threshold > 0.0)) throw format_error("threshold must be positive");
  if (delta > threshold) return verdict::backward_easier;
  if (delta < -threshold) return verdict::forward_easier;
  return verdict::indistinguishable;
}

/// Trains add-k models on S and on reverse(S), evaluates each on its own
/// direction, and returns (H_M(S) - H_Mrev(reverse S)) / N.
inline delta_h_report delta_h(const sequence& s, std::size_t n,
                              const delta_h_options& opt = {}) {
  detail::check_order_fits(s, n);
  const auto reversed = reverse_sequence(s);
  const entropy_options eopt{zero_policy::error, opt.threads};

  const auto fwd_counts = count_ngrams(s, n + 1, opt.threads);
  const auto bwd_counts = count_ngrams(reversed, n + 1, opt.threads);
  const ngram_model fwd(fwd_counts, opt.k_forward, direction::forward);
  const ngram_model bwd(bwd_counts, opt.k_backward, direction::backward);

  delta_h_report r;
  r.order = n;
  r.length = s.size();
  r.k_forward = opt.k_forward;
  r.k_backward = opt.k_backward;
  r.threshold = opt.threshold;
  r.h_forward_total =
      conditional_entropy(fwd_counts, fwd, direction::forward, eopt).total_nats;
  r.h_backward_total =
      conditional_entropy(bwd_counts, bwd, direction::backward, eopt)
          .total_nats;
  r.delta_h_per_symbol =
      (r.h_forward_total - r.h_backward_total) / static_cast<double>(s.size());
  r.direction_verdict = classify_delta_h(r.delta_h_per_symbol, opt.threshold);
  return r;
}

struct symmetry_row {
  tuple_key key = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
};

struct symmetry_report {
  std::size_t order = 0;
  std::size_t alphabet_size = 0;
  /// Number of (n+1)-tuples compared (positive joint mass).
  std::size_t tuple_count = 0;
  double max_gap = 0.0;
  double mean_gap = 0.0;
  /// Largest gaps first, ties by ascending key; at most top_k rows.
  std::vector<symmetry_row> rows;
};

/// Describes how the two sides of each row are evaluated.
inline constexpr const char* symmetry_convention =
    "lhs = M(s_n | s_0..s_{n-1}) * p(s_0..s_{n-1}); "
    "rhs = M_rev(s_0 | s_n..s_1) * p_rev(s_n..s_1), where M_rev is a model "
    "of the reversed sequence (its context lists s_n first) and "
    "p_rev(s_n..s_1) = p(s_1..s_n)";

namespace detail {

// `lead` is indexed by s_0..s_{n-1}; `trail` by s_1..s_n, in forward order.
inline symmetry_report symmetry_rows(const conditional_model& m,
                                     const conditional_model& m_rev,
                                     const joint_distribution& j,
                                     const prob_table& lead,
                                     const prob_table& trail,
                                     std::size_t top_k) {
  const std::size_t n = m.order();
  if (m_rev.order() != n)
    throw order_error("model orders differ: " + std::to_string(n) + " vs " +
                      std::to_string(m_rev.order()));
  if (j.tuple_length() != n + 1 || lead.length() != n || trail.length() != n)
    throw order_error("joint order does not match model order");
  if (m.alphabet_size() != m_rev.alphabet_size() ||
      m.alphabet_size() != j.alphabet_size() ||
      lead.alphabet_size() != j.alphabet_size())
    throw order_error("model and joint alphabets differ in size");

  const auto& codec = j.codec();
  symmetry_report r;
  r.order = n;
  r.alphabet_size = j.alphabet_size();
  std::vector<symmetry_row> rows;
  compensated_sum total_gap;
  j.table().for_each([&](tuple_key key, double) {
    const tuple_key rev = codec.reverse(key);
    symmetry_row row;
    row.key = key;
    row.lhs = m.prob(codec.drop_last(key), codec.last(key)) *
              lead[codec.drop_last(key)];
    row.rhs = m_rev.prob(codec.drop_last(rev), codec.last(rev)) *
              trail[codec.drop_first(key)];
    row.abs_gap = std::fabs(row.lhs - row.rhs);
    total_gap += row.abs_gap;
    r.max_gap = std::max(r.max_gap, row.abs_gap);
    rows.push_back(row);
  });
  r.tuple_count = rows.size();
  if (!rows.empty())
    r.mean_gap = total_gap.value() / static_cast<double>(rows.size());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const symmetry_row& a, const symmetry_row& b) {
                     return a.abs_gap > b.abs_gap;
                   });
  if (rows.size() > top_k) rows.resize(top_k);
  r.rows = std::move(rows);
  return r;
}

}  // namespace detail

/// Per-tuple comparison of M(s_n|s_0..s_{n-1}) p(s_0..s_{n-1}) against
/// M_rev(s_0|s_n..s_1) p_rev(s_n..s_1) over the (n+1)-tuples with positive
/// mass in J. Here p and p_rev come from J: the leading marginal of J and
/// the leading marginal of reverse_joint(J).
inline symmetry_report symmetry_check(const conditional_model& m,
                                      const conditional_model& m_rev,
                                      const joint_distribution& j,
                                      std::size_t top_k) {
  if (j.tuple_length() == 0)
    throw order_error("joint over empty tuples has no contexts");
  return detail::symmetry_rows(m, m_rev, j, j.leading_marginal(),
                               j.trailing_marginal(), top_k);
}

/// Same comparison with an externally estimated n-tuple law p, using
/// p_rev(s_n..s_1) = p(s_1..s_n). J only selects which tuples are compared.
inline symmetry_report symmetry_check(const conditional_model& m,
                                      const conditional_model& m_rev,
                                      const joint_distribution& j,
                                      const prob_table& context_marginals,
                                      std::size_t top_k) {
  return detail::symmetry_rows(m, m_rev, j, context_marginals,
                               context_marginals, top_k);
}

}  // namespace tre

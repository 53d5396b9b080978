#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tre/error.hpp"
#include "tre/kahan.hpp"
#include "tre/ngram.hpp"
#include "tre/sequence.hpp"
#include "tre/tuple_key.hpp"

namespace tre {

inline constexpr double normalization_tolerance = 1e-12;

/// "(0, 1, 2)"
inline std::string format_tuple(const tuple_codec& codec, tuple_key key) {
  std::string out = "(";
  const auto syms = codec.decode(key);
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(syms[i]);
  }
  return out + ")";
}

/// Probability per fixed-length tuple. Dense up to 2^24 keys, hashed above.
class prob_table {
 public:
  static constexpr tuple_key dense_limit = tuple_key{1} << 24;

  prob_table(std::size_t alphabet_size, std::size_t length)
      : codec_(alphabet_size, length), dense_(codec_.space() <= dense_limit) {
    if (dense_) values_.assign(codec_.space(), 0.0);
  }

  const tuple_codec& codec() const noexcept { return codec_; }
  std::size_t alphabet_size() const noexcept { return codec_.alphabet_size(); }
  std::size_t length() const noexcept { return codec_.length(); }

  double operator[](tuple_key key) const {
    if (dense_) return key < values_.size() ? values_[key] : 0.0;
    auto it = sparse_.find(key);
    return it == sparse_.end() ? 0.0 : it->second;
  }

  void set(tuple_key key, double p) {
    if (key >= codec_.space())
      throw bounds_error("key " + std::to_string(key) + " outside table");
    if (dense_)
      values_[key] = p;
    else if (p == 0.0)
      sparse_.erase(key);
    else
      sparse_[key] = p;
  }

  void add(tuple_key key, double p) { set(key, (*this)[key] + p); }

  /// Calls f(key, p) for every nonzero entry in ascending key order.
  template <typename F>
  void for_each(F&& f) const {
    if (dense_) {
      for (tuple_key k = 0; k < values_.size(); ++k)
        if (values_[k] != 0.0) f(k, values_[k]);
      return;
    }
    std::vector<std::pair<tuple_key, double>> sorted(sparse_.begin(),
                                                     sparse_.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [k, p] : sorted) f(k, p);
  }

  double total() const {
    compensated_sum s;
    for_each([&](tuple_key, double p) { s += p; });
    return s.value();
  }

  /// Table over tuples one shorter: sums out the last symbol (leading) or
  /// the first symbol (trailing).
  prob_table leading_marginal() const { return marginal(true); }
  prob_table trailing_marginal() const { return marginal(false); }

  prob_table reversed() const {
    prob_table out(alphabet_size(), length());
    for_each([&](tuple_key k, double p) { out.set(codec_.reverse(k), p); });
    return out;
  }

  double max_abs_difference(const prob_table& other) const {
    double worst = 0.0;
    for_each([&](tuple_key k, double p) {
      worst = std::max(worst, std::fabs(p - other[k]));
    });
    other.for_each([&](tuple_key k, double p) {
      worst = std::max(worst, std::fabs(p - (*this)[k]));
    });
    return worst;
  }

 private:
  prob_table marginal(bool leading) const {
    if (length() == 0)
      throw order_error("cannot marginalize a table of empty tuples");
    // Compensated accumulation per output key.
    std::map<tuple_key, compensated_sum> acc;
    for_each([&](tuple_key k, double p) {
      acc[leading ? codec_.drop_last(k) : codec_.drop_first(k)] += p;
    });
    prob_table out(alphabet_size(), length() - 1);
    for (const auto& [k, s] : acc) out.set(k, s.value());
    return out;
  }

  tuple_codec codec_;
  bool dense_;
  std::vector<double> values_;
  std::unordered_map<tuple_key, double> sparse_;
};

/// Probability distribution over m-tuples (m = n + 1). When flagged
/// stationary, the leading and trailing (m-1)-marginals coincide.
class joint_distribution {
 public:
  joint_distribution(prob_table probs, bool stationary)
      : probs_(std::move(probs)), stationary_(stationary) {
    probs_.for_each([&](tuple_key k, double p) {
      if (!(p >= 0.0 && p <= 1.0))
        throw format_error("probability of " +
                           format_tuple(probs_.codec(), k) +
                           " outside [0, 1]");
    });
    const double total = probs_.total();
    if (std::fabs(total - 1.0) > normalization_tolerance)
      throw format_error("joint distribution sums to " +
                         std::to_string(total) + ", not 1");
    if (stationary_ && tuple_length() > 0) {
      const double gap = marginal_gap();
      if (gap > normalization_tolerance)
        throw non_stationary_error(
            "leading and trailing marginals differ by " + std::to_string(gap));
    }
  }

  /// Flags the distribution stationary iff its marginals agree.
  static joint_distribution detect(prob_table probs) {
    bool stationary = probs.length() == 0 ||
                      probs.leading_marginal().max_abs_difference(
                          probs.trailing_marginal()) <= normalization_tolerance;
    return joint_distribution(std::move(probs), stationary);
  }

  std::size_t tuple_length() const noexcept { return probs_.length(); }
  /// Context order n of the conditionals this joint induces.
  std::size_t context_order() const noexcept { return probs_.length() - 1; }
  std::size_t alphabet_size() const noexcept { return probs_.alphabet_size(); }
  bool stationary() const noexcept { return stationary_; }
  const prob_table& table() const noexcept { return probs_; }
  const tuple_codec& codec() const noexcept { return probs_.codec(); }

  double prob(tuple_key key) const { return probs_[key]; }
  double prob(std::span<const symbol_id> tuple) const {
    return probs_[codec().encode(tuple)];
  }

  /// p(s0..s_{n-1}) = sum over s of J(s0..s_{n-1}, s).
  prob_table leading_marginal() const { return probs_.leading_marginal(); }
  prob_table trailing_marginal() const { return probs_.trailing_marginal(); }

  double marginal_gap() const {
    return probs_.leading_marginal().max_abs_difference(
        probs_.trailing_marginal());
  }

 private:
  prob_table probs_;
  bool stationary_;
};

/// Plug-in joint: window counts divided by the window total.
inline joint_distribution empirical_joint(const ngram_table& counts) {
  prob_table probs(counts.alphabet_size(), counts.order());
  const double w = static_cast<double>(counts.window_total());
  for (const auto& [k, c] : counts.entries())
    probs.set(k, static_cast<double>(c) / w);
  return joint_distribution::detect(std::move(probs));
}

inline joint_distribution reverse_joint(const joint_distribution& j) {
  return joint_distribution(j.table().reversed(), j.stationary());
}

enum class direction { forward, backward };

inline const char* to_string(direction d) {
  return d == direction::forward ? "forward" : "backward";
}

/// P(next | n preceding symbols). Implementations are immutable.
class conditional_model {
 public:
  virtual ~conditional_model() = default;

  std::size_t order() const noexcept { return order_; }
  std::size_t alphabet_size() const noexcept { return context_codec_.alphabet_size(); }
  const tuple_codec& context_codec() const noexcept { return context_codec_; }

  /// Throws zero_context_error for an unreachable context.
  double prob(tuple_key context, symbol_id next) const {
    if (next >= alphabet_size())
      throw bounds_error("symbol id " + std::to_string(next) +
                         " outside alphabet");
    return do_prob(context, next);
  }
  double prob(std::span<const symbol_id> context, symbol_id next) const {
    return prob(context_codec_.encode(context), next);
  }

  bool reachable(tuple_key context) const { return do_reachable(context); }

  /// Contexts the model holds explicit rows for, ascending.
  std::vector<tuple_key> contexts() const { return do_contexts(); }

 protected:
  conditional_model(std::size_t order, std::size_t alphabet_size)
      : order_(order), context_codec_(alphabet_size, order) {
    check_context_order(order);
    (void)tuple_codec(alphabet_size, order + 1);  // key width check
  }

  [[noreturn]] void unreachable(tuple_key context) const {
    throw zero_context_error("context " +
                             format_tuple(context_codec_, context) +
                             " has zero probability mass");
  }

 private:
  virtual double do_prob(tuple_key context, symbol_id next) const = 0;
  virtual bool do_reachable(tuple_key context) const = 0;
  virtual std::vector<tuple_key> do_contexts() const = 0;

  std::size_t order_;
  tuple_codec context_codec_;
};

using model_ptr = std::shared_ptr<const conditional_model>;

/// Explicit rows of next-symbol probabilities; contexts without a row are
/// unreachable.
class table_model final : public conditional_model {
 public:
  using row = std::vector<double>;

  table_model(std::size_t order, std::size_t alphabet_size,
              std::map<tuple_key, row> rows)
      : conditional_model(order, alphabet_size), rows_(std::move(rows)) {
    for (const auto& [ctx, r] : rows_) {
      if (ctx >= context_codec().space() || r.size() != alphabet_size)
        throw format_error("malformed row for context " +
                           std::to_string(ctx));
      compensated_sum s;
      for (double p : r) {
        if (!(p >= 0.0 && p <= 1.0))
          throw format_error("probability outside [0, 1] in context " +
                             format_tuple(context_codec(), ctx));
        s += p;
      }
      if (std::fabs(s.value() - 1.0) > normalization_tolerance)
        throw format_error("row for context " +
                           format_tuple(context_codec(), ctx) + " sums to " +
                           std::to_string(s.value()));
    }
  }

  const std::map<tuple_key, row>& rows() const noexcept { return rows_; }

 private:
  double do_prob(tuple_key context, symbol_id next) const override {
    auto it = rows_.find(context);
    if (it == rows_.end()) unreachable(context);
    return it->second[next];
  }
  bool do_reachable(tuple_key context) const override {
    return rows_.contains(context);
  }
  std::vector<tuple_key> do_contexts() const override {
    std::vector<tuple_key> out;
    out.reserve(rows_.size());
    for (const auto& kv : rows_) out.push_back(kv.first);
    return out;
  }

  std::map<tuple_key, row> rows_;
};

/// 1/A for every context.
class uniform_model final : public conditional_model {
 public:
  uniform_model(std::size_t order, std::size_t alphabet_size)
      : conditional_model(order, alphabet_size) {}

 private:
  double do_prob(tuple_key context, symbol_id) const override {
    if (context >= context_codec().space()) unreachable(context);
    return 1.0 / static_cast<double>(alphabet_size());
  }
  bool do_reachable(tuple_key context) const override {
    return context < context_codec().space();
  }
  std::vector<tuple_key> do_contexts() const override {
    if (context_codec().space() > prob_table::dense_limit)
      throw order_error("too many contexts to enumerate");
    std::vector<tuple_key> out(context_codec().space());
    for (tuple_key k = 0; k < out.size(); ++k) out[k] = k;
    return out;
  }
};

/// Add-k smoothed n-gram model:
///   P(s | t) = (#(t s) + k) / (#(t .) + k A)
/// where #(t .) counts windows starting with t.
class ngram_model final : public conditional_model {
 public:
  ngram_model(ngram_table counts, double k, direction dir)
      : conditional_model(counts.order() - 1, counts.alphabet_size()),
        counts_(std::move(counts)),
        starts_(start_marginal(counts_)),
        k_(k),
        direction_(dir) {
    if (!(k >= 0.0) || !std::isfinite(k))
      throw format_error("smoothing constant must be finite and >= 0");
  }

  double smoothing() const noexcept { return k_; }
  direction trained_direction() const noexcept { return direction_; }
  const ngram_table& counts() const noexcept { return counts_; }

 private:
  double denominator(tuple_key context) const {
    return static_cast<double>(starts_.count(context)) +
           k_ * static_cast<double>(alphabet_size());
  }
  double do_prob(tuple_key context, symbol_id next) const override {
    if (context >= context_codec().space()) unreachable(context);
    const double den = denominator(context);
    if (den <= 0.0) unreachable(context);
    const auto c = counts_.count(counts_.codec().extend(context, next));
    return (static_cast<double>(c) + k_) / den;
  }
  bool do_reachable(tuple_key context) const override {
    return context < context_codec().space() && denominator(context) > 0.0;
  }
  std::vector<tuple_key> do_contexts() const override {
    std::vector<tuple_key> out;
    for (const auto& e : starts_.entries()) out.push_back(e.first);
    return out;
  }

  ngram_table counts_;
  ngram_table starts_;
  double k_;
  direction direction_;
};

/// P(s | t) = J(t s) / sum over s' of J(t s'). Contexts with zero marginal
/// are unreachable.
inline std::shared_ptr<const table_model> conditional_from_joint(
    const joint_distribution& j) {
  if (j.tuple_length() == 0)
    throw order_error("joint over empty tuples has no conditional");
  const auto& codec = j.codec();
  const std::size_t a = j.alphabet_size();
  std::map<tuple_key, table_model::row> rows;
  j.table().for_each([&](tuple_key key, double p) {
    auto& r = rows[codec.drop_last(key)];
    if (r.empty()) r.assign(a, 0.0);
    r[codec.last(key)] = p;
  });
  for (auto& [ctx, r] : rows) {
    compensated_sum s;
    for (double p : r) s += p;
    const double m = s.value();
    for (double& p : r) p /= m;
  }
  return std::make_shared<const table_model>(j.context_order(), a,
                                             std::move(rows));
}

/// Bayes reversal. Given forward conditionals p(s_n | s_0..s_{n-1}) and
/// n-tuple marginals p(s_0..s_{n-1}), returns the model of the reversed
/// sequence: context (s_n, ..., s_1) predicts s_0 with probability
///   p(s_n | s_0..s_{n-1}) p(s_0..s_{n-1}) / p(s_1..s_n),
/// the denominator being the row total. Contexts whose denominator is
/// zero are unreachable in the result.
inline std::shared_ptr<const table_model> bayes_reverse_conditional(
    const conditional_model& fwd, const prob_table& context_marginals) {
  const std::size_t n = fwd.order();
  const std::size_t a = fwd.alphabet_size();
  if (context_marginals.length() != n ||
      context_marginals.alphabet_size() != a)
    throw order_error("context marginals do not match the model's order");
  const tuple_codec full(a, n + 1);
  std::map<tuple_key, table_model::row> rows;
  context_marginals.for_each([&](tuple_key ctx, double pc) {
    for (symbol_id s = 0; s < a; ++s) {
      const double joint = fwd.prob(ctx, s) * pc;
      if (joint == 0.0) continue;
      const tuple_key rev = full.reverse(full.extend(ctx, s));
      auto& r = rows[full.drop_last(rev)];
      if (r.empty()) r.assign(a, 0.0);
      r[full.last(rev)] += joint;
    }
  });
  for (auto& [ctx, r] : rows) {
    compensated_sum s;
    for (double p : r) s += p;
    const double den = s.value();
    if (!(den > 0.0))
      throw zero_context_error("reverse context " +
                               format_tuple(tuple_codec(a, n), ctx) +
                               " has zero denominator");
    for (double& p : r) p /= den;
  }
  return std::make_shared<const table_model>(n, a, std::move(rows));
}

inline std::shared_ptr<const ngram_model> train_ngram_model(
    const sequence& s, std::size_t n, double k,
    direction dir = direction::forward, unsigned threads = 1) {
  check_context_order(n);
  if (s.size() < n + 1)
    throw order_error("sequence of length " + std::to_string(s.size()) +
                      " is too short for context order " + std::to_string(n));
  return std::make_shared<const ngram_model>(count_ngrams(s, n + 1, threads),
                                             k, dir);
}

}  // namespace tre

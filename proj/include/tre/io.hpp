#pragma once

// JSON/CSV surfaces: model and transition-matrix files, report writers.
// Doubles are written with round-trip precision; objects have sorted keys.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tre/entropy.hpp"
#include "tre/error.hpp"
#include "tre/kahan.hpp"
#include "tre/models.hpp"
#include "tre/ngram.hpp"
#include "tre/sequence.hpp"
#include "tre/synth.hpp"

namespace tre::io {

using json = nlohmann::json;

/// Loaders rescale a row (or a joint) whose total is within this of 1 and
/// reject anything further off.
inline constexpr double renormalize_tolerance = 1e-9;

enum class units { nats, bits };

inline const char* to_string(units u) { return u == units::nats ? "nats" : "bits"; }

inline double convert(double nats, units u) {
  return u == units::nats ? nats : nats_to_bits(nats);
}

inline json tuple_ids(const tuple_codec& codec, tuple_key key) {
  json out = json::array();
  for (auto s : codec.decode(key)) out.push_back(s);
  return out;
}

inline json tuple_text(const tuple_codec& codec, tuple_key key,
                       const alphabet& alpha) {
  json out = json::array();
  for (auto s : codec.decode(key)) out.push_back(alpha.display(s));
  return out;
}

inline json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw format_error(what + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  const auto bytes = read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()), path);
}

namespace detail {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw format_error(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw format_error(std::string("bad field '") + name + "': " + e.what());
  }
}

inline tuple_key entry_key(const json& e, const tuple_codec& codec) {
  if (e.contains("key")) {
    const auto k = field<tuple_key>(e, "key");
    if (k >= codec.space())
      throw format_error("entry key " + std::to_string(k) + " out of range");
    return k;
  }
  if (e.contains("tuple"))
    return codec.encode(field<std::vector<symbol_id>>(e, "tuple"));
  throw format_error("entry needs 'key' or 'tuple'");
}

inline double rescale_factor(double total, const std::string& what) {
  if (std::fabs(total - 1.0) >= renormalize_tolerance)
    throw format_error(what + " sums to " + std::to_string(total) +
                       "; refusing to renormalize");
  // Leave already-normalized input untouched so files round-trip exactly.
  return std::fabs(total - 1.0) <= normalization_tolerance ? 1.0 : 1.0 / total;
}

}  // namespace detail

// ---- count reports ---------------------------------------------------------

inline json count_report(const ngram_table& t, const alphabet& alpha) {
  json counts = json::array();
  for (const auto& [key, c] : t.entries())
    counts.push_back({{"key", key},
                      {"tuple", tuple_text(t.codec(), key, alpha)},
                      {"count", c}});
  return {{"order", t.order()},
          {"window_total", t.window_total()},
          {"counts", std::move(counts)}};
}

// ---- transition matrices ---------------------------------------------------

inline transition_matrix transition_from_json(const json& j) {
  const auto a = detail::field<std::size_t>(j, "alphabet_size");
  auto rows = detail::field<std::vector<std::vector<double>>>(j, "rows");
  if (rows.size() != a)
    throw format_error("transition file declares " + std::to_string(a) +
                       " states but has " + std::to_string(rows.size()) +
                       " rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    compensated_sum s;
    for (double v : rows[i]) s += v;
    const double f =
        detail::rescale_factor(s.value(), "transition row " + std::to_string(i));
    for (double& v : rows[i]) v *= f;
  }
  return transition_matrix::from_rows(rows);
}

inline json transition_to_json(const transition_matrix& p) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto r = p.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"alphabet_size", p.size()}, {"rows", std::move(rows)}};
}

// ---- model files -----------------------------------------------------------
//
// {"order": n, "alphabet_size": A, "kind": "joint" | "conditional",
//  "entries": [...]}
// Joint entries carry an (n+1)-tuple {key | tuple, prob}. Conditional
// entries carry {context_key | context, symbol, prob}, or equivalently the
// (n+1)-tuple key of (context, symbol). A joint may set "stationary"; when
// absent it is inferred from its marginals.

using model_file = std::variant<joint_distribution, std::shared_ptr<const table_model>>;

inline joint_distribution joint_from_json(const json& j) {
  const auto n = detail::field<std::size_t>(j, "order");
  const auto a = detail::field<std::size_t>(j, "alphabet_size");
  check_context_order(n);
  const tuple_codec codec(a, n + 1);
  prob_table probs(a, n + 1);
  compensated_sum total;
  for (const auto& e : detail::field<json>(j, "entries")) {
    const auto key = detail::entry_key(e, codec);
    const auto p = detail::field<double>(e, "prob");
    if (!(p >= 0.0)) throw format_error("negative probability in joint");
    probs.add(key, p);
    total += p;
  }
  const double f = detail::rescale_factor(total.value(), "joint distribution");
  prob_table scaled(a, n + 1);
  probs.for_each([&](tuple_key k, double p) { scaled.set(k, p * f); });
  if (j.contains("stationary"))
    return joint_distribution(std::move(scaled),
                              detail::field<bool>(j, "stationary"));
  return joint_distribution::detect(std::move(scaled));
}

inline std::shared_ptr<const table_model> conditional_from_json(const json& j) {
  const auto n = detail::field<std::size_t>(j, "order");
  const auto a = detail::field<std::size_t>(j, "alphabet_size");
  check_context_order(n);
  const tuple_codec ctx_codec(a, n);
  const tuple_codec full(a, n + 1);
  std::map<tuple_key, table_model::row> rows;
  for (const auto& e : detail::field<json>(j, "entries")) {
    tuple_key ctx;
    symbol_id sym;
    if (e.contains("symbol")) {
      sym = detail::field<symbol_id>(e, "symbol");
      if (sym >= a) throw format_error("symbol outside alphabet");
      if (e.contains("context_key")) {
        ctx = detail::field<tuple_key>(e, "context_key");
        if (ctx >= ctx_codec.space())
          throw format_error("context key out of range");
      } else {
        ctx = ctx_codec.encode(detail::field<std::vector<symbol_id>>(e, "context"));
      }
    } else {
      const auto key = detail::entry_key(e, full);
      ctx = full.drop_last(key);
      sym = full.last(key);
    }
    auto& r = rows[ctx];
    if (r.empty()) r.assign(a, 0.0);
    const auto p = detail::field<double>(e, "prob");
    if (!(p >= 0.0)) throw format_error("negative probability in model");
    r[sym] += p;
  }
  for (auto& [ctx, r] : rows) {
    compensated_sum s;
    for (double p : r) s += p;
    const double f = detail::rescale_factor(
        s.value(), "row for context " + format_tuple(ctx_codec, ctx));
    for (double& p : r) p *= f;
  }
  return std::make_shared<const table_model>(n, a, std::move(rows));
}

inline model_file model_from_json(const json& j) {
  const auto kind = detail::field<std::string>(j, "kind");
  if (kind == "joint") return joint_from_json(j);
  if (kind == "conditional") return conditional_from_json(j);
  throw format_error("unknown model kind '" + kind + "'");
}

inline json joint_to_json(const joint_distribution& jd) {
  json entries = json::array();
  jd.table().for_each([&](tuple_key k, double p) {
    entries.push_back(
        {{"key", k}, {"tuple", tuple_ids(jd.codec(), k)}, {"prob", p}});
  });
  return {{"order", jd.context_order()},
          {"alphabet_size", jd.alphabet_size()},
          {"kind", "joint"},
          {"stationary", jd.stationary()},
          {"entries", std::move(entries)}};
}

/// Rows for every context the model enumerates (for smoothed n-gram models,
/// the contexts seen in training).
inline json conditional_to_json(const conditional_model& m) {
  const tuple_codec full(m.alphabet_size(), m.order() + 1);
  json entries = json::array();
  for (tuple_key ctx : m.contexts()) {
    for (symbol_id s = 0; s < m.alphabet_size(); ++s) {
      const double p = m.prob(ctx, s);
      if (p == 0.0) continue;
      const tuple_key key = full.extend(ctx, s);
      entries.push_back({{"key", key},
                         {"tuple", tuple_ids(full, key)},
                         {"context_key", ctx},
                         {"symbol", s},
                         {"prob", p}});
    }
  }
  return {{"order", m.order()},
          {"alphabet_size", m.alphabet_size()},
          {"kind", "conditional"},
          {"entries", std::move(entries)}};
}

// ---- reports ---------------------------------------------------------------

inline json optional_number(const std::optional<double>& v, units u) {
  return v ? json(convert(*v, u)) : json(nullptr);
}

inline json entropy_report_to_json(const entropy_report& r, units u) {
  json zero = json::array();
  for (auto k : r.zero_events) zero.push_back(k);
  return {{"total_nats", r.finite() ? json(r.total_nats) : json("inf")},
          {"total", r.finite() ? json(convert(r.total_nats, u)) : json("inf")},
          {"per_symbol", r.finite() ? json(convert(r.per_symbol_nats, u))
                                    : json("inf")},
          {"window_count", r.window_count},
          {"order", r.order},
          {"direction", to_string(r.dir)},
          {"zero_events", std::move(zero)},
          {"units", to_string(u)}};
}

inline json theorem_report_to_json(const theorem_report& r, units u) {
  return {{"order", r.order},
          {"length", r.length},
          {"stationary", r.stationary},
          {"h_forward", convert(r.h_forward, u)},
          {"h_backward", convert(r.h_backward, u)},
          {"boundary_term", optional_number(r.boundary_term, u)},
          {"residual", optional_number(r.residual, u)},
          {"c_bound", convert(r.c_bound, u)},
          {"h1", convert(r.h1, u)},
          {"h2", convert(r.h2, u)},
          {"h1_rev", convert(r.h1_rev, u)},
          {"h2_rev", convert(r.h2_rev, u)},
          {"gap", convert(r.gap(), u)},
          {"per_symbol_gap", convert(r.per_symbol_gap(), u)},
          {"units", to_string(u)}};
}

inline json delta_h_report_to_json(const delta_h_report& r, units u) {
  return {{"delta_h_per_symbol", convert(r.delta_h_per_symbol, u)},
          {"h_forward_total", convert(r.h_forward_total, u)},
          {"h_backward_total", convert(r.h_backward_total, u)},
          {"n", r.order},
          {"N", r.length},
          {"k_forward", r.k_forward},
          {"k_backward", r.k_backward},
          {"threshold", convert(r.threshold, u)},
          {"direction_verdict", to_string(r.direction_verdict)},
          {"units", to_string(u)}};
}

inline json symmetry_report_to_json(const symmetry_report& r, units u) {
  const tuple_codec codec(r.alphabet_size, r.order + 1);
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"key", row.key},
                    {"tuple", tuple_ids(codec, row.key)},
                    {"lhs", row.lhs},
                    {"rhs", row.rhs},
                    {"abs_gap", row.abs_gap}});
  return {{"order", r.order},
          {"tuple_count", r.tuple_count},
          {"max_gap", r.max_gap},
          {"mean_gap", r.mean_gap},
          {"convention", symmetry_convention},
          {"rows", std::move(rows)},
          {"units", to_string(u)}};
}

inline std::string symmetry_report_to_csv(const symmetry_report& r) {
  const tuple_codec codec(r.alphabet_size, r.order + 1);
  std::ostringstream out;
  out.precision(17);
  out << "key,tuple,lhs,rhs,abs_gap\n";
  for (const auto& row : r.rows) {
    out << row.key << ',';
    const auto ids = codec.decode(row.key);
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
    out << ',' << row.lhs << ',' << row.rhs << ',' << row.abs_gap << '\n';
  }
  return out.str();
}

}  // namespace tre::io

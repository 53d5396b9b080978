// tre: forward/backward conditional entropy tools.
//
//   tre count     --input FILE --order K
//   tre verify    (--transition FILE | --joint FILE | --plugin) ...
//   tre delta-h   (--input FILE | --transition FILE --seeds ...) --order N
//   tre symmetry  (--transition FILE | --joint FILE | --input FILE) ...
//   tre gen       --transition FILE --length N --seed S --out FILE
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tre/io.hpp"
#include "tre/tre.hpp"

namespace {

using tre::io::json;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct run_config {
  std::string input;
  std::string output = "-";
  std::string format = "json";
  std::string tokens;
  bool full_alphabet = false;
  std::size_t ids_alphabet = 0;
  bool bits = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool deterministic = false;
  double threshold = tre::default_delta_h_threshold;

  unsigned workers() const { return deterministic ? 1u : threads; }
  tre::io::units units() const {
    return bits ? tre::io::units::bits : tre::io::units::nats;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tre::format_error("cannot write '" + path + "'");
  out << text;
}

void write_json(const run_config& cfg, const json& j) {
  write_output(cfg.output, j.dump(2) + "\n");
}

tre::sequence load_text(const run_config& cfg) {
  const auto bytes = tre::read_file(cfg.input);
  if (cfg.ids_alphabet > 0) return tre::ingest_ids(bytes, cfg.ids_alphabet);
  if (!cfg.tokens.empty()) {
    const auto list = tre::read_file(cfg.tokens);
    auto alpha = std::make_shared<const tre::alphabet>(
        tre::parse_token_list(std::string(list.begin(), list.end())));
    return tre::ingest_tokens(std::string(bytes.begin(), bytes.end()), alpha);
  }
  return tre::ingest_bytes(bytes, cfg.full_alphabet);
}

std::vector<double> initial_distribution(const tre::transition_matrix& p,
                                         const std::string& init) {
  if (init == "stationary") return tre::stationary_distribution(p);
  if (init == "uniform") return tre::uniform_distribution(p.size());
  std::size_t index = 0;
  try {
    std::size_t used = 0;
    index = std::stoul(init, &used);
    if (used != init.size()) throw std::invalid_argument(init);
  } catch (const std::logic_error&) {
    throw tre::format_error("--init must be stationary, uniform or a state index");
  }
  return tre::point_distribution(p.size(), index);
}

tre::sequence truncate(tre::sequence s, std::size_t prefix) {
  if (prefix == 0 || prefix >= s.size()) return s;
  return s.prefix(prefix);
}

void add_input_flags(CLI::App* app, run_config& cfg) {
  app->add_option("--tokens", cfg.tokens,
                  "Token list (one per line); input is split on whitespace");
  app->add_flag("--full-alphabet", cfg.full_alphabet,
                "Use all 256 byte values as the alphabet");
}

void add_shared_flags(CLI::App* app, run_config& cfg) {
  app->add_option("--output,-o", cfg.output, "Output file (default stdout)");
  app->add_option("--format", cfg.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app->add_flag("--bits", cfg.bits, "Report entropies in bits");
  app->add_option("--threads", cfg.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  app->add_flag("--deterministic", cfg.deterministic,
                "Sequential summation for bit-exact output");
}

// ---- count -----------------------------------------------------------------

struct count_args {
  std::size_t order = 0;
};

int cmd_count(const run_config& cfg, const count_args& a) {
  const auto s = load_text(cfg);
  const auto table = tre::count_ngrams(s, a.order, cfg.workers());
  if (cfg.format == "csv") {
    std::string out = "key,tuple,count\n";
    for (const auto& [key, c] : table.entries()) {
      std::string tuple;
      for (auto id : table.codec().decode(key)) {
        if (!tuple.empty()) tuple += ' ';
        tuple += s.symbols().display(id);
      }
      out += std::to_string(key) + ",\"" + tuple + "\"," + std::to_string(c) + "\n";
    }
    write_output(cfg.output, out);
  } else {
    write_json(cfg, tre::io::count_report(table, s.symbols()));
  }
  return exit_ok;
}

// ---- verify ----------------------------------------------------------------

struct verify_args {
  std::string joint;
  std::string transition;
  bool plugin = false;
  std::size_t order = 1;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::size_t prefix = 0;
  bool report_only = false;
};

int cmd_verify(const run_config& cfg, const verify_args& a) {
  std::optional<tre::joint_distribution> joint;
  std::optional<tre::sequence> seq;

  if (a.plugin) {
    if (cfg.input.empty()) throw tre::format_error("--plugin needs --input");
    seq = truncate(load_text(cfg), a.prefix);
    joint = tre::empirical_joint(tre::count_ngrams(*seq, a.order + 1, cfg.workers()));
  } else if (!a.transition.empty()) {
    const auto p = tre::io::transition_from_json(tre::io::read_json_file(a.transition));
    const auto pi = tre::stationary_distribution(p);
    joint = tre::joint_tuple_distribution(p, pi, a.order + 1);
    if (cfg.input.empty()) {
      if (a.length == 0)
        throw tre::format_error("--transition needs --input or --length");
      seq = tre::generate_markov(p, pi, a.length, a.seed);
    }
  } else if (!a.joint.empty()) {
    auto model = tre::io::model_from_json(tre::io::read_json_file(a.joint));
    if (!std::holds_alternative<tre::joint_distribution>(model))
      throw tre::format_error("--joint file must have kind \"joint\"");
    joint = std::get<tre::joint_distribution>(std::move(model));
  } else {
    throw tre::format_error("verify needs --transition, --joint or --plugin");
  }
  if (!seq) {
    if (cfg.input.empty()) throw tre::format_error("verify needs --input");
    run_config ids = cfg;
    ids.ids_alphabet = joint->alphabet_size();
    seq = truncate(load_text(ids), a.prefix);
  }

  const auto report = tre::theorem_check(
      *seq, *joint, {.report_only = a.report_only, .threads = cfg.workers()});
  write_json(cfg, tre::io::theorem_report_to_json(report, cfg.units()));

  std::cerr << "residual: "
            << (report.residual ? std::to_string(*report.residual) : "undefined")
            << " nats, per-symbol gap: " << report.per_symbol_gap()
            << " nats/symbol\n";
  if (a.report_only) return exit_ok;
  if (!report.residual ||
      std::fabs(*report.residual) > tre::theorem_residual_tolerance) {
    std::cerr << "verification FAILED: |residual| exceeds "
              << tre::theorem_residual_tolerance << " nats\n";
    return exit_failed;
  }
  return exit_ok;
}

// ---- delta-h ---------------------------------------------------------------

struct delta_h_args {
  std::string transition;
  std::size_t order = 1;
  double k = 1.0;
  std::optional<double> k_forward;
  std::optional<double> k_backward;
  std::size_t length = 0;
  std::vector<std::uint64_t> seeds;
  std::string init = "stationary";
  std::string save_forward;
  std::string save_backward;
};

int cmd_delta_h(const run_config& cfg, const delta_h_args& a) {
  tre::delta_h_options opt;
  opt.k_forward = a.k_forward.value_or(a.k);
  opt.k_backward = a.k_backward.value_or(a.k);
  opt.threshold = cfg.threshold;
  opt.threads = cfg.workers();
  if (!(opt.threshold > 0.0)) throw tre::format_error("--threshold must be > 0");

  if (a.transition.empty()) {
    if (cfg.input.empty())
      throw tre::format_error("delta-h needs --input or --transition");
    const auto s = load_text(cfg);
    const auto report = tre::delta_h(s, a.order, opt);
    if (!a.save_forward.empty())
      write_output(a.save_forward,
                   tre::io::conditional_to_json(*tre::train_ngram_model(
                       s, a.order, opt.k_forward, tre::direction::forward))
                           .dump(2) + "\n");
    if (!a.save_backward.empty())
      write_output(a.save_backward,
                   tre::io::conditional_to_json(*tre::train_ngram_model(
                       tre::reverse_sequence(s), a.order, opt.k_backward,
                       tre::direction::backward))
                           .dump(2) + "\n");
    write_json(cfg, tre::io::delta_h_report_to_json(report, cfg.units()));
    return exit_ok;
  }

  if (a.length == 0) throw tre::format_error("--transition needs --length");
  const auto p = tre::io::transition_from_json(tre::io::read_json_file(a.transition));
  const auto init = initial_distribution(p, a.init);
  const auto seeds = a.seeds.empty() ? std::vector<std::uint64_t>{0} : a.seeds;

  json runs = json::array();
  std::vector<double> values;
  for (auto seed : seeds) {
    const auto s = tre::generate_markov(p, init, a.length, seed);
    const auto r = tre::delta_h(s, a.order, opt);
    auto j = tre::io::delta_h_report_to_json(r, cfg.units());
    j["seed"] = seed;
    runs.push_back(std::move(j));
    values.push_back(tre::io::convert(r.delta_h_per_symbol, cfg.units()));
  }
  tre::compensated_sum sum, abs_sum;
  for (double v : values) {
    sum += v;
    abs_sum += std::fabs(v);
  }
  const double count = static_cast<double>(values.size());
  const double mean = sum.value() / count;
  tre::compensated_sum sq;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double stddev =
      values.size() > 1 ? std::sqrt(sq.value() / (count - 1.0)) : 0.0;
  const double mean_abs = abs_sum.value() / count;
  json out = {{"runs", std::move(runs)},
              {"mean", mean},
              {"stddev", stddev},
              {"mean_abs", mean_abs},
              {"within_3_sigma", mean_abs <= 3.0 * stddev},
              {"direction_verdict",
               tre::to_string(tre::classify_delta_h(
                   mean, tre::io::convert(cfg.threshold, cfg.units())))},
              {"units", tre::io::to_string(cfg.units())}};
  write_json(cfg, out);
  return exit_ok;
}

// ---- symmetry --------------------------------------------------------------

struct symmetry_args {
  std::string transition;
  std::string joint;
  // Empty: exact models for a chain/joint, trained add-k models for --input.
  std::string forward;
  std::string backward;
  std::size_t order = 1;
  double k = 1.0;
  std::size_t top = 20;
};

std::shared_ptr<const tre::conditional_model> resolve_model(
    const std::string& spec, const tre::joint_distribution& j, bool backward) {
  if (spec.empty() || spec == "exact")
    return tre::conditional_from_joint(backward ? tre::reverse_joint(j) : j);
  if (spec == "uniform")
    return std::make_shared<const tre::uniform_model>(j.context_order(),
                                                      j.alphabet_size());
  if (spec == "bayes") {
    // Bayes reversal of the exact forward conditionals.
    auto fwd = tre::conditional_from_joint(j);
    if (!backward) return fwd;
    return tre::bayes_reverse_conditional(*fwd, j.leading_marginal());
  }
  auto file = tre::io::model_from_json(tre::io::read_json_file(spec));
  if (auto* m = std::get_if<std::shared_ptr<const tre::table_model>>(&file))
    return *m;
  return tre::conditional_from_joint(std::get<tre::joint_distribution>(file));
}

int cmd_symmetry(const run_config& cfg, const symmetry_args& a) {
  tre::symmetry_report report;
  if (!a.transition.empty() || !a.joint.empty()) {
    std::optional<tre::joint_distribution> j;
    if (!a.transition.empty()) {
      const auto p =
          tre::io::transition_from_json(tre::io::read_json_file(a.transition));
      j = tre::joint_tuple_distribution(p, tre::stationary_distribution(p),
                                        a.order + 1);
    } else {
      auto file = tre::io::model_from_json(tre::io::read_json_file(a.joint));
      if (!std::holds_alternative<tre::joint_distribution>(file))
        throw tre::format_error("--joint file must have kind \"joint\"");
      j = std::get<tre::joint_distribution>(std::move(file));
    }
    const auto m = resolve_model(a.forward, *j, false);
    const auto m_rev = resolve_model(a.backward, *j, true);
    report = tre::symmetry_check(*m, *m_rev, *j, a.top);
  } else {
    if (cfg.input.empty())
      throw tre::format_error("symmetry needs --transition, --joint or --input");
    const auto s = load_text(cfg);
    const auto counts = tre::count_ngrams(s, a.order + 1, cfg.workers());
    const auto j = tre::empirical_joint(counts);
    // p over n-tuples from plain n-gram frequencies (all N-n+1 windows).
    tre::prob_table p(s.alphabet_size(), a.order);
    if (a.order == 0) {
      p.set(0, 1.0);
    } else {
      const auto grams = tre::count_ngrams(s, a.order, cfg.workers());
      for (const auto& [key, c] : grams.entries())
        p.set(key, static_cast<double>(c) / static_cast<double>(grams.window_total()));
    }
    auto load = [&](const std::string& spec, bool backward)
        -> std::shared_ptr<const tre::conditional_model> {
      if (spec.empty() || spec == "trained")
        return tre::train_ngram_model(
            backward ? tre::reverse_sequence(s) : s, a.order, a.k,
            backward ? tre::direction::backward : tre::direction::forward);
      return resolve_model(spec, j, backward);
    };
    report = tre::symmetry_check(*load(a.forward, false), *load(a.backward, true),
                                 j, p, a.top);
  }
  if (cfg.format == "csv")
    write_output(cfg.output, tre::io::symmetry_report_to_csv(report));
  else
    write_json(cfg, tre::io::symmetry_report_to_json(report, cfg.units()));
  return exit_ok;
}

// ---- gen -------------------------------------------------------------------

struct gen_args {
  std::string transition;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::string init = "stationary";
  std::string out;
};

int cmd_gen(const run_config& cfg, const gen_args& a) {
  const auto p = tre::io::transition_from_json(tre::io::read_json_file(a.transition));
  if (p.size() > 256)
    throw tre::format_error("raw byte output supports at most 256 states");
  const auto init = initial_distribution(p, a.init);
  const auto s = tre::generate_markov(p, init, a.length, a.seed);
  std::string bytes(s.size(), '\0');
  for (std::size_t i = 0; i < s.size(); ++i) bytes[i] = static_cast<char>(s[i]);
  write_output(a.out.empty() ? cfg.output : a.out, bytes);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward/backward conditional entropy of symbol sequences"};
  app.require_subcommand(1);
  run_config cfg;

  count_args count;
  auto* count_cmd = app.add_subcommand("count", "Count overlapping k-grams");
  count_cmd->add_option("--input", cfg.input, "Input file")->required();
  count_cmd->add_option("--order", count.order, "Tuple length k")->required();
  add_input_flags(count_cmd, cfg);
  add_shared_flags(count_cmd, cfg);

  verify_args verify;
  auto* verify_cmd = app.add_subcommand(
      "verify", "Check that H_fwd - H_bwd equals the boundary term");
  verify_cmd->add_option("--input", cfg.input,
                         "Sequence file (symbol ids as bytes, or text with --plugin)");
  auto* vt = verify_cmd->add_option("--transition", verify.transition,
                                    "Order-1 transition matrix JSON");
  auto* vj = verify_cmd->add_option("--joint", verify.joint, "Joint model JSON");
  auto* vp = verify_cmd->add_flag("--plugin", verify.plugin,
                                  "Use the input's own empirical joint");
  vt->excludes(vj)->excludes(vp);
  vj->excludes(vp);
  verify_cmd->add_option("--order", verify.order, "Context order n");
  verify_cmd->add_option("--length", verify.length,
                         "Generate a sequence of this length from the chain");
  verify_cmd->add_option("--seed", verify.seed, "Seed for --length");
  verify_cmd->add_option("--prefix", verify.prefix,
                         "Only analyze the first N symbols");
  verify_cmd->add_flag("--report-only", verify.report_only,
                       "Never fail; accept non-stationary joints");
  add_input_flags(verify_cmd, cfg);
  add_shared_flags(verify_cmd, cfg);

  delta_h_args dh;
  auto* dh_cmd = app.add_subcommand(
      "delta-h", "Learnability gap of forward vs backward n-gram models");
  dh_cmd->add_option("--input", cfg.input, "Input file");
  dh_cmd->add_option("--transition", dh.transition,
                     "Generate inputs from this chain instead");
  dh_cmd->add_option("--order", dh.order, "Context order n");
  dh_cmd->add_option("--k", dh.k, "Add-k smoothing for both directions")
      ->check(CLI::NonNegativeNumber);
  dh_cmd->add_option("--k-forward", dh.k_forward, "Forward smoothing")
      ->check(CLI::NonNegativeNumber);
  dh_cmd->add_option("--k-backward", dh.k_backward, "Backward smoothing")
      ->check(CLI::NonNegativeNumber);
  dh_cmd->add_option("--length", dh.length, "Generated sequence length");
  dh_cmd->add_option("--seeds,--seed", dh.seeds, "Seeds, one run each");
  dh_cmd->add_option("--init", dh.init, "stationary, uniform or a state index");
  dh_cmd->add_option("--threshold", cfg.threshold,
                     "Verdict threshold in nats/symbol");
  dh_cmd->add_option("--save-forward", dh.save_forward,
                     "Write the forward model as JSON");
  dh_cmd->add_option("--save-backward", dh.save_backward,
                     "Write the backward model as JSON");
  add_input_flags(dh_cmd, cfg);
  add_shared_flags(dh_cmd, cfg);

  symmetry_args sym;
  auto* sym_cmd = app.add_subcommand(
      "symmetry", "Per-tuple comparison of forward and backward models");
  sym_cmd->add_option("--input", cfg.input,
                      "Train add-k models on this file and its reverse");
  sym_cmd->add_option("--transition", sym.transition, "Exact chain");
  sym_cmd->add_option("--joint", sym.joint, "Joint model JSON");
  sym_cmd->add_option("--forward", sym.forward,
                      "exact, trained, uniform, bayes or a model file");
  sym_cmd->add_option("--backward", sym.backward,
                      "exact, trained, uniform, bayes or a model file");
  sym_cmd->add_option("--order", sym.order, "Context order n");
  sym_cmd->add_option("--k", sym.k, "Add-k smoothing with --input")
      ->check(CLI::NonNegativeNumber);
  sym_cmd->add_option("--top", sym.top, "Rows to emit");
  add_input_flags(sym_cmd, cfg);
  add_shared_flags(sym_cmd, cfg);

  gen_args gen;
  auto* gen_cmd = app.add_subcommand("gen", "Sample a Markov chain");
  gen_cmd->add_option("--transition", gen.transition, "Transition JSON")->required();
  gen_cmd->add_option("--length", gen.length, "Sequence length")->required();
  gen_cmd->add_option("--seed", gen.seed, "64-bit seed");
  gen_cmd->add_option("--init", gen.init, "stationary, uniform or a state index");
  gen_cmd->add_option("--out", gen.out, "Output file (raw symbol-id bytes)");
  add_shared_flags(gen_cmd, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*count_cmd) return cmd_count(cfg, count);
    if (*verify_cmd) return cmd_verify(cfg, verify);
    if (*dh_cmd) return cmd_delta_h(cfg, dh);
    if (*sym_cmd) return cmd_symmetry(cfg, sym);
    if (*gen_cmd) return cmd_gen(cfg, gen);
  } catch (const tre::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

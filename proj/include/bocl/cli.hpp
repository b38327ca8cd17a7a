#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bocl/bench.hpp"
#include "bocl/diagnostics.hpp"
#include "bocl/errors.hpp"
#include "bocl/runner.hpp"
#include "bocl/stats.hpp"
#include "bocl/theory_checks.hpp"
#include "bocl/version.hpp"

namespace bocl::cli {

enum class ExitCode : int { Ok = 0, Runtime = 1, Usage = 2, Numerical = 3, CheckFailure = 4 };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> v{"sdd", "bo-run", "lp-compare", "timing", "theory-check", "large-batch"};
  return v;
}

struct UsageError : InvalidInput {
  std::string key;
  UsageError(std::string k, const std::string& msg) : InvalidInput(msg), key(std::move(k)) {}
};

/// Every field is a flat key in the JSON config file and a --flag of the
/// same name (underscores and dashes are interchangeable on the command line).
struct RunConfig {
  std::string command;
  std::string benchmark;
  std::vector<std::string> surrogates;
  std::vector<std::string> strategies;
  int q = -1;       // -1: command default
  int budget = -1;  // -1: command default
  int n_init = 0;  // 0: 2 d for BO runs, 30 for the diagnostic
  std::vector<std::uint64_t> seeds{0};
  double noise_scale = 0.0;
  std::string acquisition = "ei";
  std::string output_path = "results";
  int repeats = 3;
  int timing_n = 50;
  int timing_d = 6;
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> v{"command",     "benchmark",   "surrogate", "strategy", "q",
                                          "budget",      "n_init",      "seeds",     "noise_scale",
                                          "acquisition", "output_path", "repeats",   "timing_n", "timing_d"};
  return v;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (...) {
    throw UsageError(key, "invalid integer for '" + key + "': " + v);
  }
  if (pos != v.size()) throw UsageError(key, "invalid integer for '" + key + "': " + v);
  return x;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw UsageError(key, "invalid number for '" + key + "': " + v);
  }
  if (pos != v.size() || !std::isfinite(x)) throw UsageError(key, "invalid number for '" + key + "': " + v);
  return x;
}

// "0-19", "0,3,5" or a mix such as "0-4,10".
inline std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_list(v)) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      const auto x = parse_int("seeds", part);
      if (x < 0) throw UsageError("seeds", "seeds must be nonnegative");
      out.push_back(static_cast<std::uint64_t>(x));
    } else {
      const auto a = parse_int("seeds", part.substr(0, dash)), b = parse_int("seeds", part.substr(dash + 1));
      if (a < 0 || b < a) throw UsageError("seeds", "invalid seed range: " + part);
      for (auto s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw UsageError("seeds", "no seeds given");
  return out;
}

inline std::string json_to_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + json_to_text(e);
    return s;
  }
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  throw UsageError("", "unsupported value type in config file");
}

}  // namespace detail

/// Apply one key/value pair. Names are resolved against the registries here.
inline void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "command") {
    c.command = value;
  } else if (key == "benchmark") {
    c.benchmark = value;
  } else if (key == "surrogate") {
    c.surrogates = detail::split_list(value);
  } else if (key == "strategy") {
    c.strategies = detail::split_list(value);
  } else if (key == "q") {
    c.q = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "budget") {
    c.budget = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "n_init") {
    c.n_init = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "seeds" || key == "seed") {
    c.seeds = detail::parse_seeds(value);
  } else if (key == "noise_scale") {
    c.noise_scale = detail::parse_real(key, value);
  } else if (key == "acquisition") {
    c.acquisition = value;
  } else if (key == "output_path") {
    c.output_path = value;
  } else if (key == "repeats") {
    c.repeats = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "timing_n") {
    c.timing_n = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "timing_d") {
    c.timing_d = static_cast<int>(detail::parse_int(key, value));
  } else {
    throw UsageError(key, "unknown key '" + key + "'");
  }
}

inline AcqSpec acquisition_by_name(const std::string& s) {
  if (s == "ei") return AcqSpec::ei();
  if (s == "ucb") return AcqSpec::ucb();
  if (s == "pi") return AcqSpec::pi();
  throw UsageError("acquisition", "unknown acquisition '" + s + "'");
}

/// Fill command-specific defaults and check every field.
inline void finalize(RunConfig& c) {
  const auto& cmds = command_names();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    throw UsageError("command", "unknown command '" + c.command + "'");
  const bool large = c.command == "large-batch";
  if (c.benchmark.empty()) c.benchmark = large ? "levy10" : "hartmann6";
  if (c.q == -1) c.q = large ? 10 : 3;
  if (c.budget == -1) c.budget = large ? 150 : 50;
  if (c.surrogates.empty()) c.surrogates = {"gp", "mq-rbf", "nn", "rf", "rf-rebuild"};
  if (c.strategies.empty()) {
    if (c.command == "lp-compare")
      c.strategies = {"cl-min", "lp", "random"};
    else if (large)
      c.strategies = {"cl-min", "random"};
    else
      c.strategies = {"cl-min"};
  }

  try {
    benchmark_by_name(c.benchmark);
  } catch (const InvalidInput&) {
    throw UsageError("benchmark", "unknown benchmark '" + c.benchmark + "'");
  }
  for (const auto& s : c.surrogates) {
    try {
      surrogate_by_name(s);
    } catch (const InvalidInput&) {
      throw UsageError("surrogate", "unknown surrogate '" + s + "'");
    }
  }
  for (const auto& s : c.strategies) {
    try {
      strategy_by_name(s);
    } catch (const InvalidInput&) {
      throw UsageError("strategy", "unknown strategy '" + s + "'");
    }
  }
  acquisition_by_name(c.acquisition);
  if (c.q < 1) throw UsageError("q", "q must be >= 1");
  if (c.budget < c.q) throw UsageError("budget", "budget must be >= q");
  if (c.n_init < 0) throw UsageError("n_init", "n_init must be >= 0");
  if (c.n_init > 0 && static_cast<std::size_t>(c.n_init) < benchmark_by_name(c.benchmark).dim + 2)
    throw UsageError("n_init", "n_init must be at least d + 2");
  if (!(c.noise_scale >= 0.0)) throw UsageError("noise_scale", "noise_scale must be >= 0");
  if (c.repeats < 3) throw UsageError("repeats", "repeats must be >= 3");
  if (c.timing_n < 4) throw UsageError("timing_n", "timing_n must be >= 4");
  if (c.timing_d < 1) throw UsageError("timing_d", "timing_d must be >= 1");
  if (c.output_path.empty()) throw UsageError("output_path", "output_path must not be empty");
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config", "cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw UsageError("config", std::string("malformed config file: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config", "config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) set_key(c, it.key(), detail::json_to_text(it.value()));
}

/// Parse `<command> [--config FILE] [--key value ...]`. Flags override values
/// from the file.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Batch Bayesian optimization toolkit", "bocl"};
  app.set_help_flag();
  std::string command, config_file;
  app.add_option("command", command)->required();
  app.add_option("--config", config_file);
  std::map<std::string, std::string> flags;
  for (const auto& k : config_keys()) {
    if (k == "command") continue;
    std::string names = "--" + k;
    if (k.find('_') != std::string::npos) {
      std::string dashed = k;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      names += ",--" + dashed;
    }
    if (k == "seeds") names += ",--seed";
    app.add_option(names, flags[k]);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw UsageError("", e.what());
  }

  RunConfig c;
  if (!config_file.empty()) apply_config_file(c, config_file);
  c.command = command;
  for (const auto& k : config_keys()) {
    if (k == "command") continue;
    std::string names = "--" + k;
    if (app.get_option(names)->count() > 0) set_key(c, k, flags[k]);
  }
  finalize(c);
  return c;
}

inline nlohmann::json config_echo(const RunConfig& c) {
  return {{"command", c.command},         {"benchmark", c.benchmark},     {"surrogate", c.surrogates},
          {"strategy", c.strategies},     {"q", c.q},                     {"budget", c.budget},
          {"n_init", c.n_init},           {"seeds", c.seeds},             {"noise_scale", c.noise_scale},
          {"acquisition", c.acquisition}, {"output_path", c.output_path}, {"repeats", c.repeats},
          {"timing_n", c.timing_n},       {"timing_d", c.timing_d}};
}

// ---- output ------------------------------------------------------------

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& p, const std::vector<std::string>& header) : out_(p, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + p.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline nlohmann::json summary_header(const RunConfig& c) {
  return {{"toolkit", "bocl"}, {"version", kVersion}, {"config", config_echo(c)}, {"seeds", c.seeds}};
}

inline std::vector<SurrogateKind> surrogate_kinds(const RunConfig& c) {
  std::vector<SurrogateKind> v;
  for (const auto& s : c.surrogates) v.push_back(surrogate_by_name(s));
  return v;
}

inline std::size_t sdd_n_init(const RunConfig& c) { return c.n_init > 0 ? static_cast<std::size_t>(c.n_init) : 30; }

/// SDD over surrogates x seeds. Writes <stem>.csv and <stem>_members.csv and
/// returns the JSON block.
inline nlohmann::json emit_sdd(const RunConfig& c, const std::filesystem::path& dir, const std::string& stem) {
  const Benchmark bm = benchmark_by_name(c.benchmark);
  const auto kinds = surrogate_kinds(c);
  std::vector<SddReport> reports(kinds.size() * c.seeds.size());
  SddOptions opt;
  opt.acq = acquisition_by_name(c.acquisition);
  parallel_for(reports.size(), worker_count(), [&](std::size_t i) {
    reports[i] = run_sdd(kinds[i / c.seeds.size()], bm, sdd_n_init(c), c.q, c.seeds[i % c.seeds.size()], opt);
  });
  CsvWriter csv(dir / (stem + ".csv"), {"surrogate", "q", "seed", "min_dist", "mean_dist", "diverse"});
  CsvWriter members(dir / (stem + "_members.csv"), {"surrogate", "seed", "member", "min_dist_to_previous"});
  nlohmann::json by = nlohmann::json::object();
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    int diverse = 0;
    std::vector<double> mins;
    for (std::size_t s = 0; s < c.seeds.size(); ++s) {
      const auto& r = reports[k * c.seeds.size() + s];
      csv.row({r.surrogate_name, std::to_string(r.q), std::to_string(r.seed), fmt17(r.min_dist), fmt17(r.mean_dist),
               r.diverse ? "true" : "false"});
      for (std::size_t m = 0; m < r.per_member_min_dist.size(); ++m)
        members.row({r.surrogate_name, std::to_string(r.seed), std::to_string(m + 2), fmt17(r.per_member_min_dist[m])});
      diverse += r.diverse ? 1 : 0;
      mins.push_back(r.min_dist);
    }
    const auto ms = mean_std(mins);
    by[to_string(kinds[k])] = {{"diverse_seeds", diverse},
                               {"total_seeds", c.seeds.size()},
                               {"mean_min_dist", ms.mean},
                               {"units", "raw"}};
  }
  return by;
}

/// BO runs for every strategy x seed. One CSV per trace plus an iteration
/// table; returns the aggregate JSON block.
inline nlohmann::json emit_bo(const RunConfig& c, const std::filesystem::path& dir, const std::string& stem) {
  const Benchmark bm = benchmark_by_name(c.benchmark);
  std::vector<Strategy> strategies;
  for (const auto& s : c.strategies) strategies.push_back(strategy_by_name(s));
  std::vector<BoTrace> traces(strategies.size() * c.seeds.size());
  parallel_for(traces.size(), worker_count(), [&](std::size_t i) {
    BoConfig bc;
    bc.strategy = strategies[i / c.seeds.size()];
    bc.q = c.q;
    bc.budget = c.budget;
    bc.n_init = static_cast<std::size_t>(c.n_init);
    bc.noise_scale = c.noise_scale;
    bc.acq = acquisition_by_name(c.acquisition);
    bc.log_progress = true;
    traces[i] = run_bo(bm, bc, c.seeds[i % c.seeds.size()]);
  });

  nlohmann::json agg = nlohmann::json::object();
  std::map<std::string, std::vector<double>> finals;
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    std::vector<double> fin, fin_true, div;
    for (std::size_t s = 0; s < c.seeds.size(); ++s) {
      const auto& t = traces[k * c.seeds.size() + s];
      const std::string base = stem + "_" + t.strategy + "_seed" + std::to_string(t.seed);
      CsvWriter csv(dir / (base + ".csv"), {"iter", "eval_index", "y_raw", "best_so_far"});
      for (std::size_t e = 0; e < t.points.size(); ++e)
        csv.row({std::to_string(t.iteration[e]), std::to_string(e), fmt17(t.y_observed[e]), fmt17(t.best_so_far[e])});
      CsvWriter it(dir / (base + "_iters.csv"), {"iter", "batch_size", "mean_pairwise_dist"});
      for (std::size_t i = 0; i < t.batch_diversity.size(); ++i) {
        std::size_t size = 0;
        for (int v : t.iteration) size += v == static_cast<int>(i + 1) ? 1 : 0;
        it.row({std::to_string(i + 1), std::to_string(size), fmt17(t.batch_diversity[i])});
      }
      fin.push_back(t.final_best());
      fin_true.push_back(t.final_best_true());
      div.push_back(t.mean_diversity());
    }
    const auto f = mean_std(fin), ft = mean_std(fin_true), dv = mean_std(div);
    agg[to_string(strategies[k])] = {{"final_best_mean", f.mean},   {"final_best_std", f.std},
                                     {"final_true_mean", ft.mean},  {"final_true_std", ft.std},
                                     {"mean_diversity", dv.mean},   {"final_best", fin}};
    finals[to_string(strategies[k])] = fin;
  }
  nlohmann::json tests = nlohmann::json::array();
  for (std::size_t a = 0; a < strategies.size(); ++a)
    for (std::size_t b = a + 1; b < strategies.size(); ++b) {
      const auto& fa = finals[to_string(strategies[a])];
      const auto& fb = finals[to_string(strategies[b])];
      nlohmann::json row = {{"a", to_string(strategies[a])}, {"b", to_string(strategies[b])}};
      try {
        const auto w = wilcoxon_signed_rank(fa, fb);
        row["statistic"] = w.statistic;
        row["p_value"] = w.p_value;
        row["n_pairs"] = w.n_pairs;
      } catch (const std::exception& e) {
        row["error"] = e.what();
      }
      tests.push_back(row);
    }
  return {{"strategies", agg}, {"wilcoxon", tests}};
}

/// Run the command and write its files under c.output_path.
inline ExitCode execute(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output_path);
  fs::create_directories(dir);
  nlohmann::json summary = summary_header(c);
  ExitCode code = ExitCode::Ok;
  const std::string& cmd = c.command;
  if (cmd == "sdd") {
    summary["sdd"] = emit_sdd(c, dir, "sdd");
  } else if (cmd == "bo-run" || cmd == "lp-compare") {
    summary["bo"] = emit_bo(c, dir, cmd == "bo-run" ? "bo" : "lp");
  } else if (cmd == "large-batch") {
    summary["sdd"] = emit_sdd(c, dir, "large_sdd");
    summary["bo"] = emit_bo(c, dir, "large_bo");
  } else if (cmd == "timing") {
    const auto rows = timing_harness(static_cast<std::size_t>(c.timing_n), static_cast<std::size_t>(c.timing_d),
                                     c.q, c.repeats, c.seeds.front());
    std::vector<std::string> header{"surrogate", "mode", "median_seconds"};
    for (int r = 0; r < c.repeats; ++r) header.push_back("repeat_" + std::to_string(r));
    CsvWriter csv(dir / "timing.csv", header);
    nlohmann::json t = nlohmann::json::object();
    for (const auto& row : rows) {
      std::vector<std::string> cells{row.surrogate, row.mode, fmt17(row.median_seconds)};
      for (double v : row.per_repeat) cells.push_back(fmt17(v));
      csv.row(cells);
      t[row.surrogate] = {{"mode", row.mode}, {"median_seconds", row.median_seconds}};
    }
    t["nn_over_gp"] = rows[2].median_seconds / rows[0].median_seconds;
    t["nn_over_rbf"] = rows[2].median_seconds / rows[1].median_seconds;
    summary["timing"] = t;
  } else if (cmd == "theory-check") {
    const auto checks = run_theory_checks(c.seeds.front());
    CsvWriter csv(dir / "theory.csv", {"check", "value", "threshold", "pass"});
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& ck : checks) {
      csv.row({ck.name, fmt17(ck.value), fmt17(ck.threshold), ck.pass ? "true" : "false"});
      arr.push_back({{"check", ck.name}, {"pass", ck.pass}, {"value", ck.value}, {"detail", ck.detail}});
      if (!ck.pass) code = ExitCode::CheckFailure;
    }
    summary["checks"] = arr;
    summary["all_pass"] = code == ExitCode::Ok;
  }
  const std::string name = cmd == "bo-run"      ? "bo"
                           : cmd == "lp-compare" ? "lp"
                           : cmd == "large-batch" ? "large"
                           : cmd == "theory-check" ? "theory"
                                                   : cmd;
  write_json(dir / (name + "_summary.json"), summary);
  std::fputs((summary.dump() + "\n").c_str(), stdout);
  return code;
}

/// Entry point used by the binary: parse, run, map failures to exit codes.
inline int run_main(const std::vector<std::string>& args) {
  RunConfig c;
  try {
    c = parse_config(args);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error%s: %s\n", e.key.empty() ? "" : (" [" + e.key + "]").c_str(), e.what());
    std::fprintf(stderr, "usage: bocl <%s> [--config FILE] [--key value ...]\n",
                 "sdd|bo-run|lp-compare|timing|theory-check|large-batch");
    return static_cast<int>(ExitCode::Usage);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return static_cast<int>(ExitCode::Usage);
  }
  try {
    return static_cast<int>(execute(c));
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return static_cast<int>(ExitCode::Numerical);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::Runtime);
  }
}

}  // namespace bocl::cli

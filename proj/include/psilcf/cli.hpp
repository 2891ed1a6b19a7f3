#pragma once

// Command-line front end. Every subcommand reads an optional flat JSON config
// whose keys are the long flag names; flags given on the command line win.
// Exit codes: 0 success or PASS, 1 check FAIL, 2 usage or config error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psilcf/funclass.hpp"
#include "psilcf/ldt_mc.hpp"
#include "psilcf/psi.hpp"
#include "psilcf/report.hpp"
#include "psilcf/svg.hpp"
#include "psilcf/tails.hpp"

#ifndef PSILCF_VERSION
#define PSILCF_VERSION "0.1.0"
#endif

namespace psilcf::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kOutputDirEnv = "PSILCF_OUTPUT_DIR";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

namespace detail {

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

/// Flag <-> config key table for one subcommand.
class Bindings {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app->add_option("--" + key, var, help)->capture_default_str();
    if constexpr (is_vector<T>::value) o->delimiter(',');
    entries_.push_back({key, o, [&var, key](const json& j) {
                          try {
                            var = j.get<T>();
                          } catch (const json::exception&) {
                            throw ConfigError("config key '" + key + "' has the wrong type");
                          }
                        },
                        [&var] { return json(var); }});
    return o;
  }

  CLI::Option* flag(CLI::App* app, const std::string& key, bool& var, const std::string& help) {
    CLI::Option* o = app->add_flag("--" + key, var, help);
    entries_.push_back({key, o, [&var, key](const json& j) {
                          if (!j.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
                          var = j.get<bool>();
                        },
                        [&var] { return json(var); }});
    return o;
  }

  /// Fills every key the command line left unset; unknown keys are errors.
  void apply(const json& cfg, const std::string& command) {
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : cfg.items()) {
      if (k == "command") {
        if (!v.is_string() || v.get<std::string>() != command)
          throw ConfigError("config is for command '" + v.dump() + "', not '" + command + "'");
        continue;
      }
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == k; });
      if (it == entries_.end()) throw ConfigError("unknown config key '" + k + "' for command '" + command + "'");
      if (it->option->count() == 0) {
        it->set(v);
        from_config_.push_back(k);
      }
    }
  }

  bool given(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.key == key)
        return e.option->count() > 0 || std::find(from_config_.begin(), from_config_.end(), key) != from_config_.end();
    return false;
  }

  json resolved() const {
    json j = json::object();
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };
  std::vector<Entry> entries_;
  std::vector<std::string> from_config_;
};

inline int exit_code(funclass::Verdict v) { return v == funclass::Verdict::Pass ? kExitPass : kExitFail; }

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << content;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s) {
  if (s.empty()) return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// Every field any subcommand can take. Defaults match the library defaults.
struct RunConfig {
  std::string config;
  std::string output_dir;

  // functions and ψ
  std::string g = "x^-3";
  std::string psi = "sqrt(x)";
  double psi_x0 = 1.0;
  std::vector<double> v{-2.0, -1.0, 1.0, 2.0};
  double grid_start = 1e3, grid_ratio = 2.0;
  std::size_t grid_count = 24;
  double tol = 0.01;
  double c = 0.5;
  std::string klass = "all";
  double vmax = 20.0;
  std::vector<double> x{5.0};
  bool inverse = false;

  // build
  std::string kind = "psi-lcf";
  std::string rep_c = "1";
  std::string eps = "1/ln(e+x)";
  double c_limit = 1.0, eps_limit = 0.0;
  bool eps_log_clock = false;

  // tail model
  std::string tail_kind = "pareto";
  double alpha = -3.0, x0 = 1.0, rate = 1.0, c_left = 1.0;
  std::string tail, dominating;

  // experiment
  std::string h;
  std::string regime = "finite";
  double beta = 1.0, zone_c = 1.0;
  std::vector<std::size_t> n{50, 100, 200, 400};
  std::size_t cell_n = 100;
  double cell_x = 100.0;
  std::size_t reps = 10'000'000, bj_reps = 1'000'000;
  std::string estimator = "both";
  std::uint64_t seed = 20240611;
  double N = 5.0;
  std::vector<double> N_sweep{2.0, 5.0, 10.0};
  double band_lo = 0.7, band_hi = 1.4;
  unsigned jobs = 1;
  double max_draws = 1e11;

  // report
  std::string input = "results.csv";
};

class Runner {
 public:
  Runner() : app_("psilcf: psi-locally constant functions and heavy-tailed large deviations", "psilcf") {
    app_.set_version_flag("--version", PSILCF_VERSION);
    app_.require_subcommand(1);
    define();
  }

  int run(int argc, const char* const* argv) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app_.exit(e);
      return code == 0 ? kExitPass : kExitUsage;
    }
    for (auto& [name, cmd] : commands_) {
      if (!cmd.app->parsed()) continue;
      try {
        load_config(cmd);
        return cmd.body(cmd);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n\n" << cmd.app->help();
        return kExitUsage;
      }
    }
    return kExitUsage;
  }

 private:
  struct Command {
    std::string name;
    CLI::App* app = nullptr;
    detail::Bindings bind;
    std::function<int(Command&)> body;
    json verdicts = json::object();
    std::vector<std::string> outputs;
  };

  CLI::App app_;
  RunConfig cfg_;
  std::map<std::string, Command> commands_;

  Command& add(const std::string& name, const std::string& help, std::function<int(Command&)> body) {
    Command& c = commands_[name];
    c.name = name;
    c.app = app_.add_subcommand(name, help);
    c.body = std::move(body);
    c.app->add_option("--config", cfg_.config, "JSON config file (keys are the long flag names)");
    c.bind.add(c.app, "output-dir", cfg_.output_dir, "output directory (env " + std::string(kOutputDirEnv) + ")");
    return c;
  }

  void load_config(Command& c) {
    if (cfg_.config.empty()) return;
    std::ifstream is(cfg_.config);
    if (!is) throw ConfigError("cannot open config '" + cfg_.config + "'");
    json j;
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    c.bind.apply(j, c.name);
  }

  /// Command line, then environment, then config file, then the default.
  std::filesystem::path output_dir(const Command& c) const {
    std::string dir = cfg_.output_dir.empty() ? "psilcf-output" : cfg_.output_dir;
    const char* env = std::getenv(kOutputDirEnv);
    if (env && *env && c.app->get_option("--output-dir")->count() == 0) dir = env;
    std::filesystem::create_directories(dir);
    return dir;
  }

  void emit(Command& c, const std::string& file, const std::string& content) {
    detail::write_file(output_dir(c) / file, content);
    c.outputs.push_back(file);
  }

  void write_manifest(Command& c, json extra = json::object()) {
    json m{{"tool", "psilcf"},
           {"version", PSILCF_VERSION},
           {"command", c.name},
           {"config", c.bind.resolved()},
           {"verdicts", c.verdicts}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["outputs"] = c.outputs;
    detail::write_file(output_dir(c) / "manifest.json", m.dump(2) + "\n");
  }

  // ----- shared option groups ---------------------------------------------

  void psi_options(Command& c) {
    c.bind.add(c.app, "psi", cfg_.psi, "psi(x) expression");
    c.bind.add(c.app, "psi-x0", cfg_.psi_x0, "domain start of psi");
  }

  void lcf_options(Command& c) {
    c.bind.add(c.app, "v", cfg_.v, "shift multipliers");
    c.bind.add(c.app, "grid-start", cfg_.grid_start, "first x of the geometric grid");
    c.bind.add(c.app, "grid-ratio", cfg_.grid_ratio, "ratio of the geometric grid");
    c.bind.add(c.app, "grid-count", cfg_.grid_count, "number of grid points");
    c.bind.add(c.app, "tol", cfg_.tol, "tolerance on H(x) over the large-x half of the grid");
    c.bind.add(c.app, "c", cfg_.c, "pairs with x + v psi(x) < c x are skipped");
  }

  void model_options(Command& c) {
    c.bind.add(c.app, "tail-kind", cfg_.tail_kind, "pareto | exponential | expression")
        ->check(CLI::IsMember({"pareto", "exponential", "expression"}));
    c.bind.add(c.app, "alpha", cfg_.alpha, "tail index (negative)");
    c.bind.add(c.app, "x0", cfg_.x0, "left end of the tail model support");
    c.bind.add(c.app, "rate", cfg_.rate, "exponential rate");
    c.bind.add(c.app, "tail", cfg_.tail, "F+(x) expression for expression models");
    c.bind.add(c.app, "V", cfg_.dominating, "dominating function V(x)");
    c.bind.add(c.app, "c-left", cfg_.c_left, "left-tail constant");
    c.bind.add(c.app, "seed", cfg_.seed, "RNG seed");
    c.bind.add(c.app, "jobs", cfg_.jobs, "worker thread cap")->check(CLI::PositiveNumber);
    c.bind.add(c.app, "max-draws", cfg_.max_draws, "draw budget per estimator call");
  }

  PsiSpec make_psi() const { return PsiSpec::parse(cfg_.psi, PsiOptions{.x0 = cfg_.psi_x0}); }

  funclass::LcfSettings lcf_settings() const {
    if (cfg_.grid_count < 2) throw ConfigError("grid-count must be at least 2");
    if (!(cfg_.tol > 0.0)) throw ConfigError("tol must be positive");
    if (!(cfg_.c > 0.0 && cfg_.c < 1.0)) throw ConfigError("c must lie in (0, 1)");
    funclass::LcfSettings s;
    s.vlist = cfg_.v;
    s.xgrid = numeric::geometric_grid(cfg_.grid_start, cfg_.grid_ratio, cfg_.grid_count);
    s.tol = cfg_.tol;
    s.c = cfg_.c;
    return s;
  }

  tails::TailModel make_model(const Command& c) const {
    if (cfg_.tail_kind == "pareto") return tails::TailModel::pareto(cfg_.alpha, cfg_.x0, cfg_.c_left);
    if (cfg_.tail_kind == "exponential") return tails::TailModel::exponential(cfg_.rate);
    if (cfg_.tail.empty()) throw ConfigError("expression tail model needs --tail");
    std::optional<double> x0;
    if (c.bind.given("x0")) x0 = cfg_.x0;
    std::optional<std::string> V;
    if (!cfg_.dominating.empty()) V = cfg_.dominating;
    return tails::TailModel::from_expr(cfg_.tail, cfg_.alpha, x0, V, cfg_.c_left);
  }

  ldt::RunOptions run_options() const {
    ldt::RunOptions o;
    o.jobs = cfg_.jobs;
    o.max_draws = cfg_.max_draws;
    return o;
  }

  // ----- subcommands ------------------------------------------------------

  void define() {
    {
      auto& c = add("check-psi-lcf", "test g(x + v psi(x)) / g(x) -> 1 on a grid",
                    [this](Command& c) { return check_psi_lcf(c); });
      c.bind.add(c.app, "g", cfg_.g, "g(x) expression");
      psi_options(c);
      lcf_options(c);
    }
    {
      auto& c = add("check-class", "condition (A), class K and class K1 diagnostics for psi",
                    [this](Command& c) { return check_class(c); });
      psi_options(c);
      c.bind.add(c.app, "class", cfg_.klass, "K | K1 | all")->check(CLI::IsMember({"K", "K1", "all"}));
      c.bind.add(c.app, "vmax", cfg_.vmax, "largest shift multiplier for condition (A)");
      c.bind.add(c.app, "grid-start", cfg_.grid_start, "first x of the geometric grid");
      c.bind.add(c.app, "grid-ratio", cfg_.grid_ratio, "ratio of the geometric grid");
      c.bind.add(c.app, "grid-count", cfg_.grid_count, "number of grid points");
    }
    for (const char* name : {"gamma", "theta"}) {
      const bool is_gamma = std::string(name) == "gamma";
      auto& c = add(name, is_gamma ? "gamma(x), the integral of 1/psi from the domain start" : "theta(x) = x/psi(x)",
                    [this, is_gamma](Command& c) { return clock(c, is_gamma); });
      psi_options(c);
      c.bind.add(c.app, "x", cfg_.x, "evaluation points (clock values with --inverse)");
      c.bind.flag(c.app, "inverse", cfg_.inverse, "evaluate the inverse instead");
    }
    {
      auto& c = add("build", "construct g from a (c, eps) representation and check it",
                    [this](Command& c) { return build(c); });
      c.bind.add(c.app, "kind", cfg_.kind, "svf | lcf | psi-lcf")->check(CLI::IsMember({"svf", "lcf", "psi-lcf"}));
      c.bind.add(c.app, "rep-c", cfg_.rep_c, "c(x) expression");
      c.bind.add(c.app, "eps", cfg_.eps, "eps expression");
      c.bind.add(c.app, "c-limit", cfg_.c_limit, "limit of c(x)");
      c.bind.add(c.app, "eps-limit", cfg_.eps_limit, "limit of eps");
      c.bind.flag(c.app, "eps-log-clock", cfg_.eps_log_clock, "eps is written in u = ln t");
      psi_options(c);
      lcf_options(c);
      c.bind.add(c.app, "x", cfg_.x, "points at which to print g");
    }
    {
      auto& c = add("upper-power", "l.c.f. plus g(t) >= c(p) g(pt) with inf c(p) > 0",
                    [this](Command& c) { return upper_power(c); });
      c.bind.add(c.app, "g", cfg_.g, "g(x) expression");
    }
    {
      auto& c = add("simulate", "estimate P(S_n >= x) for one (n, x) cell", [this](Command& c) { return simulate(c); });
      model_options(c);
      c.bind.add(c.app, "n", cfg_.cell_n, "number of summands")->check(CLI::PositiveNumber);
      c.bind.add(c.app, "x", cfg_.cell_x, "threshold");
      c.bind.add(c.app, "reps", cfg_.reps, "crude replications");
      c.bind.add(c.app, "bj-reps", cfg_.bj_reps, "big-jump replications");
      c.bind.add(c.app, "estimator", cfg_.estimator, "crude | big-jump | both");
      c.bind.add(c.app, "N", cfg_.N, "window multiplier for the big-jump estimator");
    }
    {
      auto& c = add("ratio-scan", "ratios p_hat / (n F+(x)) along x = h(n)", [this](Command& c) { return scan(c); });
      model_options(c);
      c.bind.add(c.app, "zone-h", cfg_.h, "zone boundary h(x) with x read as n (overrides beta)");
      c.bind.add(c.app, "beta", cfg_.beta, "power zone h(n) = zone-c n^beta");
      c.bind.add(c.app, "zone-c", cfg_.zone_c, "constant of the power zone");
      c.bind.add(c.app, "regime", cfg_.regime, "finite | infinite (variance)");
      c.bind.add(c.app, "n", cfg_.n, "increasing list of n");
      c.bind.add(c.app, "reps", cfg_.reps, "crude replications per cell");
      c.bind.add(c.app, "bj-reps", cfg_.bj_reps, "big-jump replications per cell");
      c.bind.add(c.app, "estimator", cfg_.estimator, "crude | big-jump | both");
      c.bind.add(c.app, "N", cfg_.N, "window multiplier for the big-jump trend");
      c.bind.add(c.app, "N-sweep", cfg_.N_sweep, "window multipliers reported alongside N");
      c.bind.add(c.app, "band-lo", cfg_.band_lo, "lower end of the ratio band");
      c.bind.add(c.app, "band-hi", cfg_.band_hi, "upper end of the ratio band");
    }
    {
      auto& c = add("report", "plot data, SVG and trend verdicts from a results.csv",
                    [this](Command& c) { return report(c); });
      c.bind.add(c.app, "input", cfg_.input, "results.csv to summarise");
      c.bind.add(c.app, "band-lo", cfg_.band_lo, "lower end of the ratio band");
      c.bind.add(c.app, "band-hi", cfg_.band_hi, "upper end of the ratio band");
    }
  }

  int check_psi_lcf(Command& c) {
    const auto g = PositiveFunction::parse(cfg_.g);
    const auto psi = make_psi();
    const auto d = funclass::check_psi_lcf(g, psi, lcf_settings());
    emit(c, "psi_lcf.csv", report::to_csv(report::rows(d)));
    c.verdicts["psi_lcf"] = report::summary(d);
    write_manifest(c);
    std::cout << "psi_lcf " << funclass::to_string(d.verdict) << "  g=" << g.name() << "  psi=" << psi.name() << "  "
              << d.reason << "\n";
    return detail::exit_code(d.verdict);
  }

  int check_class(Command& c) {
    const auto psi = make_psi();
    std::vector<report::CheckRow> rows;
    std::vector<funclass::Verdict> vs;
    if (cfg_.klass != "K1") {
      if (cfg_.grid_count < 2) throw ConfigError("grid-count must be at least 2");
      const auto grid = numeric::geometric_grid(cfg_.grid_start, cfg_.grid_ratio, cfg_.grid_count);
      funclass::KSettings ks;
      ks.vmax = cfg_.vmax;
      const auto a = funclass::estimate_condition_A(psi, ks.vmax, grid);
      const auto k = funclass::check_class_K(a, ks);
      const auto r = report::rows(a, k);
      rows.insert(rows.end(), r.begin(), r.end());
      c.verdicts["class_K"] = report::summary(a, k);
      vs.push_back(k.verdict);
      std::cout << "class_K " << funclass::to_string(k.verdict) << "  " << k.reason << "\n";
    }
    if (cfg_.klass != "K") {
      const auto k1 = funclass::check_class_K1(psi);
      const auto r = report::rows(k1, psi.name());
      rows.insert(rows.end(), r.begin(), r.end());
      c.verdicts["class_K1"] = report::summary(k1, psi.name());
      vs.push_back(k1.verdict);
      std::cout << "class_K1 " << funclass::to_string(k1.verdict) << "  " << k1.reason << "\n";
    }
    emit(c, "class.csv", report::to_csv(rows));
    write_manifest(c);
    for (auto v : vs)
      if (v != funclass::Verdict::Pass) return kExitFail;
    return kExitPass;
  }

  int clock(Command& c, bool is_gamma) {
    const auto psi = make_psi();
    std::ostringstream csv;
    csv << (cfg_.inverse ? "t,x\n" : "x,value\n");
    json values = json::array();
    for (double x : cfg_.x) {
      double y;
      if (is_gamma) y = cfg_.inverse ? gamma_inverse(psi, x) : gamma(psi, x);
      else y = cfg_.inverse ? theta_inverse(psi, x) : theta(psi, x);
      std::cout << detail::fmt(y) << "\n";
      csv << report::csv_number(x) << ',' << report::csv_number(y) << '\n';
      values.push_back({x, y});
    }
    emit(c, std::string(is_gamma ? "gamma" : "theta") + ".csv", csv.str());
    write_manifest(c, {{"values", values}});
    return kExitPass;
  }

  int build(Command& c) {
    const auto rep = funclass::RepresentationSpec::from_text(cfg_.rep_c, cfg_.eps, cfg_.c_limit, cfg_.eps_limit,
                                                             cfg_.eps_log_clock);
    const auto valid = funclass::validate(rep);
    if (!valid.ok) throw ConfigError("representation rejected: " + valid.reason);
    std::optional<PositiveFunction> g;
    funclass::ConvergenceDiagnostic d;
    const auto s = lcf_settings();
    if (cfg_.kind == "svf") {
      g = funclass::build_svf(rep);
      d = funclass::check_psi_lcf(*g, PsiSpec::power(1.0), s);
    } else if (cfg_.kind == "lcf") {
      g = funclass::build_lcf(rep);
      d = funclass::check_lcf(*g, s);
    } else {
      const auto psi = make_psi();
      g = funclass::build_psi_lcf(rep, psi);
      d = funclass::check_psi_lcf(*g, psi, s);
    }
    std::ostringstream csv;
    csv << "x,g\n";
    for (double x : cfg_.x) {
      const double y = (*g)(x);
      std::cout << "g(" << detail::fmt(x) << ") = " << detail::fmt(y) << "\n";
      csv << report::csv_number(x) << ',' << report::csv_number(y) << '\n';
    }
    emit(c, "build.csv", csv.str());
    emit(c, "build_check.csv", report::to_csv(report::rows(d)));
    c.verdicts["closure"] = report::summary(d);
    write_manifest(c, {{"function", g->name()}});
    std::cout << "closure " << funclass::to_string(d.verdict) << "  " << d.reason << "\n";
    return detail::exit_code(d.verdict);
  }

  int upper_power(Command& c) {
    const auto g = PositiveFunction::parse(cfg_.g);
    const auto r = funclass::check_upper_power(g);
    emit(c, "upper_power.csv", report::to_csv(report::rows(r)));
    c.verdicts["upper_power"] = report::summary(r);
    write_manifest(c);
    std::cout << "upper_power " << funclass::to_string(r.verdict) << "  " << r.reason << "\n";
    return detail::exit_code(r.verdict);
  }

  int simulate(Command& c) {
    const auto model = make_model(c);
    const auto est = ldt::estimator_from_string(cfg_.estimator);
    const std::size_t n = cfg_.cell_n;
    const double x = cfg_.cell_x, nd = static_cast<double>(n);
    const auto opt = run_options();
    std::vector<ldt::EstimateRecord> recs;
    ldt::EstimateRecord base;
    base.n = n;
    base.x = x;
    base.prediction = ldt::prediction(model, n, x);
    base.zone_xlnn = x / std::sqrt(nd * std::log(nd));
    base.zone_ap5 = tails::check_ap5(model, nd, x).ratio;
    base.seed = cfg_.seed;
    if (est != ldt::EstimatorKind::BigJump) {
      const auto r = ldt::crude_mc(model, n, x, cfg_.reps, cfg_.seed, opt);
      for (int which = 0; which < 2; ++which) {
        auto e = base;
        e.estimator = which == 0 ? "crude_sum" : "crude_max";
        e.p_hat = which == 0 ? r.p_sum : r.p_max;
        e.se = which == 0 ? r.se_sum : r.se_max;
        e.ratio = e.p_hat / e.prediction;
        e.reps = cfg_.reps;
        recs.push_back(e);
      }
    }
    if (est != ldt::EstimatorKind::Crude) {
      const auto b = ldt::big_jump_main_term(model, n, x, cfg_.bj_reps, cfg_.N, cfg_.seed, opt);
      auto e = base;
      e.estimator = ldt::big_jump_label(b.N);
      e.p_hat = b.value;
      e.se = b.se;
      e.ratio = e.p_hat / e.prediction;
      e.reps = cfg_.bj_reps;
      recs.push_back(e);
    }
    for (const auto& e : recs)
      std::cout << e.estimator << "  p_hat=" << detail::fmt(e.p_hat) << "  se=" << detail::fmt(e.se)
                << "  prediction=" << detail::fmt(e.prediction) << "  ratio=" << detail::fmt(e.ratio) << "\n";
    emit(c, "results.csv", ldt::results_csv(recs));
    write_manifest(c, {{"model", model.to_json()}});
    return kExitPass;
  }

  void write_plot(Command& c, const std::vector<ldt::EstimateRecord>& recs, const std::string& title) {
    std::ostringstream plot;
    ldt::write_plot_csv(plot, recs);
    emit(c, "plot.csv", plot.str());
    std::vector<svg::Series> series;
    for (const auto& r : recs) {
      auto it = std::find_if(series.begin(), series.end(), [&](const svg::Series& s) { return s.name == r.estimator; });
      if (it == series.end()) {
        series.push_back({r.estimator, {}, {}});
        it = std::prev(series.end());
      }
      it->x.push_back(static_cast<double>(r.n));
      it->y.push_back(r.ratio);
    }
    svg::PlotOptions po;
    po.title = title;
    po.y_label = "p_hat / (n F+(x))";
    emit(c, "plot.svg", svg::line_plot(series, po));
  }

  int scan(Command& c) {
    ldt::Experiment e;
    e.model = make_model(c);
    const auto regime = tails::regime_from_string(cfg_.regime);
    e.zone = cfg_.h.empty() ? tails::ZoneSpec::power(cfg_.zone_c, cfg_.beta, regime)
                            : tails::ZoneSpec::parse(cfg_.h, regime);
    e.ns = cfg_.n;
    e.reps = cfg_.reps;
    e.bj_reps = cfg_.bj_reps;
    e.estimator = ldt::estimator_from_string(cfg_.estimator);
    e.seed = cfg_.seed;
    e.N = cfg_.N;
    e.N_sweep = cfg_.N_sweep;
    e.band_lo = cfg_.band_lo;
    e.band_hi = cfg_.band_hi;
    e.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const auto s = ldt::ratio_scan(e, run_options());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    emit(c, "results.csv", ldt::results_csv(s.records));
    write_plot(c, s.records, "ratio scan: " + e.model.name() + ", h(n) = " + e.zone.h_text);

    json trends = json::array();
    for (const auto& t : s.trends) trends.push_back(ldt::to_json(t));
    c.verdicts["ratio_trend"] = funclass::to_string(s.verdict);
    c.verdicts["trends"] = trends;
    c.verdicts["zone"] = ldt::to_json(s.zone);
    try {
      c.verdicts["psi_consistency"] = ldt::to_json(ldt::psi_consistency_report(e));
    } catch (const std::exception& ex) {
      c.verdicts["psi_consistency"] = {{"error", ex.what()}};
    }
    if (e.estimator == ldt::EstimatorKind::Both && e.model.finite_variance()) {
      const auto x = ldt::cross_check(s, e.N);
      c.verdicts["cross_check"] = {{"N", e.N}, {"n", x.n}, {"z", x.z}, {"pass", x.pass}};
    }
    write_manifest(c, {{"experiment", e.to_json()},
                       {"warnings", s.warnings},
                       {"cell_seconds", s.cell_seconds},
                       {"wall_seconds", seconds},
                       {"band_note", "acceptance band and trend rule are engineering choices"}});

    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& r : s.records)
      std::cout << r.n << "  " << r.estimator << "  ratio=" << detail::fmt(r.ratio) << "  se="
                << detail::fmt(r.se / r.prediction) << "\n";
    for (const auto& t : s.trends)
      std::cout << "trend " << t.estimator << " " << funclass::to_string(t.verdict) << "  " << t.reason << "\n";
    return detail::exit_code(s.verdict);
  }

  int report(Command& c) {
    std::ifstream is(cfg_.input);
    if (!is) throw ConfigError("cannot open '" + cfg_.input + "'");
    std::string line;
    std::getline(is, line);
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* k : {"n", "x", "estimator", "p_hat", "se", "prediction", "ratio"})
      if (!col.count(k)) throw ConfigError(std::string("results file lacks column '") + k + "'");
    std::vector<ldt::EstimateRecord> recs;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto f = detail::split_csv_line(line);
      if (f.size() != header.size()) throw ConfigError("ragged row in '" + cfg_.input + "'");
      ldt::EstimateRecord r;
      r.n = static_cast<std::size_t>(detail::parse_number(f[col["n"]]));
      r.x = detail::parse_number(f[col["x"]]);
      r.estimator = f[col["estimator"]];
      r.p_hat = detail::parse_number(f[col["p_hat"]]);
      r.se = detail::parse_number(f[col["se"]]);
      r.prediction = detail::parse_number(f[col["prediction"]]);
      r.ratio = detail::parse_number(f[col["ratio"]]);
      recs.push_back(r);
    }
    write_plot(c, recs, "ratio by n");

    std::vector<std::string> names;
    for (const auto& r : recs)
      if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
    json trends = json::array();
    bool pass = !names.empty();
    for (const auto& name : names) {
      std::vector<std::pair<std::size_t, const ldt::EstimateRecord*>> rows;
      for (const auto& r : recs)
        if (r.estimator == name) rows.emplace_back(r.n, &r);
      std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
      std::vector<double> ratio, se;
      for (auto& [n, r] : rows) {
        ratio.push_back(r->ratio);
        se.push_back(r->se / r->prediction);
      }
      const auto t = ldt::ratio_trend(name, ratio, se, cfg_.band_lo, cfg_.band_hi);
      trends.push_back(ldt::to_json(t));
      pass = pass && t.verdict == funclass::Verdict::Pass;
      std::cout << "trend " << name << " " << funclass::to_string(t.verdict) << "  " << t.reason << "\n";
    }
    c.verdicts["trends"] = trends;
    write_manifest(c);
    return pass ? kExitPass : kExitFail;
  }
};

inline int run(int argc, const char* const* argv) {
  Runner r;
  return r.run(argc, argv);
}

}  // namespace psilcf::cli

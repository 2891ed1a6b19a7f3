#pragma once

// Monte Carlo for P(S_n >= x) and P(max_{k<=n} S_k >= x) against the
// prediction n F₊(x), plus the big-jump main term
//   n E[F₊(x - S_{n-1}); |S_{n-1}| <= N √n].
//
// Replications are split into a fixed number of shards with their own RNG
// streams; shard tallies are merged in shard order, so results do not
// depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "psilcf/expr.hpp"
#include "psilcf/funclass.hpp"
#include "psilcf/report.hpp"
#include "psilcf/rng.hpp"
#include "psilcf/tails.hpp"

namespace psilcf::ldt {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  unsigned jobs = 1;
  std::size_t shards = 64;
  double max_draws = 1e11;
};

inline constexpr std::uint64_t kCrudeTag = 0xC1;
inline constexpr std::uint64_t kBigJumpTag = 0xB1;

namespace detail {

/// Runs body(shard) for every shard on up to `jobs` threads.
inline void for_each_shard(std::size_t shards, unsigned jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(shards)));
  if (jobs == 1) {
    for (std::size_t s = 0; s < shards; ++s) body(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t s; (s = next.fetch_add(1)) < shards;) {
        try {
          body(s);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t shard_reps(std::size_t reps, std::size_t shards, std::size_t s) {
  return reps / shards + (s < reps % shards ? 1 : 0);
}

/// Calls f with a quantile functor specialised to the model kind.
template <class F>
void with_quantile(const tails::TailModel& m, F&& f) {
  switch (m.kind()) {
    case tails::TailKind::Pareto: {
      const double x0 = m.x0(), inv = 1.0 / m.alpha();
      f([x0, inv](double u) { return x0 * std::exp(std::log(u) * inv); });
      break;
    }
    case tails::TailKind::Exponential: {
      const double r = m.rate();
      f([r](double u) { return -std::log(u) / r; });
      break;
    }
    case tails::TailKind::Expression: f([&m](double u) { return m.quantile(u); }); break;
  }
}

inline void check_budget(double reps, double n, const RunOptions& o) {
  if (reps * n > o.max_draws)
    throw BudgetError("draw budget exceeded: " + expr::format_double(reps * n) + " > " +
                      expr::format_double(o.max_draws));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimators

struct CrudeResult {
  std::size_t n = 0;
  double x = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::size_t hits_sum = 0, hits_max = 0;
  double p_sum = 0.0, p_max = 0.0;
  double se_sum = 0.0, se_max = 0.0;
};

inline CrudeResult crude_mc(const tails::TailModel& model, std::size_t n, double x, std::size_t reps,
                            std::uint64_t seed, const RunOptions& opt = {}) {
  if (n == 0 || reps == 0) throw std::invalid_argument("crude_mc: n and reps must be positive");
  detail::check_budget(static_cast<double>(reps), static_cast<double>(n), opt);
  std::vector<std::size_t> hs(opt.shards, 0), hm(opt.shards, 0);
  const double m = model.mean();
  detail::with_quantile(model, [&](auto q) {
    detail::for_each_shard(opt.shards, opt.jobs, [&](std::size_t s) {
      Rng rng(SamplerState{seed, derive_stream(kCrudeTag, n, s), 0});
      std::size_t a = 0, b = 0;
      const std::size_t r = detail::shard_reps(reps, opt.shards, s);
      for (std::size_t i = 0; i < r; ++i) {
        double S = 0.0;
        bool top = false;
        for (std::size_t k = 0; k < n; ++k) {
          S += q(rng.uniform()) - m;
          top |= S >= x;
        }
        a += S >= x;
        b += top;
      }
      hs[s] = a;
      hm[s] = b;
    });
  });
  CrudeResult out;
  out.n = n;
  out.x = x;
  out.reps = reps;
  out.seed = seed;
  for (std::size_t s = 0; s < opt.shards; ++s) {
    out.hits_sum += hs[s];
    out.hits_max += hm[s];
  }
  const double R = static_cast<double>(reps);
  out.p_sum = static_cast<double>(out.hits_sum) / R;
  out.p_max = static_cast<double>(out.hits_max) / R;
  out.se_sum = std::sqrt(out.p_sum * (1.0 - out.p_sum) / R);
  out.se_max = std::sqrt(out.p_max * (1.0 - out.p_max) / R);
  return out;
}

struct BigJumpResult {
  std::size_t n = 0;
  double x = 0.0;
  double N = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
  double se = 0.0;
};

/// Main term for several window multipliers N from the same S_{n-1} paths.
/// P(ξ >= t) = F₊(t + m) for the centered summand.
inline std::vector<BigJumpResult> big_jump_sweep(const tails::TailModel& model, std::size_t n, double x,
                                                 std::size_t reps, const std::vector<double>& Ns, std::uint64_t seed,
                                                 const RunOptions& opt = {}) {
  if (n == 0 || reps == 0) throw std::invalid_argument("big_jump_main_term: n and reps must be positive");
  for (double N : Ns)
    if (!(N > 0.0)) throw std::invalid_argument("big_jump_main_term: N must be positive");
  detail::check_budget(static_cast<double>(reps), static_cast<double>(n - 1), opt);
  const double m = model.mean();
  const double root = std::sqrt(static_cast<double>(n));
  std::vector<BigJumpResult> out(Ns.size());
  for (std::size_t j = 0; j < Ns.size(); ++j) out[j] = {n, x, Ns[j], reps, seed, 0.0, 0.0};
  if (n == 1) {
    for (auto& r : out) r.value = model.tail(x + m);
    return out;
  }
  std::vector<std::vector<double>> sum(opt.shards, std::vector<double>(Ns.size())), sum2 = sum;
  detail::with_quantile(model, [&](auto q) {
    detail::for_each_shard(opt.shards, opt.jobs, [&](std::size_t s) {
      Rng rng(SamplerState{seed, derive_stream(kBigJumpTag, n, s), 0});
      const std::size_t r = detail::shard_reps(reps, opt.shards, s);
      std::vector<double> a(Ns.size(), 0.0), b(Ns.size(), 0.0);
      for (std::size_t i = 0; i < r; ++i) {
        double S = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) S += q(rng.uniform()) - m;
        const double f = model.tail(x - S + m);
        for (std::size_t j = 0; j < Ns.size(); ++j)
          if (std::fabs(S) <= Ns[j] * root) {
            a[j] += f;
            b[j] += f * f;
          }
      }
      sum[s] = a;
      sum2[s] = b;
    });
  });
  const double R = static_cast<double>(reps);
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t s = 0; s < opt.shards; ++s) {
      a += sum[s][j];
      b += sum2[s][j];
    }
    const double mean = a / R;
    const double var = std::max(0.0, b / R - mean * mean);
    out[j].value = static_cast<double>(n) * mean;
    out[j].se = static_cast<double>(n) * std::sqrt(var / R);
  }
  return out;
}

inline BigJumpResult big_jump_main_term(const tails::TailModel& model, std::size_t n, double x, std::size_t reps,
                                        double N, std::uint64_t seed, const RunOptions& opt = {}) {
  return big_jump_sweep(model, n, x, reps, {N}, seed, opt).front();
}

/// n F₊(x), the large-deviation prediction.
inline double prediction(const tails::TailModel& model, std::size_t n, double x) {
  return static_cast<double>(n) * model.tail(x);
}

// ---------------------------------------------------------------------------
// Experiments

enum class EstimatorKind { Crude, BigJump, Both };

inline std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Crude: return "crude";
    case EstimatorKind::BigJump: return "big-jump";
    case EstimatorKind::Both: return "both";
  }
  return "?";
}

inline EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "crude") return EstimatorKind::Crude;
  if (s == "big-jump" || s == "big_jump") return EstimatorKind::BigJump;
  if (s == "both") return EstimatorKind::Both;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

struct Experiment {
  tails::TailModel model = tails::TailModel::pareto(-3.0);
  tails::ZoneSpec zone = tails::ZoneSpec::power(1.0, 1.0, tails::Regime::FiniteVariance);
  std::vector<std::size_t> ns{50, 100, 200, 400};
  std::size_t reps = 10'000'000;
  std::size_t bj_reps = 1'000'000;
  EstimatorKind estimator = EstimatorKind::Both;
  std::uint64_t seed = 20240611;
  double N = 5.0;
  std::vector<double> N_sweep{2.0, 5.0, 10.0};
  double band_lo = 0.7, band_hi = 1.4;

  void validate() const {
    if (reps < 10'000) throw std::invalid_argument("experiment: reps must be >= 1e4");
    if (estimator != EstimatorKind::Crude && bj_reps < 10'000)
      throw std::invalid_argument("experiment: bj_reps must be >= 1e4");
    if (ns.empty()) throw std::invalid_argument("experiment: empty n list");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (ns[i] == 0) throw std::invalid_argument("experiment: n must be positive");
      if (i && !(ns[i] > ns[i - 1])) throw std::invalid_argument("experiment: n list must increase");
    }
    if (!(N > 0.0)) throw std::invalid_argument("experiment: N must be positive");
    if (!(band_lo > 0.0 && band_hi > band_lo)) throw std::invalid_argument("experiment: invalid ratio band");
  }

  nlohmann::json to_json() const {
    nlohmann::json z{{"h", zone.h_text}, {"regime", tails::to_string(zone.regime)}};
    if (zone.beta) {
      z["beta"] = *zone.beta;
      z["c"] = zone.c;
    }
    return {{"model", model.to_json()}, {"zone", z},          {"n", ns},           {"reps", reps},
            {"bj_reps", bj_reps},      {"estimator", to_string(estimator)}, {"seed", seed},
            {"N", N},                  {"N_sweep", N_sweep},  {"band", {band_lo, band_hi}}};
  }
};

struct EstimateRecord {
  std::size_t n = 0;
  double x = 0.0;
  std::string estimator;
  double p_hat = 0.0;
  double se = 0.0;
  double prediction = 0.0;
  double ratio = 0.0;
  double zone_xlnn = 0.0;  // x / √(n ln n)
  double zone_ap5 = 0.0;   // n V(x)² / F₊(x)
  std::size_t reps = 0;
  std::uint64_t seed = 0;
};

struct TrendCheck {
  std::string estimator;
  std::vector<double> ratio, ratio_se;
  bool in_band = false;
  bool toward_one = false;
  funclass::Verdict verdict = funclass::Verdict::Fail;
  std::string reason;
};

/// Last ratio inside [lo, hi]; each step no farther from 1 than the previous,
/// up to 3 combined standard errors.
inline TrendCheck ratio_trend(std::string name, const std::vector<double>& r, const std::vector<double>& se,
                              double lo, double hi) {
  TrendCheck t;
  t.estimator = std::move(name);
  t.ratio = r;
  t.ratio_se = se;
  if (r.empty()) {
    t.reason = "no ratios";
    return t;
  }
  t.in_band = r.back() >= lo && r.back() <= hi;
  t.toward_one = true;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double slack = 3.0 * std::hypot(se[i], se[i - 1]);
    if (std::fabs(r[i] - 1.0) > std::fabs(r[i - 1] - 1.0) + slack) t.toward_one = false;
  }
  if (std::fabs(r.back() - 1.0) > std::fabs(r.front() - 1.0) + 3.0 * std::hypot(se.back(), se.front()))
    t.toward_one = false;
  if (!t.in_band) {
    t.reason = "ratio at the largest n lies outside [" + expr::format_double(lo) + ", " + expr::format_double(hi) + "]";
  } else if (!t.toward_one) {
    t.reason = "ratios move away from 1";
  } else {
    t.verdict = funclass::Verdict::Pass;
    t.reason = "ratios approach 1 within the band";
  }
  return t;
}

struct ZoneDiagnostics {
  std::vector<double> xlnn, ap5, x_over_sigma;
  bool xlnn_increasing = false, ap5_decreasing = false, sigma_increasing = false;
  bool ap5_sufficient = false;
  tails::ZoneCheck zone_check;
};

struct ScanResult {
  std::vector<EstimateRecord> records;
  std::vector<CrudeResult> crude;
  std::vector<std::vector<BigJumpResult>> big_jump;  // per n, per N in the sweep
  std::vector<TrendCheck> trends;
  ZoneDiagnostics zone;
  std::vector<std::string> warnings;
  std::vector<double> cell_seconds;
  funclass::Verdict verdict = funclass::Verdict::Fail;
};

inline std::string big_jump_label(double N) { return "big_jump_N=" + expr::format_double(N); }

namespace detail {

inline bool strictly(const std::vector<double>& v, bool increasing) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace detail

inline ZoneDiagnostics zone_diagnostics(const Experiment& e) {
  ZoneDiagnostics z;
  std::vector<double> nd(e.ns.begin(), e.ns.end());
  for (double n : nd) {
    const double x = e.zone(n);
    z.xlnn.push_back(x / std::sqrt(n * std::log(n)));
    z.ap5.push_back(tails::check_ap5(e.model, n, x).ratio);
    if (e.model.kind() != tails::TailKind::Exponential) z.x_over_sigma.push_back(x / tails::sigma(e.model, n));
  }
  z.xlnn_increasing = detail::strictly(z.xlnn, true);
  z.ap5_decreasing = detail::strictly(z.ap5, false);
  z.sigma_increasing = !z.x_over_sigma.empty() && detail::strictly(z.x_over_sigma, true);
  if (e.model.kind() != tails::TailKind::Exponential) {
    z.ap5_sufficient = tails::check_ap5(e.model, nd.back(), e.zone(nd.back())).sufficient;
    z.zone_check = tails::validate_zone(e.zone, e.model, nd);
  }
  return z;
}

inline ScanResult ratio_scan(const Experiment& e, const RunOptions& opt = {}) {
  e.validate();
  ScanResult out;
  out.zone = zone_diagnostics(e);
  std::vector<double> Ns = e.N_sweep;
  if (std::find(Ns.begin(), Ns.end(), e.N) == Ns.end()) Ns.insert(Ns.begin(), e.N);
  std::vector<double> rs, rse, rm, rmse, rb, rbse;
  for (std::size_t i = 0; i < e.ns.size(); ++i) {
    const std::size_t n = e.ns[i];
    const double x = e.zone(static_cast<double>(n));
    const double pred = prediction(e.model, n, x);
    const auto t0 = std::chrono::steady_clock::now();
    EstimateRecord base;
    base.n = n;
    base.x = x;
    base.prediction = pred;
    base.zone_xlnn = out.zone.xlnn[i];
    base.zone_ap5 = out.zone.ap5[i];
    base.seed = e.seed;
    if (e.estimator != EstimatorKind::BigJump) {
      if (pred < 100.0 / static_cast<double>(e.reps))
        out.warnings.push_back("n=" + std::to_string(n) + ": predicted p = " + expr::format_double(pred) +
                               " < 100/reps; crude estimate is unreliable");
      const auto c = crude_mc(e.model, n, x, e.reps, e.seed, opt);
      out.crude.push_back(c);
      for (int which = 0; which < 2; ++which) {
        EstimateRecord r = base;
        r.estimator = which == 0 ? "crude_sum" : "crude_max";
        r.p_hat = which == 0 ? c.p_sum : c.p_max;
        r.se = which == 0 ? c.se_sum : c.se_max;
        r.ratio = r.p_hat / pred;
        r.reps = e.reps;
        out.records.push_back(r);
        (which == 0 ? rs : rm).push_back(r.ratio);
        (which == 0 ? rse : rmse).push_back(r.se / pred);
      }
    }
    if (e.estimator != EstimatorKind::Crude) {
      auto bj = big_jump_sweep(e.model, n, x, e.bj_reps, Ns, e.seed, opt);
      for (const auto& b : bj) {
        EstimateRecord r = base;
        r.estimator = big_jump_label(b.N);
        r.p_hat = b.value;
        r.se = b.se;
        r.ratio = b.value / pred;
        r.reps = e.bj_reps;
        out.records.push_back(r);
        if (b.N == e.N) {
          rb.push_back(r.ratio);
          rbse.push_back(r.se / pred);
        }
      }
      out.big_jump.push_back(std::move(bj));
    }
    out.cell_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  if (!rs.empty()) {
    out.trends.push_back(ratio_trend("crude_sum", rs, rse, e.band_lo, e.band_hi));
    out.trends.push_back(ratio_trend("crude_max", rm, rmse, e.band_lo, e.band_hi));
  } else {
    out.trends.push_back(ratio_trend(big_jump_label(e.N), rb, rbse, e.band_lo, e.band_hi));
  }
  out.verdict = funclass::Verdict::Pass;
  for (const auto& t : out.trends)
    if (t.verdict != funclass::Verdict::Pass) out.verdict = funclass::Verdict::Fail;
  return out;
}

struct CrossCheck {
  std::vector<std::size_t> n;
  std::vector<double> z;  // (big_jump - crude) / combined SE
  bool pass = false;
};

/// Crude P(S_n >= x) against the main term for window multiplier N.
inline CrossCheck cross_check(const ScanResult& s, double N, double k = 3.0) {
  CrossCheck c;
  c.pass = !s.crude.empty() && s.crude.size() == s.big_jump.size();
  for (std::size_t i = 0; i < s.crude.size() && i < s.big_jump.size(); ++i) {
    for (const auto& b : s.big_jump[i]) {
      if (b.N != N) continue;
      const double se = std::hypot(b.se, s.crude[i].se_sum);
      const double z = (b.value - s.crude[i].p_sum) / se;
      c.n.push_back(s.crude[i].n);
      c.z.push_back(z);
      if (!(std::fabs(z) <= k)) c.pass = false;
    }
  }
  return c;
}

struct PsiConsistency {
  std::string psi;
  funclass::Verdict psi_lcf = funclass::Verdict::Fail;
  funclass::Verdict upper_power = funclass::Verdict::Fail;
  std::string psi_lcf_reason, upper_power_reason;
};

/// Runs the ψ-l.c.f. and upper-power checkers on F₊ with ψ from the zone.
inline PsiConsistency psi_consistency_report(const Experiment& e) {
  PsiConsistency out;
  const auto psi = tails::choose_psi(e.zone, e.model);
  const auto F = e.model.tail_function();
  const auto d = funclass::check_psi_lcf(F, psi);
  const auto u = funclass::check_upper_power(F);
  out.psi = psi.name();
  out.psi_lcf = d.verdict;
  out.psi_lcf_reason = d.reason;
  out.upper_power = u.verdict;
  out.upper_power_reason = u.reason;
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline void write_results_csv(std::ostream& os, const std::vector<EstimateRecord>& recs) {
  using report::csv_number;
  os << "n,x,estimator,p_hat,se,prediction,ratio,zone_xlnn,zone_ap5,reps,seed\n";
  for (const auto& r : recs)
    os << r.n << ',' << csv_number(r.x) << ',' << r.estimator << ',' << csv_number(r.p_hat) << ','
       << csv_number(r.se) << ',' << csv_number(r.prediction) << ',' << csv_number(r.ratio) << ','
       << csv_number(r.zone_xlnn) << ',' << csv_number(r.zone_ap5) << ',' << r.reps << ',' << r.seed << '\n';
}

inline std::string results_csv(const std::vector<EstimateRecord>& recs) {
  std::ostringstream os;
  write_results_csv(os, recs);
  return os.str();
}

/// Plot data: x axis n, y axis ratio, one series per estimator.
inline void write_plot_csv(std::ostream& os, const std::vector<EstimateRecord>& recs) {
  using report::csv_number;
  os << "series,n,ratio,ratio_se\n";
  for (const auto& r : recs)
    os << r.estimator << ',' << r.n << ',' << csv_number(r.ratio) << ','
       << csv_number(r.prediction > 0 ? r.se / r.prediction : std::nan("")) << '\n';
}

inline nlohmann::json to_json(const TrendCheck& t) {
  return {{"estimator", t.estimator}, {"ratio", t.ratio}, {"ratio_se", t.ratio_se}, {"in_band", t.in_band},
          {"toward_one", t.toward_one}, {"verdict", funclass::to_string(t.verdict)}, {"reason", t.reason}};
}

inline nlohmann::json to_json(const ZoneDiagnostics& z) {
  nlohmann::json j{{"x_over_sqrt_n_ln_n", z.xlnn},
                   {"n_V2_over_F", z.ap5},
                   {"x_over_sqrt_n_ln_n_increasing", z.xlnn_increasing},
                   {"n_V2_over_F_decreasing", z.ap5_decreasing},
                   {"ap5_sufficient_condition", z.ap5_sufficient}};
  if (!z.x_over_sigma.empty()) {
    j["x_over_sigma"] = z.x_over_sigma;
    j["x_over_sigma_increasing"] = z.sigma_increasing;
  }
  j["zone_valid"] = z.zone_check.ok;
  if (!z.zone_check.reason.empty()) j["zone_reason"] = z.zone_check.reason;
  return j;
}

inline nlohmann::json to_json(const PsiConsistency& p) {
  return {{"psi", p.psi},
          {"psi_lcf", funclass::to_string(p.psi_lcf)},
          {"psi_lcf_reason", p.psi_lcf_reason},
          {"upper_power", funclass::to_string(p.upper_power)},
          {"upper_power_reason", p.upper_power_reason}};
}

}  // namespace psilcf::ldt

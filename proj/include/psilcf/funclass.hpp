#pragma once

// Class-membership checkers and Karamata-type constructors for
// ψ-locally constant functions.
//
// "For all large enough x" is read as the upper half of a geometric grid
// (default x = 1e3 * 2^j, j = 0..23). Every verdict here is finite-range
// evidence, not a proof.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psilcf/expr.hpp"
#include "psilcf/function.hpp"
#include "psilcf/numeric.hpp"
#include "psilcf/psi.hpp"

namespace psilcf::funclass {

enum class Verdict { Pass, Fail, Indeterminate };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Indeterminate: return "INDETERMINATE";
  }
  return "?";
}

/// Deviations within this distance of a tolerance count as passing.
inline constexpr double kTieBreak = 1e-12;

inline bool within(double value, double tol) { return value <= tol + kTieBreak; }

inline std::vector<double> default_grid() { return numeric::geometric_grid(1e3, 2.0, 24); }

struct LcfSettings {
  std::vector<double> vlist{-2.0, -1.0, 1.0, 2.0};
  std::vector<double> xgrid = default_grid();
  double tol = 0.01;
  double c = 0.5;  // pairs with x + vψ(x) < c x are excluded
};

// ---------------------------------------------------------------------------
// Condition (A) and class K

struct ConditionAReport {
  std::string psi;
  std::vector<double> v;
  std::vector<double> a_raw;       // inf over the x tail of ψ(x - vψ(x))/ψ(x)
  std::vector<double> a_hat;       // running minimum of a_raw (non-increasing)
  std::vector<double> upper_sup;   // sup over the x tail of ψ(x + vψ(x))/ψ(x)
  std::vector<std::size_t> used;   // x points that satisfied x - vψ(x) >= x0
  std::vector<bool> pass;
  bool insufficient_domain = false;  // some v had no admissible x
  bool duality_holds = true;         // upper_sup <= 1/a_hat + 1e-6 wherever a_hat was produced
  double vmax = 0.0;
  double partial_integral = 0.0;  // ∫_0^vmax a_hat(u) du, with a_hat(0) = 1
};

inline ConditionAReport estimate_condition_A(const PsiSpec& psi, double vmax, const std::vector<double>& xgrid,
                                             std::size_t vsteps = 80) {
  if (!(vmax > 0.0)) throw std::invalid_argument("estimate_condition_A: vmax must be positive");
  ConditionAReport rep;
  rep.psi = psi.name();
  rep.vmax = vmax;
  const auto tail = numeric::tail_half(xgrid);
  const double x0 = std::max(psi.x0(), 1.0);
  double running = 1.0;
  for (std::size_t i = 1; i <= vsteps; ++i) {
    const double v = vmax * static_cast<double>(i) / static_cast<double>(vsteps);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    std::size_t used = 0;
    for (double x : tail) {
      const double px = psi(x);
      const double left = x - v * px;
      if (left < x0) continue;
      ++used;
      lo = std::min(lo, psi(left) / px);
      hi = std::max(hi, psi(x + v * px) / px);
    }
    rep.v.push_back(v);
    rep.used.push_back(used);
    if (used == 0) {
      rep.insufficient_domain = true;
      rep.a_raw.push_back(0.0);
      running = 0.0;
      rep.a_hat.push_back(0.0);
      rep.upper_sup.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.pass.push_back(false);
      continue;
    }
    rep.a_raw.push_back(lo);
    running = std::min(running, lo);
    rep.a_hat.push_back(running);
    rep.upper_sup.push_back(hi);
    const bool ok = running > 0.0 && running <= 1.0;
    rep.pass.push_back(ok);
    if (ok && hi > 1.0 / running + 1e-6) rep.duality_holds = false;
  }
  double prev_v = 0.0, prev_a = 1.0;
  for (std::size_t i = 0; i < rep.v.size(); ++i) {
    rep.partial_integral += 0.5 * (prev_a + rep.a_hat[i]) * (rep.v[i] - prev_v);
    prev_v = rep.v[i];
    prev_a = rep.a_hat[i];
  }
  return rep;
}

/// r_v with ∫_0^{r_v} a_hat(u) du = v, using the piecewise-linear a_hat of
/// the report; +inf if the tabulated range is too short.
inline double shift_bound(const ConditionAReport& rep, double v) {
  if (v <= 0.0) return 0.0;
  double acc = 0.0, prev_v = 0.0, prev_a = 1.0;
  for (std::size_t i = 0; i < rep.v.size(); ++i) {
    const double a = rep.a_hat[i];
    const double h = rep.v[i] - prev_v;
    const double panel = 0.5 * (prev_a + a) * h;
    if (acc + panel >= v) {
      // Solve prev_a s + (a - prev_a) s^2 / (2h) = v - acc for s in [0, h].
      const double need = v - acc;
      const double slope = (a - prev_a) / h;
      double s;
      if (std::fabs(slope) < 1e-15) {
        s = need / prev_a;
      } else {
        const double disc = prev_a * prev_a + 2.0 * slope * need;
        s = (-prev_a + std::sqrt(std::max(disc, 0.0))) / slope;
      }
      return prev_v + std::clamp(s, 0.0, h);
    }
    acc += panel;
    prev_v = rep.v[i];
    prev_a = a;
  }
  return std::numeric_limits<double>::infinity();
}

struct KSettings {
  double vmax = 20.0;
  double growth = 0.25;  // partial integral must reach growth * vmax
  double floor = 0.05;   // a_hat(vmax) must stay above this
};

struct ClassKVerdict {
  Verdict verdict = Verdict::Fail;
  bool heuristic = true;  // finite-range evidence only
  double partial_integral = 0.0;
  double tail_value = 0.0;
  std::string reason;
};

inline ClassKVerdict check_class_K(const ConditionAReport& rep, const KSettings& s = {}) {
  ClassKVerdict out;
  out.partial_integral = rep.partial_integral;
  out.tail_value = rep.a_hat.empty() ? 0.0 : rep.a_hat.back();
  if (rep.insufficient_domain) {
    out.reason = "insufficient domain: x - v psi(x) < x0 on the whole grid tail for some v <= vmax";
  } else if (!within(s.floor, out.tail_value)) {
    out.reason = "a(v) approaches 0 before vmax";
  } else if (!within(s.growth * rep.vmax, out.partial_integral)) {
    out.reason = "partial integral of a(v) grows too slowly";
  } else {
    out.verdict = Verdict::Pass;
    out.reason = "a(v) bounded away from 0 on (0, vmax]; partial integral keeps growing";
  }
  return out;
}

inline ClassKVerdict check_class_K(const PsiSpec& psi, const KSettings& s = {},
                                   const std::vector<double>& xgrid = default_grid()) {
  return check_class_K(estimate_condition_A(psi, s.vmax, xgrid), s);
}

// ---------------------------------------------------------------------------
// Class K1

struct K1Settings {
  int log2_min = 4;
  int log2_max = 26;         // dyadic grid up to 2^26 ≈ 6.7e7 (< 1e8)
  double alpha_tol = 0.02;   // spread of the index estimate over the grid tail
  double residual_tol = 0.05;
};

struct ClassK1Report {
  Verdict verdict = Verdict::Fail;
  std::vector<double> x;
  std::vector<double> alpha_hat;   // x ψ'(x)/ψ(x), central differences with step ψ(x)/100
  std::vector<double> residual;    // max over v in {±1, ±2} of the smoothness residual
  double alpha = 0.0;              // estimate at the largest x
  bool theta_increasing = false;
  std::string reason;
};

inline ClassK1Report check_class_K1(const PsiSpec& psi, const K1Settings& s = {}) {
  ClassK1Report rep;
  for (int k = s.log2_min; k <= s.log2_max; ++k) rep.x.push_back(std::ldexp(1.0, k));
  for (double x : rep.x) {
    const double px = psi(x);
    const double h = px / 100.0;
    rep.alpha_hat.push_back(x * (psi(x + h) - psi(x - h)) / (2.0 * h) / px);
  }
  rep.alpha = rep.alpha_hat.back();
  for (double x : rep.x) {
    const double px = psi(x);
    double worst = 0.0;
    for (double v : {-2.0, -1.0, 1.0, 2.0}) {
      const double d = v * px;
      if (x + d < std::max(psi.x0(), 1.0)) continue;
      worst = std::max(worst, std::fabs(psi(x + d) - px - rep.alpha * d * px / x) / px);
    }
    rep.residual.push_back(worst);
  }
  rep.theta_increasing = true;
  for (std::size_t i = 1; i < rep.x.size(); ++i)
    if (!(theta(psi, rep.x[i]) > theta(psi, rep.x[i - 1]))) rep.theta_increasing = false;

  const std::size_t half = rep.x.size() / 2;
  const auto [mn, mx] = std::minmax_element(rep.alpha_hat.begin() + static_cast<std::ptrdiff_t>(half),
                                            rep.alpha_hat.end());
  const bool stable = *mx - *mn <= s.alpha_tol;
  if (!stable) {
    int sign_changes = 0;
    double prev = 0.0;
    for (std::size_t i = half + 1; i < rep.alpha_hat.size(); ++i) {
      const double d = rep.alpha_hat[i] - rep.alpha_hat[i - 1];
      if (d != 0.0 && prev != 0.0 && (d > 0.0) != (prev > 0.0)) ++sign_changes;
      if (d != 0.0) prev = d;
    }
    if (sign_changes >= 2) {
      rep.verdict = Verdict::Indeterminate;
      rep.reason = "index estimate oscillates";
    } else {
      rep.reason = "index estimate does not stabilise";
    }
    return rep;
  }
  const double res_last = rep.residual.back();
  const double res_mid = rep.residual[half];
  if (rep.alpha >= 1.0 - s.alpha_tol) {
    rep.reason = "index alpha = 1 is excluded";
  } else if (!rep.theta_increasing) {
    rep.reason = "x/psi(x) is not increasing";
  } else if (!(within(res_last, s.residual_tol) && res_last <= res_mid + kTieBreak)) {
    rep.reason = "asymptotic smoothness residual does not vanish";
  } else {
    rep.verdict = Verdict::Pass;
    rep.reason = "regularly varying of index < 1 with increasing x/psi(x)";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Karamata-type constructors

/// c(t) and ε(t) of a representation c(x) exp{∫_1^{e^Γ} ε(t)/t dt}.
/// ε is stored in the log clock, u ↦ ε(e^u), so e^Γ is never formed.
struct RepresentationSpec {
  PositiveFunction c;
  std::string eps_name;
  std::function<double(double)> eps_log;
  double c_limit = 1.0;
  double eps_limit = 0.0;  // 0 for slowly varying mode, α for regularly varying mode

  /// eps_text is an expression in t; with eps_in_log_clock it is an
  /// expression in u = ln t instead.
  static RepresentationSpec from_text(std::string_view c_text, std::string_view eps_text, double c_limit,
                                      double eps_limit = 0.0, bool eps_in_log_clock = false) {
    RepresentationSpec r;
    r.c = PositiveFunction::parse(c_text);
    auto eps = expr::parse(eps_text);
    r.eps_name = std::string(eps_text);
    if (eps_in_log_clock) r.eps_log = [eps](double u) { return expr::evaluate(eps, u); };
    else r.eps_log = [eps](double u) { return expr::evaluate_at_exp(eps, u); };
    r.c_limit = c_limit;
    r.eps_limit = eps_limit;
    return r;
  }
};

struct RepresentationCheck {
  bool ok = true;
  std::string reason;
};

/// c positive and tending to c_limit, ε tending to eps_limit, on a diagnostic grid.
inline RepresentationCheck validate(const RepresentationSpec& rep) {
  RepresentationCheck out;
  if (!(rep.c_limit > 0.0) || !std::isfinite(rep.c_limit)) return {false, "c limit must be in (0, inf)"};
  const auto tgrid = numeric::geometric_grid(1.0, 4.0, 20);
  double first_c = 0.0, last_c = 0.0;
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    const double lc = rep.c.log(tgrid[i]);
    if (!std::isfinite(lc)) return {false, "c(t) not in (0, inf) at t = " + expr::format_double(tgrid[i])};
    const double dev = std::fabs(std::exp(lc) - rep.c_limit);
    if (i == 0) first_c = dev;
    last_c = dev;
  }
  if (last_c > 1e-2 * rep.c_limit && last_c > first_c) return {false, "c(t) does not approach its limit"};
  const auto ugrid = numeric::geometric_grid(1.0, 2.0, 21);  // u up to 2^20
  double first_e = 0.0, last_e = 0.0;
  for (std::size_t i = 0; i < ugrid.size(); ++i) {
    const double e = rep.eps_log(ugrid[i]);
    if (!std::isfinite(e)) return {false, "eps not finite at ln t = " + expr::format_double(ugrid[i])};
    const double dev = std::fabs(e - rep.eps_limit);
    if (i == 0) first_e = dev;
    last_e = dev;
  }
  if (last_e > 1e-2 || (last_e > first_e && last_e > 1e-12)) return {false, "eps(t) does not approach its limit"};
  return out;
}

namespace detail {

/// Φ(Γ) = ∫_0^Γ ε(e^u) du on nodes 0, 1, 2, 4, ..., 2^40.
inline std::shared_ptr<const numeric::CumulativeIntegral> eps_integral(const RepresentationSpec& rep) {
  std::vector<double> nodes{0.0};
  for (int k = 0; k <= 40; ++k) nodes.push_back(std::ldexp(1.0, k));
  return std::make_shared<const numeric::CumulativeIntegral>(rep.eps_log, std::move(nodes));
}

inline PositiveFunction build_with_clock(const RepresentationSpec& rep, std::string name,
                                         std::function<double(double)> clock) {
  const auto check = validate(rep);
  if (!check.ok) throw std::invalid_argument("representation invalid: " + check.reason);
  auto phi = eps_integral(rep);
  auto c = rep.c;
  return PositiveFunction(std::move(name), [phi, c, clock = std::move(clock)](double x) {
    if (!(x >= 1.0)) throw std::domain_error("representation defined for x >= 1");
    return c.log(x) + (*phi)(clock(x));
  });
}

}  // namespace detail

/// L(x) = c(x) exp{∫_1^x ε(t)/t dt}.
inline PositiveFunction build_svf(const RepresentationSpec& rep) {
  return detail::build_with_clock(rep, "svf[c=" + rep.c.name() + ",eps=" + rep.eps_name + "]",
                                  [](double x) { return std::log(x); });
}

/// g(x) = c(x) exp{∫_1^{e^x} ε(t)/t dt}.
inline PositiveFunction build_lcf(const RepresentationSpec& rep) {
  return detail::build_with_clock(rep, "lcf[c=" + rep.c.name() + ",eps=" + rep.eps_name + "]",
                                  [](double x) { return x; });
}

/// g(x) = c(x) exp{∫_1^{e^{γ(x)}} ε(t)/t dt}; ψ must pass the class-K check.
inline PositiveFunction build_psi_lcf(const RepresentationSpec& rep, const PsiSpec& psi) {
  const auto k = check_class_K(psi);
  if (k.verdict != Verdict::Pass)
    throw std::invalid_argument("build_psi_lcf: psi '" + psi.name() + "' fails the class K check: " + k.reason);
  return detail::build_with_clock(rep, "psi_lcf[psi=" + psi.name() + ",c=" + rep.c.name() + ",eps=" + rep.eps_name + "]",
                                  [psi](double x) { return gamma(psi, x); });
}

// ---------------------------------------------------------------------------
// ψ-l.c.f. checker

struct ConvergenceDiagnostic {
  std::string function;
  std::string psi;
  std::vector<double> x;
  std::vector<double> v;
  std::vector<std::vector<double>> ratio;  // ratio[iv][ix]; NaN where the pair is excluded
  std::vector<double> sup_deviation;       // H(x) over admissible v; NaN if none
  double tol = 0.0;
  double v1 = 0.0, v2 = 0.0;
  Verdict verdict = Verdict::Fail;
  std::string reason;
};

namespace detail {

inline double checked_log(const PositiveFunction& g, double x) {
  const double l = g.log(x);
  if (std::isnan(l) || l == -std::numeric_limits<double>::infinity())
    throw expr::DomainError("function is not positive at x = " + expr::format_double(x), g.name());
  if (!std::isfinite(l)) throw expr::DomainError("function overflows at x = " + expr::format_double(x), g.name());
  return l;
}

/// Non-increasing up to floating noise.
inline bool non_increasing(const std::vector<double>& h) {
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (std::isnan(h[i]) || std::isnan(h[i - 1])) continue;
    if (h[i] > h[i - 1] * (1.0 + 1e-6) + 1e-10) return false;
  }
  return true;
}

}  // namespace detail

inline ConvergenceDiagnostic check_psi_lcf(const PositiveFunction& g, const PsiSpec& psi,
                                           const LcfSettings& s = {}) {
  ConvergenceDiagnostic d;
  d.function = g.name();
  d.psi = psi.name();
  d.x = s.xgrid;
  d.v = s.vlist;
  d.tol = s.tol;
  if (d.v.empty() || d.x.empty()) throw std::invalid_argument("check_psi_lcf: empty v list or grid");
  d.v1 = *std::min_element(d.v.begin(), d.v.end());
  d.v2 = *std::max_element(d.v.begin(), d.v.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  d.ratio.assign(d.v.size(), std::vector<double>(d.x.size(), nan));
  d.sup_deviation.assign(d.x.size(), nan);

  std::vector<double> last_dev(d.v.size(), nan);
  for (std::size_t ix = 0; ix < d.x.size(); ++ix) {
    const double x = d.x[ix];
    const double px = psi(x);
    const double lx = detail::checked_log(g, x);
    for (std::size_t iv = 0; iv < d.v.size(); ++iv) {
      const double y = x + d.v[iv] * px;
      if (y < s.c * x) continue;
      const double lr = detail::checked_log(g, y) - lx;
      d.ratio[iv][ix] = std::exp(lr);
      const double dev = std::fabs(std::expm1(lr));
      last_dev[iv] = dev;
      d.sup_deviation[ix] = std::isnan(d.sup_deviation[ix]) ? dev : std::max(d.sup_deviation[ix], dev);
    }
  }

  bool any = false, all_ok = true;
  for (double dev : last_dev) {
    if (std::isnan(dev)) continue;
    any = true;
    if (!within(dev, s.tol)) all_ok = false;
  }
  if (!any) {
    d.verdict = Verdict::Indeterminate;
    d.reason = "no admissible (v, x) pair";
    return d;
  }
  const bool trend = detail::non_increasing(numeric::tail_half(d.sup_deviation));
  if (!all_ok) {
    d.reason = "ratio deviates from 1 beyond tolerance at the largest x";
  } else if (!trend) {
    d.reason = "deviation is not non-increasing over the grid tail";
  } else {
    d.verdict = Verdict::Pass;
    d.reason = "ratios approach 1";
  }
  return d;
}

/// Convenience overload with explicit v list, grid and tolerance.
inline ConvergenceDiagnostic check_psi_lcf(const PositiveFunction& g, const PsiSpec& psi, std::vector<double> vlist,
                                           std::vector<double> xgrid, double tol, double c = 0.5) {
  return check_psi_lcf(g, psi, LcfSettings{std::move(vlist), std::move(xgrid), tol, c});
}

/// sup over vsteps evenly spaced v in [v1, v2] of |g(x + vψ(x))/g(x) - 1|.
inline double uniform_deviation(const PositiveFunction& g, const PsiSpec& psi, double v1, double v2, double x,
                                std::size_t vsteps = 201, double c = 0.5) {
  if (!(v2 >= v1)) throw std::invalid_argument("uniform_deviation: need v1 <= v2");
  const double px = psi(x);
  const double lx = detail::checked_log(g, x);
  double sup = 0.0;
  std::size_t used = 0;
  for (double v : numeric::linspace(v1, v2, std::max<std::size_t>(vsteps, 2))) {
    const double y = x + v * px;
    if (y < c * x) continue;
    ++used;
    sup = std::max(sup, std::fabs(std::expm1(detail::checked_log(g, y) - lx)));
  }
  if (used == 0) throw std::domain_error("uniform_deviation: no admissible v in the window");
  return sup;
}

// ---------------------------------------------------------------------------
// Shifts, conjugates, ε extraction

/// r with γ(x + rψ(x)) = γ(x) + v, via I(r, x) = ∫_0^r ψ(x)/ψ(x + zψ(x)) dz.
inline double solve_shift(const PsiSpec& psi, double x, double v, double r_cap = 1e6) {
  if (v == 0.0) return 0.0;
  const double px = psi(x);
  const double floor_x = std::max(psi.x0(), 1.0);
  auto integral = [&](double r) {
    return numeric::adaptive_simpson([&](double z) { return px / psi(x + z * px); }, 0.0, r);
  };
  auto f = [&](double r) { return integral(r) - v; };
  double lo, hi;
  if (v > 0.0) {
    lo = 0.0;
    hi = 1.0;
    while (f(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > r_cap) throw numeric::BracketError("solve_shift: no root below r cap");
    }
  } else {
    hi = 0.0;
    lo = -1.0;
    const double r_min = (floor_x - x) / px;
    for (;;) {
      if (lo < r_min) lo = r_min;
      if (f(lo) <= 0.0) break;
      if (lo == r_min) throw numeric::BracketError("solve_shift: shift leaves the domain of psi");
      hi = lo;
      lo *= 2.0;
    }
  }
  return numeric::solve_bracketed(f, lo, hi, {.ftol = 2.5e-10});
}

/// g_γ = g ∘ γ^{-1}.
inline PositiveFunction conjugate_gamma(const PositiveFunction& g, const PsiSpec& psi) {
  return PositiveFunction(g.name() + " o gamma^-1[" + psi.name() + "]",
                          [g, psi](double t) { return g.log(gamma_inverse(psi, t)); });
}

/// g_θ = g ∘ θ^{-1}; ψ must have strictly increasing θ.
inline PositiveFunction conjugate_theta(const PositiveFunction& g, const PsiSpec& psi) {
  return PositiveFunction(g.name() + " o theta^-1[" + psi.name() + "]",
                          [g, psi](double t) { return g.log(theta_inverse(psi, t)); });
}

/// Grid in the γ clock induced by an x grid.
inline std::vector<double> gamma_grid(const PsiSpec& psi, const std::vector<double>& xgrid) {
  std::vector<double> t;
  t.reserve(xgrid.size());
  for (double x : xgrid) t.push_back(gamma(psi, x));
  return t;
}

inline std::vector<double> theta_grid(const PsiSpec& psi, const std::vector<double>& xgrid) {
  std::vector<double> t;
  t.reserve(xgrid.size());
  for (double x : xgrid) t.push_back(theta(psi, x));
  return t;
}

/// l.c.f. check (ψ ≡ 1).
inline ConvergenceDiagnostic check_lcf(const PositiveFunction& g, LcfSettings s = {}) {
  static const PsiSpec one = PsiSpec::constant(1.0);
  return check_psi_lcf(g, one, s);
}

/// ε̂(x) = ψ(x) d(ln g)/dx by central differences with step ψ(x)/100.
inline double extract_epsilon(const PositiveFunction& g, const PsiSpec& psi, double x) {
  const double px = psi(x);
  const double h = px / 100.0;
  const double d = (g.log(x + h) - g.log(x - h)) / (2.0 * h);
  const double e = px * d;
  if (!std::isfinite(e)) throw std::domain_error("extract_epsilon: non-finite difference quotient");
  return e;
}

/// |ln g(x)| / clock(x): tends to 0 for a ψ-l.c.f. when clock is γ (or θ for K1).
inline double clock_growth(const PositiveFunction& g, double x, double clock_value) {
  return std::fabs(g.log(x)) / clock_value;
}

// ---------------------------------------------------------------------------
// Upper-power functions

struct UpperPowerReport {
  std::string function;
  std::vector<double> p;
  std::vector<double> c_hat;  // inf over the x tail of g(x)/g(px)
  double min_c = 0.0;
  double p1 = 0.0;
  bool lcf_pass = false;
  Verdict verdict = Verdict::Fail;
  std::string reason;
};

struct UpperPowerSettings {
  std::vector<double> pgrid = numeric::linspace(0.1, 0.9, 9);
  std::vector<double> xgrid = default_grid();
  double margin = 1e-8;
  double p1 = 0.1;  // inf taken over p >= p1
};

inline UpperPowerReport check_upper_power(const PositiveFunction& g, const UpperPowerSettings& s = {}) {
  UpperPowerReport rep;
  rep.function = g.name();
  rep.p = s.pgrid;
  rep.p1 = s.p1;
  LcfSettings lcf;
  lcf.xgrid = s.xgrid;
  rep.lcf_pass = check_lcf(g, lcf).verdict == Verdict::Pass;
  const auto tail = numeric::tail_half(s.xgrid);
  rep.min_c = std::numeric_limits<double>::infinity();
  for (double p : s.pgrid) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("check_upper_power: p must lie in (0, 1)");
    double c = std::numeric_limits<double>::infinity();
    for (double x : tail) c = std::min(c, std::exp(detail::checked_log(g, x) - detail::checked_log(g, p * x)));
    rep.c_hat.push_back(c);
    if (p >= s.p1) rep.min_c = std::min(rep.min_c, c);
  }
  if (!rep.lcf_pass) {
    rep.reason = "not an l.c.f.";
  } else if (!(rep.min_c > s.margin)) {
    rep.reason = "inf of c(p) is not bounded away from 0";
  } else {
    rep.verdict = Verdict::Pass;
    rep.reason = "g(t) >= c(p) g(pt) with inf c(p) > 0";
  }
  return rep;
}

}  // namespace psilcf::funclass

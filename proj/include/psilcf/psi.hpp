#pragma once

// The zone-width function ψ and its two clocks:
//   γ(x) = ∫_a^x dt/ψ(t)      and      θ(x) = x/ψ(x),   a = max(x0, 1).

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psilcf/expr.hpp"
#include "psilcf/numeric.hpp"

namespace psilcf {

class PsiError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PsiOptions {
  double x0 = 1.0;             // domain start; ψ(x) >= 1 is required from here on
  double validate_to = 1e12;   // upper end of the monotonicity certificate grid
  std::size_t validate_points = 241;
  int gamma_dyadic_panels = 62;  // γ is tabulated on [1, 2^62]
};

/// Validated non-decreasing ψ >= 1, with a precomputed γ table.
/// Copies share the immutable state.
class PsiSpec {
 public:
  static PsiSpec constant(double c = 1.0, PsiOptions opt = {}) {
    return PsiSpec(expr::format_double(c), [c](double) { return c; }, 0.0, opt);
  }
  /// ψ(t) = t^p.
  static PsiSpec power(double p, PsiOptions opt = {}) {
    std::string name = p == 1.0 ? "x" : p == 0.5 ? "sqrt(x)" : "x^" + expr::format_double(p);
    return PsiSpec(std::move(name), [p](double t) { return std::pow(t, p); }, p, opt);
  }
  static PsiSpec from_expr(const expr::Ast& ast, std::string name = {}, PsiOptions opt = {}) {
    if (name.empty()) name = expr::print(ast);
    return PsiSpec(std::move(name), [ast](double t) { return expr::evaluate(ast, t); }, std::nullopt, opt);
  }
  static PsiSpec parse(std::string_view text, PsiOptions opt = {}) {
    return from_expr(expr::parse(text), std::string(text), opt);
  }
  static PsiSpec custom(std::string name, std::function<double(double)> f, PsiOptions opt = {}) {
    return PsiSpec(std::move(name), std::move(f), std::nullopt, opt);
  }

  double operator()(double x) const { return state_->fn(x); }
  const std::string& name() const noexcept { return state_->name; }
  double x0() const noexcept { return state_->opt.x0; }
  /// Lower limit of γ, max(x0, 1).
  double gamma_origin() const noexcept { return std::max(state_->opt.x0, 1.0); }
  /// Exponent p when ψ was built as a constant (p = 0) or as t^p.
  std::optional<double> power_exponent() const noexcept { return state_->power; }
  const numeric::CumulativeIntegral& gamma_table() const noexcept { return state_->gamma; }

  /// Grid evidence that ψ(x)/x decreases toward 0 (ψ = o(x)).
  bool sublinear_on_grid() const {
    const auto g = numeric::log_space(std::max(x0(), 1.0) * 2.0, state_->opt.validate_to, 40);
    double prev = (*this)(g.front()) / g.front();
    for (std::size_t i = 1; i < g.size(); ++i) {
      const double r = (*this)(g[i]) / g[i];
      if (!(r < prev)) return false;
      prev = r;
    }
    return prev < 1e-2 * ((*this)(g.front()) / g.front());
  }

 private:
  struct State {
    std::string name;
    std::function<double(double)> fn;
    std::optional<double> power;
    PsiOptions opt;
    numeric::CumulativeIntegral gamma;
  };
  std::shared_ptr<const State> state_;

  PsiSpec(std::string name, std::function<double(double)> fn, std::optional<double> power, PsiOptions opt) {
    if (!(opt.x0 >= 0.0)) throw PsiError("psi: domain start must be >= 0");
    auto s = std::make_shared<State>();
    s->name = std::move(name);
    s->fn = std::move(fn);
    s->power = power;
    s->opt = opt;

    // Monotonicity certificate on a log grid from max(x0, 1).
    const double lo = std::max(opt.x0, 1.0);
    auto grid = numeric::log_space(lo, std::max(opt.validate_to, 2 * lo), opt.validate_points);
    double prev = -1.0;
    for (double x : grid) {
      double v;
      try {
        v = s->fn(x);
      } catch (const std::exception& e) {
        throw PsiError("psi '" + s->name + "' not evaluable at x = " + expr::format_double(x) + ": " + e.what());
      }
      if (!std::isfinite(v)) throw PsiError("psi '" + s->name + "' is not finite at x = " + expr::format_double(x));
      if (v < 1.0 - 1e-12) throw PsiError("psi '" + s->name + "' < 1 at x = " + expr::format_double(x));
      if (v < prev) throw PsiError("psi '" + s->name + "' decreases near x = " + expr::format_double(x));
      prev = v;
    }

    // γ on dyadic panels, integrated in u = ln t: ∫ e^u / ψ(e^u) du.
    std::vector<double> nodes(static_cast<std::size_t>(opt.gamma_dyadic_panels) + 1);
    const double u0 = std::log(lo);
    for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = u0 + static_cast<double>(k) * std::numbers::ln2;
    auto f = s->fn;
    auto name_copy = s->name;
    s->gamma = numeric::CumulativeIntegral(
        [f, name_copy](double u) {
          const double t = std::exp(u);
          const double p = f(t);
          if (!(p > 0.0))
            throw numeric::QuadratureError("psi '" + name_copy + "' is not positive at t = " + expr::format_double(t));
          return t / p;
        },
        std::move(nodes));
    state_ = std::move(s);
  }
};

/// γ(x) = ∫_a^x dt/ψ(t) for x >= a = max(x0, 1).
inline double gamma(const PsiSpec& psi, double x) {
  if (!(x >= psi.gamma_origin())) throw std::domain_error("gamma: x below the domain start");
  const auto& tab = psi.gamma_table();
  const double u = std::log(x);
  if (u > tab.upper()) throw numeric::QuadratureError("gamma: x beyond tabulated range");
  return tab(u);
}

/// Inverse of γ: y with |γ(y) - t| <= 1e-9 max(1, t).
inline double gamma_inverse(const PsiSpec& psi, double t) {
  if (!(t >= 0.0)) throw std::domain_error("gamma_inverse: t must be >= 0");
  if (t == 0.0) return psi.gamma_origin();
  const auto& tab = psi.gamma_table();
  const auto& cum = tab.cumulative();
  const auto& nodes = tab.nodes();
  if (t > cum.back())
    throw numeric::BracketError("gamma_inverse: no bracket below x = " + expr::format_double(std::exp(nodes.back())));
  std::size_t k = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), t) - cum.begin());
  if (cum[k] == t) return std::exp(nodes[k]);
  const double tol = 0.25e-9 * std::max(1.0, t);
  const double u = numeric::solve_bracketed([&](double s) { return tab(s) - t; }, nodes[k - 1], nodes[k],
                                            {.ftol = tol});
  return std::exp(u);
}

/// θ(x) = x/ψ(x).
inline double theta(const PsiSpec& psi, double x) { return x / psi(x); }

/// Inverse of θ. Rejects ψ for which θ fails to increase while bracketing.
inline double theta_inverse(const PsiSpec& psi, double t) {
  double lo = std::max(psi.x0(), 1.0);
  double tlo = theta(psi, lo);
  if (t < tlo) throw std::domain_error("theta_inverse: t below theta(x0)");
  if (t == tlo) return lo;
  double hi = 2.0 * lo;
  double thi = theta(psi, hi);
  while (thi < t) {
    if (!(thi > tlo)) throw PsiError("theta is not increasing for psi '" + psi.name() + "' near x = " +
                                     expr::format_double(hi));
    lo = hi;
    tlo = thi;
    hi *= 2.0;
    if (hi > 1e300) throw numeric::BracketError("theta_inverse: no bracket found");
    thi = theta(psi, hi);
  }
  if (!(thi > tlo)) throw PsiError("theta is not increasing for psi '" + psi.name() + "'");
  const double tol = 0.25e-9 * std::max(1.0, t);
  return numeric::solve_bracketed([&](double y) { return theta(psi, y) - t; }, lo, hi, {.ftol = tol});
}

}  // namespace psilcf

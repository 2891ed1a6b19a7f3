#pragma once

// Tail models for ξ = ξ' - Eξ', where ξ' >= x0 has right tail
// F₊(t) = P(ξ' >= t), F₊ = 1 below x0. Sampling is by inverse transform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psilcf/expr.hpp"
#include "psilcf/function.hpp"
#include "psilcf/numeric.hpp"
#include "psilcf/psi.hpp"
#include "psilcf/rng.hpp"

namespace psilcf::tails {

class TailError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TailKind { Pareto, Exponential, Expression };

inline std::string to_string(TailKind k) {
  switch (k) {
    case TailKind::Pareto: return "pareto";
    case TailKind::Exponential: return "exponential";
    case TailKind::Expression: return "expression";
  }
  return "?";
}

class TailModel {
 public:
  /// F₊(t) = (t/x0)^alpha for t >= x0.
  static TailModel pareto(double alpha, double x0 = 1.0, double c_left = 1.0) {
    if (!(alpha < -1.0)) throw TailError("pareto: alpha must be < -1");
    if (!(x0 > 0.0)) throw TailError("pareto: x0 must be positive");
    auto s = std::make_shared<State>();
    s->kind = TailKind::Pareto;
    s->alpha = alpha;
    s->x0 = x0;
    s->c_left = c_left;
    s->tail_text = "(x/" + expr::format_double(x0) + ")^" + expr::format_double(alpha);
    s->name = "pareto(alpha=" + expr::format_double(alpha) + ",x0=" + expr::format_double(x0) + ")";
    s->mean = x0 * alpha / (alpha + 1.0);
    return TailModel(std::move(s));
  }

  /// Light-tailed control: F₊(t) = exp(-rate t), t >= 0.
  static TailModel exponential(double rate = 1.0) {
    if (!(rate > 0.0)) throw TailError("exponential: rate must be positive");
    auto s = std::make_shared<State>();
    s->kind = TailKind::Exponential;
    s->alpha = -std::numeric_limits<double>::infinity();
    s->rate = rate;
    s->x0 = 0.0;
    s->c_left = 1.0;
    s->tail_text = "exp(-" + expr::format_double(rate) + "*x)";
    s->name = "exponential(rate=" + expr::format_double(rate) + ")";
    s->mean = 1.0 / rate;
    return TailModel(std::move(s));
  }

  /// F₊ given as an expression in x on [x0, ∞) with declared index alpha.
  /// Without x0, x0 is the point where F₊ = 1. v_text is an optional
  /// dominating function V >= F₊.
  static TailModel from_expr(const std::string& tail_text, double alpha, std::optional<double> x0 = std::nullopt,
                             std::optional<std::string> v_text = std::nullopt, double c_left = 1.0) {
    if (!(alpha < -1.0)) throw TailError("tail model: alpha must be < -1 (mean diverges otherwise)");
    auto s = std::make_shared<State>();
    s->kind = TailKind::Expression;
    s->alpha = alpha;
    s->c_left = c_left;
    s->tail_text = tail_text;
    s->name = tail_text;
    auto ast = expr::parse(tail_text);
    s->tail_log = [ast](double t) { return expr::evaluate_log(ast, t); };
    if (v_text) {
      auto vast = expr::parse(*v_text);
      s->v_text = *v_text;
      s->v_log = [vast](double t) { return expr::evaluate_log(vast, t); };
    }
    s->x0 = x0 ? *x0 : locate_unit_level(s->tail_log);
    validate_expression_tail(*s);
    s->mean = integrate_mean(*s);
    build_table(*s);
    return TailModel(std::move(s));
  }

  TailKind kind() const noexcept { return s_->kind; }
  double alpha() const noexcept { return s_->alpha; }
  double x0() const noexcept { return s_->x0; }
  double c_left() const noexcept { return s_->c_left; }
  const std::string& name() const noexcept { return s_->name; }
  const std::string& tail_text() const noexcept { return s_->tail_text; }
  const std::optional<std::string>& v_text() const noexcept { return s_->v_text; }
  bool has_dominating() const noexcept { return static_cast<bool>(s_->v_log); }
  double rate() const noexcept { return s_->rate; }
  bool finite_variance() const noexcept { return s_->alpha < -2.0; }

  /// m = Eξ'.
  double mean() const noexcept { return s_->mean; }

  /// ln F₊(t).
  double log_tail(double t) const {
    if (t <= s_->x0) return 0.0;
    switch (s_->kind) {
      case TailKind::Pareto: return s_->alpha * std::log(t / s_->x0);
      case TailKind::Exponential: return -s_->rate * t;
      case TailKind::Expression: return std::min(0.0, s_->tail_log(t));
    }
    return 0.0;
  }
  double tail(double t) const { return std::exp(log_tail(t)); }

  /// ln V(t); V defaults to F₊ itself.
  double log_dominating(double t) const {
    if (!s_->v_log) return log_tail(t);
    if (t <= s_->x0) return std::max(0.0, s_->v_log(std::max(t, s_->x0)));
    return s_->v_log(t);
  }

  PositiveFunction tail_function() const {
    auto self = *this;
    return PositiveFunction("F+[" + name() + "]", [self](double t) { return self.log_tail(t); });
  }
  PositiveFunction dominating_function() const {
    auto self = *this;
    return PositiveFunction("V[" + (s_->v_text ? *s_->v_text : name()) + "]",
                            [self](double t) { return self.log_dominating(t); });
  }

  /// Smallest x with F₊(x) <= u, u in (0, 1].
  double quantile(double u) const {
    switch (s_->kind) {
      case TailKind::Pareto: return s_->x0 * std::exp(std::log(u) / s_->alpha);
      case TailKind::Exponential: return -std::log(u) / s_->rate;
      case TailKind::Expression: return table_quantile(u);
    }
    return 0.0;
  }

  /// One centered draw ξ = F₊^{-1}(U) - m.
  double draw(Rng& rng) const { return quantile(rng.uniform()) - s_->mean; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", to_string(kind())}, {"c_left", c_left()}, {"mean", mean()}};
    switch (kind()) {
      case TailKind::Pareto:
        j["alpha"] = alpha();
        j["x0"] = x0();
        break;
      case TailKind::Exponential: j["rate"] = s_->rate; break;
      case TailKind::Expression:
        j["tail"] = tail_text();
        j["alpha"] = alpha();
        j["x0"] = x0();
        if (s_->v_text) j["V"] = *s_->v_text;
        break;
    }
    return j;
  }

  static TailModel from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known{"kind", "alpha", "x0", "rate", "tail", "V", "c_left", "mean"};
    for (const auto& [k, v] : j.items())
      if (std::find(known.begin(), known.end(), k) == known.end()) throw TailError("tail model: unknown key '" + k + "'");
    const std::string kind = j.value("kind", std::string("pareto"));
    const double c_left = j.value("c_left", 1.0);
    if (kind == "pareto") return pareto(j.value("alpha", -3.0), j.value("x0", 1.0), c_left);
    if (kind == "exponential") return exponential(j.value("rate", 1.0));
    if (kind == "expression") {
      if (!j.contains("tail") || !j.contains("alpha")) throw TailError("expression tail model needs 'tail' and 'alpha'");
      std::optional<double> x0;
      if (j.contains("x0")) x0 = j["x0"].get<double>();
      std::optional<std::string> v;
      if (j.contains("V")) v = j["V"].get<std::string>();
      return from_expr(j["tail"].get<std::string>(), j["alpha"].get<double>(), x0, v, c_left);
    }
    throw TailError("tail model: unknown kind '" + kind + "'");
  }

  /// Nodes of the inversion table (expression models only).
  const std::vector<double>& table_nodes() const noexcept { return s_->node_x; }

 private:
  struct State {
    TailKind kind = TailKind::Pareto;
    double alpha = -3.0;
    double x0 = 1.0;
    double rate = 1.0;
    double c_left = 1.0;
    double mean = 0.0;
    std::string name, tail_text;
    std::optional<std::string> v_text;
    std::function<double(double)> tail_log, v_log;
    // inversion table: y = -ln F₊ (increasing) -> s = ln(x/x0)
    std::vector<double> node_x, node_F, node_y, node_s;
    numeric::MonotoneCubic inverse;
  };
  std::shared_ptr<const State> s_;

  explicit TailModel(std::shared_ptr<const State> s) : s_(std::move(s)) {}

  static constexpr std::size_t kTableNodes = 4096;

  static double locate_unit_level(const std::function<double(double)>& lf) {
    // ln F₊ crosses 0 from above; search on (0, 1e6]
    auto pred = [&](double t) {
      try {
        return lf(t) <= 0.0;
      } catch (const expr::DomainError&) {
        return false;
      }
    };
    double hi = 1.0;
    while (!pred(hi)) {
      hi *= 2.0;
      if (hi > 1e6) throw TailError("tail model: cannot locate x0 with F+(x0) = 1");
    }
    return numeric::bisect_predicate(pred, 0.0, hi);
  }

  static void validate_expression_tail(const State& s) {
    double at_x0;
    try {
      at_x0 = s.tail_log(s.x0);
    } catch (const std::exception& e) {
      throw TailError("tail model: F+ not evaluable at x0: " + std::string(e.what()));
    }
    if (std::fabs(at_x0) > 1e-9) throw TailError("tail model: F+(x0) must equal 1");
    double prev = 0.0;
    for (double t : numeric::log_space(std::max(s.x0, 1e-300) * (1.0 + 1e-9), std::max(s.x0, 1.0) * 1e12, 400)) {
      const double l = s.tail_log(t);
      if (!(l <= prev + 1e-12)) throw TailError("tail model: F+ increases near t = " + expr::format_double(t));
      prev = l;
      if (s.v_log && l > s.v_log(t) + 1e-12)
        throw TailError("tail model: F+ exceeds V at t = " + expr::format_double(t));
    }
  }

  static double integrate_mean(const State& s) {
    // m = x0 + ∫_{x0}^X F₊ + F₊(X) X / (-α-1), integrated in ln t on dyadic panels
    const double base = std::max(s.x0, 1e-300);
    std::vector<double> nodes;
    for (int k = 0; k <= 64; ++k) nodes.push_back(std::log(base) + k * std::numbers::ln2);
    numeric::CumulativeIntegral I([&](double u) { return std::exp(u + std::min(0.0, s.tail_log(std::exp(u)))); },
                                  nodes, {.abs_tol = 1e-13, .rel_tol = 1e-12});
    const double X = std::exp(I.upper());
    const double rest = std::exp(std::min(0.0, s.tail_log(X))) * X / (-s.alpha - 1.0);
    return s.x0 + I(I.upper()) + rest;
  }

  static void build_table(State& s) {
    const double base = std::max(s.x0, 1e-300);
    // extend until F₊ <= 1e-16
    double smax = 1.0;
    while (s.tail_log(base * std::exp(smax)) > -16.0 * std::numbers::ln10) {
      smax *= 2.0;
      if (smax > 700.0) break;
    }
    for (std::size_t i = 0; i < kTableNodes; ++i) {
      const double sv = smax * static_cast<double>(i) / static_cast<double>(kTableNodes - 1);
      const double x = i == 0 ? s.x0 : base * std::exp(sv);
      const double y = i == 0 ? 0.0 : -std::min(0.0, s.tail_log(x));
      if (!s.node_y.empty() && !(y > s.node_y.back())) continue;  // flat stretch: keep the left end
      s.node_x.push_back(x);
      s.node_s.push_back(sv);
      s.node_y.push_back(y);
      s.node_F.push_back(std::exp(-y));
    }
    if (s.node_y.size() < 2) throw TailError("tail model: inversion table construction failed");
    s.inverse = numeric::MonotoneCubic(s.node_y, s.node_s);
  }

  double table_quantile(double u) const {
    const auto& s = *s_;
    if (u >= 1.0) return s.x0;
    // exact hit on a node value (F values are stored in decreasing order)
    auto it = std::lower_bound(s.node_F.begin(), s.node_F.end(), u, std::greater<>());
    if (it != s.node_F.end() && *it == u) return s.node_x[static_cast<std::size_t>(it - s.node_F.begin())];
    const double y = -std::log(u);
    const double base = std::max(s.x0, 1e-300);
    double sv;
    if (y > s.node_y.back()) {
      sv = s.node_s.back() + (y - s.node_y.back()) / (-s.alpha);
    } else {
      sv = s.inverse(y);
    }
    // one Newton step on ln F₊(x0 e^s) + y = 0 with a secant slope
    const double h = 1e-6 * std::max(1.0, std::fabs(sv));
    const double f0 = s.tail_log(base * std::exp(sv)) + y;
    const double f1 = s.tail_log(base * std::exp(sv + h));
    const double f2 = s.tail_log(base * std::exp(sv - h));
    const double slope = (f1 - f2) / (2.0 * h);
    if (slope < 0.0 && std::isfinite(f0)) {
      const double step = f0 / slope;
      if (std::fabs(step) < 0.1) sv -= step;
    }
    return std::max(s.x0, base * std::exp(sv));
  }
};

/// count centered draws; state.counter advances by count.
inline std::vector<double> sample(const TailModel& model, std::size_t count, SamplerState& state) {
  if (count == 0) throw std::invalid_argument("sample: count must be >= 1");
  Rng rng(state);
  std::vector<double> out(count);
  for (auto& v : out) v = model.draw(rng);
  state = rng.state();
  return out;
}

inline double centering_mean(const TailModel& model) { return model.mean(); }

// ---------------------------------------------------------------------------
// Generalized inverses

struct InverseResult {
  double value = 0.0;
  bool below_range = false;  // t <= h(0)
};

/// inf{v >= 0 : h(v) >= t} for non-decreasing h.
inline InverseResult generalized_inverse(const std::function<double(double)>& h, double t, double v_cap = 1e300) {
  auto pred = [&](double v) { return h(v) >= t; };
  if (pred(0.0)) return {0.0, true};
  double lo = 0.0, hi = 1.0;
  while (!pred(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > v_cap) throw numeric::BracketError("generalized_inverse: h stays below t up to the cap");
  }
  return {numeric::bisect_predicate(pred, lo, hi), false};
}

/// σ(v) = V^{(-1)}(1/v) for decreasing V, i.e. inf{t > 0 : V(t) <= 1/v}.
inline double sigma(const PositiveFunction& V, double v) {
  if (!(v >= 1.0)) throw std::domain_error("sigma: v must be >= 1");
  const double level = -std::log(v);
  auto pred = [&](double s) {
    try {
      return V.log(std::exp(s)) <= level;
    } catch (const expr::DomainError&) {
      return false;
    }
  };
  double lo = 0.0, hi = 0.0;
  if (pred(0.0)) {
    lo = -1.0;
    while (pred(lo)) {
      hi = lo;
      lo *= 2.0;
      if (lo < -700.0) return 0.0;
    }
  } else {
    hi = 1.0;
    while (!pred(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 700.0) throw numeric::BracketError("sigma: V does not fall below 1/v");
    }
  }
  return std::exp(numeric::bisect_predicate(pred, lo, hi));
}

inline double sigma(const TailModel& model, double v) { return sigma(model.dominating_function(), v); }

// ---------------------------------------------------------------------------
// Zones

enum class Regime { FiniteVariance, InfiniteVariance };

inline std::string to_string(Regime r) { return r == Regime::FiniteVariance ? "finite-variance" : "infinite-variance"; }

inline Regime regime_from_string(const std::string& s) {
  if (s == "finite-variance" || s == "finite") return Regime::FiniteVariance;
  if (s == "infinite-variance" || s == "infinite") return Regime::InfiniteVariance;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

/// Zone boundary x = h(n). A power law h(v) = c v^β is recognised by beta.
struct ZoneSpec {
  std::string h_text;
  std::function<double(double)> h;
  Regime regime = Regime::FiniteVariance;
  std::optional<double> beta;
  double c = 1.0;

  static ZoneSpec power(double c, double beta, Regime regime) {
    if (!(c > 0.0 && beta > 0.0)) throw std::invalid_argument("zone: need c > 0 and beta > 0");
    ZoneSpec z;
    z.h_text = (c == 1.0 ? "" : expr::format_double(c) + "*") + (beta == 1.0 ? "n" : "n^" + expr::format_double(beta));
    z.h = [c, beta](double v) { return c * std::pow(v, beta); };
    z.regime = regime;
    z.beta = beta;
    z.c = c;
    return z;
  }
  /// Expression in x (read as n).
  static ZoneSpec parse(const std::string& text, Regime regime) {
    auto ast = expr::parse(text);
    ZoneSpec z;
    z.h_text = text;
    z.h = [ast](double v) { return expr::evaluate(ast, v); };
    z.regime = regime;
    return z;
  }

  double operator()(double n) const { return h(n); }
};

struct ZoneCheck {
  bool ok = true;
  std::vector<double> n;
  std::vector<double> ratio;  // h/√(n ln n) or h/σ(n)
  std::string reason;
};

/// "h ≫ scale" read as a ratio increasing over the top half of the n grid.
inline ZoneCheck validate_zone(const ZoneSpec& zone, const TailModel& model, const std::vector<double>& ngrid) {
  ZoneCheck out;
  if (ngrid.size() < 2) return {false, {}, {}, "zone check needs at least two n values"};
  for (double n : ngrid) {
    const double scale = zone.regime == Regime::FiniteVariance ? std::sqrt(n * std::log(n)) : sigma(model, n);
    out.n.push_back(n);
    out.ratio.push_back(zone(n) / scale);
  }
  for (std::size_t i = std::max<std::size_t>(1, ngrid.size() / 2); i < out.ratio.size(); ++i)
    if (!(out.ratio[i] > out.ratio[i - 1])) {
      out.ok = false;
      out.reason = zone.regime == Regime::FiniteVariance ? "h(n)/sqrt(n ln n) is not increasing"
                                                         : "h(n)/sigma(n) is not increasing";
    }
  return out;
}

/// ψ(t) = √(h^{(-1)}(t)) (finite variance) or σ(h^{(-1)}(t)) (infinite variance).
inline PsiSpec choose_psi(const ZoneSpec& zone, const TailModel& model) {
  if (zone.regime == Regime::InfiniteVariance && model.finite_variance())
    throw std::invalid_argument("choose_psi: infinite-variance zone for a finite-variance model");
  if (zone.beta) {
    const double b = *zone.beta;
    if (zone.regime == Regime::FiniteVariance) return PsiSpec::power(1.0 / (2.0 * b));
    if (model.kind() == TailKind::Pareto) return PsiSpec::power(-1.0 / (model.alpha() * b));
  }
  auto h = zone.h;
  const auto V = model.dominating_function();
  const Regime reg = zone.regime;
  return PsiSpec::custom("psi[" + zone.h_text + "]", [h, V, reg](double t) {
    const double v = generalized_inverse(h, t).value;
    const double p = reg == Regime::FiniteVariance ? std::sqrt(v) : sigma(V, std::max(v, 1.0));
    return std::max(1.0, p);
  });
}

// ---------------------------------------------------------------------------
// Side conditions

struct Ap5Report {
  double n = 0.0, x = 0.0;
  double ratio = 0.0;           // n V(x)^2 / F₊(x)
  double eps = 0.1;
  double c_hat = 0.0;           // inf over the grid tail of F₊(t) t^eps / V(t)
  bool sufficient = false;      // F₊(t) >= c V(t) t^{-eps} for some c > 0
};

inline Ap5Report check_ap5(const TailModel& model, double n, double x, double eps = 0.1) {
  Ap5Report r;
  r.n = n;
  r.x = x;
  r.eps = eps;
  r.ratio = std::exp(std::log(n) + 2.0 * model.log_dominating(x) - model.log_tail(x));
  const auto grid = numeric::tail_half(numeric::geometric_grid(std::max(model.x0(), 1.0) * 1e3, 2.0, 24));
  std::vector<double> q;
  for (double t : grid) q.push_back(std::exp(model.log_tail(t) + eps * std::log(t) - model.log_dominating(t)));
  r.c_hat = *std::min_element(q.begin(), q.end());
  // a positive constant exists if the quotient is not drifting to 0 along the tail
  r.sufficient = r.c_hat > 0.0 && q.back() >= q[q.size() / 2] * (1.0 - 1e-9);
  return r;
}

struct Ap5Path {
  std::vector<Ap5Report> points;
  bool pass = false;  // ratio strictly decreasing along the path
};

inline Ap5Path check_ap5_path(const TailModel& model, const std::vector<double>& ns, const ZoneSpec& zone,
                              double eps = 0.1) {
  Ap5Path p;
  for (double n : ns) p.points.push_back(check_ap5(model, n, zone(n), eps));
  p.pass = p.points.size() >= 2;
  for (std::size_t i = 1; i < p.points.size(); ++i)
    if (!(p.points[i].ratio < p.points[i - 1].ratio)) p.pass = false;
  return p;
}

struct LeftTailReport {
  double support_lower = 0.0;  // ξ >= -m
  double worst_ratio = 0.0;    // max over t of P(ξ < -t) / (c V(t))
  bool holds = false;
};

/// P(ξ < -t) <= c_left V(t) on a t grid. With ξ' >= x0 the left tail is
/// P(ξ' < m - t), which vanishes for t > m - x0.
inline LeftTailReport check_left_tail(const TailModel& model) {
  LeftTailReport r;
  r.support_lower = model.x0() - model.mean();
  for (double t : numeric::log_space(1e-3, 1e6, 200)) {
    const double p = 1.0 - model.tail(model.mean() - t);
    const double bound = model.c_left() * std::exp(model.log_dominating(t));
    r.worst_ratio = std::max(r.worst_ratio, p / bound);
  }
  r.holds = r.worst_ratio <= 1.0 + 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Second-moment growth (finite vs infinite variance)

struct MomentDiagnostic {
  std::vector<std::size_t> sizes;    // N, N/2, N/4, ...
  std::vector<double> moments;       // mean of ξ² over the first sizes[k] draws
  std::vector<double> halving_ratio; // moments[k] / moments[k+1]
  double growth = 0.0;               // moments.front() / moments.back()
};

inline MomentDiagnostic second_moment_growth(const TailModel& model, std::size_t N, SamplerState state,
                                             int halvings = 4) {
  if (N >> halvings == 0) throw std::invalid_argument("second_moment_growth: N too small");
  MomentDiagnostic d;
  std::vector<std::size_t> marks;
  for (int k = halvings; k >= 0; --k) marks.push_back(N >> k);
  Rng rng(state);
  double sum = 0.0;
  std::size_t done = 0;
  std::vector<double> at_mark;
  for (std::size_t mk : marks) {
    for (; done < mk; ++done) {
      const double v = model.draw(rng);
      sum += v * v;
    }
    at_mark.push_back(sum / static_cast<double>(mk));
  }
  for (int k = halvings; k >= 0; --k) {
    d.sizes.push_back(marks[static_cast<std::size_t>(k)]);
    d.moments.push_back(at_mark[static_cast<std::size_t>(k)]);
  }
  for (std::size_t k = 0; k + 1 < d.moments.size(); ++k) d.halving_ratio.push_back(d.moments[k] / d.moments[k + 1]);
  d.growth = d.moments.front() / d.moments.back();
  return d;
}

}  // namespace psilcf::tails

#pragma once

// Quadrature, bracketing root finders, monotone interpolation and grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace psilcf::numeric {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double abs_tol = 1e-12;  // per-panel absolute tolerance
  double rel_tol = 1e-14;  // relative to the coarse panel estimate; keeps large panels reachable
  int max_depth = 48;
};

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double fa, double m, double fm, double b, double fb, double whole,
                    double tol, int depth, const QuadratureOptions& opt) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw QuadratureError("non-finite integrand near t = " + std::to_string(lm));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double both = left + right;
  const double delta = both - whole;
  if (std::fabs(delta) <= 15.0 * tol || lm <= a || rm >= b) return both + delta / 15.0;
  if (depth <= 0) throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                                        std::to_string(b) + "]");
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, opt) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, opt);
}

}  // namespace detail

/// Adaptive Simpson with interval bisection and Richardson correction.
template <class F>
double adaptive_simpson(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, opt);
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb))
    throw QuadratureError("non-finite integrand on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(whole));
  return detail::simpson_step(f, a, fa, m, fm, b, fb, whole, tol, opt.max_depth, opt);
}

/// Running integral F(s) = ∫_{nodes[0]}^{s} f over a fixed node sequence.
/// Panel sums between nodes are computed once; queries integrate only the
/// partial panel.
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;
  CumulativeIntegral(std::function<double(double)> f, std::vector<double> nodes, QuadratureOptions opt = {})
      : f_(std::move(f)), nodes_(std::move(nodes)), opt_(opt) {
    if (nodes_.size() < 2) throw std::invalid_argument("CumulativeIntegral needs at least two nodes");
    if (!std::is_sorted(nodes_.begin(), nodes_.end()) ||
        std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end())
      throw std::invalid_argument("CumulativeIntegral nodes must be strictly increasing");
    cum_.assign(nodes_.size(), 0.0);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      double panel;
      try {
        panel = adaptive_simpson(f_, nodes_[i - 1], nodes_[i], opt_);
      } catch (const QuadratureError&) {
        // Integrand is unusable past this node; truncate the table.
        nodes_.resize(i);
        cum_.resize(i);
        break;
      }
      cum_[i] = cum_[i - 1] + panel;
    }
    if (nodes_.size() < 2) throw QuadratureError("integrand not integrable on the first panel");
  }

  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& cumulative() const { return cum_; }

  double operator()(double s) const {
    if (!(s >= nodes_.front()) || s > nodes_.back())
      throw QuadratureError("integration limit " + std::to_string(s) + " outside [" + std::to_string(nodes_.front()) +
                            ", " + std::to_string(nodes_.back()) + "]");
    const std::size_t k = panel_index(s);
    if (s == nodes_[k]) return cum_[k];
    return cum_[k] + adaptive_simpson(f_, nodes_[k], s, opt_);
  }

  /// Index k with nodes[k] <= s < nodes[k+1] (last panel for s == upper()).
  std::size_t panel_index(double s) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
    std::size_t k = static_cast<std::size_t>(it - nodes_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, nodes_.size() - 2);
  }

 private:
  std::function<double(double)> f_;
  std::vector<double> nodes_;
  std::vector<double> cum_;
  QuadratureOptions opt_;
};

struct RootOptions {
  double ftol = 0.0;   // stop when |f| <= ftol
  double xtol = 0.0;   // stop when bracket width <= xtol (0: machine resolution)
  int max_iter = 400;
};

/// Root of f on [lo, hi] with f(lo), f(hi) of opposite sign. Illinois
/// secant steps, falling back to bisection when the secant stalls.
template <class F>
double solve_bracketed(const F& f, double lo, double hi, const RootOptions& opt = {}) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw BracketError("root not bracketed");
  int side = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    double mid;
    if (it % 3 == 2) {
      mid = 0.5 * (lo + hi);
    } else {
      mid = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    }
    if (mid <= lo || mid >= hi) return std::fabs(flo) < std::fabs(fhi) ? lo : hi;
    const double fm = f(mid);
    if (std::fabs(fm) <= opt.ftol || fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo <= opt.xtol) return std::fabs(flo) < std::fabs(fhi) ? lo : hi;
  }
  return std::fabs(flo) < std::fabs(fhi) ? lo : hi;
}

/// Smallest point (to floating resolution) of [lo, hi] where pred holds,
/// given pred(lo) false, pred(hi) true and pred monotone.
template <class P>
double bisect_predicate(const P& pred, double lo, double hi) {
  for (int it = 0; it < 2200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys) : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic needs matching node arrays");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneCubic abscissae must increase");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + d_.back() * (x - x_.back());
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    if (x == x_[k]) return y_[k];
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
           (t3 - t2) * h * d_[k + 1];
  }

 private:
  std::vector<double> x_, y_, d_;
};

// ---------------------------------------------------------------------------
// Grids

/// x0 * ratio^j, j = 0..count-1.
inline std::vector<double> geometric_grid(double x0, double ratio, std::size_t count) {
  if (!(x0 > 0.0) || !(ratio > 1.0)) throw std::invalid_argument("geometric_grid needs x0 > 0 and ratio > 1");
  std::vector<double> g(count);
  for (std::size_t j = 0; j < count; ++j) g[j] = x0 * std::pow(ratio, static_cast<double>(j));
  return g;
}

/// count points spread geometrically from lo to hi inclusive.
inline std::vector<double> log_space(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw std::invalid_argument("log_space needs 0 < lo < hi, count >= 2");
  std::vector<double> g(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t j = 0; j < count; ++j)
    g[j] = j + 1 == count ? hi : std::exp(a + (b - a) * static_cast<double>(j) / static_cast<double>(count - 1));
  g.front() = lo;
  return g;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count < 2) return {lo};
  std::vector<double> g(count);
  for (std::size_t j = 0; j < count; ++j)
    g[j] = j + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  return g;
}

/// Upper half of a sorted grid: the operational "all large enough x".
inline std::vector<double> tail_half(const std::vector<double>& grid) {
  return {grid.begin() + static_cast<std::ptrdiff_t>(grid.size() / 2), grid.end()};
}

}  // namespace psilcf::numeric

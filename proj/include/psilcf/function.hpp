#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "psilcf/expr.hpp"

namespace psilcf {

/// A strictly positive function g, carried as l(x) = ln g(x) so that
/// values such as e^{-x} or exp(sqrt(x)) stay usable far beyond the
/// range of a double.
class PositiveFunction {
 public:
  using LogFn = std::function<double(double)>;

  PositiveFunction() = default;
  PositiveFunction(std::string name, LogFn log_fn) : name_(std::move(name)), log_(std::move(log_fn)) {
    if (!log_) throw std::invalid_argument("PositiveFunction: empty callable");
  }

  static PositiveFunction from_expr(const expr::Ast& ast) {
    return PositiveFunction(expr::print(ast), [ast](double x) { return expr::evaluate_log(ast, x); });
  }
  static PositiveFunction parse(std::string_view text) {
    auto ast = expr::parse(text);
    return PositiveFunction(std::string(text), [ast](double x) { return expr::evaluate_log(ast, x); });
  }
  /// Wraps a plain-valued callable; values must be positive where evaluated.
  static PositiveFunction from_value(std::string name, std::function<double(double)> f) {
    return PositiveFunction(std::move(name), [f = std::move(f), n = name](double x) {
      const double v = f(x);
      if (!(v > 0.0)) throw expr::DomainError("function is not positive at x = " + expr::format_double(x), n);
      return std::log(v);
    });
  }

  const std::string& name() const noexcept { return name_; }
  double log(double x) const { return log_(x); }
  double operator()(double x) const { return std::exp(log_(x)); }

 private:
  std::string name_;
  LogFn log_;
};

}  // namespace psilcf

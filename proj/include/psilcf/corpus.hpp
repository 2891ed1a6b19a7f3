#pragma once

// Named test functions used by the checkers' regression tests, the
// acceptance run and `psilcf report`.

#include <string>
#include <vector>

#include "psilcf/funclass.hpp"
#include "psilcf/function.hpp"
#include "psilcf/psi.hpp"

namespace psilcf::corpus {

struct Entry {
  std::string key;
  PositiveFunction g;
  bool non_decreasing;
};

/// ε(t) = 1/ln(e + t), c ≡ 1, clock γ for ψ(t) = √t.
inline PositiveFunction built_sqrt_psi_lcf() {
  auto rep = funclass::RepresentationSpec::from_text("1", "1/ln(e+x)", 1.0);
  return funclass::build_psi_lcf(rep, PsiSpec::power(0.5));
}

inline std::vector<Entry> functions() {
  return {
      {"x^-3", PositiveFunction::parse("x^-3"), false},
      {"x^-3*ln(x)", PositiveFunction::parse("x^-3*ln(x)"), false},
      {"exp(x^0.25)", PositiveFunction::parse("exp(x^0.25)"), true},
      {"exp(sqrt(x))", PositiveFunction::parse("exp(sqrt(x))"), true},
      {"exp(-x)", PositiveFunction::parse("exp(-x)"), false},
      {"5", PositiveFunction::parse("5"), true},
      {"exp(x^0.6)", PositiveFunction::parse("exp(x^0.6)"), true},
      {"built_sqrt", built_sqrt_psi_lcf(), true},
  };
}

inline std::vector<PsiSpec> psis() { return {PsiSpec::constant(1.0), PsiSpec::power(0.5), PsiSpec::power(1.0)}; }

/// Expected check_psi_lcf verdicts, rows in functions() order, columns in psis() order.
inline const std::vector<std::vector<bool>>& expected_pass() {
  static const std::vector<std::vector<bool>> m{
      {true, true, false},   {true, true, false}, {true, true, false}, {true, false, false},
      {false, false, false}, {true, true, true},  {true, false, false}, {true, true, false},
  };
  return m;
}

}  // namespace psilcf::corpus

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "psilcf/corpus.hpp"
#include "psilcf/funclass.hpp"
#include "psilcf/report.hpp"

using namespace psilcf;
using namespace psilcf::funclass;

namespace {

PositiveFunction fn(const char* text) { return PositiveFunction::parse(text); }

bool passes(const ConvergenceDiagnostic& d) { return d.verdict == Verdict::Pass; }

}  // namespace

// ---------------------------------------------------------------------------
// Condition (A), K, K1

TEST(ConditionA, ClosedFormRatios) {
  // single x = 1e4 in the tail, single v = 10
  auto rep = estimate_condition_A(PsiSpec::power(0.5), 10.0, {1e4, 1e4}, 1);
  ASSERT_EQ(rep.a_raw.size(), 1u);
  EXPECT_NEAR(rep.a_raw[0], std::sqrt(0.9), 1e-12);
  EXPECT_NEAR(rep.a_raw[0], 0.948683, 1e-6);

  auto one = estimate_condition_A(PsiSpec::constant(1.0), 20.0, default_grid());
  for (double a : one.a_hat) EXPECT_EQ(a, 1.0);

  auto lin = estimate_condition_A(PsiSpec::power(1.0), 0.5, default_grid(), 1);
  EXPECT_NEAR(lin.a_hat[0], 0.5, 1e-15);
}

TEST(ConditionA, RegularisedEstimateIsNonIncreasingAndInUnitInterval) {
  for (auto psi : corpus::psis()) {
    auto rep = estimate_condition_A(psi, 0.9, default_grid());
    for (std::size_t i = 0; i < rep.v.size(); ++i) {
      if (i) {
        EXPECT_LE(rep.a_hat[i], rep.a_hat[i - 1]);
      }
      if (rep.pass[i]) {
        EXPECT_GT(rep.a_hat[i], 0.0);
        EXPECT_LE(rep.a_hat[i], 1.0);
      }
    }
  }
}

TEST(ConditionA, DualityBound) {
  for (auto psi : {PsiSpec::constant(1.0), PsiSpec::power(0.5), PsiSpec::power(0.8), PsiSpec::parse("x^0.5*ln(e+x)")}) {
    auto rep = estimate_condition_A(psi, 20.0, default_grid());
    EXPECT_TRUE(rep.duality_holds) << psi.name();
    for (std::size_t i = 0; i < rep.v.size(); ++i)
      if (rep.a_hat[i] > 0.0) {
        EXPECT_LE(rep.upper_sup[i], 1.0 / rep.a_hat[i] + 1e-6);
      }
  }
  auto lin = estimate_condition_A(PsiSpec::power(1.0), 0.9, default_grid());
  EXPECT_TRUE(lin.duality_holds);
}

TEST(ConditionA, InsufficientDomainIsReported) {
  auto rep = estimate_condition_A(PsiSpec::power(1.0), 20.0, default_grid());
  EXPECT_TRUE(rep.insufficient_domain);
  auto k = check_class_K(rep);
  EXPECT_EQ(k.verdict, Verdict::Fail);
  EXPECT_NE(k.reason.find("insufficient domain"), std::string::npos);
}

TEST(ClassK, Verdicts) {
  EXPECT_EQ(check_class_K(PsiSpec::power(0.5)).verdict, Verdict::Pass);
  EXPECT_EQ(check_class_K(PsiSpec::constant(1.0)).verdict, Verdict::Pass);
  EXPECT_TRUE(check_class_K(PsiSpec::power(0.5)).heuristic);
  // ψ = t: a(v) = 1 - v below v = 1, so the integral stays finite
  EXPECT_EQ(check_class_K(PsiSpec::power(1.0)).verdict, Verdict::Fail);
  EXPECT_EQ(check_class_K(PsiSpec::power(1.0), KSettings{.vmax = 0.9}).verdict, Verdict::Pass);
  auto rep = estimate_condition_A(PsiSpec::power(1.0), 0.9, default_grid());
  EXPECT_NEAR(rep.partial_integral, 0.9 - 0.5 * 0.81, 1e-12);
}

TEST(ClassK, ShiftBoundDominatesSolvedShift) {
  auto psi = PsiSpec::power(0.5);
  auto rep = estimate_condition_A(psi, 20.0, default_grid());
  for (double v : {0.5, 1.0, 2.0, 5.0}) {
    const double rv = shift_bound(rep, v);
    ASSERT_TRUE(std::isfinite(rv));
    for (double x : numeric::tail_half(default_grid())) EXPECT_LE(solve_shift(psi, x, v), rv + 1e-9) << x;
  }
  auto ones = estimate_condition_A(PsiSpec::constant(1.0), 4.0, default_grid());
  EXPECT_NEAR(shift_bound(ones, 3.0), 3.0, 1e-12);
}

TEST(ClassK1, Verdicts) {
  auto s = check_class_K1(PsiSpec::power(0.5));
  EXPECT_EQ(s.verdict, Verdict::Pass) << s.reason;
  EXPECT_NEAR(s.alpha, 0.5, 1e-3);
  EXPECT_TRUE(s.theta_increasing);

  auto lin = check_class_K1(PsiSpec::power(1.0));
  EXPECT_EQ(lin.verdict, Verdict::Fail);
  EXPECT_EQ(lin.reason, "index alpha = 1 is excluded");

  auto same = check_class_K1(PsiSpec::parse("x^0.5*(1+0.1*ln(x))^0"));
  EXPECT_EQ(same.verdict, Verdict::Pass);
  EXPECT_NEAR(same.alpha, 0.5, 1e-3);

  // local index 0.5 + 0.3 cos(ln x) never settles
  auto wobble = PsiSpec::custom("sqrt(x)*exp(0.3*sin(ln(x)))",
                                [](double t) { return std::sqrt(t) * std::exp(0.3 * std::sin(std::log(t))); });
  EXPECT_EQ(check_class_K1(wobble).verdict, Verdict::Indeterminate);
}

// ---------------------------------------------------------------------------
// Constructors

TEST(Build, SlowlyVaryingIdentityAndPowerModes) {
  auto one = build_svf(RepresentationSpec::from_text("1", "0", 1.0));
  for (double x : {1.0, 10.0, 1e6, 1e12}) EXPECT_NEAR(one(x), 1.0, 1e-15);

  auto pw = build_svf(RepresentationSpec::from_text("1", "0.5", 1.0, 0.5));
  for (double x : {1.0, 10.0, 1e6, 1e12}) EXPECT_NEAR(pw.log(x), 0.5 * std::log(x), 1e-12 * std::max(1.0, std::log(x)));
}

TEST(Build, LcfClockAndValidation) {
  // ∫_0^x e^{-u} du = 1 - e^{-x}
  auto g = build_lcf(RepresentationSpec::from_text("2+1/x", "1/x", 2.0));
  for (double x : {1.0, 5.0, 40.0}) EXPECT_NEAR(g.log(x), std::log(2.0 + 1.0 / x) - std::expm1(-x), 1e-12);

  EXPECT_FALSE(validate(RepresentationSpec::from_text("1", "0.3", 1.0)).ok);       // ε does not vanish
  EXPECT_FALSE(validate(RepresentationSpec::from_text("1+x", "0", 1.0)).ok);       // c diverges
  EXPECT_THROW(build_svf(RepresentationSpec::from_text("1", "0.3", 1.0)), std::invalid_argument);
}

TEST(Build, PsiLcfRequiresClassK) {
  auto rep = RepresentationSpec::from_text("1", "1/ln(e+x)", 1.0);
  EXPECT_THROW(build_psi_lcf(rep, PsiSpec::power(1.0)), std::invalid_argument);
  auto g = build_psi_lcf(rep, PsiSpec::power(0.5));
  // ln g(x) = ∫_0^{γ} du/ln(e + e^u), which lies between ln(1+γ) - 1 and ln(1+γ) + 1
  for (double x : {1e2, 1e6, 1e9}) {
    const double gam = gamma(PsiSpec::power(0.5), x);
    EXPECT_GT(g.log(x), std::log1p(gam) - 1.0);
    EXPECT_LT(g.log(x), std::log1p(gam) + 1.0);
  }
}

TEST(Build, ClosureUnderTheChecker) {
  const LcfSettings wide{numeric::linspace(-2.0, 2.0, 9), default_grid(), 0.01, 0.5};
  const std::vector<RepresentationSpec> reps{
      RepresentationSpec::from_text("1", "1/ln(e+x)", 1.0),
      RepresentationSpec::from_text("2+1/x", "1/ln(e+x)^2", 2.0),
      RepresentationSpec::from_text("3", "-1/(1+ln(1+x))", 3.0),
      RepresentationSpec::from_text("1", "1/(1+x)", 1.0, 0.0, true),
  };
  for (const auto& psi : {PsiSpec::constant(1.0), PsiSpec::power(0.5), PsiSpec::power(2.0 / 3.0)})
    for (const auto& rep : reps) {
      auto g = build_psi_lcf(rep, psi);
      auto d = check_psi_lcf(g, psi, wide);
      EXPECT_TRUE(passes(d)) << g.name() << ": " << d.reason;
    }
}

// ---------------------------------------------------------------------------
// ψ-l.c.f. checker

TEST(CheckPsiLcf, CorpusVerdictMatrix) {
  const auto fs = corpus::functions();
  const auto ps = corpus::psis();
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) {
      auto d = check_psi_lcf(fs[i].g, ps[j]);
      EXPECT_EQ(passes(d), corpus::expected_pass()[i][j]) << fs[i].key << " with psi=" << ps[j].name() << ": " << d.reason;
    }
}

TEST(CheckPsiLcf, ExactRatioForExponential) {
  auto d = check_psi_lcf(fn("exp(-x)"), PsiSpec::constant(1.0), {1.0}, default_grid(), 0.01);
  for (double r : d.ratio[0]) EXPECT_NEAR(r, std::exp(-1.0), 1e-5);  // cancellation in -(x+1) + x
  EXPECT_NEAR(std::exp(-1.0), 0.367879, 1e-6);
  EXPECT_EQ(d.verdict, Verdict::Fail);
}

TEST(CheckPsiLcf, SqrtExponentRatioTendsToExpHalfV) {
  auto d = check_psi_lcf(fn("exp(sqrt(x))"), PsiSpec::power(0.5));
  for (std::size_t iv = 0; iv < d.v.size(); ++iv) EXPECT_NEAR(d.ratio[iv].back(), std::exp(d.v[iv] / 2.0), 1e-3);
  EXPECT_EQ(d.verdict, Verdict::Fail);
  // x^β((1 + v x^{-1/2})^β - 1) with β = 1/4 at the last grid point
  auto q = check_psi_lcf(fn("exp(x^0.25)"), PsiSpec::power(0.5));
  const double x = default_grid().back();
  for (std::size_t iv = 0; iv < q.v.size(); ++iv) {
    const double v = q.v[iv];
    const double expo = std::pow(x, 0.25) * std::expm1(0.25 * std::log1p(v / std::sqrt(x)));
    EXPECT_NEAR(q.ratio[iv].back(), std::exp(expo), 1e-10);
  }
}

TEST(CheckPsiLcf, DefinitionOneExclusionsAndIndeterminate) {
  // ψ = t with v = -1 lands at 0 < x/2; the pair is skipped, not failed
  auto d = check_psi_lcf(fn("5"), PsiSpec::power(1.0));
  for (double r : d.ratio[1]) EXPECT_TRUE(std::isnan(r));
  EXPECT_EQ(d.verdict, Verdict::Pass);
  auto none = check_psi_lcf(fn("5"), PsiSpec::power(1.0), {-1.0, -2.0}, default_grid(), 0.01);
  EXPECT_EQ(none.verdict, Verdict::Indeterminate);
}

TEST(CheckPsiLcf, TieBreakAtTolerance) {
  // ratio exactly 1 + tol within the tie-break counts as passing
  const double tol = std::expm1(0.01);
  auto g = PositiveFunction("exp(0.01*x)", [](double x) { return 0.01 * x; });
  const auto grid = numeric::geometric_grid(1.0, 2.0, 10);
  EXPECT_EQ(check_psi_lcf(g, PsiSpec::constant(1.0), {1.0}, grid, tol).verdict, Verdict::Pass);
  EXPECT_EQ(check_psi_lcf(g, PsiSpec::constant(1.0), {1.0}, grid, tol - 1e-9).verdict, Verdict::Fail);
}

TEST(CheckPsiLcf, NonPositiveFunctionIsAnError) {
  EXPECT_THROW(check_psi_lcf(fn("x-1e5"), PsiSpec::constant(1.0)), expr::DomainError);
}

TEST(CheckPsiLcf, MonotoneEndpointShortcut) {
  for (const auto& e : corpus::functions()) {
    if (!e.non_decreasing) continue;
    for (const auto& psi : corpus::psis()) {
      auto full = check_psi_lcf(e.g, psi, LcfSettings{numeric::linspace(-2.0, 2.0, 41)});
      auto ends = check_psi_lcf(e.g, psi, LcfSettings{{-2.0, 2.0}});
      EXPECT_EQ(full.verdict, ends.verdict) << e.key << " / " << psi.name();
    }
  }
}

TEST(CheckPsiLcf, ConjugateEquivalence) {
  for (const auto& e : corpus::functions())
    for (const auto& psi : corpus::psis()) {
      const auto direct = check_psi_lcf(e.g, psi);
      LcfSettings s;
      s.xgrid = gamma_grid(psi, default_grid());
      const auto conj = check_lcf(conjugate_gamma(e.g, psi), s);
      EXPECT_EQ(passes(direct), passes(conj)) << e.key << " / " << psi.name() << ": " << direct.reason << " | "
                                              << conj.reason;
    }
  // θ conjugate for ψ in K1
  const auto sq = PsiSpec::power(0.5);
  for (const auto& e : corpus::functions()) {
    LcfSettings s;
    s.xgrid = theta_grid(sq, default_grid());
    EXPECT_EQ(passes(check_psi_lcf(e.g, sq)), passes(check_lcf(conjugate_theta(e.g, sq), s))) << e.key;
  }
}

TEST(Conjugates, ClosedForms) {
  // x^-3 through γ^{-1}(t) = e^t for ψ = t
  auto g = conjugate_gamma(fn("x^-3"), PsiSpec::power(1.0));
  for (double t : {0.5, 3.0, 20.0}) EXPECT_NEAR(g.log(t), -3.0 * t, 1e-8 * std::max(1.0, t));
  // exp(√x) through θ^{-1}(t) = t² for ψ = √t
  auto h = conjugate_theta(fn("exp(sqrt(x))"), PsiSpec::power(0.5));
  for (double t : {2.0, 30.0, 1e3}) EXPECT_NEAR(h.log(t), t, 1e-8 * t);
  EXPECT_EQ(check_lcf(h, LcfSettings{.xgrid = theta_grid(PsiSpec::power(0.5), default_grid())}).verdict, Verdict::Fail);
  auto b = conjugate_gamma(corpus::built_sqrt_psi_lcf(), PsiSpec::power(0.5));
  EXPECT_EQ(check_lcf(b, LcfSettings{.xgrid = gamma_grid(PsiSpec::power(0.5), default_grid())}).verdict, Verdict::Pass);
}

TEST(CheckPsiLcf, CorollaryTrendForMembers) {
  const auto fs = corpus::functions();
  const auto ps = corpus::psis();
  const auto grid = default_grid();
  const double xl = grid.back(), xm = grid[grid.size() / 2];
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (!corpus::expected_pass()[i][j]) continue;
      const double last = clock_growth(fs[i].g, xl, gamma(ps[j], xl));
      const double mid = clock_growth(fs[i].g, xm, gamma(ps[j], xm));
      EXPECT_LT(last, mid) << fs[i].key << " / " << ps[j].name();
    }
  // θ version for ψ = √t members
  const auto sq = PsiSpec::power(0.5);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (!corpus::expected_pass()[i][1]) continue;
    EXPECT_LT(clock_growth(fs[i].g, xl, theta(sq, xl)), clock_growth(fs[i].g, xm, theta(sq, xm))) << fs[i].key;
  }
}

// ---------------------------------------------------------------------------
// Uniform deviation, shifts, ε extraction, upper power

TEST(UniformDeviation, ClosedFormAndDecay) {
  const auto g = fn("x^-3");
  const auto psi = PsiSpec::power(0.5);
  const double h6 = uniform_deviation(g, psi, -1.0, 1.0, 1e6);
  EXPECT_NEAR(h6, std::pow(1.0 - 1e-3, -3.0) - 1.0, 1e-12);
  EXPECT_NEAR(h6, 3.006e-3, 1e-6);
  EXPECT_GE(h6, 2.9e-3);
  EXPECT_LE(h6, 3.1e-3);
  const double h8 = uniform_deviation(g, psi, -1.0, 1.0, 1e8);
  EXPECT_NEAR(h8, 3.0e-4, 1e-6);
  double prev = uniform_deviation(g, psi, -1.0, 1.0, 1e4);
  for (double x : {1e6, 1e8}) {
    const double h = uniform_deviation(g, psi, -1.0, 1.0, x);
    EXPECT_LT(h, prev);
    prev = h;
  }
  EXPECT_EQ(uniform_deviation(fn("5"), psi, -2.0, 2.0, 1e5), 0.0);
  EXPECT_EQ(uniform_deviation(fn("5"), PsiSpec::constant(1.0), 0.0, 7.0, 50.0), 0.0);
}

TEST(SolveShift, ClosedForms) {
  for (double v : {0.5, 1.0, 3.0}) EXPECT_NEAR(solve_shift(PsiSpec::constant(1.0), 100.0, v), v, 1e-9);
  EXPECT_NEAR(solve_shift(PsiSpec::power(1.0), 50.0, std::numbers::ln2), 1.0, 1e-9);
  const auto psi = PsiSpec::power(0.5);
  const double x = 1e4;
  const double r = solve_shift(psi, x, 1.0);
  EXPECT_NEAR(gamma(psi, x + r * psi(x)) - gamma(psi, x), 1.0, 1e-9);
  // 2(√(x + 100 r) - √x) = 1
  EXPECT_NEAR(r, (std::pow(100.5, 2) - 1e4) / 100.0, 1e-8);
  const double rn = solve_shift(psi, x, -1.0);
  EXPECT_NEAR(gamma(psi, x + rn * psi(x)) - gamma(psi, x), -1.0, 1e-9);
  EXPECT_THROW(solve_shift(PsiSpec::constant(1.0), 2.0, -5.0), numeric::BracketError);
}

TEST(ExtractEpsilon, Examples) {
  for (double x : {1e2, 1e5, 1e9}) EXPECT_NEAR(extract_epsilon(fn("x^-3"), PsiSpec::power(1.0), x), -3.0, 1e-3);
  EXPECT_EQ(extract_epsilon(fn("5"), PsiSpec::power(0.5), 1e4), 0.0);
  const auto g = corpus::built_sqrt_psi_lcf();
  const double e6 = extract_epsilon(g, PsiSpec::power(0.5), 1e6);
  EXPECT_LE(std::fabs(e6), 0.08);
  // analytic value ε(e^{γ(x)}) = 1/ln(e + e^{γ(x)})
  const double gam = gamma(PsiSpec::power(0.5), 1e6);
  EXPECT_NEAR(e6, 1.0 / (gam + std::log1p(std::exp(1.0 - gam))), 1e-6);
  EXPECT_LT(std::fabs(extract_epsilon(g, PsiSpec::power(0.5), 1e9)), std::fabs(e6));
}

TEST(UpperPower, Examples) {
  auto r = check_upper_power(fn("x^-3"));
  ASSERT_EQ(r.p.size(), 9u);
  EXPECT_NEAR(r.c_hat[4], 0.125, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  auto e = check_upper_power(fn("exp(-x)"));
  EXPECT_EQ(e.verdict, Verdict::Fail);
  EXPECT_EQ(e.reason, "not an l.c.f.");
  auto l = check_upper_power(fn("x^-3*ln(x)"));
  EXPECT_EQ(l.verdict, Verdict::Pass);
  for (std::size_t i = 0; i < l.p.size(); ++i) EXPECT_NEAR(l.c_hat[i], std::pow(l.p[i], 3.0), 0.3 * std::pow(l.p[i], 3.0));
  // an l.c.f. that is not upper-power: exp(-sqrt(x)) has g(x)/g(x/2) → 0
  EXPECT_EQ(check_upper_power(fn("exp(-sqrt(x))")).verdict, Verdict::Fail);
}

// ---------------------------------------------------------------------------
// Serialization

TEST(Report, CsvAndJson) {
  auto d = check_psi_lcf(fn("x^-3"), PsiSpec::power(0.5));
  const auto rows = report::rows(d);
  EXPECT_EQ(rows.size(), 4u * 24u + 24u);
  const auto csv = report::to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,function,psi,v,x,value,verdict");
  EXPECT_NE(csv.find("psi_lcf,x^-3,sqrt(x),-2,1000,"), std::string::npos);
  const auto j = report::summary(d);
  EXPECT_EQ(j["verdict"], "PASS");
  EXPECT_EQ(j["sup_deviation"].size(), 24u);
  EXPECT_EQ(report::csv_field("a,b"), "\"a,b\"");
}

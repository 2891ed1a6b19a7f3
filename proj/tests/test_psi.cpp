#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "psilcf/numeric.hpp"
#include "psilcf/psi.hpp"

using namespace psilcf;

namespace {
double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }
}  // namespace

TEST(Gamma, ClosedFormExamples) {
  EXPECT_NEAR(gamma(PsiSpec::constant(1.0), 5.0), 4.0, 1e-10);
  EXPECT_NEAR(gamma(PsiSpec::power(1.0), std::exp(2.0)), 2.0, 1e-10);
  EXPECT_NEAR(gamma(PsiSpec::power(0.5), 100.0), 18.0, 1e-10);
  EXPECT_EQ(gamma(PsiSpec::power(0.5), 1.0), 0.0);
}

TEST(Gamma, ExpressionPsiMatchesBuiltIn) {
  auto e = PsiSpec::parse("sqrt(x)");
  auto b = PsiSpec::power(0.5);
  for (double x : {2.0, 37.0, 1e4, 3.3e7}) EXPECT_NEAR(gamma(e, x), gamma(b, x), 1e-10 * gamma(b, x));
}

TEST(Gamma, StrictlyIncreasing) {
  auto psi = PsiSpec::power(0.7);
  double prev = gamma(psi, 1.0);
  for (double x : numeric::log_space(1.001, 1e12, 200)) {
    const double g = gamma(psi, x);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Gamma, AdditivityAgainstDirectQuadrature) {
  // γ(x2) - γ(x1) equals ∫_{x1}^{x2} dt/ψ(t) computed independently in t.
  auto psi = PsiSpec::parse("x^0.5 * (1 + 0.1*ln(x))");
  const auto grid = numeric::log_space(1.0, 1e6, 12);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      double direct = 0.0;
      // independent route: dyadic split in t, not in ln t
      double a = grid[i];
      while (a < grid[j]) {
        const double b = std::min(2.0 * a, grid[j]);
        direct += numeric::adaptive_simpson([&](double t) { return 1.0 / psi(t); }, a, b);
        a = b;
      }
      EXPECT_NEAR(gamma(psi, grid[j]) - gamma(psi, grid[i]), direct, 1e-10 * std::max(1.0, direct));
    }
}

TEST(Gamma, Errors) {
  auto psi = PsiSpec::power(0.5);
  EXPECT_THROW(gamma(psi, 0.5), std::domain_error);
  EXPECT_THROW(gamma_inverse(psi, -1.0), std::domain_error);
}

TEST(GammaInverse, ExamplesAndRoundTrip) {
  EXPECT_NEAR(gamma_inverse(PsiSpec::constant(1.0), 4.0), 5.0, 1e-9);
  EXPECT_NEAR(gamma_inverse(PsiSpec::power(0.5), 18.0), 100.0, 1e-7);
  auto psi = PsiSpec::power(0.7);
  EXPECT_NEAR(gamma(psi, gamma_inverse(psi, 7.0)), 7.0, 1e-9);
}

TEST(GammaInverse, RandomRoundTrips) {
  std::mt19937_64 rng(7);
  for (auto psi : {PsiSpec::constant(1.0), PsiSpec::power(0.5), PsiSpec::power(1.0), PsiSpec::power(0.9)}) {
    // log-uniform over (1e-3, γ at the end of the table)
    const double cap = psi.gamma_table().cumulative().back();
    std::uniform_real_distribution<double> lt(-3.0, std::log10(cap));
    for (int i = 0; i < 100; ++i) {
      const double t = std::pow(10.0, lt(rng));
      EXPECT_LE(rel(gamma(psi, gamma_inverse(psi, t)), t), 1e-9) << psi.name() << " t=" << t;
    }
  }
}

TEST(GammaInverse, BracketFailsWhenGammaIsBounded) {
  // ψ(t) = t^1.5 gives a bounded γ; not a valid clock.
  auto psi = PsiSpec::power(1.5);
  EXPECT_THROW(gamma_inverse(psi, 10.0), numeric::BracketError);
}

TEST(Theta, Examples) {
  EXPECT_DOUBLE_EQ(theta(PsiSpec::power(0.5), 100.0), 10.0);
  EXPECT_NEAR(theta_inverse(PsiSpec::power(0.5), 10.0), 100.0, 1e-7);
  EXPECT_NEAR(theta(PsiSpec::power(0.9), 1e6), 3.98107, 1e-5);
  EXPECT_NEAR(theta(PsiSpec::power(0.9), 1e6), std::pow(10.0, 0.6), 1e-12);
}

TEST(Theta, RandomRoundTrips) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lt(0.0, 5.0);
  for (auto psi : {PsiSpec::constant(1.0), PsiSpec::power(0.5), PsiSpec::power(0.9), PsiSpec::power(2.0 / 3.0)}) {
    for (int i = 0; i < 100; ++i) {
      const double t = std::max(theta(psi, 1.0), std::pow(10.0, lt(rng)));
      EXPECT_LE(rel(theta(psi, theta_inverse(psi, t)), t), 1e-9) << psi.name() << " t=" << t;
    }
  }
}

TEST(Theta, NonMonotoneThetaRejected) {
  EXPECT_THROW(theta_inverse(PsiSpec::power(1.0), 5.0), PsiError);
}

TEST(PsiSpec, ValidationRejectsBadPsi) {
  EXPECT_THROW(PsiSpec::parse("0.5"), PsiError);            // below 1
  EXPECT_THROW(PsiSpec::parse("2 + 1/x"), PsiError);        // decreasing
  EXPECT_THROW(PsiSpec::parse("sqrt(x - 5)"), PsiError);    // not evaluable on the domain
  auto shifted = PsiSpec::parse("sqrt(x - 5)", PsiOptions{.x0 = 6.0});
  EXPECT_EQ(gamma(shifted, 6.0), 0.0);
  EXPECT_NEAR(gamma(shifted, 14.0), 2.0 * (3.0 - 1.0), 1e-10);  // 2(sqrt(x-5) - 1)
  EXPECT_THROW(gamma(shifted, 5.5), std::domain_error);
}

TEST(PsiSpec, Sublinearity) {
  EXPECT_TRUE(PsiSpec::power(0.5).sublinear_on_grid());
  EXPECT_TRUE(PsiSpec::constant(1.0).sublinear_on_grid());
  EXPECT_FALSE(PsiSpec::power(1.0).sublinear_on_grid());
}

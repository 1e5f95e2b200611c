#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "siegel/linearizer.hpp"

using namespace siegel;

namespace {

using LComplex = std::complex<long double>;

constexpr double kRGold = 0.32525734173509691;  // hadamard-fit, golden mean, N = 16384, sigma = 0.3

LComplex multiplier_power(double alpha, std::size_t n) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double t = static_cast<long double>(alpha) * static_cast<long double>(n);
  const long double f = t - std::floor(t);
  return {std::cos(two_pi * f), std::sin(two_pi * f)};
}

// Order-by-order substitution: with L known through degree n-1, the z^n
// coefficient of P(L(z)) - L(lambda z) is c_n (lambda - lambda^n) + [L^2]_n,
// where L^2 is formed by a full polynomial product in long double.
std::vector<LComplex> substitution_oracle(double alpha, std::size_t order) {
  std::vector<LComplex> c(order + 1, 0.0L);
  c[1] = 1.0L;
  const LComplex lam = multiplier_power(alpha, 1);
  for (std::size_t n = 2; n <= order; ++n) {
    std::vector<LComplex> sq(2 * n + 1, 0.0L);
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 1; j < n; ++j) sq[i + j] += c[i] * c[j];
    c[n] = sq[n] / (multiplier_power(alpha, n) - lam);
  }
  return c;
}

double recursion_residual(const LinearizerSeries& s) {
  double scale = 0.0;
  for (std::size_t n = 1; n <= s.available(); ++n) scale = std::max(scale, std::abs(s.coeffs[n]));
  double worst = 0.0;
  for (std::size_t n = 2; n <= s.available(); ++n) {
    LComplex conv = 0.0L;
    for (std::size_t j = 1; j < n; ++j) conv += LComplex(s.coeffs[j]) * LComplex(s.coeffs[n - j]);
    const LComplex lhs = LComplex(s.coeffs[n]) * (LComplex(unit_power(s.alpha, n)) - LComplex(s.lambda));
    worst = std::max(worst, static_cast<double>(std::abs(lhs - conv)));
  }
  return worst / scale;
}

LinearizerSeries geometric_series(double radius, double sigma, std::size_t order) {
  LinearizerSeries s{RotationNumber::golden(), unit_power(RotationNumber::golden(), 1), order, sigma, {}, {}, 0};
  s.coeffs.assign(order + 1, Complex{});
  for (std::size_t n = 1; n <= order; ++n) {
    s.coeffs[n] = std::exp(static_cast<double>(n) * std::log(sigma) - static_cast<double>(n - 1) * std::log(radius));
  }
  return s;
}

}  // namespace

TEST(LinearizerCoeffs, FirstCoefficientIsSigma) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 64, 0.27);
  EXPECT_EQ(s.coeffs[1], Complex(0.27, 0.0));
  EXPECT_EQ(s.available(), 64u);
  EXPECT_FALSE(s.resonance);
}

TEST(LinearizerCoeffs, SecondCoefficientClosedForm) {
  for (const auto& x : {RotationNumber::golden(), RotationNumber::from_double(0.3), RotationNumber::from_rational(2, 7)}) {
    const double sigma = 0.25;
    const auto s = linearizer_coeffs(x, 8, sigma);
    const Complex lam = std::polar(1.0, 2.0 * std::numbers::pi * x.value());
    const Complex expected = sigma * sigma / (lam * lam - lam);
    EXPECT_LT(std::abs(s.coeffs[2] - expected), 1e-14 * std::abs(expected)) << x.describe();
  }
}

TEST(LinearizerCoeffs, HalfResonatesAtThree) {
  const auto s = linearizer_coeffs(RotationNumber::from_rational(1, 2), 100, 1.0);
  ASSERT_TRUE(s.resonance);
  EXPECT_EQ(s.resonance->order, 3u);
  EXPECT_EQ(s.available(), 2u);
  EXPECT_NEAR(s.coeffs[2].real(), 0.5, 1e-15);
  EXPECT_NEAR(s.coeffs[2].imag(), 0.0, 1e-15);
  const auto f = linearizer_coeffs(RotationNumber::from_double(0.5), 100, 1.0);
  ASSERT_TRUE(f.resonance);
  EXPECT_EQ(f.resonance->order, 3u);
}

TEST(LinearizerCoeffs, ResonanceExactlyAtQPlusOne) {
  for (int q = 2; q <= 20; ++q) {
    for (int p = 1; p < q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      const auto s = linearizer_coeffs(RotationNumber::from_rational(p, q), 512, 0.3);
      ASSERT_TRUE(s.resonance) << p << "/" << q;
      EXPECT_EQ(s.resonance->order, static_cast<std::size_t>(q + 1)) << p << "/" << q;
      const RadiusEstimate e = conformal_radius(s);
      EXPECT_TRUE(e.resonant_zero);
      EXPECT_EQ(e.value, 0.0);
      EXPECT_EQ(e.resonance_order, static_cast<std::size_t>(q + 1));
    }
  }
}

TEST(LinearizerCoeffs, MatchesSubstitutionOracle) {
  for (double alpha : {(std::sqrt(5.0) - 1.0) / 2.0, std::sqrt(2.0) - 1.0, 0.1234567}) {
    const auto s = linearizer_coeffs(RotationNumber::from_double(alpha), 64, 1.0);
    const auto oracle = substitution_oracle(alpha, 64);
    for (std::size_t n = 1; n <= 64; ++n) {
      const double ref = static_cast<double>(std::abs(oracle[n]));
      EXPECT_LT(std::abs(s.coeffs[n] - Complex(oracle[n])), 1e-9 * std::max(1.0, ref)) << "alpha " << alpha << " n " << n;
    }
  }
}

TEST(LinearizerCoeffs, RecursionResidualBelowTolerance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  std::vector<RotationNumber> inputs{RotationNumber::golden(), RotationNumber::silver()};
  for (int i = 0; i < 4; ++i) inputs.push_back(RotationNumber::from_double(unif(rng)));
  for (const auto& x : inputs) {
    const auto s = linearizer_coeffs(x, 2048, 0.3);
    EXPECT_LT(recursion_residual(s), 1e-12) << x.describe();
  }
}

TEST(LinearizerCoeffs, CoefficientsStayInRange) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 16384, 0.05);
  EXPECT_GE(s.rescales, 1);
  for (std::size_t n = 1; n <= s.available(); ++n) {
    const double m = std::abs(s.coeffs[n]);
    EXPECT_GE(m, 1e-300);
    EXPECT_LE(m, 1e300);
  }
}

TEST(LinearizerCoeffs, SigmaEquivariance) {
  const auto a = linearizer_coeffs(RotationNumber::golden(), 512, 0.3);
  for (double sigma2 : {0.25, 0.31, 0.4}) {
    const auto b = linearizer_coeffs(RotationNumber::golden(), 512, sigma2);
    ASSERT_EQ(b.rescales, 0);
    for (std::size_t n = 1; n <= 512; ++n) {
      const Complex ratio = b.coeffs[n] / a.coeffs[n];
      const double expected = std::pow(sigma2 / 0.3, static_cast<double>(n));
      EXPECT_LT(std::abs(ratio - expected), 1e-10 * expected) << "sigma' " << sigma2 << " n " << n;
    }
  }
}

TEST(LinearizerCoeffs, RescaledSeriesStaysEquivariant) {
  const auto low = linearizer_coeffs(RotationNumber::golden(), 512, 0.3);
  const auto high = linearizer_coeffs(RotationNumber::golden(), 16384, 0.3);
  ASSERT_GE(high.rescales, 1);
  for (std::size_t n = 1; n <= 512; ++n) {
    const double expected = std::pow(high.sigma / low.sigma, static_cast<double>(n));
    EXPECT_LT(std::abs(high.coeffs[n] / low.coeffs[n] - expected), 1e-10 * expected);
  }
}

TEST(LinearizerCoeffs, RejectsBadArguments) {
  EXPECT_THROW(linearizer_coeffs(RotationNumber::golden(), 0, 0.3), PreconditionError);
  EXPECT_THROW(linearizer_coeffs(RotationNumber::golden(), 10, 0.0), PreconditionError);
  EXPECT_THROW(linearizer_coeffs(RotationNumber::golden(), 10, -1.0), PreconditionError);
}

TEST(VerifyConjugacy, GoldenResidualSmall) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 1024, 0.3);
  EXPECT_LT(verify_conjugacy(s, 50), 1e-10);
  EXPECT_LT(verify_conjugacy(s, 1024), 1e-10);
}

TEST(VerifyConjugacy, OrderOneIsExactlyZero) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 16, 0.3);
  EXPECT_EQ(verify_conjugacy(s, 1), 0.0);
}

TEST(VerifyConjugacy, ResonanceBeforeOrderIsAnError) {
  const auto s = linearizer_coeffs(RotationNumber::from_rational(1, 2), 16, 0.3);
  try {
    verify_conjugacy(s, 3);
    FAIL() << "expected ResonanceError";
  } catch (const ResonanceError& e) {
    EXPECT_EQ(e.order(), 3u);
  }
  EXPECT_NO_THROW(verify_conjugacy(s, 2));
}

TEST(VerifyConjugacy, DetectsCorruptedCoefficient) {
  auto s = linearizer_coeffs(RotationNumber::golden(), 64, 0.3);
  s.coeffs[17] *= 1.0 + 1e-3;
  EXPECT_GT(verify_conjugacy(s, 64), 1e-9);
}

TEST(ConformalRadius, SyntheticGeometricRecovered) {
  for (double r : {0.1, 0.25, 0.5}) {
    const auto s = geometric_series(r, 1.05 * r, 1024);
    for (auto m : {RadiusMethod::hadamard_fit, RadiusMethod::tail_slope}) {
      const RadiusEstimate e = conformal_radius(s, m);
      EXPECT_LT(std::abs(e.value - r), 1e-3 * r) << to_string(m) << " r=" << r;
      EXPECT_GE(e.uncertainty, 0.0);
    }
  }
}

TEST(ConformalRadius, WindowInsideRange) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 1024, 0.3);
  for (double w : {0.1, 0.5, 1.0}) {
    const RadiusEstimate e = conformal_radius(s, RadiusMethod::hadamard_fit, w);
    EXPECT_GE(e.window_lo, 2u);
    EXPECT_LE(e.window_hi, 1024u);
    EXPECT_LT(e.window_lo, e.window_hi);
    EXPECT_EQ(e.uncertainty, std::abs(e.hadamard_value - e.tail_value));
  }
}

TEST(ConformalRadius, GoldenFrozenRegression) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 16384, 0.3);
  const RadiusEstimate h = conformal_radius(s, RadiusMethod::hadamard_fit);
  const RadiusEstimate t = conformal_radius(s, RadiusMethod::tail_slope);
  EXPECT_NEAR(h.value, kRGold, 1e-8);
  EXPECT_LT(std::abs(h.value - t.value), 0.02 * h.value);
}

TEST(ConformalRadius, EstimatorsAgreeOnConstantTypeNumbers) {
  std::vector<RotationNumber> inputs{RotationNumber::golden(), RotationNumber::silver()};
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> quotient(1, 4);
  for (int i = 0; i < 5; ++i) {
    std::vector<BigInt> qs;
    for (int k = 0; k < 6; ++k) qs.push_back(quotient(rng));
    inputs.push_back(RotationNumber::from_quotients(qs, true));
  }
  for (const auto& x : inputs) {
    const auto s = linearizer_coeffs(x, 16384, 0.3);
    const RadiusEstimate e = conformal_radius(s);
    ASSERT_FALSE(e.resonant_zero) << x.describe();
    EXPECT_LT(e.uncertainty, 0.02 * e.value) << x.describe() << " h=" << e.hadamard_value << " t=" << e.tail_value;
  }
}

TEST(ConformalRadius, TooFewCoefficients) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 32, 0.3);
  EXPECT_THROW(conformal_radius(s), InsufficientDataError);
}

TEST(EvaluateLinearizer, NormalizationAtOrigin) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 1024, 0.3);
  EXPECT_EQ(evaluate_linearizer(s, 0.0), Complex(0.0, 0.0));
  const double h = 1e-8;
  const Complex deriv = (evaluate_linearizer(s, h) - evaluate_linearizer(s, 0.0)) / h;
  EXPECT_LT(std::abs(deriv - 1.0), 1e-6);
}

TEST(EvaluateLinearizer, FunctionalEquationAtPoints) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 1024, 0.3);
  const double r = conformal_radius(s).value;
  const Complex z0(0.1, 0.0);
  EXPECT_LT(std::abs(quadratic_map(s, evaluate_linearizer(s, z0)) - evaluate_linearizer(s, s.lambda * z0)), 1e-9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Complex z = std::polar(0.5 * r * std::sqrt(unif(rng)), 2.0 * std::numbers::pi * unif(rng));
    const Complex lhs = quadratic_map(s, evaluate_linearizer(s, z));
    const Complex rhs = evaluate_linearizer(s, s.lambda * z);
    EXPECT_LT(std::abs(lhs - rhs), 1e-9) << "z=" << z;
  }
}

TEST(EvaluateLinearizer, GuardAndOverflow) {
  const auto s = linearizer_coeffs(RotationNumber::golden(), 1024, 0.3);
  const RadiusEstimate e = conformal_radius(s);
  EXPECT_TRUE(within_evaluation_guard(e, 0.9 * e.value));
  EXPECT_FALSE(within_evaluation_guard(e, 0.99 * e.value));
  EXPECT_THROW(evaluate_linearizer(s, 100.0), Error);
}

TEST(LinearizerCoeffs, Deterministic) {
  const auto a = linearizer_coeffs(RotationNumber::silver(), 2048, 0.3);
  const auto b = linearizer_coeffs(RotationNumber::silver(), 2048, 0.3);
  EXPECT_EQ(a.coeffs, b.coeffs);
}

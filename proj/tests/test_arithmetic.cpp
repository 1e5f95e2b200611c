#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "siegel/arithmetic.hpp"
#include "siegel/literal.hpp"

using namespace siegel;

namespace {

// Independent oracle: Fibonacci numbers by plain iteration.
std::vector<std::uint64_t> fibonacci(std::size_t count) {
  std::vector<std::uint64_t> f{1, 1};
  while (f.size() < count) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
  return f;
}

// Independent oracle: q_n for a periodic quotient list by plain iteration.
std::vector<double> denominators(const std::vector<int>& quotients, std::size_t count) {
  std::vector<double> q{1.0};
  double prev = 0.0;
  for (std::size_t n = 0; q.size() <= count; ++n) {
    const double next = quotients[n % quotients.size()] * q.back() + prev;
    prev = q.back();
    q.push_back(next);
  }
  return q;
}

}  // namespace

TEST(ContinuedFraction, GoldenMeanHasFibonacciDenominators) {
  const auto cf = continued_fraction(RotationNumber::golden(), 60);
  ASSERT_EQ(cf.size(), 60u);
  EXPECT_FALSE(cf.terminated);
  const auto fib = fibonacci(61);
  for (std::size_t n = 0; n < 60; ++n) {
    EXPECT_EQ(cf.quotients[n], 1);
    EXPECT_EQ(cf.q(n), BigInt(fib[n])) << "n=" << n;
  }
}

TEST(ContinuedFraction, SilverMeanQuotientsAreTwo) {
  const auto cf = continued_fraction(RotationNumber::silver(), 40);
  const std::vector<int> expected_q{1, 2, 5, 12, 29, 70, 169};
  for (std::size_t n = 0; n < 40; ++n) EXPECT_EQ(cf.quotients[n], 2);
  for (std::size_t n = 0; n < expected_q.size(); ++n) EXPECT_EQ(cf.q(n), expected_q[n]);
}

TEST(ContinuedFraction, OneThirdTerminates) {
  const auto cf = continued_fraction(RotationNumber::from_rational(1, 3), 10);
  ASSERT_EQ(cf.size(), 1u);
  EXPECT_EQ(cf.quotients[0], 3);
  EXPECT_TRUE(cf.terminated);
  ASSERT_TRUE(cf.rational());
  EXPECT_EQ(cf.rational()->p, 1);
  EXPECT_EQ(cf.rational()->q, 3);
}

TEST(ContinuedFraction, FloatRationalDetectedByCutoff) {
  const auto cf = continued_fraction(1.0 / 3.0, 40);
  EXPECT_TRUE(cf.terminated);
  EXPECT_EQ(cf.convergents.back().q, 3);
}

TEST(ContinuedFraction, FloatGoldenMatchesExactPrefix) {
  const auto exact = continued_fraction(RotationNumber::golden(), 30);
  const auto approx = continued_fraction((std::sqrt(5.0) - 1.0) / 2.0, 30);
  ASSERT_GE(approx.size(), 25u);
  for (std::size_t n = 0; n < 25; ++n) EXPECT_EQ(approx.quotients[n], exact.quotients[n]);
}

TEST(ContinuedFraction, MaxTermsReturnsPartialExpansion) {
  const auto cf = continued_fraction(RotationNumber::golden(), 3);
  EXPECT_EQ(cf.size(), 3u);
  EXPECT_FALSE(cf.terminated);
}

TEST(ContinuedFraction, RejectsOutOfRange) {
  EXPECT_THROW(RotationNumber::from_double(1.5), PreconditionError);
  EXPECT_THROW(RotationNumber::from_rational(3, 3), PreconditionError);
  EXPECT_THROW(RotationNumber::from_quotients({1, 0, 2}), PreconditionError);
  EXPECT_THROW(continued_fraction(RotationNumber::golden(), 0), PreconditionError);
}

TEST(ContinuedFraction, DeterminantIdentityHoldsExactly) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> quotient(1, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BigInt> qs;
    for (int i = 0; i < 40; ++i) qs.push_back(quotient(rng));
    const auto cf = continued_fraction(RotationNumber::from_quotients(qs), 40);
    for (std::size_t n = 1; n <= cf.size(); ++n) {
      const BigInt sign = n % 2 == 0 ? 1 : -1;
      EXPECT_EQ(cf.determinant(n), sign);
      // the same identity written with the factors swapped
      EXPECT_EQ(cf.p(n) * cf.q(n - 1) - cf.p(n - 1) * cf.q(n), -sign);
    }
  }
}

TEST(ContinuedFraction, DenominatorRecurrenceAndMonotonicity) {
  const auto cf = continued_fraction(RotationNumber::from_quotients({3, 1, 4, 1, 5, 9, 2, 6}, true), 48);
  for (std::size_t n = 1; n < cf.size(); ++n) {
    EXPECT_EQ(cf.q(n + 1), cf.quotients[n] * cf.q(n) + cf.q(n - 1));
    if (n >= 2) {
      EXPECT_GT(cf.q(n), cf.q(n - 1));
    }
  }
}

TEST(ContinuedFraction, ConvergentResidualBound) {
  for (const auto& x : {RotationNumber::golden(), RotationNumber::silver(),
                        RotationNumber::from_quadratic(-2, 1, 7, 3)}) {
    const auto cf = continued_fraction(x, 40);
    const auto deep = continued_fraction(x, 120);
    const BigRational value(deep.convergents.back().p, deep.convergents.back().q);
    for (std::size_t n = 1; n + 1 < cf.convergents.size(); ++n) {
      const BigRational err = abs(value - BigRational(cf.p(n), cf.q(n)));
      EXPECT_LT(err, BigRational(BigInt(1), cf.q(n) * cf.q(n + 1))) << x.describe() << " n=" << n;
      EXPECT_LT(err, BigRational(BigInt(1), cf.q(n) * cf.q(n)));
    }
  }
}

TEST(ContinuedFraction, QuadraticSourceMatchesDouble) {
  const auto x = RotationNumber::from_quadratic(-2, 1, 7, 3);  // (sqrt7 - 2)/3
  EXPECT_NEAR(x.value(), (std::sqrt(7.0) - 2.0) / 3.0, 1e-16);
  const auto cf = continued_fraction(x, 200);
  EXPECT_EQ(cf.size(), 200u);
  EXPECT_FALSE(cf.terminated);
}

TEST(BrjunoSum, GoldenMeanMatchesFibonacciSummation) {
  const auto cf = continued_fraction(RotationNumber::golden(), 41);
  const auto fib = fibonacci(45);
  double oracle = 0.0;
  for (std::size_t n = 1; n <= 40; ++n) oracle += std::log(static_cast<double>(fib[n + 1])) / static_cast<double>(fib[n]);
  const BrjunoValue b = brjuno_sum(cf, 40);
  EXPECT_EQ(b.terms_used, 40u);
  EXPECT_FALSE(b.divergence_flag);
  EXPECT_NEAR(b.partial_sum, oracle, 1e-14);
  // frozen regression from a 40-digit summation
  EXPECT_NEAR(b.partial_sum, 3.2861294993159705724, 1e-14);
}

TEST(BrjunoSum, SingleTermIsLogOfSecondDenominator) {
  for (const auto& x : {RotationNumber::golden(), RotationNumber::silver(), RotationNumber::from_quotients({7, 3, 1})}) {
    const auto cf = continued_fraction(x, 10);
    const BrjunoValue b = brjuno_sum(cf, 1);
    EXPECT_DOUBLE_EQ(b.partial_sum, std::log(cf.q(2).convert_to<double>()) / cf.q(1).convert_to<double>());
  }
}

TEST(BrjunoSum, RationalSetsDivergenceFlag) {
  const auto cf = continued_fraction(RotationNumber::from_rational(1, 3), 10);
  const BrjunoValue b = brjuno_sum(cf, 5);
  EXPECT_TRUE(b.divergence_flag);
  EXPECT_TRUE(std::isfinite(b.partial_sum));
}

TEST(BrjunoSum, PartialSumsAreMonotone) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> quotient(1, 1000);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BigInt> qs;
    for (int i = 0; i < 30; ++i) qs.push_back(quotient(rng));
    const auto cf = continued_fraction(RotationNumber::from_quotients(qs), 30);
    double prev = -1.0;
    for (std::size_t n = 1; n <= 28; ++n) {
      const double s = brjuno_sum(cf, n).partial_sum;
      EXPECT_GE(s, prev);
      prev = s;
    }
  }
}

TEST(BrjunoSum, PeriodicSilverMatchesIteratedDenominators) {
  const auto cf = continued_fraction(RotationNumber::from_quotients({2}, true), 31);
  const auto q = denominators({2}, 32);
  double oracle = 0.0;
  for (std::size_t n = 1; n <= 30; ++n) oracle += std::log(q[n + 1]) / q[n];
  EXPECT_NEAR(brjuno_sum(cf, 30).partial_sum, oracle, 1e-13);
  EXPECT_NEAR(oracle, 1.8691090190978721944, 1e-13);
}

TEST(BrjunoSum, RejectsZeroTermsAndShortExpansions) {
  const auto cf = continued_fraction(RotationNumber::golden(), 5);
  EXPECT_THROW(brjuno_sum(cf, 0), PreconditionError);
  EXPECT_THROW(brjuno_sum(cf, 10), PreconditionError);
}

TEST(BrjunoFunction, DepthOneIsMinusLog) {
  for (const auto& x : {RotationNumber::golden(), RotationNumber::silver(), RotationNumber::from_double(std::exp(1.0) - 2.0)}) {
    EXPECT_NEAR(brjuno_function(x, 1), -std::log(x.value()), 1e-15);
  }
}

TEST(BrjunoFunction, GoldenMeanGeometricSeries) {
  // every Gauss-map iterate of the golden mean is the golden mean itself
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double oracle = 0.0;
  for (int k = 0; k < 30; ++k) oracle += std::pow(g, k) * -std::log(g);
  EXPECT_NEAR(brjuno_function(RotationNumber::golden(), 30), oracle, 1e-14);
}

TEST(BrjunoFunction, RationalRaisesWithFraction) {
  try {
    brjuno_function(RotationNumber::from_rational(1, 3), 10);
    FAIL() << "expected RationalDetectedError";
  } catch (const RationalDetectedError& e) {
    EXPECT_EQ(e.p(), 1);
    EXPECT_EQ(e.q(), 3);
  }
}

TEST(BrjunoFunction, GoldenCloseToBrjunoSum) {
  const auto cf = continued_fraction(RotationNumber::golden(), 31);
  EXPECT_LE(std::abs(brjuno_function(RotationNumber::golden(), 30) - brjuno_sum(cf, 30).partial_sum), 3.0);
}

TEST(BrjunoFunction, CrossMethodBandOnBoundedQuotients) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> quotient(1, 20);
  std::uniform_int_distribution<int> depth(10, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BigInt> qs;
    for (int i = 0; i < 8; ++i) qs.push_back(quotient(rng));
    const auto x = RotationNumber::from_quotients(qs, true);
    const std::size_t d = depth(rng);
    const auto cf = continued_fraction(x, d + 1);
    const double diff = std::abs(brjuno_function(x, d) - brjuno_sum(cf, d).partial_sum);
    EXPECT_LE(diff, 3.0) << x.describe() << " depth " << d;
  }
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(RotationNumber::from_rational(1, 3)).kind, ArithmeticClass::rational);
  EXPECT_EQ(classify(RotationNumber::golden()).kind, ArithmeticClass::brjuno_like);
  EXPECT_EQ(classify(RotationNumber::silver()).kind, ArithmeticClass::brjuno_like);
  EXPECT_STREQ(Classification::label, "truncated heuristic");
}

TEST(Classify, LiouvilleLikeQuotients) {
  // a_{n+1} = q_n ^ q_n keeps ln(q_{n+1}) / q_n >= 1
  std::vector<BigInt> qs{1};
  detail::ConvergentBuilder cb;
  cb.push(qs[0]);
  for (int i = 0; i < 3; ++i) {
    const BigInt q = cb.back().q;
    const BigInt a = boost::multiprecision::pow(q, q.convert_to<unsigned>());
    qs.push_back(a == 1 ? BigInt(3) : a);
    cb.push(qs.back());
  }
  const auto x = RotationNumber::from_quotients(qs);
  const auto cf = continued_fraction(x, qs.size());
  const BrjunoValue b = brjuno_sum(cf, cf.size() - 1);
  ASSERT_EQ(b.terms_used, 3u);
  for (double t : b.terms) EXPECT_GE(t, 1.0);
  EXPECT_EQ(classify(x).kind, ArithmeticClass::non_brjuno_like);
}

TEST(SimplestRational, FindsSmallestDenominator) {
  const SmallRational r = simplest_rational_between(0.6, 0.62);
  EXPECT_EQ(r.p, 3);
  EXPECT_EQ(r.q, 5);
  const SmallRational g = simplest_rational_between(0.618, 0.6181);
  EXPECT_EQ(g.p, 89);
  EXPECT_EQ(g.q, 144);
}

TEST(Literal, ParsesEveryForm) {
  EXPECT_EQ(parse_rotation_number("golden").describe(), RotationNumber::golden().describe());
  EXPECT_NEAR(parse_rotation_number("(sqrt5-1)/2").value(), RotationNumber::golden().value(), 0.0);
  EXPECT_NEAR(parse_rotation_number("sqrt(2)-1").value(), RotationNumber::silver().value(), 0.0);
  EXPECT_NEAR(parse_rotation_number("(-2+sqrt7)/3").value(), (std::sqrt(7.0) - 2.0) / 3.0, 1e-16);
  EXPECT_EQ(parse_rotation_number("2/6").describe(), "rational:1/3");
  EXPECT_TRUE(parse_rotation_number("0.61").is_float());
  EXPECT_EQ(parse_rotation_number("1,2,1,2,...").describe(), "quotients:1,2,1,2,...");
  EXPECT_EQ(parse_rotation_number("[3,07]").describe(), "quotients:3,7");
  EXPECT_THROW(parse_rotation_number("x"), PreconditionError);
  EXPECT_THROW(parse_rotation_number("(sqrt5-1"), PreconditionError);
  EXPECT_THROW(parse_rotation_number("1/0"), PreconditionError);
  EXPECT_THROW(parse_rotation_number("sqrt2+sqrt3"), PreconditionError);
}

TEST(Literal, ExactDecimal) {
  EXPECT_EQ(parse_decimal_exact("0.60"), BigRational(3, 5));
  EXPECT_EQ(parse_decimal_exact("0.0625"), BigRational(1, 16));
  EXPECT_EQ(parse_decimal_exact("-1.5e2"), BigRational(-150));
  EXPECT_THROW(parse_decimal_exact("0.6x"), PreconditionError);
}

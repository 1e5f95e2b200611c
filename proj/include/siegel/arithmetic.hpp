#pragma once

// Exact continued-fraction arithmetic for rotation numbers and the Brjuno
// sums built from convergent denominators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "siegel/error.hpp"

namespace siegel {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

namespace detail {

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  // b > 0
  BigInt q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

/// Natural log of a positive big integer without overflowing double.
inline double big_log(const BigInt& v) {
  const std::size_t bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 1000) return std::log(v.convert_to<double>());
  const std::size_t shift = bits - 64;
  const BigInt top = v >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

inline double ratio_to_double(const BigInt& p, const BigInt& q) {
  return BigRational(p, q).convert_to<double>();
}

inline bool is_perfect_square(const BigInt& d) {
  if (d < 0) return false;
  const BigInt s = boost::multiprecision::sqrt(d);
  return s * s == d;
}

inline std::string to_string(const BigInt& v) { return v.str(); }

}  // namespace detail

struct FloatSource {
  double value;
};

/// Reduced p/q with 0 < p < q.
struct RationalSource {
  BigInt num;
  BigInt den;
};

/// (p + q*sqrt(d)) / r with d > 0 not a perfect square and q != 0.
struct QuadraticSource {
  BigInt p;
  BigInt q;
  BigInt d;
  BigInt r;
};

/// Partial quotients a_1, a_2, ... (all >= 1). A periodic list repeats forever.
struct QuotientSource {
  std::vector<BigInt> quotients;
  bool periodic = false;
};

using RotationSource = std::variant<FloatSource, RationalSource, QuadraticSource, QuotientSource>;

/// Exact (p_n, q_n) pair.
struct Convergent {
  BigInt p;
  BigInt q;
};

namespace detail {

/// Exact expansion state for (P + sqrt(D)) / Q with Q | (D - P^2).
class QuadraticExpander {
 public:
  explicit QuadraticExpander(const QuadraticSource& s) : d_(s.q * s.q * s.d), root_(0) {
    if (s.q > 0) {
      p_ = s.p;
      q_ = s.r;
    } else {
      p_ = -s.p;
      q_ = -s.r;
    }
    BigInt rem = d_ - p_ * p_;
    if (rem % q_ != 0) {
      const BigInt aq = q_ < 0 ? BigInt(-q_) : q_;
      p_ *= aq;
      d_ *= q_ * q_;
      q_ *= aq;
    }
    root_ = boost::multiprecision::sqrt(d_);
  }

  /// floor of the current complete quotient, then advance to its reciprocal tail.
  BigInt next() {
    BigInt a;
    if (q_ > 0) {
      a = floor_div(p_ + root_, q_);
    } else {
      a = -floor_div(p_ + root_, BigInt(-q_)) - 1;
    }
    p_ = a * q_ - p_;
    q_ = (d_ - p_ * p_) / q_;
    return a;
  }

 private:
  BigInt d_;
  BigInt p_;
  BigInt q_;
  BigInt root_;
};

class ConvergentBuilder {
 public:
  ConvergentBuilder() { convergents_.push_back({BigInt(0), BigInt(1)}); }

  void push(const BigInt& a) {
    const Convergent& cur = convergents_.back();
    const BigInt p = a * cur.p + prev_p_;
    const BigInt q = a * cur.q + prev_q_;
    prev_p_ = cur.p;
    prev_q_ = cur.q;
    convergents_.push_back({p, q});
  }

  const Convergent& back() const { return convergents_.back(); }
  std::vector<Convergent> take() { return std::move(convergents_); }

 private:
  std::vector<Convergent> convergents_;
  BigInt prev_p_ = 1;
  BigInt prev_q_ = 0;
};

}  // namespace detail

/// A rotation number in (0,1) together with where it came from. Exact sources
/// (rational, quadratic irrational, quotient list) keep continued fractions
/// drift-free; the double value is derived from them.
class RotationNumber {
 public:
  static RotationNumber from_double(double x) {
    if (!(x > 0.0 && x < 1.0)) throw PreconditionError("rotation number must lie in (0,1)");
    return RotationNumber(FloatSource{x}, x);
  }

  static RotationNumber from_rational(BigInt p, BigInt q) {
    if (q < 0) {
      p = -p;
      q = -q;
    }
    if (q == 0 || p <= 0 || p >= q) throw PreconditionError("rational rotation number must lie in (0,1)");
    const BigInt g = boost::multiprecision::gcd(p, q);
    p /= g;
    q /= g;
    const double v = detail::ratio_to_double(p, q);
    return RotationNumber(RationalSource{p, q}, v);
  }

  static RotationNumber from_quadratic(BigInt p, BigInt q, BigInt d, BigInt r) {
    if (r == 0) throw PreconditionError("quadratic irrational: zero denominator");
    if (d < 0) throw PreconditionError("quadratic irrational: negative radicand");
    if (q == 0 || detail::is_perfect_square(d)) {
      // rational in disguise
      const BigInt num = p + q * boost::multiprecision::sqrt(d);
      return from_rational(num, r);
    }
    QuadraticSource src{p, q, d, r};
    detail::QuadraticExpander ex(src);
    if (ex.next() != 0) throw PreconditionError("rotation number must lie in (0,1)");
    detail::ConvergentBuilder cb;
    const BigInt limit = BigInt(1) << 64;
    while (cb.back().q < limit) cb.push(ex.next());
    const double v = detail::ratio_to_double(cb.back().p, cb.back().q);
    return RotationNumber(std::move(src), v);
  }

  static RotationNumber from_quotients(std::vector<BigInt> quotients, bool periodic = false) {
    if (quotients.empty()) throw PreconditionError("quotient list is empty");
    for (const BigInt& a : quotients) {
      if (a < 1) throw PreconditionError("partial quotients must be >= 1");
    }
    if (!periodic && quotients.size() == 1 && quotients[0] == 1) {
      throw PreconditionError("quotient list [1] equals 1, outside (0,1)");
    }
    detail::ConvergentBuilder cb;
    if (periodic) {
      const BigInt limit = BigInt(1) << 64;
      for (std::size_t i = 0; cb.back().q < limit; ++i) cb.push(quotients[i % quotients.size()]);
    } else {
      for (const BigInt& a : quotients) cb.push(a);
    }
    const double v = detail::ratio_to_double(cb.back().p, cb.back().q);
    return RotationNumber(QuotientSource{std::move(quotients), periodic}, v);
  }

  /// (sqrt5 - 1)/2
  static RotationNumber golden() { return from_quadratic(-1, 1, 5, 2); }
  /// sqrt2 - 1
  static RotationNumber silver() { return from_quadratic(-1, 1, 2, 1); }

  double value() const noexcept { return value_; }
  const RotationSource& source() const noexcept { return source_; }

  bool is_float() const noexcept { return std::holds_alternative<FloatSource>(source_); }

  std::optional<Convergent> exact_rational() const {
    if (const auto* r = std::get_if<RationalSource>(&source_)) return Convergent{r->num, r->den};
    return std::nullopt;
  }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FloatSource>) {
            os.precision(17);
            os << "float:" << s.value;
          } else if constexpr (std::is_same_v<T, RationalSource>) {
            os << "rational:" << s.num << "/" << s.den;
          } else if constexpr (std::is_same_v<T, QuadraticSource>) {
            os << "quadratic:(" << s.p << "+" << s.q << "*sqrt(" << s.d << "))/" << s.r;
          } else {
            os << "quotients:";
            for (std::size_t i = 0; i < s.quotients.size(); ++i) os << (i ? "," : "") << s.quotients[i];
            if (s.periodic) os << ",...";
          }
        },
        source_);
    return os.str();
  }

 private:
  RotationNumber(RotationSource src, double v) : source_(std::move(src)), value_(v) {}

  RotationSource source_;
  double value_;
};

struct ContinuedFractionExpansion {
  std::vector<BigInt> quotients;        ///< a_1 .. a_m
  std::vector<Convergent> convergents;  ///< n = 0..m, with p_0/q_0 = 0/1
  bool terminated = false;              ///< input detected rational

  std::size_t size() const noexcept { return quotients.size(); }
  const BigInt& q(std::size_t n) const { return convergents.at(n).q; }
  const BigInt& p(std::size_t n) const { return convergents.at(n).p; }

  /// p_{n-1} q_n - p_n q_{n-1}; equals (-1)^n for n >= 1.
  BigInt determinant(std::size_t n) const {
    return p(n - 1) * q(n) - p(n) * q(n - 1);
  }

  /// The rational value when the expansion terminated.
  std::optional<Convergent> rational() const {
    if (!terminated) return std::nullopt;
    return convergents.back();
  }
};

namespace detail {

inline ContinuedFractionExpansion finish(std::vector<BigInt> qs, ConvergentBuilder& cb, bool terminated) {
  ContinuedFractionExpansion cf;
  cf.quotients = std::move(qs);
  cf.convergents = cb.take();
  cf.terminated = terminated;
  return cf;
}

/// Expansion of the exact dyadic value of a double. Rational detection:
/// a quotient above the cutoff, an exact zero remainder, or, once the
/// residual |x - p_n/q_n| drops below 2^-40, a next quotient above cutoff.
inline ContinuedFractionExpansion expand_double(double x, std::size_t max_terms, const BigInt& cutoff) {
  int e = 0;
  const double f = std::frexp(x, &e);
  BigInt num = static_cast<std::int64_t>(std::ldexp(f, 53));
  BigInt den = BigInt(1) << (53 - e);
  const BigInt x_num = num;
  const BigInt x_den = den;

  ConvergentBuilder cb;
  std::vector<BigInt> qs;
  bool terminated = false;
  while (qs.size() < max_terms) {
    BigInt a = den / num;
    if (a > cutoff) {
      terminated = true;
      break;
    }
    BigInt r = den % num;
    qs.push_back(a);
    cb.push(a);
    den = num;
    num = r;
    if (num == 0) {
      terminated = true;
      break;
    }
    const Convergent& c = cb.back();
    BigInt diff = x_num * c.q - c.p * x_den;
    if (diff < 0) diff = -diff;
    if ((diff << 40) < x_den * c.q) {
      if (den / num > cutoff) terminated = true;
      break;
    }
  }
  return finish(std::move(qs), cb, terminated);
}

}  // namespace detail

/// Continued fraction of x in (0,1). Exact sources expand exactly; float
/// input expands the double's dyadic value under the rational cutoff rule.
inline ContinuedFractionExpansion continued_fraction(const RotationNumber& x, std::size_t max_terms,
                                                     const BigInt& rational_cutoff = 1000000) {
  if (max_terms < 1) throw PreconditionError("continued_fraction: max_terms must be >= 1");
  detail::ConvergentBuilder cb;
  std::vector<BigInt> qs;
  return std::visit(
      [&](const auto& s) -> ContinuedFractionExpansion {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FloatSource>) {
          return detail::expand_double(s.value, max_terms, rational_cutoff);
        } else if constexpr (std::is_same_v<T, RationalSource>) {
          BigInt num = s.num;
          BigInt den = s.den;
          while (num != 0 && qs.size() < max_terms) {
            BigInt a = den / num;
            BigInt r = den % num;
            qs.push_back(a);
            cb.push(a);
            den = num;
            num = r;
          }
          return detail::finish(std::move(qs), cb, num == 0);
        } else if constexpr (std::is_same_v<T, QuadraticSource>) {
          detail::QuadraticExpander ex(s);
          ex.next();  // a_0 = 0
          while (qs.size() < max_terms) {
            BigInt a = ex.next();
            qs.push_back(a);
            cb.push(a);
          }
          return detail::finish(std::move(qs), cb, false);
        } else {
          const std::size_t m = s.periodic ? max_terms : std::min(max_terms, s.quotients.size());
          for (std::size_t i = 0; i < m; ++i) {
            const BigInt& a = s.quotients[i % s.quotients.size()];
            qs.push_back(a);
            cb.push(a);
          }
          return detail::finish(std::move(qs), cb, false);
        }
      },
      x.source());
}

inline ContinuedFractionExpansion continued_fraction(double x, std::size_t max_terms,
                                                     const BigInt& rational_cutoff = 1000000) {
  return continued_fraction(RotationNumber::from_double(x), max_terms, rational_cutoff);
}

struct BrjunoOptions {
  /// A single term ln(q_{n+1})/q_n above this flags divergence.
  double blowup_threshold = 50.0;
};

struct BrjunoValue {
  double partial_sum = 0.0;
  std::size_t terms_used = 0;
  bool divergence_flag = false;
  std::vector<double> terms;  ///< ln(q_{n+1})/q_n for n = 1..terms_used
};

/// Truncated Brjuno sum over n = 1..N of ln(q_{n+1}) / q_n.
inline BrjunoValue brjuno_sum(const ContinuedFractionExpansion& cf, std::size_t n_terms,
                              const BrjunoOptions& opts = {}) {
  if (n_terms < 1) throw PreconditionError("brjuno_sum: N must be >= 1");
  const std::size_t available = cf.convergents.size() >= 2 ? cf.convergents.size() - 2 : 0;
  if (!cf.terminated && available < n_terms) {
    throw PreconditionError("brjuno_sum: expansion has " + std::to_string(available) +
                            " usable terms, " + std::to_string(n_terms) + " requested");
  }
  BrjunoValue out;
  const std::size_t used = std::min(available, n_terms);
  // Summed in the order of growing q_n so the partial sums are monotone.
  for (std::size_t n = 1; n <= used; ++n) {
    const double num = detail::big_log(cf.q(n + 1));
    const double term = num / cf.q(n).convert_to<double>();
    out.terms.push_back(term);
    out.partial_sum += term;
    if (term > opts.blowup_threshold) out.divergence_flag = true;
  }
  out.terms_used = used;
  if (cf.terminated) out.divergence_flag = true;
  return out;
}

/// Raised when a rational is detected where an irrational was required.
class RationalDetectedError : public Error {
 public:
  RationalDetectedError(BigInt p, BigInt q)
      : Error("rational rotation number detected: " + p.str() + "/" + q.str()), p_(std::move(p)),
        q_(std::move(q)) {}
  const BigInt& p() const noexcept { return p_; }
  const BigInt& q() const noexcept { return q_; }

 private:
  BigInt p_;
  BigInt q_;
};

/// Depth-truncated recursion Phi(x) = -ln x + x Phi({1/x}), i.e.
/// sum_{k<depth} x_0 ... x_{k-1} (-ln x_k) over the Gauss-map orbit x_k.
inline double brjuno_function(const RotationNumber& x, std::size_t depth,
                              const BigInt& rational_cutoff = 1000000) {
  if (depth < 1) throw PreconditionError("brjuno_function: depth must be >= 1");
  // Extra quotients make the backward tail evaluation exact to double precision.
  const ContinuedFractionExpansion cf = continued_fraction(x, depth + 64, rational_cutoff);
  const std::size_t m = cf.size();
  if (cf.terminated) {
    const Convergent& c = cf.convergents.back();
    throw RationalDetectedError(c.p, c.q);
  }
  const std::size_t d = std::min(depth, m);
  // x_k = [0; a_{k+1}, ..., a_m], evaluated backward.
  std::vector<long double> tail(m + 1, 0.0L);
  for (std::size_t k = m; k-- > 0;) {
    tail[k] = 1.0L / (cf.quotients[k].convert_to<long double>() + tail[k + 1]);
  }
  long double beta = 1.0L;
  long double sum = 0.0L;
  for (std::size_t k = 0; k < d; ++k) {
    const long double xk = k == 0 ? static_cast<long double>(x.value()) : tail[k];
    sum += beta * -std::log(xk);
    beta *= xk;
  }
  return static_cast<double>(sum);
}

enum class ArithmeticClass { rational, brjuno_like, non_brjuno_like };

inline const char* to_string(ArithmeticClass c) {
  switch (c) {
    case ArithmeticClass::rational: return "rational";
    case ArithmeticClass::brjuno_like: return "brjuno-like";
    case ArithmeticClass::non_brjuno_like: return "non-brjuno-like";
  }
  return "?";
}

struct ClassifyConfig {
  std::size_t max_terms = 48;
  BigInt rational_cutoff = 1000000;
  /// Tail terms ln(q_{n+1})/q_n at or above this read as non-Brjuno growth.
  double tail_threshold = 0.5;
};

struct Classification {
  ArithmeticClass kind;
  std::size_t terms_examined = 0;
  double tail_max = 0.0;
  static constexpr const char* label = "truncated heuristic";
};

/// Finite-precision surrogate: rational iff the expansion terminates,
/// otherwise thresholds the largest Brjuno term in the back half of the
/// available expansion.
inline Classification classify(const RotationNumber& x, const ClassifyConfig& cfg = {}) {
  const ContinuedFractionExpansion cf = continued_fraction(x, cfg.max_terms, cfg.rational_cutoff);
  if (cf.terminated) return {ArithmeticClass::rational, cf.size(), 0.0};
  const std::size_t available = cf.convergents.size() >= 2 ? cf.convergents.size() - 2 : 0;
  if (available == 0) return {ArithmeticClass::brjuno_like, 0, 0.0};
  const BrjunoValue b = brjuno_sum(cf, available);
  double tail_max = 0.0;
  for (std::size_t n = available / 2 + 1; n <= available; ++n) tail_max = std::max(tail_max, b.terms[n - 1]);
  const ArithmeticClass k =
      tail_max >= cfg.tail_threshold ? ArithmeticClass::non_brjuno_like : ArithmeticClass::brjuno_like;
  return {k, available, tail_max};
}

struct SmallRational {
  std::int64_t p;
  std::int64_t q;
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

/// Rational with the smallest denominator strictly inside (lo, hi), 0 <= lo < hi.
inline SmallRational simplest_rational_between(double lo, double hi) {
  if (!(lo < hi) || lo < 0.0) throw PreconditionError("simplest_rational_between: need 0 <= lo < hi");
  // Walk the Stern-Brocot tree via continued-fraction descent.
  long double x = lo;
  long double y = hi;
  std::vector<std::int64_t> quotients;
  for (int depth = 0; depth < 64; ++depth) {
    const long double n = std::floor(x);
    if (n + 1 < y) {
      quotients.push_back(static_cast<std::int64_t>(n + 1));
      break;
    }
    quotients.push_back(static_cast<std::int64_t>(n));
    const long double fx = x - n;
    const long double fy = y - n;
    if (fx <= 0.0L) {
      // (0, fy): simplest is 1/k with k = floor(1/fy) + 1
      quotients.push_back(static_cast<std::int64_t>(std::floor(1.0L / fy)) + 1);
      break;
    }
    x = 1.0L / fy;
    y = 1.0L / fx;
  }
  std::int64_t p = 1, q = 0, pp = 0, qq = 1;
  for (std::int64_t a : quotients) {
    const std::int64_t np = a * p + pp;
    const std::int64_t nq = a * q + qq;
    pp = p;
    qq = q;
    p = np;
    q = nq;
  }
  return {p, q};
}

}  // namespace siegel

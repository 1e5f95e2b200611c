#pragma once

// Taylor series of the linearizing map L of P(z) = e^{2 pi i alpha} z + z^2,
// normalized by L(0) = 0, L'(0) = 1 and P(L(z)) = L(e^{2 pi i alpha} z).
//
// Coefficients are stored rescaled: d_n = c_n sigma^n. Matching powers of z
// in the functional equation gives
//
//   d_n (lambda^n - lambda) = sum_{j=1}^{n-1} d_j d_{n-j},   d_1 = sigma,
//
// which has the same form for every sigma, so sigma only moves the numbers
// back into floating-point range.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "siegel/arithmetic.hpp"
#include "siegel/error.hpp"
#include "siegel/fit.hpp"

namespace siegel {

using Complex = std::complex<double>;

struct LinearizerOptions {
  /// |lambda^n - lambda| below this counts as resonance for inexact inputs.
  double divisor_floor = 1e-14;
  double min_magnitude = 1e-300;
  double max_magnitude = 1e300;
  int max_rescales = 8;
};

struct Resonance {
  std::size_t order;  ///< n with lambda^n = lambda (numerically or exactly)
  double divisor;     ///< |lambda^n - lambda| at that order
};

struct LinearizerSeries {
  RotationNumber alpha;
  Complex lambda;
  std::size_t order = 0;  ///< requested truncation N
  double sigma = 0.0;
  std::vector<Complex> coeffs;  ///< coeffs[n] = d_n for n = 1..available(); coeffs[0] = 0
  std::optional<Resonance> resonance;
  int rescales = 0;  ///< how many times sigma was re-derived after a range clamp

  std::size_t available() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  const Complex& d(std::size_t n) const { return coeffs.at(n); }
  /// ln|c_n| recovered from the rescaled coefficient.
  double log_abs_c(std::size_t n) const {
    return std::log(std::abs(coeffs.at(n))) - static_cast<double>(n) * std::log(sigma);
  }
};

/// e^{2 pi i n alpha}. Exact rationals reduce n*p mod q in integers.
inline Complex unit_power(const RotationNumber& alpha, std::size_t n) {
  constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  long double phase;
  if (auto r = alpha.exact_rational(); r && r->q < BigInt(1) << 62) {
    const BigInt k = (BigInt(n) * r->p) % r->q;
    phase = k.convert_to<long double>() / r->q.convert_to<long double>();
  } else {
    const long double t = static_cast<long double>(n) * static_cast<long double>(alpha.value());
    phase = t - std::floor(t);
  }
  if (phase > 0.5L) phase -= 1.0L;
  const long double ang = two_pi * phase;
  return {static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang))};
}

namespace detail {

struct RecursionRun {
  std::vector<double> re;
  std::vector<double> im;
  std::optional<Resonance> resonance;
  std::size_t clamp_at = 0;  ///< first order whose magnitude left range, 0 if none
  bool clamp_high = false;
};

inline bool exact_resonance(const RotationNumber& alpha, std::size_t n) {
  if (auto r = alpha.exact_rational()) return (BigInt(n) - 1) % r->q == 0;
  return false;
}

inline RecursionRun run_recursion(const RotationNumber& alpha, std::size_t order, double sigma,
                                  const LinearizerOptions& opts) {
  RecursionRun run;
  run.re.assign(order + 1, 0.0);
  run.im.assign(order + 1, 0.0);
  if (order >= 1) run.re[1] = sigma;
  const Complex lambda = unit_power(alpha, 1);
  const bool exact = alpha.exact_rational().has_value();
  const double* re = run.re.data();
  const double* im = run.im.data();
  for (std::size_t n = 2; n <= order; ++n) {
    // symmetric convolution: 2 * sum_{j < n-j} d_j d_{n-j} (+ d_{n/2}^2)
    double sr = 0.0, si = 0.0;
    const std::size_t half = (n - 1) / 2;
    for (std::size_t j = 1; j <= half; ++j) {
      const std::size_t k = n - j;
      sr += re[j] * re[k] - im[j] * im[k];
      si += re[j] * im[k] + im[j] * re[k];
    }
    sr *= 2.0;
    si *= 2.0;
    if (n % 2 == 0) {
      const std::size_t h = n / 2;
      sr += re[h] * re[h] - im[h] * im[h];
      si += 2.0 * re[h] * im[h];
    }
    const Complex div = unit_power(alpha, n) - lambda;
    const double dmag = std::abs(div);
    if ((exact && exact_resonance(alpha, n)) || (!exact && dmag < opts.divisor_floor)) {
      run.resonance = Resonance{n, exact && exact_resonance(alpha, n) ? 0.0 : dmag};
      run.re.resize(n);
      run.im.resize(n);
      return run;
    }
    const double den = div.real() * div.real() + div.imag() * div.imag();
    const double dr = (sr * div.real() + si * div.imag()) / den;
    const double di = (si * div.real() - sr * div.imag()) / den;
    const double mag = std::hypot(dr, di);
    if (!(mag <= opts.max_magnitude) || (mag != 0.0 && mag < opts.min_magnitude)) {
      run.clamp_at = n;
      run.clamp_high = !(mag <= opts.max_magnitude);
      run.re.resize(n);
      run.im.resize(n);
      return run;
    }
    run.re[n] = dr;
    run.im[n] = di;
  }
  return run;
}

/// sigma / exp(slope of ln|d_n|) over the back half of [1, last], or 0.
inline double sigma_from_partial(const RecursionRun& run, double sigma, std::size_t last) {
  std::vector<double> xs, ys;
  for (std::size_t n = std::max<std::size_t>(2, last / 2); n <= last; ++n) {
    const double m = std::hypot(run.re[n], run.im[n]);
    if (m > 0.0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(m));
    }
  }
  if (xs.size() < 16) return 0.0;
  const LineFit f = robust_line_fit(xs, ys);
  return sigma * std::exp(-f.slope);
}

}  // namespace detail

/// Coefficients d_1..d_N of the rescaled linearizer. Stops at the first
/// resonance, recording it. If a magnitude leaves [min, max], sigma is
/// re-derived from the growth seen so far and the series recomputed.
inline LinearizerSeries linearizer_coeffs(const RotationNumber& alpha, std::size_t order, double sigma,
                                          const LinearizerOptions& opts = {}) {
  if (order < 1) throw PreconditionError("linearizer_coeffs: N must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw PreconditionError("linearizer_coeffs: sigma must be > 0");

  double s = sigma;
  for (int attempt = 0;; ++attempt) {
    detail::RecursionRun run = detail::run_recursion(alpha, order, s, opts);
    if (run.clamp_at == 0) {
      LinearizerSeries out{alpha, unit_power(alpha, 1), order, s, {}, run.resonance, attempt};
      out.coeffs.resize(run.re.size());
      for (std::size_t n = 0; n < run.re.size(); ++n) out.coeffs[n] = {run.re[n], run.im[n]};
      return out;
    }
    if (attempt >= opts.max_rescales) {
      throw Error("linearizer_coeffs: coefficients left floating range at order " +
                  std::to_string(run.clamp_at) + " after " + std::to_string(attempt) + " rescales");
    }
    double next = detail::sigma_from_partial(run, s, run.clamp_at - 1);
    const bool progress = next > 0.0 && (run.clamp_high ? next < s : next > s);
    if (!progress) next = run.clamp_high ? s / 2.0 : s * 2.0;
    s = next;
  }
}

/// Max coefficient of P(L(w)) - L(lambda w) up to order M in the rescaled
/// variable, normalized by max(1, max_n |d_n|). The square L^2 is formed by
/// sampling L on 2M+1 roots of unity and extracting coefficients by a
/// discrete Fourier sum, independent of the convolution in the recursion.
inline double verify_conjugacy(const LinearizerSeries& series, std::size_t m) {
  if (series.resonance && series.resonance->order <= m) {
    throw ResonanceError(series.resonance->order,
                         "verify_conjugacy: resonance at order " + std::to_string(series.resonance->order));
  }
  if (m < 1 || m > series.available()) throw PreconditionError("verify_conjugacy: need 1 <= M <= N");

  double scale = 1.0;
  for (std::size_t n = 1; n <= m; ++n) scale = std::max(scale, std::abs(series.coeffs[n]));

  std::vector<Complex> residual(m + 1, Complex{});
  for (std::size_t n = 1; n <= m; ++n) {
    residual[n] = series.lambda * series.coeffs[n] - unit_power(series.alpha, n) * series.coeffs[n];
  }
  if (m >= 2) {
    const std::size_t k = 2 * m + 1;
    std::vector<Complex> roots(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
      roots[i] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<Complex> square(k);
    for (std::size_t i = 0; i < k; ++i) {
      Complex acc{};
      for (std::size_t n = m; n >= 1; --n) acc = acc * roots[i] + series.coeffs[n];
      acc *= roots[i];
      square[i] = acc * acc;
    }
    for (std::size_t n = 2; n <= m; ++n) {
      Complex c{};
      for (std::size_t i = 0; i < k; ++i) c += square[i] * std::conj(roots[(n * i) % k]);
      residual[n] += c / static_cast<double>(k);
    }
  }
  double worst = 0.0;
  for (std::size_t n = 1; n <= m; ++n) worst = std::max(worst, std::abs(residual[n]));
  return worst / scale;
}

enum class RadiusMethod { hadamard_fit, tail_slope };

inline const char* to_string(RadiusMethod m) {
  return m == RadiusMethod::hadamard_fit ? "hadamard-fit" : "tail-slope";
}

struct RadiusEstimate {
  double value = 0.0;
  RadiusMethod method = RadiusMethod::hadamard_fit;
  std::size_t window_lo = 0;
  std::size_t window_hi = 0;
  double uncertainty = 0.0;
  bool resonant_zero = false;
  double hadamard_value = 0.0;
  double tail_value = 0.0;
  std::optional<std::size_t> resonance_order;
};

inline constexpr std::size_t kMinRadiusCoefficients = 64;

/// Radius of convergence of the series from coefficient growth over the top
/// `window_fraction` of indices. Resonance gives exactly zero.
///
/// hadamard-fit: sigma / exp(s), s the robust least-squares slope of ln|d_n|.
/// tail-slope: sigma / exp(max_n (ln|d_n| - ln sigma) / (n - 1)), the root
/// test anchored at c_1 = 1 so pure geometric growth is recovered exactly.
inline RadiusEstimate conformal_radius(const LinearizerSeries& series, RadiusMethod method = RadiusMethod::hadamard_fit,
                                       double window_fraction = 0.5, double trim = 0.05) {
  RadiusEstimate est;
  est.method = method;
  if (series.resonance) {
    est.resonant_zero = true;
    est.resonance_order = series.resonance->order;
    est.window_lo = 2;
    est.window_hi = std::max<std::size_t>(2, series.available());
    return est;
  }
  const std::size_t n_max = series.available();
  if (n_max < kMinRadiusCoefficients) {
    throw InsufficientDataError("conformal_radius: need at least 64 coefficients, have " + std::to_string(n_max));
  }
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw PreconditionError("conformal_radius: window_fraction must lie in (0,1]");
  }
  const auto span = static_cast<std::size_t>(std::floor(window_fraction * static_cast<double>(n_max)));
  est.window_lo = std::max<std::size_t>(2, n_max - std::max<std::size_t>(span, 3) + 1);
  est.window_hi = n_max;

  const double log_sigma = std::log(series.sigma);
  std::vector<double> xs, ys;
  double tail = -std::numeric_limits<double>::infinity();
  for (std::size_t n = est.window_lo; n <= est.window_hi; ++n) {
    const double mag = std::abs(series.coeffs[n]);
    if (mag == 0.0) continue;
    const double lm = std::log(mag);
    xs.push_back(static_cast<double>(n));
    ys.push_back(lm);
    tail = std::max(tail, (lm - log_sigma) / static_cast<double>(n - 1));
  }
  if (xs.size() < 3) throw InsufficientDataError("conformal_radius: window has no nonzero coefficients");
  const LineFit fit = robust_line_fit(xs, ys, trim);
  est.hadamard_value = series.sigma * std::exp(-fit.slope);
  est.tail_value = series.sigma * std::exp(-tail);
  est.value = method == RadiusMethod::hadamard_fit ? est.hadamard_value : est.tail_value;
  est.uncertainty = std::abs(est.hadamard_value - est.tail_value);
  return est;
}

/// Truncated L(z) = sum d_n (z / sigma)^n by Horner's rule.
inline Complex evaluate_linearizer(const LinearizerSeries& series, Complex z) {
  const Complex w = z / series.sigma;
  Complex acc{};
  for (std::size_t n = series.available(); n >= 1; --n) acc = acc * w + series.coeffs[n];
  acc *= w;
  if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag())) {
    throw Error("evaluate_linearizer: partial sums overflow at |z| = " + std::to_string(std::abs(z)));
  }
  return acc;
}

/// True when |z| stays inside the evaluation guard fraction of the radius.
inline bool within_evaluation_guard(const RadiusEstimate& est, Complex z, double fraction = 0.95) {
  return std::abs(z) <= fraction * est.value;
}

/// P(w) = lambda w + w^2 for the series' multiplier.
inline Complex quadratic_map(const LinearizerSeries& series, Complex w) { return series.lambda * w + w * w; }

}  // namespace siegel

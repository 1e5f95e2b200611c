#pragma once

// Circle maps from the Herman-ring families:
//
//   blaschke:  Q(z) = e^{2 pi i lambda} z^2 (z + a) / (1 + a z),   a > 3
//   arnold:    Q(z) = e^{2 pi i lambda} z exp(a (z - 1/z)),        0 < |a| < 1/2
//
// their degree-one lifts, rotation numbers, the parameter lambda reaching a
// prescribed rotation number, and the boundary conjugacy T sampled along the
// orbit of 1 together with its Laurent coefficients.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "siegel/arithmetic.hpp"
#include "siegel/error.hpp"
#include "siegel/fit.hpp"

namespace siegel {

using Complex = std::complex<double>;

enum class FamilyKind { blaschke, arnold };

inline const char* to_string(FamilyKind k) { return k == FamilyKind::blaschke ? "blaschke" : "arnold"; }

class CircleFamily {
 public:
  static CircleFamily blaschke(double a, double lambda) {
    if (!(a > 3.0) || !std::isfinite(a)) throw PreconditionError("blaschke family needs a > 3");
    if (!std::isfinite(lambda)) throw PreconditionError("lambda must be finite");
    return CircleFamily(FamilyKind::blaschke, Complex(a, 0.0), lambda);
  }

  /// Complex a is accepted only if the map preserves the unit circle to 1e-12
  /// on a 4096-point grid, which in practice means Im(a) ~ 0.
  static CircleFamily arnold(Complex a, double lambda) {
    const double mag = std::abs(a);
    if (!(mag > 0.0 && mag < 0.5)) throw PreconditionError("arnold family needs 0 < |a| < 1/2");
    if (!std::isfinite(lambda)) throw PreconditionError("lambda must be finite");
    CircleFamily fam(FamilyKind::arnold, a, lambda);
    const double drift = fam.circle_invariance_error(4096);
    if (!(drift < 1e-12)) {
      std::ostringstream os;
      os << "arnold family with a = " << a << " does not preserve the unit circle (max ||Q(z)| - 1| = " << drift
         << ")";
      throw PreconditionError(os.str());
    }
    return fam;
  }

  FamilyKind kind() const noexcept { return kind_; }
  Complex a() const noexcept { return a_; }
  double lambda() const noexcept { return lambda_; }

  CircleFamily with_lambda(double lambda) const { return CircleFamily(kind_, a_, lambda); }

  Complex map(Complex z) const {
    const Complex rot = std::polar(1.0, 2.0 * std::numbers::pi * (lambda_ - std::floor(lambda_)));
    if (kind_ == FamilyKind::blaschke) return rot * z * z * (z + a_) / (1.0 + a_ * z);
    return rot * z * std::exp(a_ * (z - 1.0 / z));
  }

  /// F(x) - x, which is 1-periodic in x.
  ///
  /// On |z| = 1 with a > 1, arg(1 + a z) = 2 pi x - arg(z + a) along a
  /// continuous branch, so the blaschke lift
  ///   F(x) = lambda + 2x + (arg(z + a) - arg(1 + a z)) / (2 pi)
  /// reduces to lambda + x + arg(z + a) / pi with arg(z + a) in (-pi/2, pi/2).
  double displacement(double x) const {
    const double ang = 2.0 * std::numbers::pi * (x - std::floor(x));
    if (kind_ == FamilyKind::blaschke) {
      return lambda_ + std::atan2(std::sin(ang), a_.real() + std::cos(ang)) / std::numbers::pi;
    }
    return lambda_ + a_.real() / std::numbers::pi * std::sin(ang);
  }

  double lift(double x) const { return x + displacement(x); }

  double lift_derivative(double x) const {
    const double ang = 2.0 * std::numbers::pi * (x - std::floor(x));
    const double c = std::cos(ang);
    if (kind_ == FamilyKind::blaschke) {
      const double a = a_.real();
      return 1.0 + 2.0 * (1.0 + a * c) / (a * a + 2.0 * a * c + 1.0);
    }
    return 1.0 + 2.0 * a_.real() * c;
  }

  /// max over `grid` points of ||Q(z)| - 1| on the unit circle.
  double circle_invariance_error(std::size_t grid) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(grid));
      worst = std::max(worst, std::abs(std::abs(map(z)) - 1.0));
    }
    return worst;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind_) << "(a=";
    if (kind_ == FamilyKind::blaschke || a_.imag() == 0.0) {
      os << a_.real();
    } else {
      os << a_.real() << (a_.imag() < 0 ? "-" : "+") << std::abs(a_.imag()) << "i";
    }
    os << ", lambda=" << lambda_ << ")";
    return os.str();
  }

 private:
  CircleFamily(FamilyKind k, Complex a, double lambda) : kind_(k), a_(a), lambda_(lambda) {}

  FamilyKind kind_;
  Complex a_;
  double lambda_;
};

/// The continuous lift F with F(0) in [lambda, lambda + 1).
inline double lift_eval(const CircleFamily& fam, double x) { return fam.lift(x); }

namespace detail {

/// Orbit point on the lift kept as integer winding plus fractional part so
/// precision does not decay as the lift grows.
struct LiftPoint {
  std::int64_t winds = 0;
  double frac = 0.0;

  static LiftPoint from(double x) {
    const double fl = std::floor(x);
    return {static_cast<std::int64_t>(fl), x - fl};
  }

  void step(const CircleFamily& fam) {
    const double y = frac + fam.displacement(frac);
    const double fl = std::floor(y);
    winds += static_cast<std::int64_t>(fl);
    frac = y - fl;
  }
};

/// Smooth-window (weighted) Birkhoff average of the displacement along the
/// orbit of x0 over n steps, with weights exp(-1/(t(1-t))).
inline double weighted_birkhoff(const CircleFamily& fam, double x0, std::size_t n) {
  LiftPoint p = LiftPoint::from(x0);
  long double num = 0.0L, den = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    const long double w = std::exp(-1.0L / (static_cast<long double>(t) * (1.0L - t)));
    num += w * fam.displacement(p.frac);
    den += w;
    p.step(fam);
  }
  return static_cast<double>(num / den);
}

/// min and max over a grid of x of F^q(x) - x - p.
inline std::pair<double, double> return_displacement_range(const CircleFamily& fam, std::int64_t p, std::int64_t q,
                                                           std::size_t grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t j = 0; j < grid; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(grid);
    LiftPoint pt{0, x};
    for (std::int64_t k = 0; k < q; ++k) pt.step(fam);
    const double d = static_cast<double>(pt.winds - p) + (pt.frac - x);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace detail

enum class RotationMode { birkhoff, convergent_accelerated };

inline const char* to_string(RotationMode m) {
  return m == RotationMode::birkhoff ? "birkhoff" : "convergent-accelerated";
}

struct RotationOptions {
  double x0 = 0.0;
  /// Grid of starting points for return-time displacement ranges.
  std::size_t grid = 32;
  /// Return times up to this q are checked for a sign change (mode locking).
  std::int64_t lock_q_max = 4096;
};

struct RotationEstimate {
  double value = 0.0;
  double error = 0.0;
  RotationMode mode = RotationMode::birkhoff;
  bool mode_locked = false;
  std::int64_t p = 0;  ///< set with q when mode_locked or for the bracketing convergent
  std::int64_t q = 0;
};

/// Rotation number of the lift.
///
/// birkhoff: smooth-window Birkhoff averages over n and n/2 steps; the value
/// is the n-step average and the error their difference.
/// convergent-accelerated: for continued-fraction convergents p/q of the
/// Birkhoff value, q rho - p lies between min and max of F^q(x) - x - p.
/// A sign change for some q means rho = p/q exactly (mode locked);
/// otherwise the largest q <= n_iter gives the bracket.
inline RotationEstimate rotation_number(const CircleFamily& fam, std::size_t n_iter, RotationMode mode,
                                        const RotationOptions& opts = {}) {
  if (n_iter < 100) throw PreconditionError("rotation_number: n_iter must be >= 100");
  const double lam_int = std::floor(fam.lambda());
  const CircleFamily base = fam.with_lambda(fam.lambda() - lam_int);

  const double full = detail::weighted_birkhoff(base, opts.x0, n_iter);
  const double half = detail::weighted_birkhoff(base, opts.x0, n_iter / 2);
  RotationEstimate est;
  est.mode = mode;
  est.value = full;
  est.error = std::abs(full - half) + 8.0 * std::numeric_limits<double>::epsilon();
  if (mode == RotationMode::convergent_accelerated) {
    const double k0 = std::floor(full);
    const double f = full - k0;
    std::vector<std::pair<std::int64_t, std::int64_t>> cands{{static_cast<std::int64_t>(k0), 1},
                                                             {static_cast<std::int64_t>(k0) + 1, 1}};
    if (f > 0.0 && f < 1.0) {
      const ContinuedFractionExpansion cf = continued_fraction(f, 64, BigInt(1) << 60);
      for (std::size_t n = 1; n < cf.convergents.size(); ++n) {
        const Convergent& c = cf.convergents[n];
        if (c.q > BigInt(n_iter)) break;
        const auto q = c.q.convert_to<std::int64_t>();
        if (q == 1) continue;
        cands.emplace_back(static_cast<std::int64_t>(k0) * q + c.p.convert_to<std::int64_t>(), q);
      }
    }
    bool bracketed = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const auto [p, q] = cands[i];
      const bool last = i + 1 == cands.size();
      if (q > opts.lock_q_max && !last) continue;
      const auto [lo, hi] = detail::return_displacement_range(base, p, q, opts.grid);
      if (lo <= 0.0 && hi >= 0.0) {
        est.value = static_cast<double>(p) / static_cast<double>(q);
        est.error = 0.0;
        est.mode_locked = true;
        est.p = p;
        est.q = q;
        bracketed = true;
        break;
      }
      if (last) {
        const double blo = (static_cast<double>(p) + lo) / static_cast<double>(q);
        const double bhi = (static_cast<double>(p) + hi) / static_cast<double>(q);
        est.value = 0.5 * (blo + bhi);
        // grid extrema undershoot the continuum ones; pad the half-width
        est.error = 0.625 * (bhi - blo) + 4.0 * std::numeric_limits<double>::epsilon();
        est.p = p;
        est.q = q;
        bracketed = true;
      }
    }
    if (!bracketed) est.mode = RotationMode::birkhoff;
  }
  est.value += lam_int;
  if (est.mode_locked) est.p += static_cast<std::int64_t>(lam_int) * est.q;
  return est;
}

struct SolveOptions {
  std::size_t n_iter = 100000;
  /// Plateau edges are resolved to this width in lambda.
  double plateau_width = 1e-12;
  std::size_t max_bisections = 200;
  RotationOptions rotation{};
};

struct SolveResult {
  double lambda = 0.0;
  RotationEstimate rho;
  bool mode_locked = false;
  double plateau_lo = 0.0;
  double plateau_hi = 0.0;
};

/// Bisection on the nondecreasing map lambda -> rho(lambda) for
/// |rho - rho_target| <= tol. A rational target that lands on a mode-locked
/// plateau returns the plateau midpoint, flagged.
inline SolveResult solve_lambda(const CircleFamily& family, double rho_target, double tol,
                                const SolveOptions& opts = {}) {
  if (!(rho_target >= 0.0 && rho_target < 1.0)) throw PreconditionError("solve_lambda: rho_target must lie in [0,1)");
  if (!(tol > 0.0)) throw PreconditionError("solve_lambda: tol must be > 0");
  const auto rho = [&](double lam) {
    return rotation_number(family.with_lambda(lam), opts.n_iter, RotationMode::convergent_accelerated, opts.rotation);
  };
  const auto locked_at_target = [&](const RotationEstimate& e) { return e.mode_locked && e.value == rho_target; };
  // |F(x) - x - lambda| < 1/2 for both families, so rho(target -+ 1) brackets.
  double lo = rho_target - 1.0;
  double hi = rho_target + 1.0;
  SolveResult out;
  for (std::size_t it = 0; it < opts.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    const RotationEstimate e = rho(mid);
    if (locked_at_target(e)) {
      double a = lo, b = mid;
      while (b - a > opts.plateau_width) {
        const double m = 0.5 * (a + b);
        (locked_at_target(rho(m)) ? b : a) = m;
      }
      out.plateau_lo = b;
      a = mid, b = hi;
      while (b - a > opts.plateau_width) {
        const double m = 0.5 * (a + b);
        (locked_at_target(rho(m)) ? a : b) = m;
      }
      out.plateau_hi = a;
      out.lambda = 0.5 * (out.plateau_lo + out.plateau_hi);
      out.rho = rho(out.lambda);
      out.mode_locked = true;
      return out;
    }
    if (std::abs(e.value - rho_target) <= tol && e.error <= tol) {
      out.lambda = mid;
      out.rho = e;
      out.plateau_lo = out.plateau_hi = mid;
      return out;
    }
    (e.value < rho_target ? lo : hi) = mid;
    if (hi - lo <= opts.plateau_width) {
      const RotationEstimate elo = rho(lo);
      const RotationEstimate ehi = rho(hi);
      out.lambda = 0.5 * (lo + hi);
      out.rho = rho(out.lambda);
      out.plateau_lo = lo;
      out.plateau_hi = hi;
      out.mode_locked = std::abs(ehi.value - elo.value) < tol / 10.0;
      return out;
    }
  }
  throw Error("solve_lambda: bisection budget exhausted");
}

struct ModulusWindow {
  /// Fit over this fraction range of the coefficients above the noise level.
  double lo_fraction = 0.2;
  double hi_fraction = 0.8;
  double noise_floor = 1e-13;
  std::size_t min_coefficients = 128;
  double trim = 0.05;
};

struct ModulusFit {
  double rate = 0.0;  ///< r with |T_j| ~ e^{-r |j|}
  std::size_t j_lo = 0;
  std::size_t j_hi = 0;
  double noise_level = 0.0;
  std::size_t points = 0;
};

struct ConjugacySamples {
  double rho = 0.0;
  double rho_error = 0.0;
  std::vector<Complex> points;   ///< w_k = Q^k(1), k = 0..n-1
  std::size_t max_frequency = 0;  ///< J; coefficients cover |j| <= J
  std::vector<Complex> fourier;   ///< fourier[j + J] = T_j
  std::optional<double> modulus_estimate;
  double max_gap = 0.0;

  const Complex& coefficient(std::ptrdiff_t j) const {
    return fourier.at(static_cast<std::size_t>(j + static_cast<std::ptrdiff_t>(max_frequency)));
  }
  double node(std::size_t k) const {
    const long double t = static_cast<long double>(k) * rho;
    return static_cast<double>(t - std::floor(t));
  }
};

namespace detail {

inline Complex unit_phase(long double t) {
  constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double f = t - std::floor(t);
  return {static_cast<double>(std::cos(two_pi * f)), static_cast<double>(std::sin(two_pi * f))};
}

/// Solves T x = y for Hermitian Toeplitz T with T(i, j) = g(j - i),
/// g(-k) = conj(g(k)), by the Levinson recursion.
inline std::vector<Complex> levinson_solve(const std::vector<Complex>& g, const std::vector<Complex>& y) {
  const std::size_t m = y.size();
  const auto t = [&](std::ptrdiff_t k) { return k >= 0 ? g[static_cast<std::size_t>(k)] : std::conj(g[static_cast<std::size_t>(-k)]); };
  std::vector<Complex> f{1.0 / g[0]}, b{1.0 / g[0]}, x{y[0] / g[0]};
  f.reserve(m), b.reserve(m), x.reserve(m);
  std::vector<Complex> nf, nb;
  for (std::size_t n = 1; n < m; ++n) {
    Complex ef{}, eb{}, th{};
    for (std::size_t i = 0; i < n; ++i) {
      const Complex back = t(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(n));
      ef += back * f[i];
      th += back * x[i];
      eb += t(static_cast<std::ptrdiff_t>(i) + 1) * b[i];
    }
    const Complex den = 1.0 - eb * ef;
    nf.assign(n + 1, Complex{});
    nb.assign(n + 1, Complex{});
    for (std::size_t i = 0; i <= n; ++i) {
      const Complex fi = i < n ? f[i] : Complex{};
      const Complex bi = i > 0 ? b[i - 1] : Complex{};
      nf[i] = (fi - ef * bi) / den;
      nb[i] = (bi - eb * fi) / den;
    }
    f.swap(nf);
    b.swap(nb);
    x.push_back(Complex{});
    const Complex coef = y[n] - th;
    for (std::size_t i = 0; i <= n; ++i) x[i] += coef * b[i];
  }
  return x;
}

inline std::vector<Complex> toeplitz_apply(const std::vector<Complex>& g, const std::vector<Complex>& x) {
  const std::size_t m = x.size();
  std::vector<Complex> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    Complex acc{};
    for (std::size_t j = 0; j < m; ++j) acc += (j >= i ? g[j - i] : std::conj(g[i - j])) * x[j];
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

/// Least-squares Laurent coefficients T_j, |j| <= J, of the function taking
/// the value w_k at e^{2 pi i k rho}. The normal equations are Hermitian
/// Toeplitz and are solved by Levinson plus one refinement step.
inline std::vector<Complex> fourier_from_orbit(const std::vector<Complex>& w, double rho, std::size_t max_frequency) {
  const std::size_t n = w.size();
  const std::size_t J = max_frequency;
  const std::size_t m = 2 * J + 1;
  if (n < m) throw PreconditionError("fourier_from_orbit: fewer samples than unknowns");
  std::vector<Complex> g(2 * J + 1, Complex{});
  std::vector<Complex> rhs(m, Complex{});
  std::vector<Complex> pw(2 * J + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const long double theta = static_cast<long double>(k) * rho;
    const Complex base = detail::unit_phase(theta);
    pw[0] = 1.0;
    for (std::size_t t = 1; t <= 2 * J; ++t) {
      pw[t] = (t % 64 == 0) ? detail::unit_phase(theta * static_cast<long double>(t)) : pw[t - 1] * base;
    }
    for (std::size_t t = 0; t <= 2 * J; ++t) g[t] += pw[t];
    rhs[J] += w[k];
    for (std::size_t j = 1; j <= J; ++j) {
      rhs[J + j] += w[k] * std::conj(pw[j]);
      rhs[J - j] += w[k] * pw[j];
    }
  }
  std::vector<Complex> x = detail::levinson_solve(g, rhs);
  const std::vector<Complex> tx = detail::toeplitz_apply(g, x);
  std::vector<Complex> resid(m);
  for (std::size_t i = 0; i < m; ++i) resid[i] = rhs[i] - tx[i];
  const std::vector<Complex> dx = detail::levinson_solve(g, resid);
  for (std::size_t i = 0; i < m; ++i) x[i] += dx[i];
  return x;
}

/// max_k |sum_j T_j e^{2 pi i j k rho} - w_k| over the sample nodes.
inline double fourier_reconstruction_error(const ConjugacySamples& s) {
  const std::size_t J = s.max_frequency;
  double worst = 0.0;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const long double theta = static_cast<long double>(k) * s.rho;
    const Complex base = detail::unit_phase(theta);
    Complex acc = s.coefficient(0);
    Complex pw = 1.0;
    for (std::size_t j = 1; j <= J; ++j) {
      pw = (j % 64 == 0) ? detail::unit_phase(theta * static_cast<long double>(j)) : pw * base;
      acc += s.coefficient(static_cast<std::ptrdiff_t>(j)) * pw;
      acc += s.coefficient(-static_cast<std::ptrdiff_t>(j)) * std::conj(pw);
    }
    worst = std::max(worst, std::abs(acc - s.points[k]));
  }
  return worst;
}

/// Decay rate of |T_j| in |j| over the coefficients above the noise level.
/// The noise level is the larger of the configured floor and ten times the
/// median magnitude over the upper half of the frequency range.
inline ModulusFit modulus_fit(const ConjugacySamples& samples, const ModulusWindow& window = {}) {
  const std::size_t J = samples.max_frequency;
  if (samples.fourier.size() != 2 * J + 1) throw PreconditionError("modulus_estimate: malformed coefficient array");
  std::size_t above = 0;
  for (const Complex& c : samples.fourier) above += std::abs(c) > window.noise_floor;
  if (above < window.min_coefficients) {
    throw InsufficientDataError("modulus_estimate: " + std::to_string(above) + " coefficients above " +
                                "noise floor, need " + std::to_string(window.min_coefficients));
  }
  std::vector<double> high;
  for (std::size_t j = J / 2 + 1; j <= J; ++j) {
    high.push_back(std::abs(samples.coefficient(static_cast<std::ptrdiff_t>(j))));
    high.push_back(std::abs(samples.coefficient(-static_cast<std::ptrdiff_t>(j))));
  }
  double noise = window.noise_floor;
  if (!high.empty()) {
    std::nth_element(high.begin(), high.begin() + high.size() / 2, high.end());
    noise = std::max(noise, 10.0 * high[high.size() / 2]);
  }
  std::size_t cutoff = 1;
  while (cutoff <= J && std::max(std::abs(samples.coefficient(static_cast<std::ptrdiff_t>(cutoff))),
                                 std::abs(samples.coefficient(-static_cast<std::ptrdiff_t>(cutoff)))) > noise) {
    ++cutoff;
  }
  const std::size_t usable = cutoff - 1;
  ModulusFit fit;
  fit.noise_level = noise;
  fit.j_lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window.lo_fraction * usable)));
  fit.j_hi = static_cast<std::size_t>(std::floor(window.hi_fraction * usable));
  std::vector<double> xs, ys;
  for (std::size_t j = fit.j_lo; j <= fit.j_hi; ++j) {
    for (std::ptrdiff_t sj : {static_cast<std::ptrdiff_t>(j), -static_cast<std::ptrdiff_t>(j)}) {
      const double mag = std::abs(samples.coefficient(sj));
      if (mag > noise) {
        xs.push_back(static_cast<double>(j));
        ys.push_back(std::log(mag));
      }
    }
  }
  if (xs.size() < 8) throw InsufficientDataError("modulus_estimate: decay window holds too few coefficients");
  const LineFit lf = robust_line_fit(xs, ys, window.trim);
  fit.rate = -lf.slope;
  fit.points = lf.points_used;
  if (!(fit.rate > 0.0)) throw InsufficientDataError("modulus_estimate: coefficients do not decay");
  return fit;
}

/// Half-modulus r of the analyticity annulus {-r < ln|z| < r}.
inline double modulus_estimate(const ConjugacySamples& samples, const ModulusWindow& window = {}) {
  return modulus_fit(samples, window).rate;
}

struct ConjugacyOptions {
  /// Iterations for the rotation number; 0 picks max(100000, 32 n).
  std::size_t rotation_iterations = 0;
  /// Largest allowed gap between sorted nodes, in units of 1/n.
  double gap_factor = 10.0;
  ModulusWindow modulus{};
};

/// Orbit of 1 under Q: w_k = Q^k(1) equals T(e^{2 pi i k rho}) when
/// T(1) = 1 and T(e^{2 pi i rho} z) = Q(T(z)). Fourier coefficients come
/// from least squares on |j| <= n/4.
inline ConjugacySamples conjugacy_samples(const CircleFamily& fam, std::size_t n, const ConjugacyOptions& opts = {}) {
  if (n < 8) throw PreconditionError("conjugacy_samples: n must be >= 8");
  const std::size_t iters = opts.rotation_iterations ? opts.rotation_iterations : std::max<std::size_t>(100000, 32 * n);
  const RotationEstimate locked = rotation_number(fam, std::min<std::size_t>(iters, 100000),
                                                  RotationMode::convergent_accelerated);
  if (locked.mode_locked) {
    throw PreconditionError("conjugacy_samples: rotation number is rational (" + std::to_string(locked.p) + "/" +
                            std::to_string(locked.q) + ")");
  }
  const RotationEstimate est = rotation_number(fam, iters, RotationMode::birkhoff);
  if (!(est.error < 1.0 / (4.0 * static_cast<double>(n)))) {
    throw PreconditionError("conjugacy_samples: rotation number error bound too large for n samples");
  }
  ConjugacySamples out;
  out.rho = est.value;
  out.rho_error = est.error;

  std::vector<double> nodes(n);
  for (std::size_t k = 0; k < n; ++k) nodes[k] = out.node(k);
  std::sort(nodes.begin(), nodes.end());
  double gap = nodes.front() + 1.0 - nodes.back();
  for (std::size_t k = 1; k < n; ++k) gap = std::max(gap, nodes[k] - nodes[k - 1]);
  out.max_gap = gap;
  if (gap > opts.gap_factor / static_cast<double>(n)) {
    std::ostringstream os;
    os << "conjugacy_samples: orbit nodes too uneven (max gap " << gap << " > " << opts.gap_factor << "/n); rho is "
       << "near a rational";
    throw PreconditionError(os.str());
  }

  out.points.resize(n);
  out.points[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) out.points[k] = fam.map(out.points[k - 1]);

  out.max_frequency = n / 4;
  out.fourier = fourier_from_orbit(out.points, out.rho, out.max_frequency);
  try {
    out.modulus_estimate = modulus_estimate(out, opts.modulus);
  } catch (const InsufficientDataError&) {
    out.modulus_estimate.reset();
  }
  return out;
}

}  // namespace siegel

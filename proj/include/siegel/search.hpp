#pragma once

// Finite-precision versions of the semicontinuity arguments around the map
// alpha -> r_alpha: a memoized radius oracle, a compact-uniform distance
// between linearizers, an intermediate-value search that only relies on the
// infimum construction, and the staged search that walks the radius down to
// a prescribed value while keeping the linearizer close to the initial one.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "siegel/arithmetic.hpp"
#include "siegel/error.hpp"
#include "siegel/linearizer.hpp"

namespace siegel {

struct RadiusOracleConfig {
  std::size_t order = 4096;
  double sigma = 0.3;
  RadiusMethod method = RadiusMethod::hadamard_fit;
  double window_fraction = 0.5;
  /// Cache grid in alpha.
  double quantum = 0x1p-48;
  LinearizerOptions linearizer{};
};

/// alpha -> radius estimate at a fixed truncation, memoized on a fixed
/// alpha grid. Safe to query from several threads.
class RadiusOracle {
 public:
  explicit RadiusOracle(RadiusOracleConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.order < kMinRadiusCoefficients) throw PreconditionError("RadiusOracle: order below 64");
    if (!(cfg_.quantum > 0.0)) throw PreconditionError("RadiusOracle: quantum must be > 0");
  }

  const RadiusOracleConfig& config() const noexcept { return cfg_; }

  /// Nearest grid point, reduced into [0, 1).
  double quantize(double alpha) const {
    double a = alpha - std::floor(alpha);
    a = std::round(a / cfg_.quantum) * cfg_.quantum;
    return a >= 1.0 ? 0.0 : a;
  }

  RadiusEstimate estimate(double alpha) const {
    const double a = quantize(alpha);
    const auto key = static_cast<std::int64_t>(std::llround(a / cfg_.quantum));
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    RadiusEstimate est = compute(a);
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(key, std::move(est)).first->second;
  }

  double operator()(double alpha) const { return estimate(alpha).value; }

  /// Linearizer series at the quantized alpha (not cached).
  LinearizerSeries series(double alpha) const {
    const double a = quantize(alpha);
    if (a == 0.0) throw PreconditionError("RadiusOracle::series: alpha is an integer (lambda = 1)");
    return linearizer_coeffs(RotationNumber::from_double(a), cfg_.order, cfg_.sigma, cfg_.linearizer);
  }

  std::size_t cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  RadiusEstimate compute(double a) const {
    if (a == 0.0) {
      RadiusEstimate est;
      est.method = cfg_.method;
      est.resonant_zero = true;
      est.resonance_order = 2;
      est.window_lo = est.window_hi = 2;
      return est;
    }
    return conformal_radius(series(a), cfg_.method, cfg_.window_fraction);
  }

  RadiusOracleConfig cfg_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::int64_t, RadiusEstimate> cache_;
};

/// Max |L_1(z) - L_2(z)| over grid_size points on each circle |z| = r k/8,
/// k = 1..8. Requires r below 0.95 of both radius estimates.
inline double linearizer_distance(const LinearizerSeries& s1, const LinearizerSeries& s2, double r,
                                  std::size_t grid_size = 32) {
  if (grid_size < 8) throw PreconditionError("linearizer_distance: grid_size must be >= 8");
  if (!(r > 0.0)) throw PreconditionError("linearizer_distance: r must be > 0");
  const double r1 = conformal_radius(s1).value;
  const double r2 = conformal_radius(s2).value;
  if (!(r < 0.95 * std::min(r1, r2))) {
    std::ostringstream os;
    os << "linearizer_distance: r = " << r << " not below 0.95 x min radius (" << r1 << ", " << r2 << ")";
    throw PreconditionError(os.str());
  }
  double worst = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const double rad = r * k / 8.0;
    for (std::size_t j = 0; j < grid_size; ++j) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid_size);
      const Complex z = std::polar(rad, ang);
      worst = std::max(worst, std::abs(evaluate_linearizer(s1, z) - evaluate_linearizer(s2, z)));
    }
  }
  return worst;
}

struct IvtOptions {
  double tol = 1e-9;
  std::size_t max_iter = 200;
  std::size_t samples = 8;  ///< interior samples per refinement round
};

/// Last bracket of a failed search: h(below) < x <= h(above).
struct IvtBracket {
  double below;
  double above;
  double h_below;
  double h_above;
};

class IvtFailure : public Error {
 public:
  IvtFailure(const std::string& what, IvtBracket b) : Error(what), bracket_(b) {}
  const IvtBracket& bracket() const noexcept { return bracket_; }

 private:
  IvtBracket bracket_;
};

/// Finds c in [a, b] with |h(c) - x| <= tol where h(a), h(b) straddle x.
///
/// Follows c = inf { y : h(y) >= x } measured from the endpoint below x:
/// each round samples the current bracket, keeps the leftmost sample with
/// h >= x and refines between it and its predecessor. No continuity is
/// assumed; when h jumps over x the bracket collapses onto the jump and
/// the search fails with that bracket.
inline double ivt_search(const std::function<double(double)>& h, double a, double b, double x,
                         const IvtOptions& opts) {
  if (!(a < b)) throw PreconditionError("ivt_search: need a < b");
  if (!(opts.tol >= 0.0) || opts.samples < 1) throw PreconditionError("ivt_search: bad options");
  const double ha = h(a);
  const double hb = h(b);
  double s, e, hs, he;
  if (ha < x && hb >= x) {
    s = a, e = b, hs = ha, he = hb;
  } else if (hb < x && ha >= x) {
    s = b, e = a, hs = hb, he = ha;
  } else {
    std::ostringstream os;
    os << "ivt_search: h(a) = " << ha << " and h(b) = " << hb << " do not straddle " << x;
    throw PreconditionError(os.str());
  }
  const std::size_t k = opts.samples;
  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    if (std::abs(he - x) <= opts.tol) return e;
    if (std::abs(hs - x) <= opts.tol) return s;
    const double width = std::abs(e - s);
    const double floor_width = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(s), std::abs(e));
    if (width <= floor_width || std::nextafter(s, e) == e) break;
    double prev = s, hprev = hs;
    bool found = false;
    for (std::size_t i = 1; i <= k; ++i) {
      const double p = s + (e - s) * static_cast<double>(i) / static_cast<double>(k + 1);
      const double hp = h(p);
      if (hp >= x) {
        s = prev, hs = hprev;
        e = p, he = hp;
        found = true;
        break;
      }
      prev = p, hprev = hp;
    }
    if (!found) s = prev, hs = hprev;
  }
  IvtBracket br{s, e, hs, he};
  std::ostringstream os;
  os.precision(17);
  os << "ivt_search: no value within " << opts.tol << " of " << x << "; bracket collapsed to [" << std::min(s, e)
     << ", " << std::max(s, e) << "] with h = " << hs << " / " << he;
  throw IvtFailure(os.str(), br);
}

struct StageRecord {
  std::size_t index = 0;
  double beta = 0.0;
  double epsilon = 0.0;
  double requested = 0.0;  ///< radius asked of the IVT step (initial stage: its own radius)
  RadiusEstimate radius;
  double distance = 0.0;  ///< distance to the previous stage's linearizer
};

struct SearchTrace {
  double alpha0 = 0.0;
  double r_target = 0.0;
  double delta = 0.0;
  double tol = 0.0;
  double ivt_tol = 0.0;
  StageRecord initial;
  std::vector<StageRecord> stages;  ///< i >= 1
  double final_alpha = 0.0;
  bool converged = false;

  const StageRecord& last() const { return stages.empty() ? initial : stages.back(); }
};

class SearchFailure : public Error {
 public:
  SearchFailure(const std::string& what, SearchTrace partial) : Error(what), trace_(std::move(partial)) {}
  const SearchTrace& trace() const noexcept { return trace_; }

 private:
  SearchTrace trace_;
};

struct SearchConfig {
  std::size_t stage_budget = 30;
  /// First try eps_{i+1} = ratio * eps_i; must stay below 1/10.
  double epsilon_ratio = 0.099;
  double epsilon_shrink = 0.5;
  std::size_t usc_attempts = 8;
  std::size_t usc_samples = 32;
  /// Added to the upper-semicontinuity margin, as a fraction of r_target.
  double slack_fraction = 0.05;
  /// IVT tolerance as a fraction of the final tolerance.
  double ivt_tol_fraction = 0.25;
  std::size_t ivt_samples = 8;
  std::size_t ivt_max_iter = 200;
  std::size_t candidate_samples = 32;
  /// IVT windows use (eps/10) * window_margin so step bounds hold strictly.
  double window_margin = 0.999;
  double distance_radius_fraction = 0.5;
  std::size_t distance_grid = 32;
  std::uint64_t seed = 0x5eed5eedULL;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

}  // namespace detail

/// Staged search for alpha near alpha0 whose radius estimate is r_target.
///
/// Stage i picks eps_{i+1} < eps_i / 10 so that sampled radii within
/// eps_{i+1} of beta_i stay below r_i + 2^-i + slack, then finds beta_{i+1}
/// within eps_{i+1}/10 of beta_i whose radius is (r_target + r_i)/2 and whose
/// linearizer is within eps_{i+1}/10 of the previous one. The low endpoint of
/// each IVT bracket comes from nearby small-denominator rationals (where the
/// radius collapses) and seeded samples.
inline SearchTrace target_radius_search(double alpha0, double r_target, double delta, double tol,
                                        const RadiusOracle& oracle, const SearchConfig& cfg = {}) {
  if (!(r_target > 0.0)) throw PreconditionError("target_radius_search: r_target must be > 0");
  if (!(delta > 0.0)) throw PreconditionError("target_radius_search: delta must be > 0");
  if (!(tol > 0.0)) throw PreconditionError("target_radius_search: tol must be > 0");
  if (!(cfg.epsilon_ratio > 0.0 && cfg.epsilon_ratio < 0.1)) {
    throw PreconditionError("target_radius_search: epsilon_ratio must lie in (0, 0.1)");
  }

  SearchTrace trace;
  trace.alpha0 = alpha0;
  trace.r_target = r_target;
  trace.delta = delta;
  trace.tol = tol;
  trace.ivt_tol = cfg.ivt_tol_fraction * tol;
  trace.initial.index = 0;
  trace.initial.beta = oracle.quantize(alpha0);
  trace.initial.epsilon = delta;
  trace.initial.radius = oracle.estimate(alpha0);
  trace.initial.requested = trace.initial.radius.value;
  trace.final_alpha = trace.initial.beta;

  if (r_target > trace.initial.radius.value) {
    std::ostringstream os;
    os << "target_radius_search: r_target = " << r_target << " exceeds the radius at alpha0 ("
       << trace.initial.radius.value << ")";
    throw PreconditionError(os.str());
  }

  const double slack = cfg.slack_fraction * r_target;
  const double dist_radius = cfg.distance_radius_fraction * r_target;
  const std::function<double(double)> h = [&](double y) { return oracle(y); };

  for (std::size_t i = 0;; ++i) {
    const StageRecord cur = trace.last();
    if (std::abs(cur.radius.value - r_target) <= tol) {
      trace.converged = true;
      trace.final_alpha = cur.beta;
      return trace;
    }
    if (trace.stages.size() >= cfg.stage_budget) {
      trace.final_alpha = cur.beta;
      return trace;
    }
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (i + 1));

    // upper-semicontinuity margin on a finite sample
    const double bound = cur.radius.value + std::ldexp(1.0, -static_cast<int>(i)) + slack;
    double eps = cfg.epsilon_ratio * cur.epsilon;
    bool certified = false;
    double worst = 0.0;
    for (std::size_t attempt = 0; attempt < cfg.usc_attempts && !certified; ++attempt) {
      worst = 0.0;
      for (std::size_t s = 0; s < cfg.usc_samples; ++s) {
        const double y = cur.beta + eps * (2.0 * detail::unit_uniform(rng) - 1.0);
        worst = std::max(worst, oracle(y));
      }
      if (worst < bound) {
        certified = true;
      } else {
        eps *= cfg.epsilon_shrink;
      }
    }
    if (!certified) {
      std::ostringstream os;
      os << "stage " << i + 1 << ": sampled radius " << worst << " exceeds usc bound " << bound
         << " at every tried epsilon";
      throw SearchFailure(os.str(), trace);
    }

    const double w = eps / 10.0 * cfg.window_margin;
    const double requested = (r_target + cur.radius.value) / 2.0;

    std::vector<double> candidates;
    const std::pair<double, double> spans[] = {{cur.beta - w, cur.beta}, {cur.beta, cur.beta + w},
                                               {cur.beta - w, cur.beta + w}, {cur.beta - w / 8, cur.beta + w / 8}};
    for (auto [lo, hi] : spans) {
      if (lo < 0.0 || hi > 1.0) continue;
      const SmallRational sr = simplest_rational_between(lo, hi);
      const double v = sr.value();
      if (v > lo && v < hi) candidates.push_back(v);
    }
    for (std::size_t s = 0; s < cfg.candidate_samples; ++s) {
      candidates.push_back(cur.beta + w * (2.0 * detail::unit_uniform(rng) - 1.0));
    }
    // Deepest dips first: later stages search inside this window again and
    // need room below the next requested radius.
    std::vector<std::pair<double, double>> lows;
    for (double y : candidates) {
      const double hy = oracle(y);
      if (y != cur.beta && hy < requested) lows.emplace_back(hy, y);
    }
    std::sort(lows.begin(), lows.end(), [&](const auto& p, const auto& q) {
      if (p.first != q.first) return p.first < q.first;
      return std::abs(p.second - cur.beta) < std::abs(q.second - cur.beta);
    });
    lows.erase(std::unique(lows.begin(), lows.end()), lows.end());
    if (lows.empty()) {
      std::ostringstream os;
      os << "stage " << i + 1 << ": no sampled radius below " << requested << " within " << w << " of beta";
      throw SearchFailure(os.str(), trace);
    }

    const LinearizerSeries prev_series = oracle.series(cur.beta);
    std::string last_reason;
    bool accepted = false;
    for (const auto& [h_low, low] : lows) {
      double c;
      try {
        c = ivt_search(h, std::min(low, cur.beta), std::max(low, cur.beta), requested,
                       {trace.ivt_tol, cfg.ivt_max_iter, cfg.ivt_samples});
      } catch (const IvtFailure& f) {
        last_reason = f.what();
        continue;
      }
      StageRecord rec;
      rec.index = i + 1;
      rec.beta = oracle.quantize(c);
      rec.epsilon = eps;
      rec.requested = requested;
      rec.radius = oracle.estimate(rec.beta);
      if (!(std::abs(rec.beta - cur.beta) < eps / 10.0)) {
        last_reason = "step left the eps/10 window after quantization";
        continue;
      }
      try {
        rec.distance = linearizer_distance(oracle.series(rec.beta), prev_series, dist_radius, cfg.distance_grid);
      } catch (const PreconditionError& e) {
        last_reason = e.what();
        continue;
      }
      if (!(rec.distance < eps / 10.0)) {
        std::ostringstream os;
        os << "linearizer distance " << rec.distance << " not below eps/10 = " << eps / 10.0;
        last_reason = os.str();
        continue;
      }
      trace.stages.push_back(rec);
      accepted = true;
      break;
    }
    if (!accepted) throw SearchFailure("stage " + std::to_string(i + 1) + ": " + last_reason, trace);
  }
}

/// Structural checks that need only the recorded trace. Returns one message
/// per violated invariant.
inline std::vector<std::string> trace_violations(const SearchTrace& t) {
  std::vector<std::string> out;
  const StageRecord* prev = &t.initial;
  for (const StageRecord& s : t.stages) {
    const std::string tag = "stage " + std::to_string(s.index) + ": ";
    if (!(s.epsilon < prev->epsilon / 10.0)) out.push_back(tag + "eps did not drop below eps_prev/10");
    if (!(std::abs(s.beta - prev->beta) < s.epsilon / 10.0)) out.push_back(tag + "|beta step| >= eps/10");
    if (s.requested != (t.r_target + prev->radius.value) / 2.0) out.push_back(tag + "requested radius is not the midpoint");
    if (!(std::abs(s.radius.value - s.requested) <= t.ivt_tol)) out.push_back(tag + "radius misses the requested value");
    prev = &s;
  }
  if (t.converged && !(std::abs(t.last().radius.value - t.r_target) <= t.tol)) {
    out.push_back("converged flag set but final radius is outside tol");
  }
  return out;
}

struct ProbeRow {
  double scale;
  double value;      ///< oracle at alpha
  double max_left;   ///< max over (alpha - scale, alpha)
  double max_right;  ///< max over (alpha, alpha + scale)
  double max_all;
  double usc_margin;  ///< max_all - value
  double lsc_margin;  ///< min(max_left, max_right) - value
};

/// Sampled one-sided maxima of the oracle around alpha at each scale.
inline std::vector<ProbeRow> semicontinuity_probe(double alpha, std::span<const double> scales,
                                                  std::size_t samples_per_scale, const RadiusOracle& oracle) {
  std::vector<ProbeRow> rows;
  if (scales.empty()) return rows;
  if (samples_per_scale < 1) throw PreconditionError("semicontinuity_probe: need at least one sample per scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw PreconditionError("semicontinuity_probe: scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1])) throw PreconditionError("semicontinuity_probe: scales must decrease");
  }
  const double value = oracle(alpha);
  for (double eps : scales) {
    ProbeRow row{eps, value, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 1; k <= samples_per_scale; ++k) {
      const double off = eps * static_cast<double>(k) / static_cast<double>(samples_per_scale + 1);
      row.max_left = std::max(row.max_left, oracle(alpha - off));
      row.max_right = std::max(row.max_right, oracle(alpha + off));
    }
    row.max_all = std::max({row.max_left, row.max_right, value});
    row.usc_margin = row.max_all - value;
    row.lsc_margin = std::min(row.max_left, row.max_right) - value;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace siegel

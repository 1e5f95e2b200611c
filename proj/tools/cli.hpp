#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "siegel/siegel.hpp"

namespace siegel::cli {

enum Status : int { kOk = 0, kNotConverged = 1, kUsage = 2 };

using nlohmann::json;
namespace fs = std::filesystem;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Relative output paths land in $SIEGEL_OUTPUT_DIR when it is set.
inline fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("SIEGEL_OUTPUT_DIR"); dir && *dir) return fs::path(dir) / p;
  }
  return p;
}

/// argv without the options that only pick where results go.
inline json echo_argv(const std::vector<std::string>& args) {
  json out = json::array();
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out" || a == "-o") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a == "--json") continue;
    out.push_back(a);
  }
  return out;
}

inline std::string fixed(double v) { return io::num(v); }

inline RotationNumber read_alpha(const std::string& alpha, const std::string& quotients) {
  if (!alpha.empty() && !quotients.empty()) throw PreconditionError("give --alpha or --quotients, not both");
  if (!quotients.empty()) return parse_quotients(quotients);
  if (alpha.empty()) throw PreconditionError("--alpha or --quotients is required");
  return parse_rotation_number(alpha);
}

inline RadiusMethod read_method(const std::string& m) {
  if (m == "hadamard-fit") return RadiusMethod::hadamard_fit;
  if (m == "tail-slope") return RadiusMethod::tail_slope;
  throw PreconditionError("unknown radius method '" + m + "'");
}

inline json estimate_json(const RadiusEstimate& e) {
  json j{{"value", e.value},
         {"method", to_string(e.method)},
         {"uncertainty", e.uncertainty},
         {"hadamard_fit", e.hadamard_value},
         {"tail_slope", e.tail_value},
         {"window", {e.window_lo, e.window_hi}},
         {"resonant_zero", e.resonant_zero}};
  if (e.resonance_order) j["resonance_order"] = *e.resonance_order;
  return j;
}

struct Run {
  std::vector<std::string> args;
  Streams io;
  bool json_out = false;
  std::string out_path;

  void write_file(const std::string& default_name, const std::string& command, const json& config,
                  const std::string& payload, json& summary) const {
    const std::string name = out_path.empty() ? default_name : out_path;
    if (name.empty()) return;
    io::OutputHeader h{command, echo_argv(args), config};
    const fs::path path = resolve_output(name);
    io::atomic_write(path, io::render_header(h) + payload);
    summary["file"] = path.string();
    if (!json_out) this->io.out << "wrote " << path.string() << "\n";
  }

  void finish(const json& summary) const {
    if (json_out) this->io.out << summary.dump(2) << "\n";
  }
};

// ---------------------------------------------------------------- brjuno

struct BrjunoArgs {
  std::string alpha, quotients;
  std::size_t terms = 30;
  std::uint64_t cutoff = 1000000;
};

inline int cmd_brjuno(const BrjunoArgs& a, const Run& run) {
  const RotationNumber x = read_alpha(a.alpha, a.quotients);
  if (a.terms < 1) throw PreconditionError("--terms must be >= 1");
  const BigInt cutoff(a.cutoff);
  const ContinuedFractionExpansion cf = continued_fraction(x, a.terms + 1, cutoff);
  const std::size_t usable = cf.convergents.size() >= 2 ? cf.convergents.size() - 2 : 0;
  const std::size_t n = std::min(a.terms, usable);
  const Classification cls = classify(x);
  json summary{{"command", "brjuno"},
               {"alpha", x.describe()},
               {"value", x.value()},
               {"terminated", cf.terminated},
               {"classification", to_string(cls.kind)},
               {"classification_label", Classification::label}};
  std::ostream& out = run.io.out;
  if (!run.json_out) {
    out << "alpha: " << x.describe() << " = " << fixed(x.value()) << "\n";
    out << "expansion: [";
    for (std::size_t i = 0; i < cf.size(); ++i) out << (i ? "," : "") << cf.quotients[i];
    out << "]" << (cf.terminated ? " (terminates)" : "") << "\n";
  }
  std::string table = "# columns: n,a_n,p_n,q_n,term,partial_sum\n";
  json rows = json::array();
  BrjunoValue bv;
  if (n >= 1) bv = brjuno_sum(cf, n);
  for (std::size_t i = 1; i < cf.convergents.size() && i <= a.terms; ++i) {
    const bool has_term = i <= bv.terms_used;
    double partial = 0.0;
    for (std::size_t k = 0; has_term && k < i; ++k) partial += bv.terms[k];
    const std::string term = has_term ? fixed(bv.terms[i - 1]) : "";
    const std::string part = has_term ? fixed(partial) : "";
    table += std::to_string(i) + "," + cf.quotients[i - 1].str() + "," + cf.p(i).str() + "," + cf.q(i).str() + "," +
             term + "," + part + "\n";
    rows.push_back({{"n", i}, {"a", cf.quotients[i - 1].str()}, {"p", cf.p(i).str()}, {"q", cf.q(i).str()}});
  }
  if (!run.json_out) {
    out << "n,a_n,p_n,q_n,term,partial_sum\n";
    out << table.substr(table.find('\n') + 1);
  }
  summary["convergents"] = rows;
  summary["brjuno_sum"] = bv.partial_sum;
  summary["terms_used"] = bv.terms_used;
  summary["divergence_flag"] = bv.divergence_flag;
  if (cf.terminated) {
    const Convergent& c = cf.convergents.back();
    summary["rational"] = c.p.str() + "/" + c.q.str();
    if (!run.json_out) out << "rational: " << c.p << "/" << c.q << " (Brjuno sum diverges)\n";
  } else {
    const double bf = brjuno_function(x, std::max<std::size_t>(n, 1), cutoff);
    summary["brjuno_function"] = bf;
    if (!run.json_out) {
      out << "brjuno_sum(N=" << bv.terms_used << "): " << fixed(bv.partial_sum)
          << (bv.divergence_flag ? " (divergence flag)" : "") << "\n";
      out << "brjuno_function(depth=" << std::max<std::size_t>(n, 1) << "): " << fixed(bf) << "\n";
    }
  }
  if (!run.json_out) {
    out << "classification: " << to_string(cls.kind) << " (" << Classification::label << ", tail max "
        << fixed(cls.tail_max) << ")\n";
  }
  const json config{{"alpha", x.describe()}, {"terms", a.terms}, {"cutoff", a.cutoff}};
  run.write_file("", "brjuno", config, table, summary);
  run.finish(summary);
  return kOk;
}

// ---------------------------------------------------------------- radius

struct RadiusArgs {
  std::string alpha, quotients;
  std::size_t order = 4096;
  double sigma = 0.3;
  std::string method = "hadamard-fit";
  double window = 0.5;
  std::size_t verify = 256;
};

inline int cmd_radius(const RadiusArgs& a, const Run& run) {
  const RotationNumber x = read_alpha(a.alpha, a.quotients);
  const RadiusMethod method = read_method(a.method);
  if (a.order < kMinRadiusCoefficients) {
    throw PreconditionError("--order " + std::to_string(a.order) + " is below the minimum of " +
                            std::to_string(kMinRadiusCoefficients) + " coefficients");
  }
  const LinearizerSeries s = linearizer_coeffs(x, a.order, a.sigma);
  const RadiusEstimate e = conformal_radius(s, method, a.window);
  json summary{{"command", "radius"}, {"alpha", x.describe()}, {"value", x.value()}, {"order", a.order},
               {"sigma", s.sigma},    {"rescales", s.rescales}, {"radius", estimate_json(e)}};
  std::ostream& out = run.io.out;
  const std::size_t m = std::min(a.verify, s.available());
  if (m >= 1) summary["verify_residual"] = verify_conjugacy(s, m);
  if (!run.json_out) {
    out << "alpha: " << x.describe() << " = " << fixed(x.value()) << "\n";
    out << "order: " << a.order << "  sigma: " << fixed(s.sigma) << "  rescales: " << s.rescales << "\n";
    if (m >= 1) out << "verify_conjugacy(M=" << m << "): " << fixed(summary["verify_residual"].get<double>()) << "\n";
    if (e.resonant_zero) {
      out << "radius: 0 (resonance at order " << *e.resonance_order << ")\n";
    } else {
      out << "hadamard-fit: " << fixed(e.hadamard_value) << "\n";
      out << "tail-slope: " << fixed(e.tail_value) << "\n";
      out << "radius (" << to_string(e.method) << "): " << fixed(e.value) << " +- " << fixed(e.uncertainty)
          << "  window [" << e.window_lo << "," << e.window_hi << "]\n";
    }
  }
  const json config{{"alpha", x.describe()}, {"order", a.order},   {"sigma", a.sigma},
                    {"method", a.method},    {"window", a.window}, {"verify", a.verify}};
  if (!run.out_path.empty()) run.write_file("", "radius", config, io::series_table(s), summary);
  run.finish(summary);
  return kOk;
}

// ---------------------------------------------------------------- search

struct SearchArgs {
  std::string alpha0 = "golden";
  std::optional<double> r_target;
  double r_fraction = 0.9;
  double delta = 1e-2;
  std::optional<double> tol;
  double tol_fraction = 0.02;
  std::size_t order = 4096;
  double sigma = 0.3;
  std::size_t stages = 30;
  std::uint64_t seed = SearchConfig{}.seed;
};

inline int cmd_search(const SearchArgs& a, const Run& run) {
  const RotationNumber x0 = parse_rotation_number(a.alpha0);
  if (a.r_target && !(*a.r_target > 0.0)) throw PreconditionError("--r-target must be > 0");
  if (a.tol && !(*a.tol > 0.0)) throw PreconditionError("--tol must be > 0");
  RadiusOracleConfig ocfg;
  ocfg.order = a.order;
  ocfg.sigma = a.sigma;
  RadiusOracle oracle(ocfg);
  const double r0 = oracle(x0.value());
  const double r_target = a.r_target ? *a.r_target : a.r_fraction * r0;
  const double tol = a.tol ? *a.tol : a.tol_fraction * r0;
  SearchConfig cfg;
  cfg.stage_budget = a.stages;
  cfg.seed = a.seed;
  const json config{{"alpha0", x0.describe()}, {"r_target", r_target}, {"delta", a.delta}, {"tol", tol},
                    {"order", a.order},        {"sigma", a.sigma},     {"stages", a.stages}, {"seed", a.seed}};
  json summary{{"command", "search"}, {"alpha0", x0.value()}, {"initial_radius", r0}, {"r_target", r_target},
               {"delta", a.delta},    {"tol", tol}};
  std::ostream& out = run.io.out;

  SearchTrace trace;
  std::optional<std::string> failure;
  try {
    trace = target_radius_search(x0.value(), r_target, a.delta, tol, oracle, cfg);
  } catch (const SearchFailure& f) {
    trace = f.trace();
    failure = f.what();
  }
  summary["converged"] = trace.converged;
  summary["final_alpha"] = trace.final_alpha;
  summary["final_radius"] = trace.last().radius.value;
  summary["stages"] = trace.stages.size();
  summary["violations"] = trace_violations(trace);
  double dist = std::nan("");
  if (trace.converged) {
    dist = linearizer_distance(oracle.series(trace.final_alpha), oracle.series(x0.value()), 0.5 * r_target);
    summary["distance"] = dist;
  }
  if (failure) summary["failure"] = *failure;
  if (!run.json_out) {
    out << "alpha0: " << fixed(x0.value()) << "  r(alpha0): " << fixed(r0) << "\n";
    out << "r_target: " << fixed(r_target) << "  delta: " << fixed(a.delta) << "  tol: " << fixed(tol) << "\n";
    out << "i,beta,epsilon,requested,r,dist\n";
    const auto row = [&](const StageRecord& s) {
      out << s.index << "," << fixed(s.beta) << "," << fixed(s.epsilon) << "," << fixed(s.requested) << ","
          << fixed(s.radius.value) << "," << fixed(s.distance) << "\n";
    };
    row(trace.initial);
    for (const StageRecord& s : trace.stages) row(s);
    out << "final_alpha: " << fixed(trace.final_alpha) << "  radius: " << fixed(trace.last().radius.value)
        << "  converged: " << (trace.converged ? "yes" : "no") << "\n";
    if (trace.converged) out << "distance to initial linearizer on r=" << fixed(0.5 * r_target) << ": " << fixed(dist) << "\n";
    if (failure) out << "search failed: " << *failure << "\n";
  }
  run.write_file("search_trace.csv", "search", config, io::trace_table(trace, failure), summary);
  run.finish(summary);
  return trace.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
  std::string lo = "0.60", hi = "0.64";
  std::size_t count = 512;
  std::size_t order = 4096;
  double sigma = 0.3;
  std::string method = "hadamard-fit";
  double max_work = 2e10;
  std::size_t threads = 0;
  std::string probe;
  std::string probe_scales = "1e-2,1e-3,1e-4";
  std::size_t probe_samples = 16;
};

/// lo + k (hi - lo) / count for k < count, rounded once from the exact value.
inline std::vector<double> scan_grid(const std::string& lo, const std::string& hi, std::size_t count) {
  const BigRational a = parse_decimal_exact(lo);
  const BigRational b = parse_decimal_exact(hi);
  if (!(a < b)) throw PreconditionError("scan needs lo < hi");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = BigRational(a + (b - a) * BigRational(BigInt(k), BigInt(count))).convert_to<double>();
  }
  return grid;
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw PreconditionError("bad number '" + item + "' in list");
    }
  }
  return out;
}

inline int cmd_scan(const ScanArgs& a, const Run& run) {
  if (a.count == 0) throw PreconditionError("scan grid is empty (--count 0)");
  if (a.order < kMinRadiusCoefficients) throw PreconditionError("--order below the minimum of 64");
  const RadiusMethod method = read_method(a.method);
  const double work = static_cast<double>(a.count) * static_cast<double>(a.order) * static_cast<double>(a.order);
  if (work > a.max_work) {
    throw PreconditionError("scan budget exceeded: count*N^2 = " + fixed(work) + " > --max-work " + fixed(a.max_work));
  }
  const std::vector<double> grid = scan_grid(a.lo, a.hi, a.count);
  for (double g : grid) {
    if (!(g > 0.0 && g < 1.0)) throw PreconditionError("scan grid must lie inside (0,1)");
  }
  std::vector<io::ScanRow> rows(grid.size());
  parallel_for(grid.size(), a.threads, [&](std::size_t i) {
    const LinearizerSeries s = linearizer_coeffs(RotationNumber::from_double(grid[i]), a.order, a.sigma);
    rows[i] = {grid[i], conformal_radius(s, method)};
  });
  std::size_t zeros = 0;
  for (const auto& r : rows) zeros += r.estimate.resonant_zero;
  json summary{{"command", "scan"}, {"count", a.count}, {"order", a.order}, {"resonant_points", zeros}};
  std::string payload = io::scan_table(rows);
  json config{{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}, {"order", a.order}, {"sigma", a.sigma},
              {"method", a.method}};
  std::ostream& out = run.io.out;
  if (!run.json_out) {
    out << "scan of " << a.count << " points on [" << a.lo << ", " << a.hi << "), N=" << a.order << ": " << zeros
        << " resonant\n";
    if (a.count <= 16) {
      out << "alpha,r_est,uncertainty,resonant\n";
      out << payload.substr(payload.find('\n') + 1);
    }
  }
  if (!a.probe.empty()) {
    const double alpha = parse_rotation_number(a.probe).value();
    const std::vector<double> scales = parse_list(a.probe_scales);
    RadiusOracleConfig ocfg;
    ocfg.order = a.order;
    ocfg.sigma = a.sigma;
    ocfg.method = method;
    const RadiusOracle oracle(ocfg);
    const std::vector<ProbeRow> probe = semicontinuity_probe(alpha, scales, a.probe_samples, oracle);
    config["probe"] = a.probe;
    config["probe_scales"] = scales;
    config["probe_samples"] = a.probe_samples;
    payload += "# block: probe alpha=" + fixed(alpha) + "\n";
    payload += "# columns: scale,value,max_left,max_right,usc_margin,lsc_margin\n";
    json jrows = json::array();
    for (const ProbeRow& r : probe) {
      payload += fixed(r.scale) + "," + fixed(r.value) + "," + fixed(r.max_left) + "," + fixed(r.max_right) + "," +
                 fixed(r.usc_margin) + "," + fixed(r.lsc_margin) + "\n";
      jrows.push_back({{"scale", r.scale}, {"value", r.value}, {"usc_margin", r.usc_margin}, {"lsc_margin", r.lsc_margin}});
      if (!run.json_out) {
        out << "probe scale " << fixed(r.scale) << ": value " << fixed(r.value) << " max " << fixed(r.max_all)
            << " usc_margin " << fixed(r.usc_margin) << " lsc_margin " << fixed(r.lsc_margin) << "\n";
      }
    }
    summary["probe"] = jrows;
  }
  run.write_file("scan.csv", "scan", config, payload, summary);
  run.finish(summary);
  return kOk;
}

// ---------------------------------------------------------------- herman

struct FamilyArgs {
  std::string family = "blaschke";
  double a = 4.0;
  double a_imag = 0.0;

  CircleFamily make(double lambda) const {
    if (family == "blaschke") {
      if (a_imag != 0.0) throw PreconditionError("blaschke family takes a real parameter a");
      return CircleFamily::blaschke(a, lambda);
    }
    if (family == "arnold") return CircleFamily::arnold(Complex(a, a_imag), lambda);
    throw PreconditionError("unknown family '" + family + "'");
  }
  json to_json() const { return {{"family", family}, {"a", a}, {"a_imag", a_imag}}; }
};

struct HermanArgs {
  FamilyArgs fam;
  double lambda = 0.0;
  std::size_t iter = 100000;
  std::string mode = "convergent";
  std::string rho;
  double tol = 1e-8;
  std::size_t n = 4096;
  std::size_t grid = 64;
  double lambda_lo = 0.0, lambda_hi = 1.0;
  std::size_t threads = 0;
};

inline json rotation_json(const RotationEstimate& e) {
  json j{{"value", e.value}, {"error", e.error}, {"mode", to_string(e.mode)}, {"mode_locked", e.mode_locked}};
  if (e.q) j["convergent"] = std::to_string(e.p) + "/" + std::to_string(e.q);
  return j;
}

inline RotationMode read_mode(const std::string& m) {
  if (m == "birkhoff") return RotationMode::birkhoff;
  if (m == "convergent" || m == "convergent-accelerated") return RotationMode::convergent_accelerated;
  throw PreconditionError("unknown rotation mode '" + m + "'");
}

inline double read_rho(const std::string& s) {
  if (s.empty()) throw PreconditionError("--rho is required");
  if (s == "0") return 0.0;
  return parse_rotation_number(s).value();
}

inline int cmd_herman_rotnum(const HermanArgs& a, const Run& run) {
  const CircleFamily fam = a.fam.make(a.lambda);
  const RotationEstimate e = rotation_number(fam, a.iter, read_mode(a.mode));
  json summary{{"command", "herman rotnum"}, {"family", fam.describe()}, {"rho", rotation_json(e)}};
  if (!run.json_out) {
    run.io.out << fam.describe() << "\n";
    run.io.out << "rho: " << fixed(e.value) << " +- " << fixed(e.error) << " (" << to_string(e.mode) << ")\n";
    if (e.mode_locked) run.io.out << "mode locked at " << e.p << "/" << e.q << "\n";
  }
  run.finish(summary);
  return kOk;
}

inline int cmd_herman_solve(const HermanArgs& a, const Run& run) {
  const double target = read_rho(a.rho);
  SolveOptions opts;
  opts.n_iter = a.iter;
  const SolveResult s = solve_lambda(a.fam.make(0.0), target, a.tol, opts);
  json summary{{"command", "herman solve"}, {"rho_target", target},        {"lambda", s.lambda},
               {"rho", rotation_json(s.rho)}, {"mode_locked", s.mode_locked}, {"plateau", {s.plateau_lo, s.plateau_hi}}};
  if (!run.json_out) {
    run.io.out << "target rho: " << fixed(target) << "\n";
    run.io.out << "lambda: " << fixed(s.lambda) << "\n";
    run.io.out << "rho(lambda): " << fixed(s.rho.value) << " +- " << fixed(s.rho.error) << "\n";
    if (s.mode_locked) {
      run.io.out << "mode locked: plateau [" << fixed(s.plateau_lo) << ", " << fixed(s.plateau_hi) << "]\n";
    }
  }
  run.finish(summary);
  return kOk;
}

inline int cmd_herman_conjugacy(const HermanArgs& a, const Run& run) {
  double lambda = a.lambda;
  json summary{{"command", "herman conjugacy"}};
  json config = a.fam.to_json();
  if (!a.rho.empty()) {
    const double target = read_rho(a.rho);
    SolveOptions opts;
    opts.n_iter = a.iter;
    const SolveResult s = solve_lambda(a.fam.make(0.0), target, a.tol, opts);
    if (s.mode_locked) throw PreconditionError("target rotation number is mode locked; no conjugacy to sample");
    lambda = s.lambda;
    summary["rho_target"] = target;
    config["rho"] = a.rho;
    config["tol"] = a.tol;
    config["iter"] = a.iter;
  } else {
    config["lambda"] = a.lambda;
  }
  config["n"] = a.n;
  const CircleFamily fam = a.fam.make(lambda);
  const ConjugacySamples c = conjugacy_samples(fam, a.n);
  double drift = 0.0;
  for (const Complex& w : c.points) drift = std::max(drift, std::abs(std::abs(w) - 1.0));
  const double recon = fourier_reconstruction_error(c);
  summary["lambda"] = lambda;
  summary["rho"] = c.rho;
  summary["rho_error"] = c.rho_error;
  summary["max_modulus_drift"] = drift;
  summary["reconstruction_error"] = recon;
  summary["max_gap"] = c.max_gap;
  if (c.modulus_estimate) summary["modulus_estimate"] = *c.modulus_estimate;
  if (!run.json_out) {
    run.io.out << fam.describe() << "\n";
    run.io.out << "rho: " << fixed(c.rho) << " +- " << fixed(c.rho_error) << "  samples: " << a.n << "\n";
    run.io.out << "max ||w_k| - 1|: " << fixed(drift) << "\n";
    run.io.out << "fourier reconstruction error: " << fixed(recon) << "\n";
    if (c.modulus_estimate) {
      run.io.out << "modulus estimate r: " << fixed(*c.modulus_estimate) << "\n";
    } else {
      run.io.out << "modulus estimate: too few coefficients above the noise floor\n";
    }
  }
  run.write_file("", "herman conjugacy", config, io::conjugacy_table(c), summary);
  run.finish(summary);
  return kOk;
}

inline int cmd_herman_lockscan(const HermanArgs& a, const Run& run) {
  if (a.grid == 0) throw PreconditionError("lockscan grid is empty");
  if (!(a.lambda_lo < a.lambda_hi)) throw PreconditionError("lockscan needs lambda-lo < lambda-hi");
  std::vector<double> lambdas(a.grid);
  for (std::size_t k = 0; k < a.grid; ++k) {
    lambdas[k] = a.lambda_lo + (a.lambda_hi - a.lambda_lo) * static_cast<double>(k) / static_cast<double>(a.grid);
  }
  const RotationMode mode = read_mode(a.mode);
  std::vector<RotationEstimate> est(a.grid);
  parallel_for(a.grid, a.threads, [&](std::size_t k) { est[k] = rotation_number(a.fam.make(lambdas[k]), a.iter, mode); });
  bool monotone = true;
  for (std::size_t k = 1; k < a.grid; ++k) monotone = monotone && est[k].value >= est[k - 1].value;
  std::string payload = "# columns: lambda,rho,error,mode_locked,p,q\n";
  for (std::size_t k = 0; k < a.grid; ++k) {
    payload += fixed(lambdas[k]) + "," + fixed(est[k].value) + "," + fixed(est[k].error) + "," +
               (est[k].mode_locked ? "1" : "0") + "," + std::to_string(est[k].p) + "," + std::to_string(est[k].q) + "\n";
  }
  json config = a.fam.to_json();
  config.update({{"grid", a.grid}, {"lambda_lo", a.lambda_lo}, {"lambda_hi", a.lambda_hi}, {"iter", a.iter}, {"mode", a.mode}});
  json summary{{"command", "herman lockscan"}, {"grid", a.grid}, {"nondecreasing", monotone}};
  std::size_t locked = 0;
  for (const auto& e : est) locked += e.mode_locked;
  summary["mode_locked_points"] = locked;
  if (!run.json_out) {
    run.io.out << "lambda,rho,error,mode_locked,p,q\n" << payload.substr(payload.find('\n') + 1);
    run.io.out << "nondecreasing: " << (monotone ? "yes" : "no") << "  mode-locked points: " << locked << "\n";
  }
  run.write_file("", "herman lockscan", config, payload, summary);
  run.finish(summary);
  return kOk;
}

// ---------------------------------------------------------------- entry

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ReplayArgs {
  std::string file;
  std::string keep;
};

inline int cmd_replay(const ReplayArgs& a, const Run& run_ctx) {
  const fs::path src = resolve_output(a.file);
  const io::OutputHeader h = io::parse_header_file(src);
  std::vector<std::string> argv;
  for (const auto& v : h.argv) argv.push_back(v.get<std::string>());
  fs::path target = a.keep.empty() ? fs::path(src.string() + ".replay") : resolve_output(a.keep);
  argv.push_back("--out");
  argv.push_back(fs::absolute(target).string());
  std::ostringstream sink;
  const int status = run(argv, sink, run_ctx.io.err);
  bool same = false;
  if (fs::exists(target)) same = io::read_file(target) == io::read_file(src);
  if (a.keep.empty() && fs::exists(target)) fs::remove(target);
  json summary{{"command", "replay"}, {"file", src.string()}, {"status", status}, {"identical", same}};
  if (run_ctx.json_out) {
    run_ctx.io.out << summary.dump(2) << "\n";
  } else {
    run_ctx.io.out << "replay of " << src.string() << ": " << (same ? "identical" : "differs") << "\n";
  }
  return same ? kOk : kNotConverged;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"siegel: linearizers, Brjuno arithmetic, radius search and Herman-ring circle maps"};
  app.require_subcommand(1);
  Run ctx{args, {out, err}, false, {}};

  const auto common = [&](CLI::App* sub, bool with_out) {
    sub->add_flag("--json", ctx.json_out, "print a JSON summary instead of text");
    if (with_out) sub->add_option("-o,--out", ctx.out_path, "output file (relative paths use $SIEGEL_OUTPUT_DIR)");
  };

  BrjunoArgs ba;
  auto* brjuno = app.add_subcommand("brjuno", "continued fraction, convergents and Brjuno sums");
  brjuno->add_option("--alpha", ba.alpha, "rotation number literal");
  brjuno->add_option("--quotients", ba.quotients, "partial quotients, e.g. 1,2,1,2,...");
  brjuno->add_option("--terms", ba.terms, "number of terms")->capture_default_str();
  brjuno->add_option("--cutoff", ba.cutoff, "rational-detection cutoff for float inputs")->capture_default_str();
  common(brjuno, true);

  RadiusArgs ra;
  auto* radius = app.add_subcommand("radius", "linearizer series and conformal radius");
  radius->add_option("--alpha", ra.alpha, "rotation number literal");
  radius->add_option("--quotients", ra.quotients, "partial quotients");
  radius->add_option("-N,--order", ra.order, "series truncation")->capture_default_str();
  radius->add_option("--sigma", ra.sigma, "coefficient scale")->capture_default_str();
  radius->add_option("--method", ra.method, "hadamard-fit or tail-slope")->capture_default_str();
  radius->add_option("--window", ra.window, "fraction of top indices used by the fit")->capture_default_str();
  radius->add_option("--verify", ra.verify, "functional-equation check order M (0 skips)")->capture_default_str();
  common(radius, true);

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "staged search for alpha with a prescribed radius");
  search->add_option("--alpha0", sa.alpha0, "starting rotation number")->capture_default_str();
  search->add_option("--r-target", sa.r_target, "target radius");
  search->add_option("--r-fraction", sa.r_fraction, "target as a fraction of r(alpha0)")->capture_default_str();
  search->add_option("--delta", sa.delta, "allowed distance from alpha0")->capture_default_str();
  search->add_option("--tol", sa.tol, "absolute radius tolerance");
  search->add_option("--tol-fraction", sa.tol_fraction, "tolerance as a fraction of r(alpha0)")->capture_default_str();
  search->add_option("-N,--order", sa.order, "series truncation of the radius oracle")->capture_default_str();
  search->add_option("--sigma", sa.sigma, "coefficient scale")->capture_default_str();
  search->add_option("--stages", sa.stages, "stage budget")->capture_default_str();
  search->add_option("--seed", sa.seed, "sampling seed")->capture_default_str();
  common(search, true);

  ScanArgs sc;
  auto* scan = app.add_subcommand("scan", "radius estimates over an alpha grid");
  scan->add_option("--lo", sc.lo, "grid start (decimal)")->capture_default_str();
  scan->add_option("--hi", sc.hi, "grid end, excluded (decimal)")->capture_default_str();
  scan->add_option("--count", sc.count, "grid points")->capture_default_str();
  scan->add_option("-N,--order", sc.order, "series truncation per point")->capture_default_str();
  scan->add_option("--sigma", sc.sigma, "coefficient scale")->capture_default_str();
  scan->add_option("--method", sc.method, "hadamard-fit or tail-slope")->capture_default_str();
  scan->add_option("--max-work", sc.max_work, "refuse grids with count*N^2 above this")->capture_default_str();
  scan->add_option("--threads", sc.threads, "worker threads (0 = all cores)");
  scan->add_option("--probe", sc.probe, "also run a semicontinuity probe at this alpha");
  scan->add_option("--probe-scales", sc.probe_scales, "decreasing probe scales")->capture_default_str();
  scan->add_option("--probe-samples", sc.probe_samples, "samples per side and scale")->capture_default_str();
  common(scan, true);

  HermanArgs ha;
  auto* herman = app.add_subcommand("herman", "Herman-ring circle maps");
  herman->require_subcommand(1);
  const auto family_opts = [&](CLI::App* sub) {
    sub->add_option("--family", ha.fam.family, "blaschke or arnold")->capture_default_str();
    sub->add_option("--a", ha.fam.a, "family parameter (real part)")->capture_default_str();
    sub->add_option("--a-imag", ha.fam.a_imag, "imaginary part of a (arnold only)")->capture_default_str();
    sub->add_option("--iter", ha.iter, "iterations per rotation number")->capture_default_str();
  };
  auto* rotnum = herman->add_subcommand("rotnum", "rotation number at one lambda");
  family_opts(rotnum);
  rotnum->add_option("--lambda", ha.lambda, "parameter lambda")->capture_default_str();
  rotnum->add_option("--mode", ha.mode, "birkhoff or convergent")->capture_default_str();
  common(rotnum, false);
  auto* solve = herman->add_subcommand("solve", "lambda with a prescribed rotation number");
  family_opts(solve);
  solve->add_option("--rho", ha.rho, "target rotation number literal")->required();
  solve->add_option("--tol", ha.tol, "tolerance on rho")->capture_default_str();
  common(solve, false);
  auto* conj = herman->add_subcommand("conjugacy", "orbit samples, Fourier coefficients and modulus");
  family_opts(conj);
  auto* lam_opt = conj->add_option("--lambda", ha.lambda, "parameter lambda");
  conj->add_option("--rho", ha.rho, "solve for lambda with this rotation number first")->excludes(lam_opt);
  conj->add_option("--tol", ha.tol, "tolerance on rho when solving")->capture_default_str();
  conj->add_option("-n,--samples", ha.n, "orbit samples")->capture_default_str();
  common(conj, true);
  auto* lockscan = herman->add_subcommand("lockscan", "rotation number over a lambda grid");
  family_opts(lockscan);
  lockscan->add_option("--grid", ha.grid, "grid points")->capture_default_str();
  lockscan->add_option("--lambda-lo", ha.lambda_lo, "grid start")->capture_default_str();
  lockscan->add_option("--lambda-hi", ha.lambda_hi, "grid end, excluded")->capture_default_str();
  lockscan->add_option("--mode", ha.mode, "birkhoff or convergent")->capture_default_str();
  lockscan->add_option("--threads", ha.threads, "worker threads (0 = all cores)");
  common(lockscan, true);

  ReplayArgs rp;
  auto* replay = app.add_subcommand("replay", "re-run the command echoed in an output header and compare");
  replay->add_option("file", rp.file, "output file to reproduce")->required();
  replay->add_option("--keep", rp.keep, "keep the reproduced file at this path");
  replay->add_flag("--json", ctx.json_out, "print a JSON summary");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*brjuno) return cmd_brjuno(ba, ctx);
    if (*radius) return cmd_radius(ra, ctx);
    if (*search) return cmd_search(sa, ctx);
    if (*scan) return cmd_scan(sc, ctx);
    if (*replay) return cmd_replay(rp, ctx);
    if (*rotnum) return cmd_herman_rotnum(ha, ctx);
    if (*solve) return cmd_herman_solve(ha, ctx);
    if (*conj) return cmd_herman_conjugacy(ha, ctx);
    if (*lockscan) return cmd_herman_lockscan(ha, ctx);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  }
  return kUsage;
}

}  // namespace siegel::cli

#pragma once

// Columnar text exports. Every file starts with '#' lines carrying the format
// version, the command, its argv and its effective configuration; data rows
// are comma-separated with doubles printed to 17 significant digits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "siegel/error.hpp"
#include "siegel/herman.hpp"
#include "siegel/linearizer.hpp"
#include "siegel/search.hpp"

namespace siegel::io {

inline constexpr std::string_view kFormatVersion = "siegel-output/1";

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct OutputHeader {
  std::string command;
  nlohmann::json argv = nlohmann::json::array();
  nlohmann::json config = nlohmann::json::object();
};

inline std::string render_header(const OutputHeader& h) {
  std::string out;
  out += "# format: ";
  out += kFormatVersion;
  out += "\n# command: " + h.command + "\n";
  out += "# argv: " + h.argv.dump() + "\n";
  out += "# config: " + h.config.dump() + "\n";
  return out;
}

/// Reads the leading header lines of an export.
inline OutputHeader parse_header(std::istream& in) {
  OutputHeader h;
  bool have_format = false, have_argv = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(2, colon - 2);
    const std::string val = line.substr(colon + 2);
    if (key == "format") {
      if (val != kFormatVersion) throw PreconditionError("unsupported format version '" + val + "'");
      have_format = true;
    } else if (key == "command") {
      h.command = val;
    } else if (key == "argv") {
      h.argv = nlohmann::json::parse(val);
      have_argv = true;
    } else if (key == "config") {
      h.config = nlohmann::json::parse(val);
      break;
    }
  }
  if (!have_format || !have_argv) throw PreconditionError("file does not start with a siegel output header");
  return h;
}

inline OutputHeader parse_header_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open " + path.string());
  return parse_header(in);
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// n, Re(d_n), Im(d_n), ln|c_n|
inline std::string series_table(const LinearizerSeries& s) {
  std::string out;
  out += "# series: alpha=" + s.alpha.describe() + " sigma=" + num(s.sigma) + " N=" + std::to_string(s.order) +
         " available=" + std::to_string(s.available());
  if (s.resonance) out += " resonance_order=" + std::to_string(s.resonance->order);
  out += "\n# columns: n,re_d,im_d,log_abs_c\n";
  for (std::size_t n = 1; n <= s.available(); ++n) {
    out += std::to_string(n) + "," + num(s.coeffs[n].real()) + "," + num(s.coeffs[n].imag()) + "," +
           num(s.log_abs_c(n)) + "\n";
  }
  return out;
}

/// i, beta, epsilon, requested, r, dist, followed by a summary block.
inline std::string trace_table(const SearchTrace& t, const std::optional<std::string>& failure = std::nullopt) {
  std::string out = "# columns: i,beta,epsilon,requested,r,dist\n";
  const auto row = [&](const StageRecord& s) {
    out += std::to_string(s.index) + "," + num(s.beta) + "," + num(s.epsilon) + "," + num(s.requested) + "," +
           num(s.radius.value) + "," + num(s.distance) + "\n";
  };
  row(t.initial);
  for (const StageRecord& s : t.stages) row(s);
  out += "# summary: alpha0=" + num(t.alpha0) + "\n";
  out += "# summary: r_target=" + num(t.r_target) + "\n";
  out += "# summary: delta=" + num(t.delta) + "\n";
  out += "# summary: tol=" + num(t.tol) + "\n";
  out += "# summary: final_alpha=" + num(t.final_alpha) + "\n";
  out += "# summary: final_radius=" + num(t.last().radius.value) + "\n";
  out += std::string("# summary: converged=") + (t.converged ? "true" : "false") + "\n";
  if (failure) out += "# summary: failure=" + *failure + "\n";
  return out;
}

/// Orbit samples k, Re(w_k), Im(w_k), then the Fourier block j, Re, Im, ln|T_j|.
inline std::string conjugacy_table(const ConjugacySamples& c) {
  std::string out;
  out += "# conjugacy: rho=" + num(c.rho) + " rho_error=" + num(c.rho_error) + " n=" + std::to_string(c.points.size()) +
         " J=" + std::to_string(c.max_frequency) + " max_gap=" + num(c.max_gap) + " modulus=" +
         (c.modulus_estimate ? num(*c.modulus_estimate) : std::string("none")) + "\n";
  out += "# block: samples\n# columns: k,re_w,im_w\n";
  for (std::size_t k = 0; k < c.points.size(); ++k) {
    out += std::to_string(k) + "," + num(c.points[k].real()) + "," + num(c.points[k].imag()) + "\n";
  }
  out += "# block: fourier\n# columns: j,re_t,im_t,log_abs_t\n";
  const auto J = static_cast<std::ptrdiff_t>(c.max_frequency);
  for (std::ptrdiff_t j = -J; j <= J; ++j) {
    const Complex& t = c.coefficient(j);
    out += std::to_string(j) + "," + num(t.real()) + "," + num(t.imag()) + "," + num(std::log(std::abs(t))) + "\n";
  }
  return out;
}

struct ScanRow {
  double alpha = 0.0;
  RadiusEstimate estimate;
};

/// alpha, r_est, uncertainty, resonant
inline std::string scan_table(const std::vector<ScanRow>& rows) {
  std::string out = "# columns: alpha,r_est,uncertainty,resonant\n";
  for (const ScanRow& r : rows) {
    out += num(r.alpha) + "," + num(r.estimate.value) + "," + num(r.estimate.uncertainty) + "," +
           (r.estimate.resonant_zero ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace siegel::io

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mphom/mphom.hpp"

namespace mphom::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "MPHOM_OUTPUT_DIR";

using json = nlohmann::ordered_json;

/// Grid syntax: "a,b,c", "lin:lo:hi:n" or "log:lo:hi:n".
inline std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty grid");
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  const char sep = (text.rfind("lin:", 0) == 0 || text.rfind("log:", 0) == 0) ? ':' : ',';
  while (std::getline(ss, item, sep)) parts.push_back(item);
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 4) throw std::invalid_argument("grid '" + text + "' needs kind:lo:hi:n");
    const double lo = parse_double(parts[1]), hi = parse_double(parts[2]);
    const int n = parse_int(parts[3]);
    if (n < 1) throw std::invalid_argument("grid '" + text + "' needs n >= 1");
    const bool log = parts[0] == "log";
    if (log && !(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("log grid needs positive bounds");
    for (int i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.0 : double(i) / (n - 1);
      out.push_back(log ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo));
    }
    return out;
  }
  for (const auto& p : parts) out.push_back(parse_double(p));
  return out;
}

struct QuadOptions {
  std::string scheme = "auto";
  int nodes = 0;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 20240917;
  unsigned workers = 0;

  QuadratureSpec spec() const {
    QuadratureSpec q;
    q.scheme = parse_quadrature_scheme(scheme);
    q.nodes_per_dim = nodes;
    q.sample_count = samples;
    q.seed = seed;
    q.workers = workers;
    q.validate();
    return q;
  }

  json to_json() const {
    return {{"quad", scheme}, {"nodes", nodes}, {"samples", samples}, {"quad_seed", seed}, {"workers", workers}};
  }
};

struct CommandResult {
  json parameters;
  json summary;
  bool converged = true;
  std::string diagnostic;
};

struct SurfaceArgs {
  int L = 2;
  std::string x_class = "B";
  double s = 5.0;
  double ns = 1.5;
  int grid = 81;
  double range = 6.0;  ///< half-width of each axis in sigma_k units
  double sigma_x = 1.0;
};

/// L = 2 rows are `kbar,dk,density` over a square grid. For L >= 3 the grid spans k1, k2 with
/// the remaining momenta at 0, rows `k1,...,kL,density`. Momenta in sigma_k units, densities per sigma_k^L.
inline CommandResult cmd_probability_surface(const SurfaceArgs& a, std::ostream& csv) {
  if (a.L < 2 || a.L > kMaxPhotons) throw std::invalid_argument("--l must be in [2, 32]");
  if (a.grid < 2) throw std::invalid_argument("--grid must be >= 2");
  if (!(a.range > 0.0)) throw std::invalid_argument("--range must be > 0");
  const OutcomeClass cls = parse_outcome_class(a.x_class);
  class_members(a.L, cls);
  const PsfModel psf(a.sigma_x);
  const SourceScene scene{a.s, a.ns};
  scene.validate();
  const double sk = psf.sigma_k();
  const double jac = std::pow(sk, a.L);
  auto axis = [&](int i) { return -a.range + 2.0 * a.range * i / (a.grid - 1); };
  if (a.L == 2) {
    csv << "kbar,dk,density\n";
    for (int i = 0; i < a.grid; ++i)
      for (int j = 0; j < a.grid; ++j) {
        const double kb = axis(i), dk = axis(j);
        const double d = two_photon_density({kb * sk, dk * sk}, cls, scene, psf) * jac;
        csv << format_double(kb) << ',' << format_double(dk) << ',' << format_double(d) << '\n';
      }
  } else {
    for (int m = 1; m <= a.L; ++m) csv << 'k' << m << ',';
    csv << "density\n";
    std::vector<double> k(a.L, 0.0);
    for (int i = 0; i < a.grid; ++i)
      for (int j = 0; j < a.grid; ++j) {
        k[0] = axis(i) * sk;
        k[1] = axis(j) * sk;
        const double d = class_density(k, cls, scene, psf) * jac;
        for (double v : k) csv << format_double(v / sk) << ',';
        csv << format_double(d) << '\n';
      }
  }
  CommandResult r;
  r.parameters = {{"l", a.L}, {"x_class", a.x_class}, {"s", a.s}, {"ns", a.ns},
                  {"grid", a.grid}, {"range", a.range}, {"sigma_x", a.sigma_x}};
  r.summary = {{"rows", a.grid * a.grid}, {"class_probability", class_probability(a.L, cls, scene, psf)}};
  return r;
}

struct FiCurveArgs {
  double ns = 1.5;
  std::string s_grid = "log:0.01:8:24";
  int lmax = 0;
  double sigma_x = 1.0;
  QuadOptions quad;
};

/// Rows `s,L,F_L,F_L_stderr,F_total,converged`, FI in sigma_k^2 units per frame.
inline CommandResult cmd_fi_curve(const FiCurveArgs& a, std::ostream& csv) {
  const auto grid = parse_grid(a.s_grid);
  const PsfModel psf(a.sigma_x);
  const auto q = a.quad.spec();
  csv << "s,L,F_L,F_L_stderr,F_total,converged\n";
  CommandResult r;
  json points = json::array();
  for (double s : grid) {
    const auto fb = fisher_total({s, a.ns}, psf, a.lmax, q);
    for (const auto& [L, v] : fb.per_L) {
      csv << format_double(s) << ',' << L << ',' << format_double(v.value) << ',' << format_double(v.stderr) << ','
          << format_double(fb.total) << ',' << (v.converged ? 1 : 0) << '\n';
      if (!v.converged) {
        r.converged = false;
        r.diagnostic += "F_" + std::to_string(L) + " at s=" + format_double(s) + " did not reach the error target\n";
      }
    }
    points.push_back({{"s", s}, {"F_total", fb.total}, {"F_total_stderr", fb.total_stderr}, {"L_max", fb.L_max}});
  }
  r.parameters = {{"ns", a.ns}, {"s_grid", a.s_grid}, {"lmax", a.lmax}, {"sigma_x", a.sigma_x}};
  r.parameters.update(a.quad.to_json());
  r.summary = {{"points", points},
               {"subrayleigh_closed_total", subrayleigh_fisher_total(a.ns)},
               {"asymptotic_closed_2", asymptotic_fisher_2p(a.ns)}};
  return r;
}

struct FiVsNsArgs {
  double s = 0.01;
  std::string ns_grid = "log:0.01:5:24";
  int lmax = 6;
  double sigma_x = 1.0;
  QuadOptions quad;
};

/// Rows `ns,L,F_L,F_total,closed_form_total`; the closed form is the small-separation sum.
inline CommandResult cmd_fi_vs_ns(const FiVsNsArgs& a, std::ostream& csv) {
  const auto grid = parse_grid(a.ns_grid);
  const PsfModel psf(a.sigma_x);
  const auto q = a.quad.spec();
  if (a.lmax < 2) throw std::invalid_argument("--lmax must be >= 2");
  csv << "ns,L,F_L,F_total,closed_form_total\n";
  CommandResult r;
  json peaks = json::object();
  std::map<int, std::pair<double, double>> best;
  for (double ns : grid) {
    const auto fb = fisher_total({a.s, ns}, psf, a.lmax, q);
    for (const auto& [L, v] : fb.per_L) {
      csv << format_double(ns) << ',' << L << ',' << format_double(v.value) << ',' << format_double(fb.total) << ','
          << format_double(subrayleigh_fisher_total(ns)) << '\n';
      if (!v.converged) {
        r.converged = false;
        r.diagnostic += "F_" + std::to_string(L) + " at ns=" + format_double(ns) + " did not reach the error target\n";
      }
      auto& b = best[L];
      if (v.value > b.second) b = {ns, v.value};
    }
  }
  for (const auto& [L, b] : best) peaks[std::to_string(L)] = b.first;
  r.parameters = {{"s", a.s}, {"ns_grid", a.ns_grid}, {"lmax", a.lmax}, {"sigma_x", a.sigma_x}};
  r.parameters.update(a.quad.to_json());
  r.summary = {{"argmax_ns_per_L", peaks}};
  return r;
}

struct BucketArgs {
  int L = 2;
  std::string s_grid = "log:0.01:8:24";
  double ns = 1.5;
  double sigma_x = 1.0;
  QuadOptions quad;
};

/// Rows `s,F_resolved,F_bucket` in sigma_k^2 units.
inline CommandResult cmd_bucket_compare(const BucketArgs& a, std::ostream& csv) {
  if (a.L < 2 || a.L > 4) throw std::invalid_argument("--l must be 2, 3 or 4");
  const auto grid = parse_grid(a.s_grid);
  const PsfModel psf(a.sigma_x);
  const auto q = a.quad.spec();
  csv << "s,F_resolved,F_bucket\n";
  CommandResult r;
  for (double s : grid) {
    const auto res = fisher_L({s, a.ns}, psf, a.L, q);
    const double bucket = bucket_fisher(a.L, {s, a.ns}, psf);
    csv << format_double(s) << ',' << format_double(res.value) << ',' << format_double(bucket) << '\n';
    if (!res.converged) {
      r.converged = false;
      r.diagnostic += "F_resolved at s=" + format_double(s) + " did not reach the error target\n";
    }
  }
  r.parameters = {{"l", a.L}, {"s_grid", a.s_grid}, {"ns", a.ns}, {"sigma_x", a.sigma_x}};
  r.parameters.update(a.quad.to_json());
  if (a.L % 2 == 0) r.summary = {{"subrayleigh_closed", subrayleigh_fisher_closed(a.L / 2, a.ns)}};
  return r;
}

struct EstimateArgs {
  double true_s = 1.0;
  double ns = 1.5;
  std::int64_t frames = 5000;
  int trials = 200;
  std::uint64_t seed = 1;
  int L_cap = 12;
  double s_lo = 0.0;
  double s_hi = 4.0;
  double sigma_x = 1.0;
  QuadOptions quad;
};

/// Rows `trial,s_hat,boundary`; the summary carries the saturation verdict.
inline CommandResult cmd_estimate(const EstimateArgs& a, std::ostream& csv) {
  ExperimentConfig cfg;
  cfg.true_scene = {a.true_s, a.ns};
  cfg.psf = PsfModel(a.sigma_x);
  cfg.frames = a.frames;
  cfg.seed = a.seed;
  cfg.L_cap = a.L_cap;
  cfg.s_lo = a.s_lo;
  cfg.s_hi = a.s_hi;
  cfg.workers = a.quad.workers;
  if (!(a.true_s > 0.0)) throw std::invalid_argument("--true-s must be > 0 for a bound");
  const auto st = run_crb_study(cfg, a.trials, a.quad.spec());
  csv << "trial,s_hat,boundary\n";
  for (std::size_t t = 0; t < st.s_hat.size(); ++t)
    csv << t << ',' << format_double(st.s_hat[t]) << ',' << (st.boundary[t] ? 1 : 0) << '\n';
  CommandResult r;
  r.parameters = {{"true_s", a.true_s}, {"ns", a.ns},     {"frames", a.frames}, {"trials", a.trials},
                  {"seed", a.seed},     {"l_cap", a.L_cap}, {"s_lo", a.s_lo},   {"s_hi", a.s_hi},
                  {"sigma_x", a.sigma_x}};
  r.parameters.update(a.quad.to_json());
  const bool pass = st.bias_ok && st.variance_ok;
  r.summary = {{"mean", st.mean},
               {"variance", st.variance},
               {"mean_stderr", st.mean_stderr},
               {"bias", st.bias},
               {"crb", st.bound.crb},
               {"fisher_per_frame", st.bound.fisher},
               {"fisher_stderr", st.bound.fisher_stderr},
               {"variance_over_crb", st.variance_ratio},
               {"bias_within_3se", st.bias_ok},
               {"variance_in_window", st.variance_ok},
               {"pass", pass},
               {"boundary_trials", st.boundary_count}};
  for (const auto& [L, v] : st.bound.per_L)
    if (!v.converged) {
      r.converged = false;
      r.diagnostic += "F_" + std::to_string(L) + " for the bound did not reach the error target\n";
    }
  return r;
}

/// Relative paths land under $MPHOM_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& out, const std::string& fallback) {
  std::filesystem::path p = out.empty() ? std::filesystem::path(fallback) : std::filesystem::path(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) p = std::filesystem::path(dir) / p;
  }
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

inline std::filesystem::path sidecar(const std::filesystem::path& csv, const std::string& suffix) {
  auto p = csv;
  p.replace_extension();
  return std::filesystem::path(p.string() + suffix);
}

inline json manifest(const std::string& command, const CommandResult& r, const std::filesystem::path& csv,
                     const std::vector<std::string>& argv) {
  return {{"tool", "mphom"},
          {"version", kToolVersion},
          {"command", command},
          {"argv", argv},
          {"parameters", r.parameters},
          {"outputs", {csv.string()}},
          {"converged", r.converged},
          {"summary", r.summary}};
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string());
  os << j.dump(2) << '\n';
}

}  // namespace mphom::cli

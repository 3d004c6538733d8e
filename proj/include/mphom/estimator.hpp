#pragma once

#include <boost/math/tools/minima.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "mphom/coincidence.hpp"
#include "mphom/dual.hpp"
#include "mphom/fisher.hpp"
#include "mphom/optics.hpp"
#include "mphom/parallel.hpp"
#include "mphom/quadrature.hpp"
#include "mphom/sampler.hpp"

namespace mphom {

/// Log-likelihood of a frame record as a function of the separation, brightness known.
/// Frames are i.i.d. draws conditioned on L <= L_cap (L_cap = 0 means no truncation).
class RecordLikelihood {
 public:
  RecordLikelihood(const std::vector<DetectionOutcome>& record, const PsfModel& psf, double brightness, int L_cap = 0)
      : psf_(psf), N_(brightness), L_cap_(L_cap) {
    if (record.empty()) throw std::invalid_argument("RecordLikelihood: record is empty");
    if (!(brightness > 0.0)) throw std::domain_error("RecordLikelihood: brightness must be > 0");
    for (const auto& o : record) {
      o.validate();
      if (L_cap_ > 0 && o.L > L_cap_) throw std::invalid_argument("RecordLikelihood: frame exceeds L_cap");
      frames_.push_back({physical_momenta(o, psf_), o.assignment});
      envelope_ += detail::log_envelope_product(frames_.back().k, psf_);
    }
  }

  std::size_t size() const { return frames_.size(); }

  template <class S>
  S evaluate(const S& s) const {
    using std::log;
    S acc(envelope_);
    for (const auto& f : frames_) {
      const S b = interference_bracket(std::span<const double>(f.k), std::span<const int>(f.Q), s, N_, psf_);
      if (!(value_of(b) > 0.0)) return S(-std::numeric_limits<double>::infinity());
      acc += log(b);
    }
    if (L_cap_ > 0) {
      S z(0.0);
      for (int L = 1; L <= L_cap_; ++L) z += frame_probability_at(L, s, N_, psf_);
      acc -= double(frames_.size()) * log(z);
    }
    return acc;
  }

  double operator()(double s) const { return evaluate(s); }
  double score(double s) const { return evaluate(Dual<double>(s, 1.0)).d; }

 private:
  struct Frame {
    std::vector<double> k;
    std::vector<int> Q;
  };
  PsfModel psf_;
  double N_;
  int L_cap_;
  std::vector<Frame> frames_;
  double envelope_ = 0.0;
};

/// Per-frame FI of the untruncated model summed to L_max, and the resulting bound 1/(N F).
inline double crb_report(const SourceScene& scene, const PsfModel& psf, std::int64_t frames, int L_max = 0,
                         const QuadratureSpec& quad = {}) {
  if (frames < 1) throw std::invalid_argument("crb_report: frames must be >= 1");
  const auto fb = fisher_total(scene, psf, L_max, quad);
  const double sk2 = psf.sigma_k() * psf.sigma_k();
  return 1.0 / (double(frames) * fb.total * sk2);
}

/// Bound for records drawn with L <= L_cap: uses the FI of the conditioned frame distribution.
struct CappedBound {
  double fisher = 0.0;  ///< sigma_k^2 units, per frame
  double fisher_stderr = 0.0;
  double crb = 0.0;     ///< physical length^2 for the given frame count
  std::map<int, FisherValue> per_L;
};

inline CappedBound crb_capped(const SourceScene& scene, const PsfModel& psf, std::int64_t frames, int L_cap,
                              const QuadratureSpec& quad = {}) {
  CappedBound b;
  double var = 0.0;
  for (int L = 1; L <= L_cap; ++L) {
    b.per_L[L] = fisher_L(scene, psf, L, quad);
    var += b.per_L[L].stderr * b.per_L[L].stderr;
  }
  b.fisher = conditional_fisher(b.per_L, scene.separation, scene.brightness, psf, L_cap);
  b.fisher_stderr = std::sqrt(var) / capped_mass(scene.separation, scene.brightness, psf, L_cap).v;
  b.crb = 1.0 / (double(frames) * b.fisher * psf.sigma_k() * psf.sigma_k());
  return b;
}

struct EstimationReport {
  double s_hat = 0.0;
  double log_likelihood = 0.0;
  double observed_information = 0.0;
  double crb = std::numeric_limits<double>::quiet_NaN();  ///< 1/(N F) when requested
  double sample_variance = std::numeric_limits<double>::quiet_NaN();
  double bias = std::numeric_limits<double>::quiet_NaN();
  bool boundary = false;
  std::int64_t frames = 0;
  std::vector<std::pair<double, double>> log_likelihood_curve;
};

struct MleOptions {
  double s_lo = 0.0;
  double s_hi = 4.0;
  int grid_points = 48;
  int L_cap = 12;  ///< truncation the record was drawn with; 0 = none
  bool with_crb = false;
  QuadratureSpec quad;
};

/// Grid scan, then Brent's golden-section/parabolic search in the bracket around the best node.
inline EstimationReport mle_separation(const std::vector<DetectionOutcome>& record, const PsfModel& psf,
                                       double brightness, const MleOptions& opt = {}) {
  if (!(opt.s_lo >= 0.0) || !(opt.s_hi > opt.s_lo)) throw std::invalid_argument("mle_separation: need 0 <= s_lo < s_hi");
  if (opt.grid_points < 3) throw std::invalid_argument("mle_separation: grid needs at least 3 points");
  RecordLikelihood ll(record, psf, brightness, opt.L_cap);
  EstimationReport r;
  r.frames = std::int64_t(record.size());
  const int n = opt.grid_points;
  const double step = (opt.s_hi - opt.s_lo) / (n - 1);
  int best = 0;
  for (int i = 0; i < n; ++i) {
    const double s = opt.s_lo + step * i;
    const double v = ll(s);
    r.log_likelihood_curve.emplace_back(s, v);
    if (v > r.log_likelihood_curve[best].second) best = i;
  }
  const double lo = opt.s_lo + step * std::max(0, best - 1);
  const double hi = opt.s_lo + step * std::min(n - 1, best + 1);
  auto neg = [&](double s) {
    const double v = ll(s);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  std::uintmax_t iters = 200;
  const auto found = boost::math::tools::brent_find_minima(neg, lo, hi, 40, iters);
  r.s_hat = found.first;
  r.log_likelihood = -found.second;
  const double tol = 1e-6 * (opt.s_hi - opt.s_lo);
  r.boundary = (r.s_hat - opt.s_lo) < tol || (opt.s_hi - r.s_hat) < tol;
  const double h = 1e-4 * std::max(psf.sigma_x(), r.s_hat);
  const double sl = std::max(r.s_hat - h, 0.0), sr = r.s_hat + h;
  r.observed_information = -(ll.score(sr) - ll.score(sl)) / (sr - sl);
  if (opt.with_crb) {
    const SourceScene at{std::max(r.s_hat, 1e-6 * psf.sigma_x()), brightness};
    r.crb = opt.L_cap > 0 ? crb_capped(at, psf, r.frames, opt.L_cap, opt.quad).crb
                          : crb_report(at, psf, r.frames, 0, opt.quad);
  }
  return r;
}

struct StudyResult {
  std::vector<double> s_hat;
  std::vector<bool> boundary;
  double mean = 0.0;
  double variance = 0.0;
  double mean_stderr = 0.0;
  double bias = 0.0;
  CappedBound bound;
  double variance_ratio = 0.0;
  bool bias_ok = false;
  bool variance_ok = false;
  std::int64_t boundary_count = 0;
};

/// Repeated simulate-then-estimate trials at the true scene; trial t uses a stream derived from (seed, t).
inline StudyResult run_crb_study(const ExperimentConfig& cfg, int trials, const QuadratureSpec& quad = {},
                                 double ratio_lo = 0.8, double ratio_hi = 1.3) {
  cfg.validate();
  if (trials < 2) throw std::invalid_argument("run_crb_study: need at least two trials");
  SamplerOptions so;
  so.L_cap = cfg.L_cap;
  so.pixel_width = cfg.pixel_width;
  FrameSampler sampler(cfg.true_scene, cfg.psf, so);
  StudyResult out;
  out.s_hat.assign(trials, 0.0);
  std::vector<char> flags(trials, 0);
  MleOptions mo;
  mo.s_lo = cfg.s_lo;
  mo.s_hi = cfg.s_hi;
  mo.L_cap = cfg.L_cap;
  parallel_for(
      std::size_t(trials),
      [&](std::size_t t) {
        ExperimentConfig c = cfg;
        c.seed = batch_engine(cfg.seed, t)();
        c.workers = 1;
        const auto record = simulate_experiment(c, sampler);
        const auto rep = mle_separation(record, cfg.psf, cfg.true_scene.brightness, mo);
        out.s_hat[t] = rep.s_hat;
        flags[t] = rep.boundary ? 1 : 0;
      },
      cfg.workers);
  for (char f : flags) {
    out.boundary.push_back(f != 0);
    out.boundary_count += f;
  }
  const double n = double(trials);
  out.mean = std::accumulate(out.s_hat.begin(), out.s_hat.end(), 0.0) / n;
  for (double v : out.s_hat) out.variance += (v - out.mean) * (v - out.mean);
  out.variance /= (n - 1.0);
  out.mean_stderr = std::sqrt(out.variance / n);
  out.bias = out.mean - cfg.true_scene.separation;
  out.bound = crb_capped(cfg.true_scene, cfg.psf, cfg.frames, cfg.L_cap, quad);
  out.variance_ratio = out.variance / out.bound.crb;
  out.bias_ok = std::abs(out.bias) <= 3.0 * out.mean_stderr;
  out.variance_ok = out.variance_ratio >= ratio_lo && out.variance_ratio <= ratio_hi;
  return out;
}

}  // namespace mphom

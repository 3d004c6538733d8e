#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mphom/coincidence.hpp"
#include "mphom/optics.hpp"
#include "mphom/parallel.hpp"
#include "mphom/quadrature.hpp"

namespace mphom {

struct SamplerOptions {
  int L_cap = 12;
  double pixel_width = 0.0;           ///< momentum bin width in sigma_k units; 0 keeps momenta continuous
  double efficiency_warning = 1e-3;
  std::function<void(const std::string&)> warn;  ///< receives low-efficiency warnings; may be empty
};

/// Exact sampler of frames (L <= L_cap, X, ordered momenta) from the coincidence density.
///
/// (L, X) is drawn from the integrated split probabilities. Momenta come from rejection against
/// a Cauchy-Schwarz majorant: every amplitude A_j is a signed sum of n_j = L C(L-1,j) products of
/// half-angle cosines and sines, so A_j^2 <= n_j S_j with S_j the sum of the squared products.
/// Each squared product times the envelope factorizes into normalized one-dimensional densities,
/// which gives an exact proposal with known total mass.
class FrameSampler {
 public:
  FrameSampler(const SourceScene& scene, const PsfModel& psf, SamplerOptions opts = {})
      : scene_(scene), psf_(psf), opts_(std::move(opts)) {
    scene_.validate();
    if (opts_.L_cap < 1 || opts_.L_cap > kMaxPhotons) throw std::invalid_argument("FrameSampler: L_cap out of range");
    const double s = scene_.separation, N = scene_.brightness, sk = psf_.sigma_k();
    delta_ = psf_.delta(s);
    a_ = 0.5 * (1.0 - delta_);
    b_ = 0.5 * (1.0 + delta_);
    x2_ = 0.25 * s * s * sk * sk;
    use_maxwell_ = x2_ <= 1.0;
    for (int L = 1; L <= opts_.L_cap; ++L) {
      std::array<double, kMaxPhotons> coef{};
      detail::mode_coefficients(L, N, delta_, coef.data());
      for (int X = 0; X <= L; ++X) {
        Cell c;
        c.L = L;
        c.X = X;
        c.probability = split_probability(L, X, scene_, psf_);
        double total = 0.0;
        for (int j = 0; j < L; ++j) {
          const double n = L * binomial(L - 1, j);
          const double w = detail::theta(L, X, j) * coef[j];
          const double W = std::pow(a_, j) * std::pow(b_, L - 1 - j);
          c.weight.push_back(w);
          c.n.push_back(n);
          total += w * n * n * W;
          c.mixture_cdf.push_back(total);
        }
        c.majorant_mass = total;
        c.efficiency = total > 0.0 ? c.probability / total : 0.0;
        if (c.probability > 0.0 && c.efficiency < opts_.efficiency_warning && opts_.warn) {
          std::ostringstream os;
          os << "rejection efficiency " << c.efficiency << " for L=" << L << " X=" << X;
          opts_.warn(os.str());
        }
        cells_.push_back(std::move(c));
      }
    }
    double acc = 0.0;
    for (const auto& c : cells_) {
      acc += c.probability;
      cell_cdf_.push_back(acc);
    }
    capped_mass_ = acc;
  }

  const SourceScene& scene() const { return scene_; }
  const PsfModel& psf() const { return psf_; }
  int L_cap() const { return opts_.L_cap; }

  /// Probability that an untruncated frame has L <= L_cap.
  double capped_mass() const { return capped_mass_; }

  /// Unconditional probability of (L, X) and the analytic acceptance rate of its momentum sampler.
  double cell_probability(int L, int X) const { return cell(L, X).probability; }
  double cell_efficiency(int L, int X) const { return cell(L, X).efficiency; }

  template <class Engine>
  DetectionOutcome sample(Engine& eng) const {
    std::uniform_real_distribution<double> u(0.0, capped_mass_);
    const double r = u(eng);
    auto it = std::upper_bound(cell_cdf_.begin(), cell_cdf_.end(), r);
    if (it == cell_cdf_.end()) --it;
    std::size_t idx = std::size_t(it - cell_cdf_.begin());
    while (cells_[idx].probability <= 0.0) --idx;
    const Cell& c = cells_[idx];
    std::vector<double> k = sample_momenta(c, eng);
    const double sk = psf_.sigma_k();
    for (double& v : k) {
      v /= sk;
      if (opts_.pixel_width > 0.0) v = (std::floor(v / opts_.pixel_width) + 0.5) * opts_.pixel_width;
    }
    return DetectionOutcome::canonical(c.X, std::move(k));
  }

  /// Momenta (physical units) for a fixed cell; exposed for tests.
  template <class Engine>
  std::vector<double> sample_momenta(int L, int X, Engine& eng) const {
    return sample_momenta(cell(L, X), eng);
  }

 private:
  struct Cell {
    int L = 0, X = 0;
    double probability = 0.0;
    double majorant_mass = 0.0;
    double efficiency = 0.0;
    std::vector<double> weight, n, mixture_cdf;
  };

  const Cell& cell(int L, int X) const {
    if (L < 1 || L > opts_.L_cap || X < 0 || X > L) throw std::out_of_range("FrameSampler: cell out of range");
    return cells_[std::size_t(L * (L + 1) / 2 - 1 + X)];
  }

  template <class Engine>
  double draw_cos2(Engine& eng) const {
    std::normal_distribution<double> nd(0.0, psf_.sigma_k());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
      const double k = nd(eng);
      const double c = std::cos(0.5 * k * scene_.separation);
      if (u(eng) < c * c) return k;
    }
  }

  template <class Engine>
  double draw_sin2(Engine& eng) const {
    std::normal_distribution<double> nd(0.0, psf_.sigma_k());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double s = scene_.separation;
    for (;;) {
      if (use_maxwell_) {
        // k^2 |phi(k)|^2 / sigma_k^2 proposal, sin^2(x) <= x^2 envelope.
        const double g1 = nd(eng), g2 = nd(eng), g3 = nd(eng);
        const double mag = std::sqrt(g1 * g1 + g2 * g2 + g3 * g3);
        const double k = (u(eng) < 0.5 ? -mag : mag);
        const double x = 0.5 * k * s;
        const double t = std::sin(x);
        if (x != 0.0 && u(eng) * x * x < t * t) return k;
      } else {
        const double k = nd(eng);
        const double t = std::sin(0.5 * k * s);
        if (u(eng) < t * t) return k;
      }
    }
  }

  template <class Engine>
  std::vector<double> sample_momenta(const Cell& c, Engine& eng) const {
    const int L = c.L, X = c.X;
    const double s = scene_.separation;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, psf_.sigma_k());
    std::vector<double> k(L);
    std::vector<int> others(L);
    for (;;) {
      const double r = u(eng) * c.majorant_mass;
      int j = int(std::upper_bound(c.mixture_cdf.begin(), c.mixture_cdf.end(), r) - c.mixture_cdf.begin());
      j = std::min(j, L - 1);
      while (c.mixture_cdf[j] - (j ? c.mixture_cdf[j - 1] : 0.0) <= 0.0) --j;
      // Uniform (i, T): reference slot i, then J sine slots among the others.
      const int i = int(std::uniform_int_distribution<int>(0, L - 1)(eng));
      others.clear();
      for (int m = 0; m < L; ++m)
        if (m != i) others.push_back(m);
      for (int t = 0; t < j; ++t) {
        const int pick = t + int(std::uniform_int_distribution<int>(0, int(others.size()) - 1 - t)(eng));
        std::swap(others[t], others[pick]);
      }
      k[i] = nd(eng);
      for (int t = 0; t < int(others.size()); ++t) k[others[t]] = t < j ? draw_sin2(eng) : draw_cos2(eng);

      // Acceptance: sum_j w_j A_j^2 / sum_j w_j n_j S_j.
      std::array<double, kMaxPhotons> cc{}, tt{}, c2{}, t2{};
      std::array<double, kMaxPhotons + 1> full{}, full2{}, q{}, q2{};
      for (int m = 0; m < L; ++m) {
        cc[m] = std::cos(0.5 * k[m] * s);
        tt[m] = std::sin(0.5 * k[m] * s);
        c2[m] = cc[m] * cc[m];
        t2[m] = tt[m] * tt[m];
      }
      elementary_symmetric(cc.data(), tt.data(), L, full.data());
      elementary_symmetric(c2.data(), t2.data(), L, full2.data());
      std::array<double, kMaxPhotons> amp{}, sq{};
      for (int m = 0; m < L; ++m) {
        divide_linear_factor(full.data(), L, cc[m], tt[m], q.data());
        divide_linear_factor(full2.data(), L, c2[m], t2[m], q2.data());
        const double sign = m < X ? -1.0 : 1.0;
        for (int J = 0; J < L; ++J) {
          amp[J] += sign * q[J];
          sq[J] += q2[J];
        }
      }
      double target = 0.0, envelope = 0.0;
      for (int J = 0; J < L; ++J) {
        target += c.weight[J] * amp[J] * amp[J];
        envelope += c.weight[J] * c.n[J] * sq[J];
      }
      const double ratio = envelope > 0.0 ? target / envelope : 0.0;
      if (ratio > 1.0 + 1e-9) {
        std::ostringstream os;
        os << "majorant violated for L=" << L << " X=" << X << ": ratio " << ratio;
        throw std::runtime_error(os.str());
      }
      if (u(eng) < ratio) return k;
    }
  }

  SourceScene scene_;
  PsfModel psf_;
  SamplerOptions opts_;
  double delta_ = 1.0, a_ = 0.0, b_ = 1.0, x2_ = 0.0;
  bool use_maxwell_ = true;
  std::vector<Cell> cells_;
  std::vector<double> cell_cdf_;
  double capped_mass_ = 0.0;
};

/// Convenience wrapper: one frame from a fresh sampler.
template <class Engine>
DetectionOutcome sample_frame(const SourceScene& scene, const PsfModel& psf, Engine& eng, int L_cap = 12) {
  SamplerOptions o;
  o.L_cap = L_cap;
  return FrameSampler(scene, psf, o).sample(eng);
}

struct ExperimentConfig {
  SourceScene true_scene;
  PsfModel psf;
  std::int64_t frames = 1000;
  std::uint64_t seed = 1;
  int L_cap = 12;
  double s_lo = 0.0;
  double s_hi = 4.0;
  double pixel_width = 0.0;
  unsigned workers = 0;

  void validate() const {
    true_scene.validate();
    if (frames < 1) throw std::invalid_argument("ExperimentConfig: frames must be >= 1");
    if (!(s_lo >= 0.0) || !(s_hi > s_lo)) throw std::invalid_argument("ExperimentConfig: need 0 <= s_lo < s_hi");
  }
};

inline constexpr std::int64_t kFramesPerBlock = 1024;

/// Frames in blocks of kFramesPerBlock, each block with its own stream derived from (seed, block).
inline std::vector<DetectionOutcome> simulate_experiment(const ExperimentConfig& cfg, const FrameSampler& sampler) {
  cfg.validate();
  std::vector<DetectionOutcome> out(std::size_t(cfg.frames));
  const std::int64_t blocks = (cfg.frames + kFramesPerBlock - 1) / kFramesPerBlock;
  parallel_for(
      std::size_t(blocks),
      [&](std::size_t b) {
        auto eng = batch_engine(cfg.seed, b);
        const std::int64_t lo = std::int64_t(b) * kFramesPerBlock;
        const std::int64_t hi = std::min(cfg.frames, lo + kFramesPerBlock);
        for (std::int64_t f = lo; f < hi; ++f) out[std::size_t(f)] = sampler.sample(eng);
      },
      cfg.workers);
  return out;
}

inline std::vector<DetectionOutcome> simulate_experiment(const ExperimentConfig& cfg) {
  SamplerOptions o;
  o.L_cap = cfg.L_cap;
  o.pixel_width = cfg.pixel_width;
  FrameSampler sampler(cfg.true_scene, cfg.psf, o);
  return simulate_experiment(cfg, sampler);
}

}  // namespace mphom

#pragma once

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mphom/coincidence.hpp"
#include "mphom/dual.hpp"
#include "mphom/optics.hpp"
#include "mphom/quadrature.hpp"

namespace mphom {

enum class DerivativeMethod { dual, finite_difference };

struct FisherValue {
  double value = 0.0;   ///< sigma_k^2 units
  double stderr = 0.0;  ///< sigma_k^2 units
  bool converged = true;
  std::string scheme;
  std::int64_t evaluations = 0;
};

struct FisherBreakdown {
  std::map<int, FisherValue> per_L;
  double total = 0.0;
  double total_stderr = 0.0;
  int L_max = 0;
  bool converged = true;
  std::optional<double> subrayleigh_closed_total;
  std::optional<double> asymptotic_closed_2;
};

/// Per-order sub-Rayleigh limit of F^(2P) in sigma_k^2 units.
inline double subrayleigh_fisher_closed(int P, double N) {
  if (P < 1) throw std::invalid_argument("subrayleigh_fisher_closed: P must be >= 1");
  if (!(N > 0.0)) throw std::domain_error("subrayleigh_fisher_closed: N must be > 0");
  const double x = N / (1.0 + 2.0 * N);
  return binomial(2 * P, P) / (2.0 * (2 * P - 1)) * std::pow(x, 2 * P - 1);
}

/// Sum over all even orders of the sub-Rayleigh limit, in sigma_k^2 units.
inline double subrayleigh_fisher_total(double N) {
  if (!(N > 0.0)) throw std::domain_error("subrayleigh_fisher_total: N must be > 0");
  return (1.0 + 2.0 * N - std::sqrt(1.0 + 4.0 * N)) / (2.0 * N);
}

/// Large-separation two-photon FI N/(1+N)^3 in sigma_k^2 units.
inline double asymptotic_fisher_2p(double N) {
  if (!(N >= 0.0)) throw std::domain_error("asymptotic_fisher_2p: N must be >= 0");
  return N / std::pow(1.0 + N, 3);
}

/// Probability-like factor N^{L-1}/(1+N)^{L+1} that carries the N dependence of F^(L) at large s.
inline double asymptotic_scaling(int L, double N) { return std::pow(N, L - 1) / std::pow(1.0 + N, L + 1); }

inline double optimal_brightness(int L) {
  if (L < 2) throw std::invalid_argument("optimal_brightness: L must be >= 2");
  return 0.5 * (L - 1);
}

inline int default_lmax(double N) { return std::min(7, int(std::ceil(2.0 * (2.0 * N + 1.0)))); }

namespace detail {

/// Upper bound of the bracket of split X: each amplitude has at most L*C(L-1,j) unit-bounded terms.
inline std::vector<double> bracket_bounds(int L, double s, double N, const PsfModel& psf) {
  std::array<double, kMaxPhotons> coef{};
  mode_coefficients(L, N, psf.delta(s), coef.data());
  std::vector<double> out(L + 1, 0.0);
  for (int X = 0; X <= L; ++X)
    for (int j = 0; j < L; ++j) {
      const double n = L * binomial(L - 1, j);
      out[X] += theta(L, X, j) * coef[j] * n * n;
    }
  return out;
}

inline constexpr double kSkipFraction = 1e-15;

/// sum_X (d_s B_X)^2 / B_X at one momentum tuple.
inline double fisher_integrand(std::span<const double> k, double s, double N, const PsfModel& psf,
                               const std::vector<double>& bounds, DerivativeMethod method, double h) {
  const int L = int(k.size());
  double acc = 0.0;
  if (method == DerivativeMethod::dual) {
    std::array<Dual<double>, kMaxPhotons + 1> b{};
    canonical_brackets(k, Dual<double>(s, 1.0), N, psf, b.data());
    for (int X = 0; X <= L; ++X)
      if (b[X].v > kSkipFraction * bounds[X]) acc += b[X].d * b[X].d / b[X].v;
    return acc;
  }
  std::array<double, kMaxPhotons + 1> b0{}, p1{}, m1{}, p2{}, m2{};
  canonical_brackets(k, s, N, psf, b0.data());
  canonical_brackets(k, s + h, N, psf, p1.data());
  canonical_brackets(k, s - h, N, psf, m1.data());
  canonical_brackets(k, s + 0.5 * h, N, psf, p2.data());
  canonical_brackets(k, s - 0.5 * h, N, psf, m2.data());
  for (int X = 0; X <= L; ++X) {
    if (!(b0[X] > kSkipFraction * bounds[X])) continue;
    const double d1 = (p1[X] - m1[X]) / (2.0 * h);
    const double d2 = (p2[X] - m2[X]) / h;
    const double d = (4.0 * d2 - d1) / 3.0;
    acc += d * d / b0[X];
  }
  return acc;
}

}  // namespace detail

/// F^(L)(s) = sum_X integral (d_s P)^2 / P over ordered momenta, in sigma_k^2 units.
inline FisherValue fisher_L(const SourceScene& scene, const PsfModel& psf, int L, const QuadratureSpec& quad = {},
                            DerivativeMethod method = DerivativeMethod::dual, double fd_step = 1e-3) {
  scene.validate();
  if (L < 1 || L > kMaxPhotons) throw std::domain_error("fisher_L: L out of range");
  const double s = scene.separation, N = scene.brightness, sk = psf.sigma_k();
  const auto bounds = detail::bracket_bounds(L, s, N, psf);
  const double h = fd_step * psf.sigma_x();
  NormalIntegrand f = [&](std::span<const double> z, std::span<double> out) {
    std::array<double, kMaxPhotons> k{};
    for (int m = 0; m < L; ++m) k[m] = sk * z[m];
    out[0] = detail::fisher_integrand(std::span<const double>(k.data(), L), s, N, psf, bounds, method, h);
  };
  FisherValue r;
  const auto est = integrate_normal(L, 1, f, quad, sk * s, &r.scheme);
  const double unit = 1.0 / (sk * sk);
  r.value = est.value[0] * unit;
  r.stderr = est.error[0] * unit;
  r.evaluations = est.evaluations;
  r.converged = r.stderr <= quad.relative_error_target * std::abs(r.value) + 1e-14;
  return r;
}

inline FisherBreakdown fisher_total(const SourceScene& scene, const PsfModel& psf, int L_max = 0,
                                    const QuadratureSpec& quad = {}) {
  scene.validate();
  if (L_max == 0) L_max = default_lmax(scene.brightness);
  if (L_max < 2) throw std::invalid_argument("fisher_total: L_max must be >= 2");
  FisherBreakdown out;
  out.L_max = L_max;
  double var = 0.0;
  for (int L = 1; L <= L_max; ++L) {
    const auto v = fisher_L(scene, psf, L, quad);
    out.per_L[L] = v;
    out.total += v.value;
    var += v.stderr * v.stderr;
    out.converged = out.converged && v.converged;
  }
  out.total_stderr = std::sqrt(var);
  out.subrayleigh_closed_total = subrayleigh_fisher_total(scene.brightness);
  out.asymptotic_closed_2 = asymptotic_fisher_2p(scene.brightness);
  return out;
}

/// Probability that a frame holds at most L_cap photons, with its s-derivative.
inline Dual<double> capped_mass(double s, double N, const PsfModel& psf, int L_cap) {
  Dual<double> z(0.0);
  for (int L = 1; L <= L_cap; ++L) z += frame_probability_at(L, Dual<double>(s, 1.0), N, psf);
  return z;
}

/// FI of the frame distribution conditioned on L <= L_cap, from per-order values F^(L).
inline double conditional_fisher(const std::map<int, FisherValue>& per_L, double s, double N, const PsfModel& psf,
                                 int L_cap) {
  const auto z = capped_mass(s, N, psf, L_cap);
  double sum = 0.0;
  for (int L = 1; L <= L_cap; ++L) {
    auto it = per_L.find(L);
    if (it == per_L.end()) throw std::invalid_argument("conditional_fisher: missing order");
    sum += it->second.value;
  }
  const double sk2 = psf.sigma_k() * psf.sigma_k();
  return sum / z.v - (z.d * z.d) / (z.v * z.v) / sk2;
}

/// FI of the momentum-integrated split probabilities of order L (bucket detection), sigma_k^2 units.
inline double bucket_fisher(int L, const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  double acc = 0.0;
  for (int X = 0; X <= L; ++X) {
    const auto p = split_probability_at(L, X, Dual<double>(scene.separation, 1.0), scene.brightness, psf);
    if (p.v > 0.0) acc += p.d * p.d / p.v;
  }
  return acc / (psf.sigma_k() * psf.sigma_k());
}

struct SamplingHierarchy {
  double f_x = 0.0;       ///< which-camera outcome only
  double f_kbar_x = 0.0;  ///< mean momentum and outcome
  double f_dk_x = 0.0;    ///< momentum difference and outcome
  double f_full = 0.0;    ///< both momenta and outcome
  double error = 0.0;     ///< quadrature error estimate
};

/// Two-photon FI decomposition from the factorization P(X) f(kbar;X) g(dk;X), in sigma_k^2 units.
inline SamplingHierarchy sampling_hierarchy_fi(const SourceScene& scene, const PsfModel& psf, int nodes = 0) {
  scene.validate();
  const double s = scene.separation, N = scene.brightness, sk = psf.sigma_k(), v = sk * sk;
  if (s <= 0.0) throw std::domain_error("sampling_hierarchy_fi: separation must be positive");
  using D = Dual<double>;
  const D ds(s, 1.0);
  const D delta = psf.delta(ds);
  const D kappa = exp(-(ds * ds) * (0.25 * v));
  // Both kbar*s and dk*s/2 oscillate as cos(omega z) with omega = s sigma_k / sqrt 2.
  const int n = nodes > 0 ? nodes : std::max(64, auto_nodes(s * sk / std::numbers::sqrt2));
  auto conditional_info = [&](int n_nodes, double alpha, bool kbar) {
    const auto& rule = gauss_hermite_rule(n_nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.z.size(); ++i) {
      D val;
      if (kbar) {
        const double kb = sk / std::numbers::sqrt2 * rule.z[i];
        val = (1.0 + N - alpha * N * delta * cos(ds * kb)) / (1.0 + N - alpha * N * delta * kappa);
      } else {
        const double dk = std::numbers::sqrt2 * sk * rule.z[i];
        const D one_minus_or_plus = alpha > 0 ? 1.0 + kappa : 1.0 - kappa;
        val = detail::one_plus_alpha_cos(alpha, ds * (0.5 * dk)) / one_minus_or_plus;
      }
      if (val.v > 1e-300) acc += rule.w[i] * val.d * val.d / val.v;
    }
    return acc;
  };
  SamplingHierarchy h;
  double err = 0.0;
  double info_f = 0.0, info_g = 0.0;
  for (double alpha : {+1.0, -1.0}) {
    const D w_p0 = 1.0 / ((1.0 + N * (1.0 + delta)) * (1.0 + N * (1.0 - delta)));
    const D fnorm = 1.0 + N - alpha * N * delta * kappa;
    const D gnorm = alpha > 0 ? 1.0 + kappa : 1.0 - kappa;
    const D p = N * w_p0 * w_p0 * fnorm * gnorm;
    h.f_x += p.d * p.d / p.v;
    const double fi = conditional_info(n, alpha, true), gi = conditional_info(n, alpha, false);
    const double fi2 = conditional_info(n + 32, alpha, true), gi2 = conditional_info(n + 32, alpha, false);
    err += p.v * (std::abs(fi2 - fi) + std::abs(gi2 - gi));
    info_f += p.v * fi2;
    info_g += p.v * gi2;
  }
  const double unit = 1.0 / v;
  h.f_x *= unit;
  h.f_kbar_x = h.f_x + info_f * unit;
  h.f_dk_x = h.f_x + info_g * unit;
  h.f_full = h.f_x + (info_f + info_g) * unit;
  h.error = err * unit;
  return h;
}

namespace detail {

template <class S>
S normal_cdf(const S& x) {
  if constexpr (std::is_same_v<S, double>) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
  } else {
    const double v = x.v;
    return S(0.5 * std::erfc(-v / std::numbers::sqrt2),
             std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi) * x.d);
  }
}

}  // namespace detail

/// Pixelated direct imaging: per-photon FI of the pixel histogram of the two-source intensity,
/// scaled by the mean photon number 2 N_s of a frame, in sigma_k^2 units.
inline double di_baseline_fisher(const SourceScene& scene, const PsfModel& psf, double pixel_pitch, int n_pixels) {
  scene.validate();
  if (!(pixel_pitch > 0.0) || n_pixels < 1) throw std::invalid_argument("di_baseline_fisher: invalid pixel grid");
  const double half_width = 0.5 * n_pixels * pixel_pitch;
  const double need = 0.5 * scene.separation + 6.0 * psf.sigma_x();
  if (half_width < need)
    throw std::domain_error("di_baseline_fisher: pixel grid must extend 6 sigma_x beyond each source");
  using D = Dual<double>;
  const D s(scene.separation, 1.0);
  const double sx = psf.sigma_x();
  double acc = 0.0;
  for (int i = 0; i < n_pixels; ++i) {
    const double a = (i - 0.5 * n_pixels) * pixel_pitch;
    const double b = a + pixel_pitch;
    auto mass = [&](const D& centre) {
      return detail::normal_cdf((b - centre) / sx) - detail::normal_cdf((a - centre) / sx);
    };
    const D q = 0.5 * mass(0.5 * s) + 0.5 * mass(-0.5 * s);
    if (q.v > 1e-300) acc += q.d * q.d / q.v;
  }
  const double sk = psf.sigma_k();
  return 2.0 * scene.brightness * acc / (sk * sk);
}

/// Unpixelated direct imaging FI, 2 N_s times the per-photon FI of the intensity profile.
inline double di_unpixelated_fisher(const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  const double s = scene.separation, sx = psf.sigma_x();
  boost::math::quadrature::sinh_sinh<double> integ;
  const double per_photon = integ.integrate([&](double x) {
    const double gp = psf.intensity(x - 0.5 * s), gm = psf.intensity(x + 0.5 * s);
    const double p = 0.5 * (gp + gm);
    // d/ds of 0.5 g(x - s/2) + 0.5 g(x + s/2)
    const double dp = 0.25 * ((x - 0.5 * s) * gp - (x + 0.5 * s) * gm) / (sx * sx);
    return p > 1e-300 ? dp * dp / p : 0.0;
  });
  const double sk = psf.sigma_k();
  return 2.0 * scene.brightness * per_photon / (sk * sk);
}

}  // namespace mphom

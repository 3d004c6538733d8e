#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mphom/dual.hpp"
#include "mphom/optics.hpp"
#include "mphom/trig.hpp"

namespace mphom {

/// One frame: L photons, X of them in camera C1. Momenta are stored in units of sigma_k.
struct DetectionOutcome {
  int L = 0;
  int X = 0;
  std::vector<double> momenta;
  std::vector<int> assignment;  ///< 1 = C1, 0 = C2

  /// First X photons in C1, the rest in C2.
  static DetectionOutcome canonical(int X, std::vector<double> momenta) {
    DetectionOutcome o;
    o.L = int(momenta.size());
    o.X = X;
    o.momenta = std::move(momenta);
    o.assignment.assign(o.L, 0);
    for (int i = 0; i < X && i < o.L; ++i) o.assignment[i] = 1;
    o.validate();
    return o;
  }

  void validate() const {
    if (L < 1) throw std::domain_error("DetectionOutcome: L must be >= 1");
    if (L > kMaxPhotons) throw std::domain_error("DetectionOutcome: L exceeds kMaxPhotons");
    if (X < 0 || X > L) throw std::domain_error("DetectionOutcome: X out of range");
    if (int(momenta.size()) != L || int(assignment.size()) != L)
      throw std::domain_error("DetectionOutcome: list lengths must equal L");
    if (std::accumulate(assignment.begin(), assignment.end(), 0) != X)
      throw std::domain_error("DetectionOutcome: assignment does not sum to X");
    for (double k : momenta)
      if (!std::isfinite(k)) throw std::domain_error("DetectionOutcome: momenta must be finite");
  }
};

struct TwoPhotonCoordinates {
  double k_bar;
  double delta_k;

  static TwoPhotonCoordinates from_momenta(double k1, double k2) { return {0.5 * (k1 + k2), k1 - k2}; }
  double k1() const { return k_bar + 0.5 * delta_k; }
  double k2() const { return k_bar - 0.5 * delta_k; }
};

enum class OutcomeClass { B, UA, A };

inline std::string to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::B: return "B";
    case OutcomeClass::UA: return "UA";
    case OutcomeClass::A: return "A";
  }
  return "?";
}

inline OutcomeClass parse_outcome_class(const std::string& s) {
  if (s == "B" || s == "b") return OutcomeClass::B;
  if (s == "UA" || s == "ua") return OutcomeClass::UA;
  if (s == "A" || s == "a") return OutcomeClass::A;
  throw std::invalid_argument("unknown outcome class '" + s + "'");
}

inline OutcomeClass class_of(int L, int X) {
  if (X == 0 || X == L) return OutcomeClass::B;
  if (2 * X == L) return OutcomeClass::A;
  return OutcomeClass::UA;
}

/// Camera splits X belonging to a mirror-summed class.
inline std::vector<int> class_members(int L, OutcomeClass c) {
  std::vector<int> out;
  for (int X = 0; X <= L; ++X)
    if (class_of(L, X) == c) out.push_back(X);
  if (out.empty())
    throw std::invalid_argument("class " + to_string(c) + " does not exist for L=" + std::to_string(L));
  return out;
}

/// Sign table (relative to slot 1) and indistinguishability factor of the 3- and 4-photon forms.
struct ClassFactors {
  std::vector<int> lambda;
  double f;
};

inline ClassFactors class_factors(int L, OutcomeClass c) {
  if (L == 2) {
    if (c == OutcomeClass::B) return {{+1}, 1.0};
    if (c == OutcomeClass::A) return {{-1}, 1.0};
  }
  if (L == 3) {
    if (c == OutcomeClass::B) return {{+1, +1}, 1.0 / 6.0};
    if (c == OutcomeClass::UA) return {{+1, -1}, 1.0 / 2.0};
  }
  if (L == 4) {
    if (c == OutcomeClass::B) return {{+1, +1, +1}, 1.0 / 24.0};
    if (c == OutcomeClass::A) return {{+1, -1, -1}, 1.0 / 8.0};
    if (c == OutcomeClass::UA) return {{-1, -1, -1}, 1.0 / 6.0};
  }
  throw std::invalid_argument("no factor table for L=" + std::to_string(L) + " class " + to_string(c));
}

/// Sign of the two-photon beating term: +1 bunched, -1 antibunched.
inline int alpha_sign(OutcomeClass c) {
  if (c == OutcomeClass::B) return +1;
  if (c == OutcomeClass::A) return -1;
  throw std::invalid_argument("alpha is defined for L=2 classes B and A only");
}

namespace detail {

inline double envelope_product(std::span<const double> k, const PsfModel& psf) {
  double p = 1.0;
  for (double km : k) p *= psf.momentum_envelope(km);
  return p;
}

inline double log_envelope_product(std::span<const double> k, const PsfModel& psf) {
  const double v = psf.sigma_k() * psf.sigma_k();
  double acc = 0.0;
  for (double km : k) acc += -km * km / (2.0 * v);
  return acc - 0.5 * double(k.size()) * std::log(2.0 * std::numbers::pi * v);
}

/// Per-j weight p0 N^{L-1} / (2 D+^{L-1-j} D-^j), without the combinatorial factor.
template <class S>
void mode_coefficients(int L, double N, const S& delta, S* coef) {
  const S dp = 1.0 + N * (1.0 + delta);
  const S dm = 1.0 + N * (1.0 - delta);
  const double nl = std::pow(N, L - 1);
  for (int j = 0; j < L; ++j) coef[j] = nl / (2.0 * ipow(dp, L - j) * ipow(dm, j + 1));
}

inline double theta(int L, int X, int j) {
  return factorial(L - 1 - j) * factorial(j) / (factorial(X) * factorial(L - X));
}

template <class S>
void half_angle(std::span<const double> k, const S& s, S* c, S* t) {
  using std::cos, std::sin;
  for (std::size_t m = 0; m < k.size(); ++m) {
    const S arg = s * (0.5 * k[m]);
    c[m] = cos(arg);
    t[m] = sin(arg);
  }
}

}  // namespace detail

/// Leave-one-out subset sums q[i][J] = e_J(all momenta but i), computed in O(L^2).
template <class S>
struct LeaveOneOut {
  int L = 0;
  std::array<std::array<S, kMaxPhotons>, kMaxPhotons> q{};

  LeaveOneOut(std::span<const double> k, const S& s) : L(int(k.size())) {
    if (L < 1 || L > kMaxPhotons) throw std::domain_error("photon count out of range");
    std::array<S, kMaxPhotons> c{}, t{};
    std::array<S, kMaxPhotons + 1> full{};
    detail::half_angle(k, s, c.data(), t.data());
    elementary_symmetric(c.data(), t.data(), L, full.data());
    for (int i = 0; i < L; ++i) divide_linear_factor(full.data(), L, c[i], t[i], q[i].data());
  }
};

/// Interference bracket (density divided by the envelope product) for arbitrary camera flags.
template <class S>
S interference_bracket(std::span<const double> k, std::span<const int> assignment, const S& s,
                       double N, const PsfModel& psf) {
  const int L = int(k.size());
  if (L < 1) throw std::domain_error("coincidence density requires L >= 1");
  if (int(assignment.size()) != L) throw std::invalid_argument("assignment length must equal L");
  const int X = std::accumulate(assignment.begin(), assignment.end(), 0);
  const S delta = psf.delta(s);
  std::array<S, kMaxPhotons> coef{};
  detail::mode_coefficients(L, N, delta, coef.data());
  LeaveOneOut<S> loo(k, s);
  S total(0.0);
  for (int j = 0; j < L; ++j) {
    S amp(0.0);
    for (int i = 0; i < L; ++i) amp += double(interference_sign(assignment[i])) * loo.q[i][j];
    total += detail::theta(L, X, j) * coef[j] * amp * amp;
  }
  return total;
}

/// Brackets of the canonical assignments (first X photons in C1) for every X = 0..L at once.
template <class S>
void canonical_brackets(std::span<const double> k, const S& s, double N, const PsfModel& psf, S* out,
                        const S* delta_override = nullptr) {
  const int L = int(k.size());
  if (L < 1) throw std::domain_error("coincidence density requires L >= 1");
  const S delta = delta_override ? *delta_override : psf.delta(s);
  std::array<S, kMaxPhotons> coef{};
  detail::mode_coefficients(L, N, delta, coef.data());
  LeaveOneOut<S> loo(k, s);
  std::array<S, kMaxPhotons> tot{}, cum{};
  for (int j = 0; j < L; ++j) {
    tot[j] = S(0.0);
    for (int i = 0; i < L; ++i) tot[j] += loo.q[i][j];
    cum[j] = S(0.0);
  }
  for (int X = 0; X <= L; ++X) {
    if (X > 0)
      for (int j = 0; j < L; ++j) cum[j] += loo.q[X - 1][j];
    S acc(0.0);
    for (int j = 0; j < L; ++j) {
      const S amp = tot[j] - 2.0 * cum[j];
      acc += detail::theta(L, X, j) * coef[j] * amp * amp;
    }
    out[X] = acc;
  }
}

/// Density over ordered momentum tuples (physical units) for the given camera flags.
inline double coincidence_density(std::span<const double> k, std::span<const int> assignment,
                                  const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  return detail::envelope_product(k, psf) *
         interference_bracket(k, assignment, scene.separation, scene.brightness, psf);
}

inline std::vector<double> physical_momenta(const DetectionOutcome& o, const PsfModel& psf) {
  std::vector<double> k(o.momenta);
  for (double& v : k) v *= psf.sigma_k();
  return k;
}

/// Density of an outcome with respect to physical momenta.
inline double coincidence_density(const DetectionOutcome& o, const SourceScene& scene, const PsfModel& psf) {
  o.validate();
  const auto k = physical_momenta(o, psf);
  return coincidence_density(k, o.assignment, scene, psf);
}

inline double log_coincidence_density(const DetectionOutcome& o, const SourceScene& scene,
                                      const PsfModel& psf) {
  o.validate();
  scene.validate();
  const auto k = physical_momenta(o, psf);
  const double b = interference_bracket(std::span<const double>(k), o.assignment, scene.separation,
                                        scene.brightness, psf);
  return detail::log_envelope_product(k, psf) + std::log(b);
}

namespace detail {

/// 1 + alpha cos(theta) as 2 cos^2 or 2 sin^2 of the half angle.
template <class S>
S one_plus_alpha_cos(double alpha, const S& theta) {
  using std::sin, std::cos;
  const S h = 0.5 * theta;
  return alpha > 0 ? 2.0 * cos(h) * cos(h) : 2.0 * sin(h) * sin(h);
}

}  // namespace detail

/// Mirror-summed two-photon class density in (kbar, dk) coordinates.
inline double two_photon_density(const TwoPhotonCoordinates& xy, OutcomeClass c, const SourceScene& scene,
                                 const PsfModel& psf) {
  scene.validate();
  const double a = alpha_sign(c);
  const double N = scene.brightness, s = scene.separation;
  const auto w = mode_weights(scene, psf);
  return N * w.p0 * w.p0 * psf.mean_momentum_envelope(xy.k_bar) * psf.difference_envelope(xy.delta_k) *
         (1.0 + N - a * N * w.delta * std::cos(xy.k_bar * s)) * detail::one_plus_alpha_cos(a, 0.5 * xy.delta_k * s);
}

/// Visibility of the kbar beating, N delta/(1+N).
inline double kbar_visibility(const SourceScene& scene, const PsfModel& psf) {
  const double d = psf_overlap_delta(psf, scene.separation);
  return scene.brightness * d / (1.0 + scene.brightness);
}

namespace detail {

inline double xi3(int j, double c1, double t1, double c2, double t2) {
  switch (j) {
    case 0: return c1 * c2;
    case 1: return c1 * t2 + t1 * c2;
    default: return t1 * t2;
  }
}

inline double xi4(int j, const double* c, const double* t, int a, int b, int d) {
  switch (j) {
    case 0: return c[a] * c[b] * c[d];
    case 1: return t[a] * c[b] * c[d] + c[a] * t[b] * c[d] + c[a] * c[b] * t[d];
    case 2: return c[a] * t[b] * t[d] + t[a] * c[b] * t[d] + t[a] * t[b] * c[d];
    default: return t[a] * t[b] * t[d];
  }
}

}  // namespace detail

/// Mirror-summed three-photon class density.
inline double three_photon_density(double k1, double k2, double k3, OutcomeClass cls, const SourceScene& scene,
                                   const PsfModel& psf) {
  scene.validate();
  const auto f = class_factors(3, cls);
  const auto w = mode_weights(scene, psf);
  const double N = scene.brightness, s = scene.separation;
  const double dp = 1.0 + w.m_plus, dm = 1.0 + w.m_minus;
  const double big_xi[3] = {2.0 * w.p0 * N * N / (dp * dp), w.p0 * w.p0 * N * N, 2.0 * w.p0 * N * N / (dm * dm)};
  const double k[3] = {k1, k2, k3};
  double c[3], t[3];
  for (int m = 0; m < 3; ++m) {
    c[m] = std::cos(0.5 * k[m] * s);
    t[m] = std::sin(0.5 * k[m] * s);
  }
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double amp = detail::xi3(j, c[1], t[1], c[2], t[2]) + f.lambda[0] * detail::xi3(j, c[0], t[0], c[2], t[2]) +
                       f.lambda[1] * detail::xi3(j, c[0], t[0], c[1], t[1]);
    sum += big_xi[j] * amp * amp;
  }
  return f.f * psf.momentum_envelope(k1) * psf.momentum_envelope(k2) * psf.momentum_envelope(k3) * sum;
}

/// Four-photon class density; B and UA are mirror-summed, A is the single balanced split.
inline double four_photon_density(const std::array<double, 4>& k, OutcomeClass cls, const SourceScene& scene,
                                  const PsfModel& psf) {
  scene.validate();
  const auto f = class_factors(4, cls);
  const auto w = mode_weights(scene, psf);
  const double N = scene.brightness, s = scene.separation;
  const double dp = 1.0 + w.m_plus, dm = 1.0 + w.m_minus;
  const double n3 = N * N * N;
  const double big_xi[4] = {6.0 * w.p0 * n3 / (dp * dp * dp), 2.0 * w.p0 * w.p0 * n3 / dp,
                            2.0 * w.p0 * w.p0 * n3 / dm, 6.0 * w.p0 * n3 / (dm * dm * dm)};
  double c[4], t[4];
  for (int m = 0; m < 4; ++m) {
    c[m] = std::cos(0.5 * k[m] * s);
    t[m] = std::sin(0.5 * k[m] * s);
  }
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double amp = detail::xi4(j, c, t, 1, 2, 3) + f.lambda[0] * detail::xi4(j, c, t, 0, 2, 3) +
                       f.lambda[1] * detail::xi4(j, c, t, 0, 1, 3) + f.lambda[2] * detail::xi4(j, c, t, 0, 1, 2);
    sum += big_xi[j] * amp * amp;
  }
  double env = 1.0;
  for (double km : k) env *= psf.momentum_envelope(km);
  return f.f * env * sum;
}

/// Camera flags of the class representative. For L <= 4 they follow the sign table (slot 1 in C1,
/// slot i+1 in C1 iff lambda_i = +1); otherwise the first min(X) photons sit in C1.
inline std::vector<int> class_assignment(int L, OutcomeClass cls) {
  std::vector<int> Q(L, 0);
  if (L >= 2 && L <= 4) {
    const auto f = class_factors(L, cls);
    Q[0] = 1;
    for (int i = 1; i < L; ++i) Q[i] = f.lambda[i - 1] > 0 ? 1 : 0;
    return Q;
  }
  const int X = class_members(L, cls).front();
  for (int i = 0; i < X; ++i) Q[i] = 1;
  return Q;
}

/// Mirror-summed class density from the general evaluator; the flipped assignment has the same
/// density pointwise, so unbalanced classes carry a factor 2.
inline double class_density(std::span<const double> k, OutcomeClass cls, const SourceScene& scene,
                            const PsfModel& psf) {
  const int L = int(k.size());
  const auto Q = class_assignment(L, cls);
  const int X = std::accumulate(Q.begin(), Q.end(), 0);
  const double mult = (2 * X == L) ? 1.0 : 2.0;
  return mult * coincidence_density(k, Q, scene, psf);
}

/// Leading small-s term of the balanced density with P photons per camera.
inline double subrayleigh_leading_density(int P, std::span<const double> k, const SourceScene& scene,
                                          const PsfModel& psf) {
  scene.validate();
  if (P < 1 || int(k.size()) != 2 * P) throw std::invalid_argument("subrayleigh_leading_density: need 2P momenta");
  const double N = scene.brightness, s = scene.separation;
  const double x = N / (1.0 + 2.0 * N);
  double diff = 0.0;
  for (int m = 0; m < 2 * P; ++m) diff += (m < P) ? k[m] : -k[m];
  const double pref = factorial(2 * P - 2) / (factorial(P) * factorial(P)) * 0.5 * std::pow(x, 2 * P - 1);
  return pref * detail::envelope_product(k, psf) * diff * diff * s * s / 4.0;
}

/// Large-separation form: the general density with the overlap set to zero.
inline double asymptotic_density(std::span<const double> k, std::span<const int> assignment,
                                 const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  const int L = int(k.size());
  std::array<double, kMaxPhotons + 1> b{};
  std::vector<int> flags(assignment.begin(), assignment.end());
  // Reorder so the C1 photons come first; the density is symmetric within each camera.
  std::vector<double> kk;
  for (int i = 0; i < L; ++i)
    if (flags[i]) kk.push_back(k[i]);
  const int X = int(kk.size());
  for (int i = 0; i < L; ++i)
    if (!flags[i]) kk.push_back(k[i]);
  const double zero = 0.0;
  canonical_brackets(std::span<const double>(kk), scene.separation, scene.brightness, psf, b.data(), &zero);
  return detail::envelope_product(k, psf) * b[X];
}

/// Probability that a frame holds exactly L photons (reference included).
template <class S>
S frame_probability_at(int L, const S& s, double N, const PsfModel& psf) {
  if (L < 1) throw std::domain_error("frame_probability: L must be >= 1");
  const auto w = mode_weights_at(N, psf.delta(s));
  S acc(0.0);
  for (int J = 0; J < L; ++J) acc += ipow(w.r_plus, L - 1 - J) * ipow(w.r_minus, J);
  return w.p0 * acc;
}

inline double frame_probability(int L, const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  return frame_probability_at(L, scene.separation, scene.brightness, psf);
}

/// Momentum-integrated probability of camera split X at photon number L.
template <class S>
S split_probability_at(int L, int X, const S& s, double N, const PsfModel& psf) {
  using std::exp;
  if (L < 1 || L > kMaxPhotons) throw std::domain_error("split_probability: L out of range");
  if (X < 0 || X > L) throw std::domain_error("split_probability: X out of range");
  const S delta = psf.delta(s);
  const S a = 0.5 * (1.0 - delta);
  const S b = 0.5 * (1.0 + delta);
  const double v = psf.sigma_k() * psf.sigma_k();
  const S kappa = exp(-(s * s) * (0.25 * v));
  std::array<S, kMaxPhotons> coef{};
  detail::mode_coefficients(L, N, delta, coef.data());
  const double sum_sign = double(L - 2 * X);
  S acc(0.0);
  for (int J = 0; J < L; ++J) {
    S term = double(L) * binomial(L - 1, J) * ipow(a, J) * ipow(b, L - 1 - J);
    if (L >= 2 && J <= L - 2)
      term += (sum_sign * sum_sign - double(L)) * binomial(L - 2, J) * kappa * ipow(a, J) * ipow(b, L - 2 - J);
    acc += detail::theta(L, X, J) * coef[J] * term;
  }
  return acc;
}

inline double split_probability(int L, int X, const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  return split_probability_at(L, X, scene.separation, scene.brightness, psf);
}

inline double class_probability(int L, OutcomeClass cls, const SourceScene& scene, const PsfModel& psf) {
  double acc = 0.0;
  for (int X : class_members(L, cls)) acc += split_probability(L, X, scene, psf);
  return acc;
}

/// Leading-order momentum-integrated balanced probability for 2P photons.
inline double bucket_probability(int P, const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  if (P < 1) throw std::invalid_argument("bucket_probability: P must be >= 1");
  const double x = scene.brightness / (1.0 + 2.0 * scene.brightness);
  const double s = scene.separation, sk = psf.sigma_k();
  return binomial(2 * P, P) / (2.0 * (2 * P - 1)) * std::pow(x, 2 * P - 1) * s * s * sk * sk / 4.0;
}

struct ConditionalDecomposition {
  double probability;  ///< P(X) for the class
  double f;            ///< conditional density of kbar
  double g;            ///< conditional density of dk
  double kappa1;
  double kappa2;
};

/// Two-photon class density factored as P(X) f(kbar;X) g(dk;X).
inline ConditionalDecomposition conditional_decomposition(const TwoPhotonCoordinates& xy, OutcomeClass c,
                                                          const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  const double a = alpha_sign(c);
  const double N = scene.brightness, s = scene.separation;
  const auto w = mode_weights(scene, psf);
  const double v = psf.sigma_k() * psf.sigma_k();
  ConditionalDecomposition r{};
  r.kappa1 = std::exp(-s * s * v / 4.0);
  r.kappa2 = r.kappa1;
  const double fnorm = 1.0 + N - a * N * w.delta * r.kappa1;
  const double gnorm = 1.0 + a * r.kappa2;
  r.probability = N * w.p0 * w.p0 * fnorm * gnorm;
  r.f = psf.mean_momentum_envelope(xy.k_bar) * (1.0 + N - a * N * w.delta * std::cos(xy.k_bar * s)) / fnorm;
  r.g = gnorm > 0.0 ? psf.difference_envelope(xy.delta_k) * detail::one_plus_alpha_cos(a, 0.5 * xy.delta_k * s) / gnorm : 0.0;
  return r;
}

}  // namespace mphom

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mphom/dual.hpp"

namespace mphom {

/// Gaussian point-spread function. sigma_x is the standard deviation of |psi(x)|^2
/// and sigma_k = 1/(2 sigma_x) that of |phi(k)|^2.
class PsfModel {
 public:
  explicit PsfModel(double sigma_x = 1.0) : sigma_x_(sigma_x) {
    if (!(sigma_x > 0.0) || !std::isfinite(sigma_x))
      throw std::invalid_argument("PsfModel: sigma_x must be positive and finite");
  }

  double sigma_x() const { return sigma_x_; }
  double sigma_k() const { return 0.5 / sigma_x_; }

  /// Real position-space amplitude psi(x) centred at 0.
  double psi(double x) const {
    const double v = sigma_x_ * sigma_x_;
    return std::pow(2.0 * std::numbers::pi * v, -0.25) * std::exp(-x * x / (4.0 * v));
  }

  /// |psi(x)|^2, a normal density with variance sigma_x^2.
  double intensity(double x) const {
    const double v = sigma_x_ * sigma_x_;
    return std::exp(-x * x / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
  }

  /// Single-photon momentum density |phi(k)|^2.
  double momentum_envelope(double k) const {
    const double v = sigma_k() * sigma_k();
    return std::exp(-k * k / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
  }

  /// Density of the mean momentum (k1+k2)/2 of two independent photons.
  double mean_momentum_envelope(double kbar) const {
    const double v = sigma_k() * sigma_k();
    return std::exp(-kbar * kbar / v) / std::sqrt(std::numbers::pi * v);
  }

  /// Density C(dk) of the momentum difference k1-k2 of two independent photons.
  double difference_envelope(double dk) const {
    const double v = sigma_k() * sigma_k();
    return std::exp(-dk * dk / (4.0 * v)) / std::sqrt(4.0 * std::numbers::pi * v);
  }

  /// Overlap <psi(x-s/2)|psi(x+s/2)>; valid for any real or dual s.
  template <class S>
  S delta(const S& s) const {
    using std::exp;
    const double v = sigma_k() * sigma_k();
    return exp(-(s * s) * (0.5 * v));
  }

 private:
  double sigma_x_;
};

/// Two equally bright thermal sources at +-s/2.
struct SourceScene {
  double separation = 0.0;
  double brightness = 1.0;
  static constexpr double centroid = 0.0;

  void validate() const {
    if (!(separation >= 0.0) || !std::isfinite(separation))
      throw std::domain_error("SourceScene: separation must be finite and >= 0");
    if (!(brightness > 0.0) || !std::isfinite(brightness))
      throw std::domain_error("SourceScene: brightness must be finite and > 0");
  }
};

inline double psf_overlap_delta(const PsfModel& psf, double s) {
  if (!(s >= 0.0)) throw std::domain_error("psf_overlap_delta: separation must be >= 0");
  return psf.delta(s);
}

/// Symmetric/antisymmetric thermal mode weights.
template <class S = double>
struct ModeWeights {
  S delta;
  S m_plus;
  S m_minus;
  S p0;
  S r_plus;
  S r_minus;

  /// Probability of m photons in the symmetric (+) or antisymmetric (-) mode.
  S p_plus(int m) const { return ipow(r_plus, m) / (m_plus + 1.0); }
  S p_minus(int m) const { return ipow(r_minus, m) / (m_minus + 1.0); }
};

template <class S>
ModeWeights<S> mode_weights_at(double brightness, const S& delta) {
  ModeWeights<S> w;
  w.delta = delta;
  w.m_plus = brightness * (1.0 + delta);
  w.m_minus = brightness * (1.0 - delta);
  w.p0 = 1.0 / ((w.m_plus + 1.0) * (w.m_minus + 1.0));
  w.r_plus = w.m_plus / (w.m_plus + 1.0);
  w.r_minus = w.m_minus / (w.m_minus + 1.0);
  return w;
}

inline ModeWeights<double> mode_weights(const SourceScene& scene, const PsfModel& psf) {
  scene.validate();
  return mode_weights_at(scene.brightness, psf.delta(scene.separation));
}

struct DetectorGeometry {
  double distance;     ///< far-field distance d
  double wavenumber;   ///< longitudinal wavenumber K0
  double pixel_pitch;  ///< pixel size delta_y

  void validate() const {
    if (!(distance > 0.0) || !(wavenumber > 0.0) || !(pixel_pitch >= 0.0))
      throw std::invalid_argument("DetectorGeometry: fields must be positive");
  }
  double momentum_of(double y) const { return y * wavenumber / distance; }
  double position_of(double k) const { return k * distance / wavenumber; }
  double momentum_bin() const { return pixel_pitch * wavenumber / distance; }
};

struct PixelReport {
  double ratio = 0.0;
  bool pass = true;
  bool unconstrained = false;
  std::string verdict;
};

/// Ratio of the pixel pitch to the far-field fringe scale d/(K0 s).
inline PixelReport validate_pixel_geometry(const DetectorGeometry& geom, double s,
                                           double threshold = 0.1) {
  geom.validate();
  if (s < 0.0) throw std::domain_error("validate_pixel_geometry: separation must be >= 0");
  PixelReport r;
  if (s == 0.0) {
    r.unconstrained = true;
    r.verdict = "unconstrained";
    return r;
  }
  r.ratio = geom.pixel_pitch * geom.wavenumber * s / geom.distance;
  r.pass = r.ratio <= threshold;
  r.verdict = r.pass ? "pass" : "fail";
  return r;
}

}  // namespace mphom

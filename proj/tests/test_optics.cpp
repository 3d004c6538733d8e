#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "mphom/optics.hpp"

using namespace mphom;

namespace {

double overlap_by_quadrature(const PsfModel& psf, double s) {
  boost::math::quadrature::sinh_sinh<double> integrator;
  return integrator.integrate([&](double x) { return psf.psi(x - 0.5 * s) * psf.psi(x + 0.5 * s); });
}

// |phi(k)|^2 from the Fourier transform of psi; psi is even so only the cosine part survives.
double fourier_envelope(const PsfModel& psf, double k) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double half = integrator.integrate([&](double x) { return psf.psi(x) * std::cos(k * x); });
  const double phi = 2.0 * half / std::sqrt(2.0 * std::numbers::pi);
  return phi * phi;
}

}  // namespace

TEST(Psf, SigmaProductIsOneHalf) {
  for (double sx : {0.1, 1.0, 3.7}) {
    PsfModel psf(sx);
    EXPECT_DOUBLE_EQ(psf.sigma_x() * psf.sigma_k(), 0.5);
  }
  EXPECT_THROW(PsfModel(0.0), std::invalid_argument);
  EXPECT_THROW(PsfModel(-1.0), std::invalid_argument);
}

TEST(Psf, OverlapTrivialLimits) {
  PsfModel psf(1.0);
  EXPECT_DOUBLE_EQ(psf_overlap_delta(psf, 0.0), 1.0);
  EXPECT_LT(psf_overlap_delta(psf, 80.0), 1e-300);
  EXPECT_THROW(psf_overlap_delta(psf, -0.1), std::domain_error);
}

TEST(Psf, OverlapMatchesQuadratureAcrossRange) {
  for (double sx : {0.5, 1.0, 2.0}) {
    PsfModel psf(sx);
    double prev = 2.0;
    for (double u = 0.0; u <= 30.0; u += 0.25) {
      const double s = u * sx;
      const double closed = psf_overlap_delta(psf, s);
      EXPECT_NEAR(closed, overlap_by_quadrature(psf, s), 1e-12) << "s=" << s;
      EXPECT_NEAR(closed, std::exp(-s * s * psf.sigma_k() * psf.sigma_k() / 2.0), 1e-15);
      EXPECT_LE(closed, prev);
      prev = closed;
    }
  }
}

TEST(Psf, OverlapAtTwoSigma) {
  // |psi|^2 has variance sigma_x^2, so the amplitude overlap at s = 2 sigma_x is exp(-1/2).
  PsfModel psf(1.0);
  EXPECT_NEAR(psf_overlap_delta(psf, 2.0), 0.6065306597126334, 1e-15);
  EXPECT_NEAR(overlap_by_quadrature(psf, 2.0), 0.6065306597126334, 1e-12);
}

TEST(Psf, EnvelopeIsFourierTransformOfPsi) {
  for (double sx : {0.7, 1.0}) {
    PsfModel psf(sx);
    for (double k : {0.0, 0.1, 0.4, 1.0, 1.7}) EXPECT_NEAR(psf.momentum_envelope(k), fourier_envelope(psf, k), 1e-10);
  }
}

TEST(Psf, EnvelopeNormalizedAndEven) {
  PsfModel psf(1.0);
  boost::math::quadrature::sinh_sinh<double> integrator;
  EXPECT_NEAR(integrator.integrate([&](double k) { return psf.momentum_envelope(k); }), 1.0, 1e-13);
  EXPECT_NEAR(integrator.integrate([&](double k) { return psf.mean_momentum_envelope(k); }), 1.0, 1e-13);
  EXPECT_NEAR(integrator.integrate([&](double k) { return psf.difference_envelope(k); }), 1.0, 1e-13);
  EXPECT_DOUBLE_EQ(psf.momentum_envelope(0.5), psf.momentum_envelope(-0.5));
  const double var = integrator.integrate([&](double k) { return k * k * psf.momentum_envelope(k); });
  EXPECT_NEAR(var, 0.25, 1e-12);
}

TEST(Psf, MeanMomentumEnvelopePeak) {
  PsfModel psf(1.0);  // sigma_k = 0.5
  EXPECT_NEAR(psf.mean_momentum_envelope(0.0), 1.1283791670955126, 1e-15);
  EXPECT_NEAR(psf.momentum_envelope(0.0), 0.7978845608028654, 1e-15);
}

TEST(ModeWeights, DisjointSources) {
  SourceScene scene{80.0, 1.0};
  const auto w = mode_weights(scene, PsfModel(1.0));
  EXPECT_NEAR(w.p0, 0.25, 1e-15);
  EXPECT_NEAR(w.m_plus, 1.0, 1e-15);
  EXPECT_NEAR(w.m_minus, 1.0, 1e-15);
}

TEST(ModeWeights, CoincidentSources) {
  SourceScene scene{0.0, 1.0};
  const auto w = mode_weights(scene, PsfModel(1.0));
  EXPECT_NEAR(w.p0, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w.m_plus, 2.0, 1e-15);
  EXPECT_NEAR(w.m_minus, 0.0, 1e-15);
  EXPECT_NEAR(w.r_minus, 0.0, 1e-15);
}

TEST(ModeWeights, VacuumFactorization) {
  PsfModel psf(1.0);
  for (double N : {0.01, 0.5, 1.5, 10.0})
    for (double s : {0.0, 0.3, 1.0, 4.0, 30.0}) {
      const auto w = mode_weights(SourceScene{s, N}, psf);
      EXPECT_NEAR(w.p0 * (w.m_plus + 1.0) * (w.m_minus + 1.0), 1.0, 1e-14);
      EXPECT_NEAR(w.p0, 1.0 / ((1.0 + N) * (1.0 + N) - N * N * w.delta * w.delta), 1e-14);
      EXPECT_GE(w.r_plus, 0.0);
      EXPECT_LT(w.r_plus, 1.0);
      EXPECT_GE(w.r_minus, 0.0);
      EXPECT_LT(w.r_minus, 1.0);
      double sum = 0.0;
      for (int a = 0; a < 4000; ++a) sum += w.p_plus(a);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  EXPECT_THROW(mode_weights(SourceScene{1.0, 0.0}, psf), std::domain_error);
}

TEST(ModeWeights, PureFunction) {
  PsfModel psf(1.0);
  const auto a = mode_weights(SourceScene{0.37, 1.5}, psf);
  const auto b = mode_weights(SourceScene{0.37, 1.5}, psf);
  EXPECT_EQ(a.p0, b.p0);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(PixelGeometry, ZeroPitchPasses) {
  DetectorGeometry g{1.0, 2.0 * std::numbers::pi / 2.5e-6, 0.0};
  const auto r = validate_pixel_geometry(g, 1e-6);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(PixelGeometry, TableTopExampleArithmetic) {
  // d = 1 m, K0 = 2 pi / 2.5 um, s = 1 um, pitch 100 um.
  DetectorGeometry g{1.0, 2.0 * std::numbers::pi / 2.5e-6, 100e-6};
  const auto r = validate_pixel_geometry(g, 1e-6);
  EXPECT_NEAR(r.ratio, 2.0 * std::numbers::pi * 1e-4 / 2.5, 1e-15);
  EXPECT_NEAR(r.ratio, 2.5132741228718345e-4, 1e-16);
  EXPECT_TRUE(r.pass);
}

TEST(PixelGeometry, CoarsePitchFails) {
  const double d = 1.0, K0 = 2.0 * std::numbers::pi / 2.5e-6, s = 1e-6;
  DetectorGeometry g{d, K0, 10.0 * d / (K0 * s)};
  const auto r = validate_pixel_geometry(g, s);
  EXPECT_NEAR(r.ratio, 10.0, 1e-12);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.verdict, "fail");
}

TEST(PixelGeometry, ZeroSeparationUnconstrained) {
  DetectorGeometry g{1.0, 1.0, 1.0};
  const auto r = validate_pixel_geometry(g, 0.0);
  EXPECT_TRUE(r.unconstrained);
  EXPECT_EQ(r.verdict, "unconstrained");
  EXPECT_THROW(validate_pixel_geometry(g, -1.0), std::domain_error);
  EXPECT_THROW(validate_pixel_geometry(DetectorGeometry{0.0, 1.0, 1.0}, 1.0), std::invalid_argument);
}

TEST(PixelGeometry, MomentumMappingInvertible) {
  DetectorGeometry g{0.8, 3.0e6, 1e-4};
  for (double y : {-1e-3, 0.0, 2.5e-4}) EXPECT_NEAR(g.position_of(g.momentum_of(y)), y, 1e-18);
}

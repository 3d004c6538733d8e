#include <gtest/gtest.h>

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "mphom/coincidence.hpp"
#include "mphom/quadrature.hpp"
#include "oracles/brute_force.hpp"

using namespace mphom;

namespace {

const PsfModel kPsf(1.0);

std::vector<int> random_assignment(std::mt19937_64& eng, int L) {
  std::vector<int> Q(L);
  std::bernoulli_distribution coin(0.5);
  for (auto& q : Q) q = coin(eng) ? 1 : 0;
  return Q;
}

std::vector<double> random_momenta(std::mt19937_64& eng, int L, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale * kPsf.sigma_k());
  std::vector<double> k(L);
  for (auto& v : k) v = nd(eng);
  return k;
}

// Sum over X of the canonical densities integrated with a tensor Gauss-Hermite rule.
std::vector<double> split_integrals_gh(int L, double s, double N, int nodes) {
  const double sk = kPsf.sigma_k();
  return tensor_gauss_hermite(L, nodes, std::size_t(L + 1), [&](std::span<const double> z, std::span<double> out) {
    std::vector<double> k(z.begin(), z.end());
    for (auto& v : k) v *= sk;
    canonical_brackets(std::span<const double>(k), s, N, kPsf, out.data());
  });
}

}  // namespace

TEST(Coincidence, SinglePhotonIsVacuumWeight) {
  const SourceScene scene{1.3, 1.5};
  const auto w = mode_weights(scene, kPsf);
  for (double k : {-0.7, 0.0, 0.4}) {
    const std::vector<double> kk{k};
    for (int X : {0, 1}) {
      const std::vector<int> Q{X};
      EXPECT_NEAR(coincidence_density(kk, Q, scene, kPsf), 0.5 * w.p0 * kPsf.momentum_envelope(k), 1e-16);
    }
  }
  EXPECT_NEAR(split_probability(1, 0, scene, kPsf) + split_probability(1, 1, scene, kPsf), w.p0, 1e-15);
}

TEST(Coincidence, EmptyFrameRejected) {
  const std::vector<double> k;
  const std::vector<int> Q;
  EXPECT_THROW(coincidence_density(k, Q, SourceScene{1.0, 1.0}, kPsf), std::domain_error);
  EXPECT_THROW(DetectionOutcome::canonical(0, {}), std::domain_error);
}

TEST(Coincidence, HongOuMandelDip) {
  for (double s : {0.01, 0.5, 3.0, 17.0})
    for (double k : {-0.3, 0.0, 0.8}) {
      const std::vector<double> kk{k, k};
      const std::vector<int> Q{1, 0};
      EXPECT_NEAR(coincidence_density(kk, Q, SourceScene{s, 1.5}, kPsf), 0.0, 1e-17);
    }
}

TEST(Coincidence, MatchesBruteForceOracle) {
  std::mt19937_64 eng(2024);
  for (int L = 1; L <= 7; ++L)
    for (int rep = 0; rep < 40; ++rep) {
      const auto k = random_momenta(eng, L, 2.0);
      const auto Q = random_assignment(eng, L);
      const double s = std::uniform_real_distribution<double>(0.0, 8.0)(eng);
      const double N = std::uniform_real_distribution<double>(0.05, 3.0)(eng);
      const double ref = oracle::density(k, Q, s, N, kPsf);
      const double got = coincidence_density(k, Q, SourceScene{s, N}, kPsf);
      EXPECT_NEAR(got, ref, 1e-12 * std::abs(ref) + 1e-300) << "L=" << L;
    }
}

TEST(Coincidence, CanonicalBracketsMatchAssignmentEvaluator) {
  std::mt19937_64 eng(5);
  for (int L = 1; L <= 12; ++L) {
    const auto k = random_momenta(eng, L, 1.5);
    std::vector<double> b(L + 1);
    canonical_brackets(std::span<const double>(k), 1.7, 1.5, kPsf, b.data());
    for (int X = 0; X <= L; ++X) {
      std::vector<int> Q(L, 0);
      for (int i = 0; i < X; ++i) Q[i] = 1;
      const double ref = interference_bracket(std::span<const double>(k), std::span<const int>(Q), 1.7, 1.5, kPsf);
      EXPECT_NEAR(b[X], ref, 1e-12 * std::abs(ref) + 1e-300);
    }
  }
}

TEST(Coincidence, MirrorAndPermutationSymmetry) {
  std::mt19937_64 eng(9);
  for (int L = 2; L <= 8; ++L)
    for (int rep = 0; rep < 10; ++rep) {
      auto k = random_momenta(eng, L);
      auto Q = random_assignment(eng, L);
      const SourceScene scene{2.1, 0.8};
      const double p = coincidence_density(k, Q, scene, kPsf);
      std::vector<int> flipped(Q);
      for (auto& q : flipped) q = 1 - q;
      EXPECT_NEAR(coincidence_density(k, flipped, scene, kPsf), p, 1e-13 * p + 1e-300);
      // Swap two photons in the same camera.
      for (int a = 0; a < L; ++a)
        for (int b = a + 1; b < L; ++b)
          if (Q[a] == Q[b]) {
            auto k2 = k;
            std::swap(k2[a], k2[b]);
            EXPECT_NEAR(coincidence_density(k2, Q, scene, kPsf), p, 1e-13 * p + 1e-300);
          }
      // Move a photon together with its camera flag.
      auto k3 = k;
      auto Q3 = Q;
      std::rotate(k3.begin(), k3.begin() + 1, k3.end());
      std::rotate(Q3.begin(), Q3.begin() + 1, Q3.end());
      EXPECT_NEAR(coincidence_density(k3, Q3, scene, kPsf), p, 1e-13 * p + 1e-300);
    }
}

TEST(Coincidence, NonNegative) {
  std::mt19937_64 eng(13);
  for (int rep = 0; rep < 500; ++rep) {
    const int L = 1 + int(eng() % 10);
    const auto k = random_momenta(eng, L, 3.0);
    const auto Q = random_assignment(eng, L);
    EXPECT_GE(coincidence_density(k, Q, SourceScene{double(eng() % 100) / 7.0, 1.0}, kPsf), 0.0);
  }
}

TEST(Coincidence, TwoPhotonFormAgrees) {
  for (double s : {0.1, 1.0, 5.0, 20.0})
    for (double N : {0.1, 1.5})
      for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) {
          const double k1 = 0.37 * a, k2 = 0.29 * b;
          const std::vector<double> k{k1, k2};
          const SourceScene scene{s, N};
          const auto xy = TwoPhotonCoordinates::from_momenta(k1, k2);
          const double pb = class_density(k, OutcomeClass::B, scene, kPsf);
          const double pa = class_density(k, OutcomeClass::A, scene, kPsf);
          EXPECT_NEAR(two_photon_density(xy, OutcomeClass::B, scene, kPsf), pb, 1e-12 * pb + 1e-300);
          EXPECT_NEAR(two_photon_density(xy, OutcomeClass::A, scene, kPsf), pa, 1e-12 * pb + 1e-300);
        }
}

TEST(Coincidence, TwoPhotonPeriodsAndVisibility) {
  const double s = 20.0;
  const SourceScene scene{s, 1.5};
  const double dk0 = 0.13;
  const double pa = two_photon_density({0.05, dk0}, OutcomeClass::B, scene, kPsf) / kPsf.difference_envelope(dk0);
  const double pb = two_photon_density({0.05, dk0 + 4 * std::numbers::pi / s}, OutcomeClass::B, scene, kPsf) /
                    kPsf.difference_envelope(dk0 + 4 * std::numbers::pi / s);
  EXPECT_NEAR(pa, pb, 1e-12 * pa);
  EXPECT_NEAR(two_photon_density({0.1, 2 * std::numbers::pi / s}, OutcomeClass::B, scene, kPsf), 0.0, 1e-18);
  EXPECT_EQ(two_photon_density({0.2, 0.0}, OutcomeClass::A, scene, kPsf), 0.0);
  const SourceScene near{1.0, 1.5};
  const double kb = 0.07;
  const double f1 = two_photon_density({kb, 0.3}, OutcomeClass::A, near, kPsf) / kPsf.mean_momentum_envelope(kb);
  const double kb2 = kb + 2 * std::numbers::pi / near.separation;
  const double f2 = two_photon_density({kb2, 0.3}, OutcomeClass::A, near, kPsf) / kPsf.mean_momentum_envelope(kb2);
  EXPECT_NEAR(f1, f2, 1e-12 * f1);
  const double d = psf_overlap_delta(kPsf, 1.0);
  EXPECT_NEAR(kbar_visibility(near, kPsf), 1.5 * d / 2.5, 1e-15);
}

TEST(Coincidence, ThreePhotonFormAgrees) {
  std::mt19937_64 eng(31);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto k = random_momenta(eng, 3, 2.0);
    const SourceScene scene{std::uniform_real_distribution<double>(0.0, 10.0)(eng), 1.5};
    for (auto c : {OutcomeClass::B, OutcomeClass::UA}) {
      const double ref = class_density(k, c, scene, kPsf);
      EXPECT_NEAR(three_photon_density(k[0], k[1], k[2], c, scene, kPsf), ref, 1e-12 * ref + 1e-300);
    }
  }
}

TEST(Coincidence, FourPhotonFormAgrees) {
  std::mt19937_64 eng(37);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto k = random_momenta(eng, 4, 2.0);
    const SourceScene scene{std::uniform_real_distribution<double>(0.0, 10.0)(eng), 1.5};
    for (auto c : {OutcomeClass::B, OutcomeClass::UA, OutcomeClass::A}) {
      const double ref = class_density(k, c, scene, kPsf);
      EXPECT_NEAR(four_photon_density({k[0], k[1], k[2], k[3]}, c, scene, kPsf), ref, 1e-12 * ref + 1e-300);
    }
  }
}

TEST(ExtendedHom, OnlyBalancedSplitsVanish) {
  const std::vector<double> k{0.31, -0.52, 0.77, 0.12, -0.4, 0.9};
  for (int L = 1; L <= 6; ++L) {
    std::span<const double> kk(k.data(), L);
    std::vector<double> b(L + 1);
    canonical_brackets(kk, 0.0, 1.5, kPsf, b.data());
    for (int X = 0; X <= L; ++X) {
      if (2 * X == L)
        EXPECT_EQ(b[X], 0.0) << "L=" << L << " X=" << X;
      else
        EXPECT_GT(b[X], 1e-3) << "L=" << L << " X=" << X;
    }
  }
  // Four photons: the balanced class A is the one that vanishes, B and UA do not.
  const std::array<double, 4> k4{0.31, -0.52, 0.77, 0.12};
  const SourceScene zero{0.0, 1.5};
  EXPECT_EQ(four_photon_density(k4, OutcomeClass::A, zero, kPsf), 0.0);
  EXPECT_GT(four_photon_density(k4, OutcomeClass::B, zero, kPsf), 0.0);
  EXPECT_GT(four_photon_density(k4, OutcomeClass::UA, zero, kPsf), 0.0);
  EXPECT_GT(three_photon_density(0.3, -0.2, 0.5, OutcomeClass::UA, zero, kPsf), 0.0);
  EXPECT_GT(three_photon_density(0.3, -0.2, 0.5, OutcomeClass::B, zero, kPsf), 0.0);
}

TEST(ExtendedHom, QuadraticOnset) {
  const std::vector<double> k{0.31, -0.52, 0.77, 0.12};
  const std::vector<int> Q{1, 1, 0, 0};
  const double p1 = coincidence_density(k, Q, SourceScene{1e-3, 1.5}, kPsf);
  const double p2 = coincidence_density(k, Q, SourceScene{1e-2, 1.5}, kPsf);
  EXPECT_NEAR(std::log(p2 / p1) / std::log(10.0), 2.0, 1e-3);
}

TEST(ExtendedHom, DerivativeIsLinearNearZero) {
  std::mt19937_64 eng(3);
  for (int L = 2; L <= 5; ++L) {
    const auto k = random_momenta(eng, L);
    for (int X = 0; X <= L; ++X) {
      std::vector<int> Q(L, 0);
      for (int i = 0; i < X; ++i) Q[i] = 1;
      auto deriv = [&](double s) {
        return interference_bracket(std::span<const double>(k), std::span<const int>(Q), Dual<double>(s, 1.0), 1.2, kPsf).d;
      };
      const double d1 = deriv(1e-4), d2 = deriv(2e-4);
      EXPECT_NEAR(d2 / d1, 2.0, 1e-3) << "L=" << L << " X=" << X;
    }
  }
}

TEST(Coincidence, LogDensityConsistent) {
  const auto o = DetectionOutcome::canonical(2, {0.3, -1.2, 0.8, 2.0, -0.1});
  const SourceScene scene{1.4, 1.5};
  EXPECT_NEAR(log_coincidence_density(o, scene, kPsf), std::log(coincidence_density(o, scene, kPsf)), 1e-12);
}

TEST(Normalization, SplitProbabilitiesMatchQuadrature) {
  for (double s : {0.1, 1.0, 3.0})
    for (double N : {0.3, 1.5})
      for (int L = 1; L <= 3; ++L) {
        const auto gh = split_integrals_gh(L, s, N, 48);
        double total = 0.0;
        for (int X = 0; X <= L; ++X) {
          const double exact = split_probability(L, X, SourceScene{s, N}, kPsf);
          EXPECT_NEAR(gh[X], exact, 1e-12) << "L=" << L << " X=" << X << " s=" << s;
          total += gh[X];
        }
        EXPECT_NEAR(total, frame_probability(L, SourceScene{s, N}, kPsf), 1e-12);
      }
}

TEST(Normalization, FourAndFivePhotonsByMonteCarlo) {
  for (int L : {4, 5}) {
    const double s = 1.0, N = 1.5, sk = kPsf.sigma_k();
    const auto est = monte_carlo_normal(L, 200000, 40, 99, std::size_t(L + 1),
                                        [&](std::span<const double> z, std::span<double> out) {
                                          std::vector<double> k(z.begin(), z.end());
                                          for (auto& v : k) v *= sk;
                                          canonical_brackets(std::span<const double>(k), s, N, kPsf, out.data());
                                        });
    for (int X = 0; X <= L; ++X) {
      const double exact = split_probability(L, X, SourceScene{s, N}, kPsf);
      EXPECT_NEAR(est.value[X], exact, 5.0 * est.error[X] + 1e-12) << "L=" << L << " X=" << X;
    }
  }
}

TEST(Normalization, FrameProbabilitiesSumToOne) {
  for (double N : {0.01, 0.5, 1.5})
    for (double s : {0.0, 0.1, 1.0, 20.0}) {
      const SourceScene scene{s, N};
      double total = 0.0;
      for (int L = 1; L <= kMaxPhotons; ++L) {
        double byX = 0.0;
        for (int X = 0; X <= L; ++X) byX += split_probability(L, X, scene, kPsf);
        const double fp = frame_probability(L, scene, kPsf);
        EXPECT_NEAR(byX, fp, 1e-13 * std::max(fp, 1e-300) + 1e-300) << "L=" << L;
        total += fp;
      }
      double tail = 0.0;
      for (int L = kMaxPhotons + 1; L <= 600; ++L) tail += frame_probability_at(L, s, N, kPsf);
      EXPECT_NEAR(total + tail, 1.0, 1e-13);
    }
}

TEST(SubRayleigh, LeadingTermRatio) {
  std::mt19937_64 eng(17);
  for (int P = 1; P <= 3; ++P)
    for (double N : {0.1, 1.0, 1.5}) {
      // Points where the leading factor nearly cancels are excluded: there the O(s^4) remainder dominates.
      std::vector<double> k;
      double diff = 0.0;
      do {
        k = random_momenta(eng, 2 * P);
        diff = 0.0;
        for (int m = 0; m < 2 * P; ++m) diff += m < P ? k[m] : -k[m];
      } while (std::abs(diff) < 0.5 * kPsf.sigma_k());
      std::vector<int> Q(2 * P, 0);
      for (int i = 0; i < P; ++i) Q[i] = 1;
      const SourceScene scene{0.01, N};
      const double exact = coincidence_density(k, Q, scene, kPsf);
      const double lead = subrayleigh_leading_density(P, k, scene, kPsf);
      EXPECT_NEAR(lead / exact, 1.0, 1e-2) << "P=" << P;
      const double lead2 = subrayleigh_leading_density(P, k, SourceScene{0.02, N}, kPsf);
      EXPECT_NEAR(std::log(lead2 / lead) / std::log(2.0), 2.0, 1e-12);
    }
  const std::vector<double> balanced{0.4, 0.1, 0.3, 0.2};
  EXPECT_EQ(subrayleigh_leading_density(2, balanced, SourceScene{0.01, 1.0}, kPsf), 0.0);
}

TEST(Asymptotic, AgreesAtLargeSeparation) {
  std::mt19937_64 eng(23);
  for (int L = 2; L <= 6; ++L) {
    const auto k = random_momenta(eng, L);
    const auto Q = random_assignment(eng, L);
    const SourceScene scene{30.0, 1.5};
    const double exact = coincidence_density(k, Q, scene, kPsf);
    EXPECT_NEAR(asymptotic_density(k, Q, scene, kPsf) / exact, 1.0, 1e-6);
  }
  // Two photons: N/(1+N)^3 C(dk) |phi(kbar)|^2 [1 + alpha cos(dk s/2)].
  const double N = 0.7, s = 9.0, k1 = 0.3, k2 = -0.45;
  const std::vector<double> k{k1, k2};
  const auto xy = TwoPhotonCoordinates::from_momenta(k1, k2);
  for (auto c : {OutcomeClass::B, OutcomeClass::A}) {
    const double a = alpha_sign(c);
    double sum = 0.0;
    for (int X : class_members(2, c)) {
      std::vector<int> Q{X >= 1 ? 1 : 0, X == 2 ? 1 : 0};
      sum += asymptotic_density(k, Q, SourceScene{s, N}, kPsf);
    }
    const double ref = N / std::pow(1 + N, 3) * kPsf.difference_envelope(xy.delta_k) *
                       kPsf.mean_momentum_envelope(xy.k_bar) * (1 + a * std::cos(xy.delta_k * s / 2));
    EXPECT_NEAR(sum, ref, 1e-14);
  }
}

TEST(Bucket, LeadingOrder) {
  EXPECT_EQ(bucket_probability(1, SourceScene{0.0, 1.5}, kPsf), 0.0);
  // (2/2) (1.5/4) (0.1^2/4) sigma_k^2 with sigma_k = 0.5
  EXPECT_NEAR(bucket_probability(1, SourceScene{0.1, 1.5}, kPsf), 2.34375e-4, 1e-18);
  for (int P = 1; P <= 3; ++P)
    for (double N : {0.1, 1.5}) {
      const SourceScene scene{0.01, N};
      const double exact = split_probability(2 * P, P, scene, kPsf);
      EXPECT_NEAR(bucket_probability(P, scene, kPsf) / exact, 1.0, 2e-2);
    }
  const auto gh = split_integrals_gh(2, 0.01, 1.5, 24);
  EXPECT_NEAR(bucket_probability(1, SourceScene{0.01, 1.5}, kPsf) / gh[1], 1.0, 2e-2);
}

TEST(Conditional, FactorsNormalizeAndReconstruct) {
  boost::math::quadrature::sinh_sinh<double> integ;
  for (double s : {0.3, 2.0, 7.0}) {
    const SourceScene scene{s, 1.5};
    double total = 0.0;
    for (auto c : {OutcomeClass::B, OutcomeClass::A}) {
      const double fi = integ.integrate([&](double kb) { return conditional_decomposition({kb, 0.0}, c, scene, kPsf).f; });
      const double gi = integ.integrate([&](double dk) { return conditional_decomposition({0.0, dk}, c, scene, kPsf).g; });
      EXPECT_NEAR(fi, 1.0, 1e-10);
      EXPECT_NEAR(gi, 1.0, 1e-10);
      for (double kb : {-0.4, 0.0, 0.9})
        for (double dk : {-1.0, 0.2, 1.3}) {
          const auto r = conditional_decomposition({kb, dk}, c, scene, kPsf);
          const double direct = two_photon_density({kb, dk}, c, scene, kPsf);
          EXPECT_NEAR(r.probability * r.f * r.g, direct, 1e-12 * direct + 1e-300);
        }
      const auto r = conditional_decomposition({0.0, 0.0}, c, scene, kPsf);
      EXPECT_DOUBLE_EQ(r.kappa1, std::exp(-s * s * 0.25 / 4));
      EXPECT_DOUBLE_EQ(r.kappa1, r.kappa2);
      total += r.probability;
      EXPECT_NEAR(r.probability, class_probability(2, c, scene, kPsf), 1e-14);
    }
    EXPECT_NEAR(total, frame_probability(2, scene, kPsf), 1e-14);
  }
}

TEST(Classes, TablesAndMembers) {
  EXPECT_EQ(class_members(3, OutcomeClass::B), (std::vector<int>{0, 3}));
  EXPECT_EQ(class_members(3, OutcomeClass::UA), (std::vector<int>{1, 2}));
  EXPECT_EQ(class_members(4, OutcomeClass::A), (std::vector<int>{2}));
  EXPECT_THROW(class_members(3, OutcomeClass::A), std::invalid_argument);
  EXPECT_EQ(class_factors(4, OutcomeClass::UA).lambda, (std::vector<int>{-1, -1, -1}));
  EXPECT_DOUBLE_EQ(class_factors(4, OutcomeClass::A).f, 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(class_factors(3, OutcomeClass::UA).f, 0.5);
  EXPECT_EQ(parse_outcome_class("UA"), OutcomeClass::UA);
  EXPECT_THROW(parse_outcome_class("Q"), std::invalid_argument);
}

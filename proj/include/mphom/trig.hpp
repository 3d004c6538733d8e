#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "mphom/dual.hpp"

namespace mphom {

/// Largest photon number handled by the fixed-size kernels.
inline constexpr int kMaxPhotons = 32;

inline double factorial(int n) {
  static const auto table = [] {
    std::array<double, kMaxPhotons + 2> t{};
    t[0] = 1.0;
    for (int i = 1; i < int(t.size()); ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  if (n < 0 || n >= int(table.size())) throw std::out_of_range("factorial: argument out of range");
  return table[n];
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(factorial(n) / (factorial(k) * factorial(n - k)));
}

/// Coefficients e[0..n] of prod_m (c_m + y t_m): e[J] sums products with J sine slots.
template <class S>
void elementary_symmetric(const S* c, const S* t, int n, S* e) {
  e[0] = S(1.0);
  for (int J = 1; J <= n; ++J) e[J] = S(0.0);
  for (int m = 0; m < n; ++m) {
    for (int J = m + 1; J >= 1; --J) e[J] = e[J] * c[m] + e[J - 1] * t[m];
    e[0] = e[0] * c[m];
  }
}

/// Divides prod_m (c_m + y t_m) (coefficients f[0..n]) by (ci + y ti), writing q[0..n-1].
/// The recurrence direction is chosen so that no step amplifies rounding error.
template <class S>
void divide_linear_factor(const S* f, int n, const S& ci, const S& ti, S* q) {
  using std::abs;
  if (n == 0) return;
  if (abs(value_of(ci)) >= abs(value_of(ti))) {
    q[0] = f[0] / ci;
    for (int J = 1; J < n; ++J) q[J] = (f[J] - ti * q[J - 1]) / ci;
  } else {
    q[n - 1] = f[n] / ti;
    for (int J = n - 1; J >= 1; --J) q[J - 1] = (f[J] - ci * q[J]) / ti;
  }
}

/// Subset form: sum over J-element subsets of the L-1 momenta of
/// prod sin(k s/2) over the subset times prod cos(k s/2) over the rest.
inline double trig_subset_sum(int j, std::span<const double> momenta, double s) {
  const int n = int(momenta.size());
  if (j < 0 || j > n) throw std::out_of_range("trig_subset_sum: j out of range");
  std::vector<double> c(n), t(n), e(n + 1);
  for (int m = 0; m < n; ++m) {
    c[m] = std::cos(0.5 * momenta[m] * s);
    t[m] = std::sin(0.5 * momenta[m] * s);
  }
  elementary_symmetric(c.data(), t.data(), n, e.data());
  return e[j];
}

/// xi_j: sum over all orderings of the L-1 momenta into L-1-j cosine slots followed by j sine slots.
inline double trig_xi(int j, std::span<const double> momenta, double s) {
  const int n = int(momenta.size());
  if (j < 0 || j > n) throw std::out_of_range("trig_xi: j out of range");
  return factorial(n - j) * factorial(j) * trig_subset_sum(j, momenta, s);
}

/// Phase picked up by slot i when slot i carries the reference photon and every other slot a
/// source photon; assignment[m] = 1 means camera C1.
inline double interference_phase(std::span<const int> assignment, std::size_t i) {
  if (i >= assignment.size()) throw std::out_of_range("interference_phase: slot out of range");
  int quarter_turns = 0;
  for (std::size_t m = 0; m < assignment.size(); ++m) {
    const int source = (m == i) ? 0 : 1;
    if (assignment[m] != 0 && assignment[m] != 1)
      throw std::invalid_argument("interference_phase: assignment flags must be 0 or 1");
    if (source != assignment[m]) ++quarter_turns;
  }
  return 0.5 * std::numbers::pi * double(quarter_turns % 4);
}

inline std::vector<double> interference_phases(std::span<const int> assignment) {
  std::vector<double> out(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) out[i] = interference_phase(assignment, i);
  return out;
}

/// Relative sign of slot i: -1 for photons in C1, +1 for C2. All phases differ by 0 or pi.
inline int interference_sign(int flag) { return flag ? -1 : 1; }

}  // namespace mphom

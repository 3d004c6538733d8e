#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mphom/parallel.hpp"

namespace mphom {

enum class QuadratureScheme { automatic, gauss_hermite_tensor, monte_carlo_importance };

inline std::string to_string(QuadratureScheme s) {
  switch (s) {
    case QuadratureScheme::automatic: return "auto";
    case QuadratureScheme::gauss_hermite_tensor: return "gh";
    case QuadratureScheme::monte_carlo_importance: return "mc";
  }
  return "?";
}

inline QuadratureScheme parse_quadrature_scheme(const std::string& s) {
  if (s == "auto") return QuadratureScheme::automatic;
  if (s == "gh" || s == "gauss_hermite_tensor") return QuadratureScheme::gauss_hermite_tensor;
  if (s == "mc" || s == "monte_carlo_importance") return QuadratureScheme::monte_carlo_importance;
  throw std::invalid_argument("unknown quadrature scheme '" + s + "'");
}

struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::automatic;
  int nodes_per_dim = 0;             ///< 0 selects a count from the oscillation frequency
  std::int64_t sample_count = 1000000;
  std::uint64_t seed = 20240917;
  double relative_error_target = 1e-2;
  int batches = 64;
  unsigned workers = 0;              ///< 0 = hardware concurrency
  int max_tensor_dim = 3;            ///< automatic scheme uses the tensor rule up to this dimension

  void validate() const {
    if (nodes_per_dim != 0 && nodes_per_dim < 8) throw std::invalid_argument("QuadratureSpec: nodes_per_dim must be >= 8");
    if (sample_count < 10000) throw std::invalid_argument("QuadratureSpec: sample_count must be >= 1e4");
    if (batches < 2) throw std::invalid_argument("QuadratureSpec: need at least two batches");
    if (!(relative_error_target > 0.0)) throw std::invalid_argument("QuadratureSpec: error target must be positive");
  }
};

/// Gauss-Hermite rule rescaled to the standard normal: sum w_i f(z_i) ~ E[f(Z)], Z ~ N(0,1).
struct NormalRule {
  std::vector<double> z;
  std::vector<double> w;
};

inline const NormalRule& gauss_hermite_rule(int n) {
  if (n < 1 || n > 2000) throw std::invalid_argument("gauss_hermite_rule: node count out of range");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<NormalRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(double(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("gauss_hermite_rule: eigen solver failed");
  auto rule = std::make_unique<NormalRule>();
  rule->z.resize(n);
  rule->w.resize(n);
  for (int i = 0; i < n; ++i) {
    rule->z[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule->w[i] = v * v;
  }
  // Symmetrise to remove eigen-solver asymmetry.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double z = 0.5 * (rule->z[j] - rule->z[i]);
    const double w = 0.5 * (rule->w[i] + rule->w[j]);
    rule->z[i] = -z;
    rule->z[j] = z;
    rule->w[i] = rule->w[j] = w;
  }
  if (n % 2) rule->z[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule->w) total += w;
  for (double& w : rule->w) w /= total;
  auto& ref = *rule;
  cache.emplace(n, std::move(rule));
  return ref;
}

/// Node count for integrands oscillating like cos(omega z) against a standard normal weight.
inline int auto_nodes(double omega) {
  const double n = 16.0 + 4.0 * omega + 0.7 * omega * omega;
  return int(std::clamp(std::ceil(n), 16.0, 400.0));
}

struct VectorEstimate {
  std::vector<double> value;
  std::vector<double> error;  ///< GH: difference between two node counts; MC: standard error
  std::int64_t evaluations = 0;
};

/// Vector integrand against the standard normal product measure: f(z, out) writes out.size() values.
using NormalIntegrand = std::function<void(std::span<const double>, std::span<double>)>;

/// Tensor Gauss-Hermite sum with n nodes per dimension.
inline std::vector<double> tensor_gauss_hermite(int dim, int n, std::size_t width, const NormalIntegrand& f,
                                                unsigned workers = 0) {
  if (dim < 1) throw std::invalid_argument("tensor_gauss_hermite: dim must be >= 1");
  const auto& rule = gauss_hermite_rule(n);
  // Parallel over the first coordinate; each slot is summed in a fixed order.
  std::vector<std::vector<double>> partial(n, std::vector<double>(width, 0.0));
  parallel_for(
      std::size_t(n),
      [&](std::size_t i0) {
        std::vector<double> z(dim), out(width);
        std::vector<int> idx(dim, 0);
        idx[0] = int(i0);
        auto& acc = partial[i0];
        for (;;) {
          double w = 1.0;
          for (int d = 0; d < dim; ++d) {
            z[d] = rule.z[idx[d]];
            w *= rule.w[idx[d]];
          }
          f(z, out);
          for (std::size_t c = 0; c < width; ++c) acc[c] += w * out[c];
          int d = dim - 1;
          while (d >= 1) {
            if (++idx[d] < n) break;
            idx[d] = 0;
            --d;
          }
          if (d < 1) break;
        }
      },
      workers);
  std::vector<double> total(width, 0.0);
  for (const auto& p : partial)
    for (std::size_t c = 0; c < width; ++c) total[c] += p[c];
  return total;
}

/// Tensor rule at n nodes with an error estimate from a second, finer rule.
inline VectorEstimate gauss_hermite_estimate(int dim, int n, std::size_t width, const NormalIntegrand& f,
                                             unsigned workers = 0) {
  const int n2 = n + std::max(8, n / 4);
  VectorEstimate r;
  const auto coarse = tensor_gauss_hermite(dim, n, width, f, workers);
  r.value = tensor_gauss_hermite(dim, n2, width, f, workers);
  r.error.resize(width);
  for (std::size_t c = 0; c < width; ++c) r.error[c] = std::abs(r.value[c] - coarse[c]);
  r.evaluations = std::int64_t(std::pow(double(n), dim) + std::pow(double(n2), dim));
  return r;
}

/// Independent stream for one batch, derived from the run seed and the batch index.
inline std::mt19937_64 batch_engine(std::uint64_t seed, std::uint64_t batch) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(batch),
                    std::uint32_t(batch >> 32), 0x6d70686fu};
  return std::mt19937_64(seq);
}

/// Plain Monte Carlo over the standard normal product measure with batch-mean standard errors.
inline VectorEstimate monte_carlo_normal(int dim, std::int64_t samples, int batches, std::uint64_t seed,
                                         std::size_t width, const NormalIntegrand& f, unsigned workers = 0) {
  if (dim < 1) throw std::invalid_argument("monte_carlo_normal: dim must be >= 1");
  if (batches < 2) throw std::invalid_argument("monte_carlo_normal: need at least two batches");
  const std::int64_t per_batch = (samples + batches - 1) / batches;
  std::vector<std::vector<double>> means(batches, std::vector<double>(width, 0.0));
  parallel_for(
      std::size_t(batches),
      [&](std::size_t b) {
        auto eng = batch_engine(seed, b);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> z(dim), out(width);
        auto& acc = means[b];
        for (std::int64_t n = 0; n < per_batch; ++n) {
          for (int d = 0; d < dim; ++d) z[d] = normal(eng);
          f(z, out);
          for (std::size_t c = 0; c < width; ++c) acc[c] += out[c];
        }
        for (double& v : acc) v /= double(per_batch);
      },
      workers);
  VectorEstimate r;
  r.value.assign(width, 0.0);
  r.error.assign(width, 0.0);
  for (const auto& m : means)
    for (std::size_t c = 0; c < width; ++c) r.value[c] += m[c];
  for (double& v : r.value) v /= double(batches);
  for (const auto& m : means)
    for (std::size_t c = 0; c < width; ++c) r.error[c] += (m[c] - r.value[c]) * (m[c] - r.value[c]);
  for (double& e : r.error) e = std::sqrt(e / (double(batches) * double(batches - 1)));
  r.evaluations = per_batch * batches;
  return r;
}

/// Chooses GH or MC from the quadrature settings and integrates against the standard normal product measure.
inline VectorEstimate integrate_normal(int dim, std::size_t width, const NormalIntegrand& f,
                                       const QuadratureSpec& q, double omega, std::string* scheme_used = nullptr) {
  q.validate();
  QuadratureScheme s = q.scheme;
  if (s == QuadratureScheme::automatic)
    s = dim <= q.max_tensor_dim ? QuadratureScheme::gauss_hermite_tensor : QuadratureScheme::monte_carlo_importance;
  if (scheme_used) *scheme_used = to_string(s);
  if (s == QuadratureScheme::gauss_hermite_tensor) {
    const int n = q.nodes_per_dim > 0 ? q.nodes_per_dim : auto_nodes(omega);
    return gauss_hermite_estimate(dim, n, width, f, q.workers);
  }
  return monte_carlo_normal(dim, q.sample_count, q.batches, q.seed, width, f, q.workers);
}

}  // namespace mphom

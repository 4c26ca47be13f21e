// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sfolab/rng.hpp"

namespace sfolab {

using Vector = Eigen::VectorXd;

enum class ProblemKind { NoisyQuadratic, LeastSquares, Logistic };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view name);

/// Constants every problem carries alongside its oracle.
struct ProblemConstants {
  ProblemKind kind = ProblemKind::NoisyQuadratic;
  std::size_t dim = 0;
  /// Number of samples; empty for noise-injected objectives (infinite population).
  std::optional<std::uint64_t> n;
  /// Mean smoothness constant. For finite sums, L = (1/n) sum L_i.
  double L = 0.0;
  /// Per-sample constants (finite sums only).
  std::vector<double> L_i;
  /// Gradient-noise bound. Certified for noise-injected objectives; empty for
  /// finite sums until estimate_sigma2 has been run.
  std::optional<double> sigma2;
  bool sigma2_certified = false;
  double f_star = 0.0;
  /// f* came from an iterative solve rather than a closed form.
  bool f_star_approximate = false;
  /// ||grad f|| at the point that produced f*.
  double f_star_grad_norm = 0.0;
  std::uint64_t seed = 0;
};

/// Objective with an unbiased stochastic gradient oracle.
///
/// Implementations are immutable after construction and safe to share
/// across threads; randomness comes only from the caller's CounterRng.
class Problem {
 public:
  virtual ~Problem() = default;

  const ProblemConstants& constants() const { return constants_; }
  std::size_t dim() const { return constants_.dim; }

  virtual double loss(const Vector& theta) const = 0;
  virtual Vector full_gradient(const Vector& theta) const = 0;
  /// Loss and full gradient in one pass.
  virtual double loss_and_gradient(const Vector& theta, Vector& grad) const;
  /// Average of b i.i.d. single-sample stochastic gradients at theta.
  virtual void minibatch_gradient(const Vector& theta, std::uint64_t b, CounterRng& rng,
                                  Vector& out) const = 0;

  void set_sigma2_estimate(double sigma2);

 protected:
  ProblemConstants constants_;
};

/// f(theta) = (1/n) sum_i f_i(theta). Mini-batches sample indices uniformly
/// with replacement.
class FiniteSumProblem : public Problem {
 public:
  std::uint64_t size() const { return *constants_.n; }

  /// acc += grad f_i(theta)
  virtual void accumulate_sample_gradient(const Vector& theta, std::uint64_t i,
                                          Vector& acc) const = 0;
  virtual double sample_loss(const Vector& theta, std::uint64_t i) const = 0;

  void minibatch_gradient(const Vector& theta, std::uint64_t b, CounterRng& rng,
                          Vector& out) const override;
  /// Average gradient over the given sample indices.
  void gradient_on_indices(const Vector& theta, std::span<const std::uint64_t> indices,
                           Vector& out) const;
  /// Exact (1/n) sum_i ||grad f_i(theta) - grad f(theta)||^2.
  double sample_variance(const Vector& theta) const;
};

/// f(theta) = 1/2 theta^T diag(spectrum) theta with stochastic gradient
/// A theta + z, z ~ N(0, sigma2/dim I), so E||z||^2 = sigma2 exactly. L is the
/// largest eigenvalue, f* = 0 at theta = 0.
///
/// The mean of b noise draws is N(0, sigma2/(dim b) I); it is sampled
/// directly, so a mini-batch costs O(dim) regardless of b while still
/// counting b sample gradients.
class NoisyQuadratic final : public Problem {
 public:
  NoisyQuadratic(std::vector<double> spectrum, double sigma2, std::uint64_t seed);

  double loss(const Vector& theta) const override;
  Vector full_gradient(const Vector& theta) const override;
  void minibatch_gradient(const Vector& theta, std::uint64_t b, CounterRng& rng,
                          Vector& out) const override;

  const Vector& spectrum() const { return spectrum_; }

 private:
  Vector spectrum_;
  double noise_stddev_;
};

/// f_i(theta) = 1/2 (x_i^T theta - y_i)^2 with a planted regressor plus
/// label noise. L_i = ||x_i||^2; f* from the normal equations.
class LeastSquares final : public FiniteSumProblem {
 public:
  LeastSquares(std::uint64_t n, std::size_t dim, std::uint64_t seed);

  double loss(const Vector& theta) const override;
  Vector full_gradient(const Vector& theta) const override;
  double loss_and_gradient(const Vector& theta, Vector& grad) const override;
  void accumulate_sample_gradient(const Vector& theta, std::uint64_t i,
                                  Vector& acc) const override;
  double sample_loss(const Vector& theta, std::uint64_t i) const override;

  const Vector& minimizer() const { return minimizer_; }

 private:
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x_;
  Vector y_;
  Vector minimizer_;
};

/// f_i(theta) = log(1 + exp(-y_i x_i^T theta)), y_i in {-1, +1}, with 10%
/// label flips. L_i = ||x_i||^2 / 4. f* is approximated by full-gradient
/// descent to ||grad f|| <= 1e-10 (or the iteration cap, recorded in
/// f_star_grad_norm).
class Logistic final : public FiniteSumProblem {
 public:
  Logistic(std::uint64_t n, std::size_t dim, std::uint64_t seed);

  double loss(const Vector& theta) const override;
  Vector full_gradient(const Vector& theta) const override;
  double loss_and_gradient(const Vector& theta, Vector& grad) const override;
  void accumulate_sample_gradient(const Vector& theta, std::uint64_t i,
                                  Vector& acc) const override;
  double sample_loss(const Vector& theta, std::uint64_t i) const override;

  const Vector& minimizer() const { return minimizer_; }

  static constexpr double kFStarGradTolerance = 1e-10;

 private:
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x_;
  Vector y_;
  Vector minimizer_;
};

std::unique_ptr<NoisyQuadratic> noisy_quadratic(std::size_t dim, std::vector<double> spectrum,
                                                double sigma2, std::uint64_t seed);
std::unique_ptr<LeastSquares> finite_sum_least_squares(std::uint64_t n, std::size_t dim,
                                                       std::uint64_t seed);
std::unique_ptr<Logistic> finite_sum_logistic(std::uint64_t n, std::size_t dim,
                                              std::uint64_t seed);

/// Max over probe points of the Monte-Carlo estimate of
/// E||grad f_xi(theta) - grad f(theta)||^2 from `draws` single-sample gradients.
double estimate_sigma2(const Problem& problem, std::span<const Vector> probes,
                       std::uint64_t draws, std::uint64_t seed);

/// theta ~ scale * N(0, I), drawn from the reserved initial-point stream of `seed`.
Vector initial_point(std::size_t dim, double scale, std::uint64_t seed);

}  // namespace sfolab

// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sfolab {

namespace {

constexpr std::uint64_t kDataStream = 0xC0000000000000D0ULL;
constexpr double kLabelNoise = 0.1;
constexpr double kLabelFlip = 0.1;
constexpr std::uint64_t kLogisticMaxIterations = 200000;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// log(1 + exp(u)) without overflow.
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void fill_features(RowMatrix& x, std::size_t dim, std::normal_distribution<double>& normal,
                   CounterRng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = scale * normal(rng);
  }
}

void fill_row_constants(ProblemConstants& c, const RowMatrix& x, double factor) {
  c.L_i.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) c.L_i[i] = factor * x.row(i).squaredNorm();
  c.L = std::accumulate(c.L_i.begin(), c.L_i.end(), 0.0) / static_cast<double>(x.rows());
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::NoisyQuadratic: return "noisy_quadratic";
    case ProblemKind::LeastSquares: return "least_squares";
    case ProblemKind::Logistic: return "logistic";
  }
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view name) {
  for (auto k : {ProblemKind::NoisyQuadratic, ProblemKind::LeastSquares, ProblemKind::Logistic}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

double Problem::loss_and_gradient(const Vector& theta, Vector& grad) const {
  grad = full_gradient(theta);
  return loss(theta);
}

void Problem::set_sigma2_estimate(double sigma2) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 estimate must be >= 0");
  if (constants_.sigma2_certified) return;
  constants_.sigma2 = sigma2;
}

// ---------------------------------------------------------------------------
// FiniteSumProblem

void FiniteSumProblem::minibatch_gradient(const Vector& theta, std::uint64_t b, CounterRng& rng,
                                          Vector& out) const {
  if (b == 0) throw std::invalid_argument("minibatch_gradient: batch size must be >= 1");
  std::uniform_int_distribution<std::uint64_t> pick(0, size() - 1);
  out.setZero(static_cast<Eigen::Index>(dim()));
  for (std::uint64_t j = 0; j < b; ++j) accumulate_sample_gradient(theta, pick(rng), out);
  out /= static_cast<double>(b);
}

void FiniteSumProblem::gradient_on_indices(const Vector& theta,
                                           std::span<const std::uint64_t> indices,
                                           Vector& out) const {
  if (indices.empty()) throw std::invalid_argument("gradient_on_indices: empty index set");
  out.setZero(static_cast<Eigen::Index>(dim()));
  for (auto i : indices) accumulate_sample_gradient(theta, i, out);
  out /= static_cast<double>(indices.size());
}

double FiniteSumProblem::sample_variance(const Vector& theta) const {
  const Vector g = full_gradient(theta);
  Vector gi(static_cast<Eigen::Index>(dim()));
  double total = 0.0;
  for (std::uint64_t i = 0; i < size(); ++i) {
    gi.setZero();
    accumulate_sample_gradient(theta, i, gi);
    total += (gi - g).squaredNorm();
  }
  return total / static_cast<double>(size());
}

// ---------------------------------------------------------------------------
// NoisyQuadratic

NoisyQuadratic::NoisyQuadratic(std::vector<double> spectrum, double sigma2, std::uint64_t seed) {
  if (spectrum.empty()) throw std::invalid_argument("noisy_quadratic: empty spectrum");
  for (double v : spectrum) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("noisy_quadratic: eigenvalues must be positive and finite");
    }
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("noisy_quadratic: sigma2 must be >= 0");
  }
  const auto dim = spectrum.size();
  spectrum_ = Eigen::Map<const Vector>(spectrum.data(), static_cast<Eigen::Index>(dim));
  noise_stddev_ = std::sqrt(sigma2 / static_cast<double>(dim));

  constants_.kind = ProblemKind::NoisyQuadratic;
  constants_.dim = dim;
  constants_.L = spectrum_.maxCoeff();
  constants_.sigma2 = sigma2;
  constants_.sigma2_certified = true;
  constants_.f_star = 0.0;
  constants_.seed = seed;
}

double NoisyQuadratic::loss(const Vector& theta) const {
  return 0.5 * theta.dot(spectrum_.cwiseProduct(theta));
}

Vector NoisyQuadratic::full_gradient(const Vector& theta) const {
  return spectrum_.cwiseProduct(theta);
}

void NoisyQuadratic::minibatch_gradient(const Vector& theta, std::uint64_t b, CounterRng& rng,
                                        Vector& out) const {
  if (b == 0) throw std::invalid_argument("minibatch_gradient: batch size must be >= 1");
  out = spectrum_.cwiseProduct(theta);
  if (noise_stddev_ == 0.0) return;
  std::normal_distribution<double> normal(0.0, noise_stddev_ / std::sqrt(static_cast<double>(b)));
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] += normal(rng);
}

// ---------------------------------------------------------------------------
// LeastSquares

LeastSquares::LeastSquares(std::uint64_t n, std::size_t dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw std::invalid_argument("least_squares: need n >= 1 and dim >= 1");
  CounterRng rng(seed, kDataStream);
  std::normal_distribution<double> normal(0.0, 1.0);

  x_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  fill_features(x_, dim, normal, rng);
  Vector truth(static_cast<Eigen::Index>(dim));
  for (auto& v : truth) v = normal(rng);
  y_ = x_ * truth;
  for (auto& v : y_) v += kLabelNoise * normal(rng);

  const Eigen::MatrixXd gram = x_.transpose() * x_;
  const Vector rhs = x_.transpose() * y_;
  minimizer_ = gram.completeOrthogonalDecomposition().solve(rhs);

  constants_.kind = ProblemKind::LeastSquares;
  constants_.dim = dim;
  constants_.n = n;
  fill_row_constants(constants_, x_, 1.0);
  constants_.f_star = loss(minimizer_);
  constants_.f_star_grad_norm = full_gradient(minimizer_).norm();
  constants_.seed = seed;
}

double LeastSquares::loss(const Vector& theta) const {
  return 0.5 * (x_ * theta - y_).squaredNorm() / static_cast<double>(x_.rows());
}

Vector LeastSquares::full_gradient(const Vector& theta) const {
  return x_.transpose() * (x_ * theta - y_) / static_cast<double>(x_.rows());
}

double LeastSquares::loss_and_gradient(const Vector& theta, Vector& grad) const {
  const Vector r = x_ * theta - y_;
  const double n = static_cast<double>(x_.rows());
  grad = x_.transpose() * r / n;
  return 0.5 * r.squaredNorm() / n;
}

void LeastSquares::accumulate_sample_gradient(const Vector& theta, std::uint64_t i,
                                              Vector& acc) const {
  const auto row = x_.row(static_cast<Eigen::Index>(i));
  acc += (row.dot(theta) - y_[static_cast<Eigen::Index>(i)]) * row.transpose();
}

double LeastSquares::sample_loss(const Vector& theta, std::uint64_t i) const {
  const double r = x_.row(static_cast<Eigen::Index>(i)).dot(theta) - y_[static_cast<Eigen::Index>(i)];
  return 0.5 * r * r;
}

// ---------------------------------------------------------------------------
// Logistic

Logistic::Logistic(std::uint64_t n, std::size_t dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw std::invalid_argument("logistic: need n >= 1 and dim >= 1");
  CounterRng rng(seed, kDataStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  x_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  fill_features(x_, dim, normal, rng);
  Vector truth(static_cast<Eigen::Index>(dim));
  for (auto& v : truth) v = normal(rng);
  y_.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double label = x_.row(i).dot(truth) >= 0.0 ? 1.0 : -1.0;
    y_[i] = unit(rng) < kLabelFlip ? -label : label;
  }

  constants_.kind = ProblemKind::Logistic;
  constants_.dim = dim;
  constants_.n = n;
  fill_row_constants(constants_, x_, 0.25);
  constants_.seed = seed;

  // Full-gradient descent with the tight global step 1/lambda_max(X^T X / 4n).
  const Eigen::MatrixXd gram = x_.transpose() * x_ / (4.0 * static_cast<double>(n));
  const double tight_L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();
  const double step = 1.0 / tight_L;
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(dim));
  Vector grad;
  double best_loss = loss_and_gradient(theta, grad);
  for (std::uint64_t it = 0; it < kLogisticMaxIterations && grad.norm() > kFStarGradTolerance; ++it) {
    theta -= step * grad;
    best_loss = loss_and_gradient(theta, grad);
  }
  minimizer_ = theta;
  constants_.f_star = best_loss;
  constants_.f_star_approximate = true;
  constants_.f_star_grad_norm = grad.norm();
}

double Logistic::loss(const Vector& theta) const {
  const Vector z = x_ * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(-y_[i] * z[i]);
  return total / static_cast<double>(z.size());
}

Vector Logistic::full_gradient(const Vector& theta) const {
  Vector g;
  loss_and_gradient(theta, g);
  return g;
}

double Logistic::loss_and_gradient(const Vector& theta, Vector& grad) const {
  const Vector z = x_ * theta;
  Vector weights(z.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double margin = y_[i] * z[i];
    total += softplus(-margin);
    weights[i] = -y_[i] * sigmoid(-margin);
  }
  const double n = static_cast<double>(z.size());
  grad = x_.transpose() * weights / n;
  return total / n;
}

void Logistic::accumulate_sample_gradient(const Vector& theta, std::uint64_t i,
                                          Vector& acc) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const auto row = x_.row(idx);
  const double margin = y_[idx] * row.dot(theta);
  acc += (-y_[idx] * sigmoid(-margin)) * row.transpose();
}

double Logistic::sample_loss(const Vector& theta, std::uint64_t i) const {
  const auto idx = static_cast<Eigen::Index>(i);
  return softplus(-y_[idx] * x_.row(idx).dot(theta));
}

// ---------------------------------------------------------------------------

std::unique_ptr<NoisyQuadratic> noisy_quadratic(std::size_t dim, std::vector<double> spectrum,
                                                double sigma2, std::uint64_t seed) {
  if (spectrum.size() != dim) {
    throw std::invalid_argument("noisy_quadratic: spectrum must have dim entries");
  }
  return std::make_unique<NoisyQuadratic>(std::move(spectrum), sigma2, seed);
}

std::unique_ptr<LeastSquares> finite_sum_least_squares(std::uint64_t n, std::size_t dim,
                                                       std::uint64_t seed) {
  return std::make_unique<LeastSquares>(n, dim, seed);
}

std::unique_ptr<Logistic> finite_sum_logistic(std::uint64_t n, std::size_t dim,
                                              std::uint64_t seed) {
  return std::make_unique<Logistic>(n, dim, seed);
}

double estimate_sigma2(const Problem& problem, std::span<const Vector> probes,
                       std::uint64_t draws, std::uint64_t seed) {
  if (probes.empty()) throw std::invalid_argument("estimate_sigma2: empty probe set");
  if (draws < 1000) throw std::invalid_argument("estimate_sigma2: need at least 1000 draws");
  double worst = 0.0;
  Vector g;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Vector full = problem.full_gradient(probes[p]);
    CounterRng rng(seed, streams::kProbe + p);
    double total = 0.0;
    for (std::uint64_t k = 0; k < draws; ++k) {
      problem.minibatch_gradient(probes[p], 1, rng, g);
      total += (g - full).squaredNorm();
    }
    worst = std::max(worst, total / static_cast<double>(draws));
  }
  return worst;
}

Vector initial_point(std::size_t dim, double scale, std::uint64_t seed) {
  CounterRng rng(seed, streams::kInitialPoint);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta(static_cast<Eigen::Index>(dim));
  for (auto& v : theta) v = scale * normal(rng);
  return theta;
}

}  // namespace sfolab

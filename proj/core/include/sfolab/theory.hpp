// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfolab/schedule.hpp"

/// Closed-form SFO complexity mathematics for mini-batch SGD on an
/// L-smooth objective with sigma^2-bounded gradient noise:
///
///   min_t E||grad f(theta_t)||^2 <= C1(eta)/T + C2(eta)/b
///   C1(eta) = 2 (f(theta_0) - f*) / ((2 - L eta) eta)
///   C2(eta) = L sigma^2 eta / (2 - L eta)
///
/// Everything is evaluated in double precision.
namespace sfolab::theory {

/// Raised when a batch size lies outside the admissible region b > C2/eps^2,
/// or a step size reaches 2/L.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, double threshold)
      : std::domain_error(what), threshold_(threshold) {}
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

/// Generators of (C1, C2, eps) for one horizon. The constructor rejects
/// eta >= 2/L and any nonpositive/negative field.
class ComplexityParams {
 public:
  ComplexityParams(double f_gap, double L, double sigma2, double eta, double eps);

  double f_gap() const { return f_gap_; }
  double L() const { return L_; }
  double sigma2() const { return sigma2_; }
  double eta() const { return eta_; }
  double eps() const { return eps_; }

 private:
  double f_gap_, L_, sigma2_, eta_, eps_;
};

/// The reduced tuple (C1, C2, eps). Usable directly when the constants are
/// known, or derived from ComplexityParams.
struct BoundConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double eps = 1.0;

  /// C2 / eps^2; admissible batches are strictly above it.
  double admissible_threshold() const { return c2 / (eps * eps); }
  /// b > C2/eps^2, with batches whose denominator eps^2 b - C2 is within
  /// rounding of zero counted as outside the domain.
  bool admissible(double batch) const {
    return batch > 0.0 && eps * eps * batch - c2 > 1e-12 * c2;
  }
};

double c1(const ComplexityParams& p);
double c2(const ComplexityParams& p);
BoundConstants constants(const ComplexityParams& p);

/// Right-hand side C1/T + C2/b.
double grad_bound_rhs(const BoundConstants& k, double iterations, double batch);

/// T(b) = C1 b / (eps^2 b - C2). Throws DomainError for b <= C2/eps^2.
double iterations_to_eps(const BoundConstants& k, double batch);
double iterations_to_eps(const ComplexityParams& p, double batch);

/// N(b) = C1 b^2 / (eps^2 b - C2). Throws DomainError for b <= C2/eps^2.
double sfo_complexity(const BoundConstants& k, double batch);
double sfo_complexity(const ComplexityParams& p, double batch);

struct CriticalBatch {
  double batch = 0.0;
  /// Set when sigma^2 = 0 (C2 = 0): N is increasing in b, so no interior minimizer.
  std::optional<std::string> diagnostic;
};

/// b* = 2 C2 / eps^2.
CriticalBatch critical_batch_size(const BoundConstants& k);
CriticalBatch critical_batch_size(const ComplexityParams& p);

/// N(b*) = 4 C1 C2 / eps^4.
double min_sfo_complexity(const BoundConstants& k);
double min_sfo_complexity(const ComplexityParams& p);

/// Per-stage b*_m = 2 C2(eta_m) / eps_m^2, one per plan stage.
std::vector<double> stage_critical_batch_sizes(const TrainPlan& plan, double L, double sigma2,
                                               std::span<const double> eps_schedule);

/// Target-accuracy schedule following the rate for the plan's schedule
/// family, calibrated so eps_0 = eps0: eps_m^2 = eps0^2 / (m + 1) for constant
/// learning rates, eps_m^2 = eps0^2 gamma^-m for exponentially growing ones.
std::vector<double> rate_eps_schedule(const ScheduleSpec& spec, double eps0);

/// Upper bound on min_{t<T} E||grad f(theta_t)||^2 for per-iteration step
/// sizes and batch sizes:
///
///   2 f_gap / ((2 - L eta_max) sum eta_t)
///     + L sigma^2 / (2 - L eta_max) * (sum eta_t^2 / b_t) / (sum eta_t)
double lemma1_bound(double f_gap, double L, double sigma2, std::span<const double> etas,
                    std::span<const std::uint64_t> batches);

/// Streaming form of lemma1_bound: push (eta_t, b_t) one iteration at a time
/// and read the bound for the prefix seen so far.
class Lemma1Accumulator {
 public:
  Lemma1Accumulator(double f_gap, double L, double sigma2);

  void push(double eta, std::uint64_t batch);
  std::uint64_t iterations() const { return count_; }
  double bound() const;
  /// The two terms of bound() separately.
  double optimization_term() const;
  double noise_term() const;

 private:
  double f_gap_, L_, sigma2_;
  double sum_eta_ = 0.0;
  double sum_eta2_over_b_ = 0.0;
  double eta_max_ = 0.0;
  std::uint64_t count_ = 0;
};

struct SfoArgmin {
  std::uint64_t batch = 0;
  double sfo = 0.0;
};

/// Exhaustive scan of N(b) over the integers [b_lo, b_hi]; inadmissible
/// batches are skipped. Throws std::invalid_argument when no batch in the
/// grid is admissible or when b_hi < 4 b* (the grid cannot bracket the minimum).
SfoArgmin brute_force_sfo_argmin(const BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi);
SfoArgmin brute_force_sfo_argmin(const ComplexityParams& p, std::uint64_t b_lo,
                                 std::uint64_t b_hi);

/// Exact sample-gradient cost of E epochs at batch b: E ceil(n/b) b.
std::uint64_t epoch_sfo(std::uint64_t n, std::uint64_t batch, std::uint64_t epochs);

}  // namespace sfolab::theory

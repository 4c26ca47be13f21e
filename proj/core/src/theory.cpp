// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sfolab::theory {

namespace {

void check_step(double L, double eta, const char* who) {
  if (!(eta < 2.0 / L)) {
    std::ostringstream msg;
    msg << who << ": step size " << eta << " must be below 2/L = " << 2.0 / L;
    throw DomainError(msg.str(), 2.0 / L);
  }
}

void check_admissible(const BoundConstants& k, double batch, const char* who) {
  const double threshold = k.admissible_threshold();
  if (!k.admissible(batch)) {
    std::ostringstream msg;
    msg << who << ": batch size " << batch << " is not above C2/eps^2 = " << threshold;
    throw DomainError(msg.str(), threshold);
  }
}

}  // namespace

ComplexityParams::ComplexityParams(double f_gap, double L, double sigma2, double eta, double eps)
    : f_gap_(f_gap), L_(L), sigma2_(sigma2), eta_(eta), eps_(eps) {
  if (!(f_gap >= 0.0)) throw std::invalid_argument("ComplexityParams: f_gap must be >= 0");
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("ComplexityParams: L must be > 0");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("ComplexityParams: sigma2 must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("ComplexityParams: eta must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("ComplexityParams: eps must be > 0");
  check_step(L, eta, "ComplexityParams");
}

double c1(const ComplexityParams& p) {
  return 2.0 * p.f_gap() / ((2.0 - p.L() * p.eta()) * p.eta());
}

double c2(const ComplexityParams& p) {
  return p.L() * p.sigma2() * p.eta() / (2.0 - p.L() * p.eta());
}

BoundConstants constants(const ComplexityParams& p) { return {c1(p), c2(p), p.eps()}; }

double grad_bound_rhs(const BoundConstants& k, double iterations, double batch) {
  if (!(iterations > 0.0) || !(batch > 0.0)) {
    throw std::invalid_argument("grad_bound_rhs: iterations and batch must be > 0");
  }
  return k.c1 / iterations + k.c2 / batch;
}

double iterations_to_eps(const BoundConstants& k, double batch) {
  check_admissible(k, batch, "iterations_to_eps");
  return k.c1 * batch / (k.eps * k.eps * batch - k.c2);
}

double iterations_to_eps(const ComplexityParams& p, double batch) {
  return iterations_to_eps(constants(p), batch);
}

double sfo_complexity(const BoundConstants& k, double batch) {
  check_admissible(k, batch, "sfo_complexity");
  return k.c1 * batch * batch / (k.eps * k.eps * batch - k.c2);
}

double sfo_complexity(const ComplexityParams& p, double batch) {
  return sfo_complexity(constants(p), batch);
}

CriticalBatch critical_batch_size(const BoundConstants& k) {
  CriticalBatch out;
  out.batch = 2.0 * k.c2 / (k.eps * k.eps);
  if (k.c2 == 0.0) {
    out.diagnostic =
        "noiseless (C2 = 0): N(b) = C1 b / eps^2 is increasing, so larger batches never pay";
  }
  return out;
}

CriticalBatch critical_batch_size(const ComplexityParams& p) {
  return critical_batch_size(constants(p));
}

double min_sfo_complexity(const BoundConstants& k) {
  const double e2 = k.eps * k.eps;
  return 4.0 * k.c1 * k.c2 / (e2 * e2);
}

double min_sfo_complexity(const ComplexityParams& p) { return min_sfo_complexity(constants(p)); }

std::vector<double> stage_critical_batch_sizes(const TrainPlan& plan, double L, double sigma2,
                                               std::span<const double> eps_schedule) {
  if (eps_schedule.size() != plan.stages.size()) {
    throw std::invalid_argument("stage_critical_batch_sizes: need one eps per stage");
  }
  std::vector<double> out;
  out.reserve(plan.stages.size());
  for (const auto& s : plan.stages) {
    const double eps = eps_schedule[s.m];
    if (!(eps > 0.0)) throw std::invalid_argument("stage_critical_batch_sizes: eps_m must be > 0");
    check_step(L, s.lr, "stage_critical_batch_sizes");
    const double c2m = L * sigma2 * s.lr / (2.0 - L * s.lr);
    out.push_back(2.0 * c2m / (eps * eps));
  }
  return out;
}

std::vector<double> rate_eps_schedule(const ScheduleSpec& spec, double eps0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("rate_eps_schedule: eps0 must be > 0");
  std::vector<double> out(spec.num_stages);
  for (std::size_t m = 0; m < spec.num_stages; ++m) {
    const double md = static_cast<double>(m);
    const double scale = grows_lr_exponentially(spec.kind) ? std::pow(spec.gamma, -md)
                                                           : 1.0 / (md + 1.0);
    out[m] = eps0 * std::sqrt(scale);
  }
  return out;
}

double lemma1_bound(double f_gap, double L, double sigma2, std::span<const double> etas,
                    std::span<const std::uint64_t> batches) {
  if (etas.empty() || etas.size() != batches.size()) {
    throw std::invalid_argument("lemma1_bound: need equal-length, nonempty eta and batch series");
  }
  Lemma1Accumulator acc(f_gap, L, sigma2);
  for (std::size_t t = 0; t < etas.size(); ++t) acc.push(etas[t], batches[t]);
  return acc.bound();
}

Lemma1Accumulator::Lemma1Accumulator(double f_gap, double L, double sigma2)
    : f_gap_(f_gap), L_(L), sigma2_(sigma2) {
  if (!(f_gap >= 0.0)) throw std::invalid_argument("lemma1_bound: f_gap must be >= 0");
  if (!(L > 0.0)) throw std::invalid_argument("lemma1_bound: L must be > 0");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("lemma1_bound: sigma2 must be >= 0");
}

void Lemma1Accumulator::push(double eta, std::uint64_t batch) {
  if (!(eta > 0.0)) throw std::invalid_argument("lemma1_bound: step sizes must be > 0");
  if (batch == 0) throw std::invalid_argument("lemma1_bound: batch sizes must be >= 1");
  check_step(L_, eta, "lemma1_bound");
  sum_eta_ += eta;
  sum_eta2_over_b_ += eta * eta / static_cast<double>(batch);
  eta_max_ = std::max(eta_max_, eta);
  ++count_;
}

double Lemma1Accumulator::optimization_term() const {
  if (count_ == 0) throw std::logic_error("lemma1_bound: empty series");
  return 2.0 * f_gap_ / ((2.0 - L_ * eta_max_) * sum_eta_);
}

double Lemma1Accumulator::noise_term() const {
  if (count_ == 0) throw std::logic_error("lemma1_bound: empty series");
  return L_ * sigma2_ / (2.0 - L_ * eta_max_) * (sum_eta2_over_b_ / sum_eta_);
}

double Lemma1Accumulator::bound() const { return optimization_term() + noise_term(); }

SfoArgmin brute_force_sfo_argmin(const BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi) {
  if (b_lo > b_hi) throw std::invalid_argument("brute_force_sfo_argmin: empty grid");
  const double b_star = critical_batch_size(k).batch;
  if (static_cast<double>(b_hi) < 4.0 * b_star) {
    throw std::invalid_argument("brute_force_sfo_argmin: grid upper end must be >= 4 b*");
  }
  SfoArgmin best{0, std::numeric_limits<double>::infinity()};
  for (std::uint64_t b = std::max<std::uint64_t>(b_lo, 1); b <= b_hi; ++b) {
    const double bd = static_cast<double>(b);
    if (!k.admissible(bd)) continue;
    const double n = k.c1 * bd * bd / (k.eps * k.eps * bd - k.c2);
    if (n < best.sfo) best = {b, n};
  }
  if (best.batch == 0) {
    throw std::invalid_argument("brute_force_sfo_argmin: no admissible batch size in grid");
  }
  return best;
}

SfoArgmin brute_force_sfo_argmin(const ComplexityParams& p, std::uint64_t b_lo,
                                 std::uint64_t b_hi) {
  return brute_force_sfo_argmin(constants(p), b_lo, b_hi);
}

std::uint64_t epoch_sfo(std::uint64_t n, std::uint64_t batch, std::uint64_t epochs) {
  if (batch < 1 || batch > n) throw std::invalid_argument("epoch_sfo: need 1 <= b <= n");
  return epochs * ((n + batch - 1) / batch) * batch;
}

}  // namespace sfolab::theory

// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfolab/problems.hpp"
#include "sfolab/schedule.hpp"

namespace sfolab {

enum class SamplingMode {
  /// i.i.d. uniform indices; the only mode the bound checks accept.
  WithReplacement,
  /// Reshuffled permutation per pass over the data (finite sums only).
  EpochShuffle,
};

struct RunOptions {
  std::uint64_t seed = 0;
  /// Full loss/gradient evaluated every `record_cadence` iterations.
  std::uint64_t record_cadence = 1;
  /// theta_0 = init_scale * N(0, I) from the seed's initial-point stream.
  double init_scale = 1.0;
  /// Overrides the random initial point when set.
  std::optional<Vector> theta0;
  /// Stop before the first iteration whose batch would push sfo_count past this.
  std::optional<std::uint64_t> sfo_budget;
  SamplingMode sampling = SamplingMode::WithReplacement;
};

struct IterationRow {
  /// Loss and gradient norm are measured at theta_t; b_t and eta_t are the
  /// values used for the step out of theta_t, and sfo_count counts samples
  /// consumed before theta_t.
  std::uint64_t t = 0;
  std::size_t m = 0;
  std::uint64_t batch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::uint64_t sfo_count = 0;

  friend bool operator==(const IterationRow&, const IterationRow&) = default;
};

struct StageRow {
  std::size_t m = 0;
  /// f(theta_{T_{m-1}}), always measured regardless of the cadence.
  double entry_loss = 0.0;
  /// Minimum over recorded rows inside the stage; NaN if none were recorded.
  double min_grad_norm = 0.0;
};

struct RunRecord {
  /// Recorded rows for t = 0, k, 2k, ... < stop_t, then one terminal row at stop_t.
  std::vector<IterationRow> rows;
  std::vector<StageRow> stages;

  std::uint64_t seed = 0;
  std::uint64_t record_cadence = 1;
  double init_scale = 1.0;
  double initial_loss = 0.0;
  /// f(theta_0) - f*.
  double f_gap = 0.0;
  /// Number of SGD updates executed.
  std::uint64_t iterations = 0;
  std::uint64_t sfo_count = 0;
  /// min over recorded rows with t < iterations (the terminal iterate is excluded).
  double min_grad_norm = 0.0;
  bool diverged = false;
  std::optional<std::uint64_t> diverged_at;
  /// Stopped early by the SFO budget.
  bool truncated = false;
  double wall_seconds = 0.0;
  Vector final_theta;
};

inline constexpr double kDivergenceLoss = 1e30;

/// Mini-batch SGD over a resolved plan: for each stage m, num_iterations
/// updates theta <- theta - eta_m * g_B with |B| = b_m. Iteration t draws from
/// CounterRng(seed, t), so the trajectory is bitwise reproducible.
RunRecord run_sgd(const Problem& problem, const TrainPlan& plan, const RunOptions& options);

struct EnvelopeRow {
  std::uint64_t t = 0;
  std::uint64_t sfo_count = 0;
  double loss_mean = 0.0, loss_min = 0.0, loss_max = 0.0;
  double grad_norm_mean = 0.0, grad_norm_min = 0.0, grad_norm_max = 0.0;
  std::uint64_t batch = 0;
  double lr = 0.0;
  /// Replicas contributing to this row.
  std::size_t count = 0;
};

struct ReplicatedRecord {
  std::vector<RunRecord> runs;
  /// Aligned on t (union over replicas, ascending).
  std::vector<EnvelopeRow> envelope;

  double mean_min_grad_norm() const;
  double mean_min_grad_norm_sq() const;
  double mean_f_gap() const;
  std::size_t diverged_runs() const;
};

/// One run per seed (base.seed is ignored), executed on a worker pool.
/// Results do not depend on the number of workers.
ReplicatedRecord run_replicated(const Problem& problem, const TrainPlan& plan,
                                std::span<const std::uint64_t> seeds, const RunOptions& base,
                                std::size_t workers = 0);

std::vector<EnvelopeRow> build_envelope(std::span<const RunRecord> runs);

}  // namespace sfolab

// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sfolab {

enum class ScheduleKind {
  ConstantBS_ConstantLR,
  LinearBS_ConstantLR,
  ExpBS_ConstantLR,
  ExpBS_ExpLR,
  Explicit,
};

std::string_view to_string(ScheduleKind kind);
/// Accepts the config spellings: constant, linear, exp_bs, exp_bs_exp_lr, explicit.
std::optional<ScheduleKind> parse_schedule_kind(std::string_view name);

bool grows_batch_exponentially(ScheduleKind kind);
bool grows_lr_exponentially(ScheduleKind kind);

struct ExplicitStage {
  std::uint64_t batch_size = 1;
  double lr = 0.1;

  friend bool operator==(const ExplicitStage&, const ExplicitStage&) = default;
};

/// Declarative batch-size / learning-rate growth policy.
///
/// Only the fields relevant to `kind` are read: `delta_b` by the linear
/// kind, `delta` by the exponential batch kinds, `gamma` by ExpBS_ExpLR and
/// `explicit_stages` by Explicit (whose length must equal `num_stages`).
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::ConstantBS_ConstantLR;
  std::uint64_t b0 = 16;
  double eta0 = 0.1;
  std::uint64_t delta_b = 0;
  double delta = 2.0;
  double gamma = 1.0;
  std::size_t num_stages = 1;
  std::uint64_t epochs_per_stage = 1;
  std::vector<ExplicitStage> explicit_stages;

  /// Throws std::invalid_argument on the first violated field invariant.
  void check() const;

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct StagePlan {
  std::size_t m = 0;
  std::uint64_t batch_size = 1;
  double lr = 0.0;
  std::uint64_t epochs = 1;
  std::uint64_t num_iterations = 0;
  /// End-exclusive: stage m covers iterations [cumulative - num_iterations, cumulative).
  std::uint64_t cumulative_iterations = 0;

  std::uint64_t first_iteration() const { return cumulative_iterations - num_iterations; }
  std::uint64_t sfo() const { return batch_size * num_iterations; }

  friend bool operator==(const StagePlan&, const StagePlan&) = default;
};

struct TrainPlan {
  std::vector<StagePlan> stages;
  std::uint64_t dataset_size = 0;
  ScheduleSpec spec;

  std::uint64_t total_iterations() const;
  std::uint64_t total_sfo() const;
  std::uint64_t max_batch_size() const;
  /// Stage executing global iteration t. Throws std::out_of_range past the end.
  const StagePlan& stage_at(std::uint64_t t) const;
  /// Per-iteration expansions, length total_iterations().
  std::vector<double> lr_series() const;
  std::vector<std::uint64_t> batch_series() const;

  friend bool operator==(const TrainPlan&, const TrainPlan&) = default;
};

/// Raw b_m before clamping to the dataset. Exponential sizes are rounded to
/// the nearest integer with a floor of 1 (and saturate instead of overflowing).
std::uint64_t batch_at_stage(const ScheduleSpec& spec, std::size_t m);
double lr_at_stage(const ScheduleSpec& spec, std::size_t m);

/// Resolves a spec against a dataset of `dataset_size` samples using the
/// spec's uniform epochs_per_stage.
TrainPlan build_plan(const ScheduleSpec& spec, std::uint64_t dataset_size);
/// Same, with an explicit epoch count per stage (see split_epoch_budget).
TrainPlan build_plan(const ScheduleSpec& spec, std::uint64_t dataset_size,
                     std::span<const std::uint64_t> stage_epochs);

/// Divides a total epoch budget evenly across `num_stages`; the remainder
/// goes to the last stage. Every stage gets at least one epoch.
std::vector<std::uint64_t> split_epoch_budget(std::uint64_t total_epochs,
                                              std::size_t num_stages);

enum class Severity { Info, Warning, Error };
std::string_view to_string(Severity s);

enum class DiagnosticCode {
  GrowthAligned,          // gamma^2/delta in [0.8, 1.0]
  BatchGrowsTooFast,      // gamma^2/delta < 0.8
  GammaSquaredExceedsDelta,
  LrAboveInverseL,        // first stage with eta_m > 1/L
  LrAtOrAboveTwoOverL,    // first stage with eta_m >= 2/L
};
std::string_view to_string(DiagnosticCode c);

struct Diagnostic {
  Severity severity = Severity::Info;
  DiagnosticCode code = DiagnosticCode::GrowthAligned;
  std::optional<std::size_t> stage;
  double value = 0.0;
  std::string message;
};

std::vector<Diagnostic> validate(const ScheduleSpec& spec,
                                 std::optional<double> smoothness = std::nullopt);
bool has_errors(std::span<const Diagnostic> diagnostics);

}  // namespace sfolab

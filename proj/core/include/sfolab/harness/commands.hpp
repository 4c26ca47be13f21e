// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfolab/harness/config.hpp"
#include "sfolab/schedule.hpp"
#include "sfolab/sgd.hpp"
#include "sfolab/theory.hpp"

namespace sfolab::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitHardDiagnostic = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitBoundViolated = 4;

/// Column sets. Every CSV written by the harness starts with one of these
/// header rows (per-seed run files are preceded by "# key=value" metadata).
inline const std::vector<std::string_view> kPlanColumns = {
    "m", "b_m", "eta_m", "epochs", "delta_t", "cumulative_t", "cumulative_sfo", "b_star_m"};
inline const std::vector<std::string_view> kRunColumns = {
    "t", "epoch", "m", "b_t", "eta_t", "sfo_count", "loss", "gradnorm"};
inline const std::vector<std::string_view> kEnvelopeColumns = {
    "t", "sfo_count", "loss_mean", "loss_min", "loss_max",
    "gradnorm_mean", "gradnorm_min", "gradnorm_max", "b_t", "eta_t"};
inline const std::vector<std::string_view> kStageColumns = {"seed", "m", "entry_loss",
                                                            "min_gradnorm"};
inline const std::vector<std::string_view> kTrainSummaryColumns = {
    "seeds", "iterations", "sfo_count", "mean_min_gradnorm", "min_min_gradnorm",
    "max_min_gradnorm", "diverged_runs", "truncated_runs"};
inline const std::vector<std::string_view> kSweepColumns = {
    "axis", "value", "mean_min_gradnorm", "min_min_gradnorm", "max_min_gradnorm",
    "mean_min_gradnorm_sq", "iterations", "sfo_count", "diverged_runs", "argmin"};
inline const std::vector<std::string_view> kSfoCurveColumns = {"b", "T", "N", "b_star", "N_star"};
inline const std::vector<std::string_view> kBoundColumns = {
    "seed", "iterations", "f_gap", "min_gradnorm_sq", "bound", "ratio"};

/// Overrides from the command line.
struct CommandOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::uint64_t> cadence;
};

void apply_overrides(ExperimentConfig& config, const CommandOptions& options);

// --- plan -------------------------------------------------------------------

struct PlanReport {
  TrainPlan plan;
  std::vector<Diagnostic> diagnostics;
  double L = 0.0;
  std::optional<double> sigma2;
  /// b*_m per stage; present when [theory] eps is set.
  std::optional<std::vector<double>> critical_batches;
};

PlanReport plan_report(const ExperimentConfig& config);
void write_plan_csv(const PlanReport& report, std::ostream& os);
int cmd_plan(ExperimentConfig config, const CommandOptions& options, std::ostream& out);

// --- train ------------------------------------------------------------------

struct TrainResult {
  TrainPlan plan;
  ReplicatedRecord record;
  std::filesystem::path dir;
};

void write_run_csv(const RunRecord& run, const TrainPlan& plan, std::ostream& os);
void write_envelope_csv(std::span<const EnvelopeRow> envelope, std::ostream& os);

/// Runs every seed and writes train_* files into `dir` (created if needed).
TrainResult run_train(const ExperimentConfig& config, const std::filesystem::path& dir);
int cmd_train(ExperimentConfig config, const CommandOptions& options, std::ostream& out);

// --- sweep ------------------------------------------------------------------

enum class SweepAxis { Gamma, Delta, DeltaB };
std::string_view to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

struct SweepCell {
  double value = 0.0;
  TrainPlan plan;
  ReplicatedRecord record;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Gamma;
  std::vector<SweepCell> cells;
  /// Cell with the smallest mean min-grad-norm among non-diverged cells.
  std::optional<std::size_t> argmin;
};

/// Throws std::invalid_argument when the axis does not apply to the schedule kind.
ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, double value);
SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                      const std::optional<std::filesystem::path>& dir);
int cmd_sweep(ExperimentConfig config, const CommandOptions& options, SweepAxis axis,
              std::span<const double> values, std::ostream& out);

// --- sfo-curve --------------------------------------------------------------

struct SfoCurveRow {
  double b = 0.0;
  std::optional<double> iterations;
  std::optional<double> sfo;
};

struct SfoCurve {
  theory::BoundConstants constants;
  /// Integer grid rows, then the analytic minimizer row (b = b*).
  std::vector<SfoCurveRow> rows;
  double b_star = 0.0;
  double n_star = 0.0;
  std::optional<std::string> diagnostic;
};

/// Throws theory::DomainError when no b in [b_lo, b_hi] is admissible.
SfoCurve sfo_curve(const theory::BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi);
void write_sfo_curve_csv(const SfoCurve& curve, std::ostream& os);
/// (C1, C2, eps) from a config: problem L and sigma^2, schedule eta0,
/// [theory] eps, and [theory] f_gap or the mean initial gap over the seeds.
theory::BoundConstants constants_from_config(const ExperimentConfig& config);
int cmd_sfo_curve(const theory::BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi,
                  const std::filesystem::path& dir, std::ostream& out);

// --- bound-report -----------------------------------------------------------

struct RunCsv {
  std::map<std::string, std::string> metadata;
  std::vector<IterationRow> rows;
};

RunCsv read_run_csv(const std::filesystem::path& path);

struct SeedBound {
  std::string seed;
  std::uint64_t iterations = 0;
  double f_gap = 0.0;
  double observed_min_sq = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

struct BoundReport {
  std::vector<SeedBound> seeds;
  double mean_observed = 0.0;
  double mean_bound = 0.0;
  double ratio = 0.0;
};

/// Recomputes the bound from each run's recorded (eta_t, b_t) and f_gap.
/// Rejects runs recorded with cadence > 1.
BoundReport bound_report(std::span<const RunCsv> runs, double L, double sigma2);
int cmd_bound_report(ExperimentConfig config, const CommandOptions& options,
                     const std::vector<std::filesystem::path>& runs, std::ostream& out);

/// Output root when no config is involved: --out, $SFOLAB_OUTPUT_ROOT, default.
std::filesystem::path default_output_root(const std::optional<std::filesystem::path>& cli_out);

}  // namespace sfolab::harness

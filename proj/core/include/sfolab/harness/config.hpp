// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sfolab/problems.hpp"
#include "sfolab/schedule.hpp"
#include "sfolab/sgd.hpp"

namespace sfolab::harness {

/// Parse or validation failure. line() is 1-based, 0 when the problem is not
/// tied to a single line (e.g. a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct ProblemSection {
  ProblemKind kind = ProblemKind::NoisyQuadratic;
  /// Dataset size; for noisy_quadratic the nominal epoch length.
  std::uint64_t n = 1024;
  std::size_t dim = 10;
  /// noisy_quadratic only.
  double sigma2 = 1.0;
  /// noisy_quadratic eigenvalues; empty means all ones.
  std::vector<double> spectrum;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  /// Monte-Carlo settings for estimating sigma^2 on finite sums.
  std::uint64_t sigma2_draws = 2000;
  std::size_t sigma2_probes = 4;

  friend bool operator==(const ProblemSection&, const ProblemSection&) = default;
};

struct RunSection {
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t record_cadence = 1;
  std::optional<std::uint64_t> total_epoch_budget;
  std::optional<std::uint64_t> epochs_per_stage;
  SamplingMode sampling = SamplingMode::WithReplacement;

  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct OutputSection {
  /// Output root; empty defers to the environment / built-in default.
  std::string directory;
  std::string prefix = "experiment";

  friend bool operator==(const OutputSection&, const OutputSection&) = default;
};

struct TheorySection {
  /// Stage-0 target accuracy for the b*_m overlay and sfo-curve.
  std::optional<double> eps;
  /// Objective gap for sfo-curve; defaults to the expected initial gap.
  std::optional<double> f_gap;

  friend bool operator==(const TheorySection&, const TheorySection&) = default;
};

struct ExperimentConfig {
  ProblemSection problem;
  ScheduleSpec schedule;
  RunSection run;
  OutputSection output;
  TheorySection theory;

  /// Epochs for each stage: the even split of total_epoch_budget, or
  /// epochs_per_stage repeated.
  std::vector<std::uint64_t> stage_epochs() const;
  /// total_epoch_budget * n when a total budget is configured.
  std::optional<std::uint64_t> sfo_budget() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Environment variable consulted for the output root when neither --out
/// nor [output] directory is given.
inline constexpr const char* kOutputRootEnv = "SFOLAB_OUTPUT_ROOT";
inline constexpr const char* kDefaultOutputRoot = "sfolab-out";

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

/// "1,2,5..8" -> {1,2,5,6,7,8}
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);

TrainPlan make_plan(const ExperimentConfig& config);
/// Builds the configured problem. For finite sums, sigma^2 is estimated
/// when `estimate_noise` is set (probe points drawn like theta_0).
std::unique_ptr<Problem> make_problem(const ExperimentConfig& config, bool estimate_noise);
RunOptions make_run_options(const ExperimentConfig& config);

/// --out, then [output] directory, then $SFOLAB_OUTPUT_ROOT, then "sfolab-out";
/// the experiment directory is <root>/<prefix>.
std::filesystem::path experiment_dir(const ExperimentConfig& config,
                                     const std::optional<std::filesystem::path>& cli_out);

}  // namespace sfolab::harness

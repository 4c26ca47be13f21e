// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sfolab {

namespace {

constexpr double kAlignedLow = 0.8;
constexpr double kAlignedHigh = 1.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("ScheduleSpec: ") + what);
}

void check_stage(const ScheduleSpec& spec, std::size_t m) {
  if (m >= spec.num_stages) {
    throw std::out_of_range("stage index " + std::to_string(m) + " out of range [0, " +
                            std::to_string(spec.num_stages) + ")");
  }
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// gamma as seen by the gamma^2 ~ delta pairing rule; constant LR is gamma = 1.
double effective_gamma(const ScheduleSpec& spec) {
  return spec.kind == ScheduleKind::ExpBS_ExpLR ? spec.gamma : 1.0;
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::ConstantBS_ConstantLR: return "constant";
    case ScheduleKind::LinearBS_ConstantLR: return "linear";
    case ScheduleKind::ExpBS_ConstantLR: return "exp_bs";
    case ScheduleKind::ExpBS_ExpLR: return "exp_bs_exp_lr";
    case ScheduleKind::Explicit: return "explicit";
  }
  return "unknown";
}

std::optional<ScheduleKind> parse_schedule_kind(std::string_view name) {
  for (auto k : {ScheduleKind::ConstantBS_ConstantLR, ScheduleKind::LinearBS_ConstantLR,
                 ScheduleKind::ExpBS_ConstantLR, ScheduleKind::ExpBS_ExpLR,
                 ScheduleKind::Explicit}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool grows_batch_exponentially(ScheduleKind kind) {
  return kind == ScheduleKind::ExpBS_ConstantLR || kind == ScheduleKind::ExpBS_ExpLR;
}

bool grows_lr_exponentially(ScheduleKind kind) { return kind == ScheduleKind::ExpBS_ExpLR; }

void ScheduleSpec::check() const {
  require(num_stages >= 1, "num_stages must be >= 1");
  require(epochs_per_stage >= 1, "epochs_per_stage must be >= 1");
  if (kind == ScheduleKind::Explicit) {
    require(explicit_stages.size() == num_stages,
            "explicit_stages must list exactly num_stages entries");
    for (const auto& s : explicit_stages) {
      require(s.batch_size >= 1, "explicit batch sizes must be >= 1");
      require(std::isfinite(s.lr) && s.lr > 0.0, "explicit learning rates must be > 0");
    }
    return;
  }
  require(b0 >= 1, "b0 must be >= 1");
  require(std::isfinite(eta0) && eta0 > 0.0, "eta0 must be > 0");
  if (grows_batch_exponentially(kind)) {
    require(std::isfinite(delta) && delta > 1.0, "delta must be > 1");
  }
  if (kind == ScheduleKind::ExpBS_ExpLR) {
    require(std::isfinite(gamma) && gamma > 1.0, "gamma must be > 1");
  }
}

std::uint64_t TrainPlan::total_iterations() const {
  return stages.empty() ? 0 : stages.back().cumulative_iterations;
}

std::uint64_t TrainPlan::total_sfo() const {
  std::uint64_t total = 0;
  for (const auto& s : stages) total += s.sfo();
  return total;
}

std::uint64_t TrainPlan::max_batch_size() const {
  std::uint64_t b = 0;
  for (const auto& s : stages) b = std::max(b, s.batch_size);
  return b;
}

const StagePlan& TrainPlan::stage_at(std::uint64_t t) const {
  auto it = std::upper_bound(stages.begin(), stages.end(), t,
                             [](std::uint64_t v, const StagePlan& s) {
                               return v < s.cumulative_iterations;
                             });
  if (it == stages.end()) throw std::out_of_range("iteration beyond plan");
  return *it;
}

std::vector<double> TrainPlan::lr_series() const {
  std::vector<double> out;
  out.reserve(total_iterations());
  for (const auto& s : stages) out.insert(out.end(), s.num_iterations, s.lr);
  return out;
}

std::vector<std::uint64_t> TrainPlan::batch_series() const {
  std::vector<std::uint64_t> out;
  out.reserve(total_iterations());
  for (const auto& s : stages) out.insert(out.end(), s.num_iterations, s.batch_size);
  return out;
}

std::uint64_t batch_at_stage(const ScheduleSpec& spec, std::size_t m) {
  check_stage(spec, m);
  switch (spec.kind) {
    case ScheduleKind::ConstantBS_ConstantLR:
      return spec.b0;
    case ScheduleKind::LinearBS_ConstantLR:
      return spec.b0 + static_cast<std::uint64_t>(m) * spec.delta_b;
    case ScheduleKind::ExpBS_ConstantLR:
    case ScheduleKind::ExpBS_ExpLR: {
      const double raw = static_cast<double>(spec.b0) * std::pow(spec.delta, static_cast<double>(m));
      constexpr double kSaturate = 9.0e18;
      if (!(raw < kSaturate)) return static_cast<std::uint64_t>(kSaturate);
      return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(raw)));
    }
    case ScheduleKind::Explicit:
      return spec.explicit_stages.at(m).batch_size;
  }
  return spec.b0;
}

double lr_at_stage(const ScheduleSpec& spec, std::size_t m) {
  check_stage(spec, m);
  switch (spec.kind) {
    case ScheduleKind::ExpBS_ExpLR:
      return spec.eta0 * std::pow(spec.gamma, static_cast<double>(m));
    case ScheduleKind::Explicit:
      return spec.explicit_stages.at(m).lr;
    default:
      return spec.eta0;
  }
}

TrainPlan build_plan(const ScheduleSpec& spec, std::uint64_t dataset_size) {
  spec.check();
  std::vector<std::uint64_t> epochs(spec.num_stages, spec.epochs_per_stage);
  return build_plan(spec, dataset_size, epochs);
}

TrainPlan build_plan(const ScheduleSpec& spec, std::uint64_t dataset_size,
                     std::span<const std::uint64_t> stage_epochs) {
  spec.check();
  if (dataset_size < 1) throw std::invalid_argument("build_plan: dataset_size must be >= 1");
  if (stage_epochs.size() != spec.num_stages) {
    throw std::invalid_argument("build_plan: need one epoch count per stage");
  }

  TrainPlan plan;
  plan.dataset_size = dataset_size;
  plan.spec = spec;
  plan.stages.reserve(spec.num_stages);
  std::uint64_t cumulative = 0;
  for (std::size_t m = 0; m < spec.num_stages; ++m) {
    if (stage_epochs[m] < 1) throw std::invalid_argument("build_plan: stage epochs must be >= 1");
    StagePlan s;
    s.m = m;
    s.batch_size = std::min(batch_at_stage(spec, m), dataset_size);
    s.lr = lr_at_stage(spec, m);
    s.epochs = stage_epochs[m];
    s.num_iterations = ceil_div(dataset_size, s.batch_size) * s.epochs;
    cumulative += s.num_iterations;
    s.cumulative_iterations = cumulative;
    plan.stages.push_back(s);
  }
  return plan;
}

std::vector<std::uint64_t> split_epoch_budget(std::uint64_t total_epochs,
                                              std::size_t num_stages) {
  if (num_stages == 0) throw std::invalid_argument("split_epoch_budget: num_stages must be >= 1");
  if (total_epochs < num_stages) {
    throw std::invalid_argument("split_epoch_budget: budget of " + std::to_string(total_epochs) +
                                " epochs cannot cover " + std::to_string(num_stages) + " stages");
  }
  std::vector<std::uint64_t> out(num_stages, total_epochs / num_stages);
  out.back() += total_epochs % num_stages;
  return out;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "unknown";
}

std::string_view to_string(DiagnosticCode c) {
  switch (c) {
    case DiagnosticCode::GrowthAligned: return "growth-aligned";
    case DiagnosticCode::BatchGrowsTooFast: return "batch-grows-too-fast";
    case DiagnosticCode::GammaSquaredExceedsDelta: return "gamma-squared-exceeds-delta";
    case DiagnosticCode::LrAboveInverseL: return "lr-above-1/L";
    case DiagnosticCode::LrAtOrAboveTwoOverL: return "lr-at-or-above-2/L";
  }
  return "unknown";
}

std::vector<Diagnostic> validate(const ScheduleSpec& spec, std::optional<double> smoothness) {
  std::vector<Diagnostic> out;

  if (grows_batch_exponentially(spec.kind)) {
    const double gamma = effective_gamma(spec);
    const double ratio = gamma * gamma / spec.delta;
    std::ostringstream msg;
    msg << "gamma^2/delta = " << ratio << " (gamma=" << gamma << ", delta=" << spec.delta << "): ";
    Diagnostic d;
    d.value = ratio;
    if (ratio > kAlignedHigh) {
      d.severity = Severity::Warning;
      d.code = DiagnosticCode::GammaSquaredExceedsDelta;
      msg << "violates gamma^2 < delta; the learning rate outgrows the batch";
    } else if (ratio >= kAlignedLow) {
      d.severity = Severity::Info;
      d.code = DiagnosticCode::GrowthAligned;
      msg << "batch growth tracks the critical batch size";
    } else {
      d.severity = Severity::Warning;
      d.code = DiagnosticCode::BatchGrowsTooFast;
      msg << "batch grows faster than the critical batch size";
    }
    d.message = msg.str();
    out.push_back(std::move(d));
  }

  if (smoothness) {
    const double L = *smoothness;
    if (!(L > 0.0)) throw std::invalid_argument("validate: smoothness constant must be > 0");
    bool above_inverse = false;
    for (std::size_t m = 0; m < spec.num_stages; ++m) {
      const double eta = lr_at_stage(spec, m);
      if (!above_inverse && eta > 1.0 / L) {
        above_inverse = true;
        std::ostringstream msg;
        msg << "stage " << m << ": eta=" << eta << " exceeds 1/L=" << 1.0 / L
            << "; C1 grows past its minimum";
        out.push_back({Severity::Warning, DiagnosticCode::LrAboveInverseL, m, eta, msg.str()});
      }
      if (eta >= 2.0 / L) {
        std::ostringstream msg;
        msg << "stage " << m << ": eta=" << eta << " >= 2/L=" << 2.0 / L
            << "; convergence guarantee void";
        out.push_back({Severity::Error, DiagnosticCode::LrAtOrAboveTwoOverL, m, eta, msg.str()});
        break;
      }
    }
  }
  return out;
}

bool has_errors(std::span<const Diagnostic> diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace sfolab

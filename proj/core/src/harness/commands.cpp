// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sfolab/harness/csv.hpp"
#include "sfolab/harness/manifest.hpp"

namespace sfolab::harness {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t max_iterations(const ReplicatedRecord& rec) {
  std::uint64_t t = 0;
  for (const auto& r : rec.runs) t = std::max(t, r.iterations);
  return t;
}

std::uint64_t max_sfo(const ReplicatedRecord& rec) {
  std::uint64_t s = 0;
  for (const auto& r : rec.runs) s = std::max(s, r.sfo_count);
  return s;
}

std::pair<double, double> min_max_min_grad(const ReplicatedRecord& rec) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rec.runs) {
    lo = std::min(lo, r.min_grad_norm);
    hi = std::max(hi, r.min_grad_norm);
  }
  return {lo, hi};
}

void print_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& out) {
  for (const auto& d : diags) {
    out << '[' << to_string(d.severity) << "] " << to_string(d.code) << ": " << d.message << '\n';
  }
}

std::vector<fs::path> expand_run_paths(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind("train_seed", 0) == 0 && e.path().extension() == ".csv") {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

void apply_overrides(ExperimentConfig& config, const CommandOptions& options) {
  if (options.seeds) {
    if (options.seeds->empty()) throw std::invalid_argument("--seeds: empty list");
    config.run.seeds = *options.seeds;
  }
  if (options.cadence) {
    if (*options.cadence < 1) throw std::invalid_argument("--cadence must be >= 1");
    config.run.record_cadence = *options.cadence;
  }
}

fs::path default_output_root(const std::optional<fs::path>& cli_out) {
  ExperimentConfig defaults;
  return experiment_dir(defaults, cli_out).parent_path();
}

// --- plan -------------------------------------------------------------------

PlanReport plan_report(const ExperimentConfig& config) {
  PlanReport r;
  r.plan = make_plan(config);
  const bool want_overlay = config.theory.eps.has_value();
  const auto problem = make_problem(config, want_overlay);
  r.L = problem->constants().L;
  r.sigma2 = problem->constants().sigma2;
  r.diagnostics = validate(config.schedule, r.L);
  if (want_overlay && r.sigma2 && !has_errors(r.diagnostics)) {
    const auto eps = theory::rate_eps_schedule(config.schedule, *config.theory.eps);
    r.critical_batches = theory::stage_critical_batch_sizes(r.plan, r.L, *r.sigma2, eps);
  }
  return r;
}

void write_plan_csv(const PlanReport& report, std::ostream& os) {
  csv::write_header(os, kPlanColumns);
  std::uint64_t sfo = 0;
  for (const auto& s : report.plan.stages) {
    sfo += s.sfo();
    csv::Row row;
    row.add(static_cast<std::uint64_t>(s.m)).add(s.batch_size).add(s.lr).add(s.epochs);
    row.add(s.num_iterations).add(s.cumulative_iterations).add(sfo);
    if (report.critical_batches) {
      row.add((*report.critical_batches)[s.m]);
    } else {
      row.empty();
    }
    csv::write_row(os, row);
  }
}

int cmd_plan(ExperimentConfig config, const CommandOptions& options, std::ostream& out) {
  apply_overrides(config, options);
  const auto report = plan_report(config);
  const auto dir = experiment_dir(config, options.out);
  ensure_dir(dir);
  {
    auto os = open_out(dir / "plan.csv");
    write_plan_csv(report, os);
  }

  out << "schedule " << to_string(config.schedule.kind) << " on " << to_string(config.problem.kind)
      << " (n=" << config.problem.n << ", L=" << csv::format_double(report.L) << ")\n";
  auto cell = [&out](std::size_t width, const std::string& text) {
    out << std::setw(static_cast<int>(width)) << text << ' ';
  };
  cell(3, "m");
  cell(10, "b_m");
  cell(20, "eta_m");
  cell(6, "epochs");
  cell(10, "delta_t");
  cell(12, "cum_t");
  cell(14, "cum_sfo");
  if (report.critical_batches) cell(20, "b_star_m");
  out << '\n';
  std::uint64_t sfo = 0;
  for (const auto& s : report.plan.stages) {
    sfo += s.sfo();
    cell(3, std::to_string(s.m));
    cell(10, std::to_string(s.batch_size));
    cell(20, csv::format_double(s.lr));
    cell(6, std::to_string(s.epochs));
    cell(10, std::to_string(s.num_iterations));
    cell(12, std::to_string(s.cumulative_iterations));
    cell(14, std::to_string(sfo));
    if (report.critical_batches) cell(20, csv::format_double((*report.critical_batches)[s.m]));
    out << '\n';
  }
  if (auto budget = config.sfo_budget()) out << "sfo budget: " << *budget << '\n';
  print_diagnostics(report.diagnostics, out);
  write_manifest(dir);
  return has_errors(report.diagnostics) ? kExitHardDiagnostic : kExitOk;
}

// --- train ------------------------------------------------------------------

void write_run_csv(const RunRecord& run, const TrainPlan& plan, std::ostream& os) {
  os << "# seed=" << run.seed << '\n';
  os << "# cadence=" << run.record_cadence << '\n';
  os << "# init_scale=" << csv::format_double(run.init_scale) << '\n';
  os << "# initial_loss=" << csv::format_double(run.initial_loss) << '\n';
  os << "# f_gap=" << csv::format_double(run.f_gap) << '\n';
  os << "# iterations=" << run.iterations << '\n';
  os << "# diverged=" << (run.diverged ? 1 : 0) << '\n';
  csv::write_header(os, kRunColumns);
  const double n = static_cast<double>(plan.dataset_size);
  for (const auto& r : run.rows) {
    csv::Row row;
    row.add(r.t).add(static_cast<double>(r.sfo_count) / n).add(static_cast<std::uint64_t>(r.m));
    row.add(r.batch).add(r.lr).add(r.sfo_count).add(r.loss).add(r.grad_norm);
    csv::write_row(os, row);
  }
}

void write_envelope_csv(std::span<const EnvelopeRow> envelope, std::ostream& os) {
  csv::write_header(os, kEnvelopeColumns);
  for (const auto& e : envelope) {
    csv::Row row;
    row.add(e.t).add(e.sfo_count).add(e.loss_mean).add(e.loss_min).add(e.loss_max);
    row.add(e.grad_norm_mean).add(e.grad_norm_min).add(e.grad_norm_max).add(e.batch).add(e.lr);
    csv::write_row(os, row);
  }
}

TrainResult run_train(const ExperimentConfig& config, const fs::path& dir) {
  TrainResult result;
  result.plan = make_plan(config);
  result.dir = dir;
  const auto problem = make_problem(config, false);
  result.record = run_replicated(*problem, result.plan, config.run.seeds, make_run_options(config));

  ensure_dir(dir);
  for (const auto& run : result.record.runs) {
    auto os = open_out(dir / ("train_seed" + std::to_string(run.seed) + ".csv"));
    write_run_csv(run, result.plan, os);
  }
  {
    auto os = open_out(dir / "train_envelope.csv");
    write_envelope_csv(result.record.envelope, os);
  }
  {
    auto os = open_out(dir / "train_stages.csv");
    csv::write_header(os, kStageColumns);
    for (const auto& run : result.record.runs) {
      for (const auto& s : run.stages) {
        csv::Row row;
        row.add(run.seed).add(static_cast<std::uint64_t>(s.m)).add(s.entry_loss);
        row.add(std::isnan(s.min_grad_norm) ? std::optional<double>{} : s.min_grad_norm);
        csv::write_row(os, row);
      }
    }
  }
  {
    auto os = open_out(dir / "train_summary.csv");
    csv::write_header(os, kTrainSummaryColumns);
    const auto [lo, hi] = min_max_min_grad(result.record);
    const auto truncated = static_cast<std::uint64_t>(std::count_if(
        result.record.runs.begin(), result.record.runs.end(), [](const RunRecord& r) { return r.truncated; }));
    csv::Row row;
    row.add(static_cast<std::uint64_t>(result.record.runs.size())).add(max_iterations(result.record));
    row.add(max_sfo(result.record)).add(result.record.mean_min_grad_norm()).add(lo).add(hi);
    row.add(static_cast<std::uint64_t>(result.record.diverged_runs())).add(truncated);
    csv::write_row(os, row);
  }
  return result;
}

int cmd_train(ExperimentConfig config, const CommandOptions& options, std::ostream& out) {
  apply_overrides(config, options);
  const auto dir = experiment_dir(config, options.out);
  const auto result = run_train(config, dir);

  std::ostringstream summary;
  summary << "generated " << timestamp() << '\n';
  summary << "problem " << to_string(config.problem.kind) << ", schedule "
          << to_string(config.schedule.kind) << ", " << result.record.runs.size() << " seed(s)\n";
  for (const auto& run : result.record.runs) {
    summary << "seed " << run.seed << ": iterations=" << run.iterations << " sfo=" << run.sfo_count
            << " min_gradnorm=" << csv::format_double(run.min_grad_norm)
            << " wall=" << csv::format_double(std::round(run.wall_seconds * 1e4) / 1e4) << "s";
    if (run.diverged) summary << " DIVERGED at t=" << *run.diverged_at;
    if (run.truncated) summary << " (stopped by sfo budget)";
    summary << '\n';
  }
  summary << "mean min_gradnorm " << csv::format_double(result.record.mean_min_grad_norm())
          << ", total sfo " << max_sfo(result.record) << '\n';
  {
    auto os = open_out(dir / "train_summary.txt");
    os << summary.str();
  }
  write_manifest(dir);
  out << summary.str();
  return result.record.diverged_runs() > 0 ? kExitDiverged : kExitOk;
}

// --- sweep ------------------------------------------------------------------

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::Delta: return "delta";
    case SweepAxis::DeltaB: return "delta_b";
  }
  return "unknown";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::Gamma, SweepAxis::Delta, SweepAxis::DeltaB}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, double value) {
  ExperimentConfig c = config;
  const auto kind = config.schedule.kind;
  switch (axis) {
    case SweepAxis::Gamma:
      if (kind != ScheduleKind::ExpBS_ExpLR) {
        throw std::invalid_argument("sweep axis gamma needs schedule kind exp_bs_exp_lr");
      }
      c.schedule.gamma = value;
      break;
    case SweepAxis::Delta:
      if (!grows_batch_exponentially(kind)) {
        throw std::invalid_argument("sweep axis delta needs an exponential batch schedule");
      }
      c.schedule.delta = value;
      break;
    case SweepAxis::DeltaB:
      if (kind != ScheduleKind::LinearBS_ConstantLR) {
        throw std::invalid_argument("sweep axis delta_b needs schedule kind linear");
      }
      if (!(value >= 0.0) || value != std::floor(value)) {
        throw std::invalid_argument("delta_b values must be nonnegative integers");
      }
      c.schedule.delta_b = static_cast<std::uint64_t>(value);
      break;
  }
  c.schedule.check();
  return c;
}

SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const double> values,
                      const std::optional<fs::path>& dir) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<ExperimentConfig> cells;
  for (double v : values) cells.push_back(with_axis_value(config, axis, v));

  // One budget for every cell: the configured total, or the first cell's
  // nominal M*E*n when stages carry a fixed epoch count.
  const std::uint64_t budget = config.sfo_budget().value_or(
      static_cast<std::uint64_t>(config.schedule.num_stages) * config.run.epochs_per_stage.value_or(1) *
      config.problem.n);

  SweepResult result;
  result.axis = axis;
  const auto problem = make_problem(config, false);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    SweepCell cell;
    cell.value = values[i];
    cell.plan = make_plan(cells[i]);
    auto opts = make_run_options(cells[i]);
    opts.sfo_budget = budget;
    cell.record = run_replicated(*problem, cell.plan, cells[i].run.seeds, opts);
    result.cells.push_back(std::move(cell));
  }

  double best = INFINITY;
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& rec = result.cells[i].record;
    if (rec.diverged_runs() > 0) continue;
    const double v = rec.mean_min_grad_norm();
    if (v < best) {
      best = v;
      result.argmin = i;
    }
  }

  if (dir) {
    ensure_dir(*dir);
    const auto axis_name = std::string(to_string(axis));
    auto os = open_out(*dir / ("sweep_" + axis_name + ".csv"));
    csv::write_header(os, kSweepColumns);
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const auto& cell = result.cells[i];
      const auto [lo, hi] = min_max_min_grad(cell.record);
      csv::Row row;
      row.add(axis_name).add(cell.value).add(cell.record.mean_min_grad_norm()).add(lo).add(hi);
      row.add(cell.record.mean_min_grad_norm_sq()).add(max_iterations(cell.record));
      row.add(max_sfo(cell.record)).add(static_cast<std::uint64_t>(cell.record.diverged_runs()));
      row.add(static_cast<std::uint64_t>(result.argmin == i ? 1 : 0));
      csv::write_row(os, row);

      auto env = open_out(*dir / ("sweep_" + axis_name + "_" + csv::format_double(cell.value) +
                                  "_envelope.csv"));
      write_envelope_csv(cell.record.envelope, env);
    }
  }
  return result;
}

int cmd_sweep(ExperimentConfig config, const CommandOptions& options, SweepAxis axis,
              std::span<const double> values, std::ostream& out) {
  apply_overrides(config, options);
  const auto dir = experiment_dir(config, options.out);
  const auto result = run_sweep(config, axis, values, dir);

  std::ostringstream summary;
  summary << "generated " << timestamp() << '\n';
  summary << "sweep over " << to_string(axis) << " with " << config.run.seeds.size() << " seed(s)\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& cell = result.cells[i];
    summary << to_string(axis) << '=' << csv::format_double(cell.value)
            << ": mean min_gradnorm=" << csv::format_double(cell.record.mean_min_grad_norm())
            << " sfo=" << max_sfo(cell.record);
    if (cell.record.diverged_runs()) summary << " diverged=" << cell.record.diverged_runs();
    if (result.argmin == i) summary << "  <- argmin";
    summary << '\n';
  }
  {
    auto os = open_out(dir / "sweep_summary.txt");
    os << summary.str();
  }
  write_manifest(dir);
  out << summary.str();
  return kExitOk;
}

// --- sfo-curve --------------------------------------------------------------

SfoCurve sfo_curve(const theory::BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi) {
  if (b_lo < 1 || b_hi < b_lo) throw std::invalid_argument("sfo-curve: need 1 <= b_min <= b_max");
  SfoCurve curve;
  curve.constants = k;
  const auto critical = theory::critical_batch_size(k);
  curve.b_star = critical.batch;
  curve.n_star = theory::min_sfo_complexity(k);
  curve.diagnostic = critical.diagnostic;

  bool any = false;
  const double threshold = k.admissible_threshold();
  for (std::uint64_t b = b_lo; b <= b_hi; ++b) {
    SfoCurveRow row;
    row.b = static_cast<double>(b);
    if (k.admissible(row.b)) {
      row.iterations = theory::iterations_to_eps(k, row.b);
      row.sfo = theory::sfo_complexity(k, row.b);
      any = true;
    }
    curve.rows.push_back(row);
  }
  if (!any) {
    throw theory::DomainError("sfo-curve: no batch size in [" + std::to_string(b_lo) + ", " +
                                  std::to_string(b_hi) + "] is above C2/eps^2",
                              threshold);
  }
  SfoCurveRow star;
  star.b = curve.b_star;
  if (k.admissible(curve.b_star)) {
    star.iterations = theory::iterations_to_eps(k, curve.b_star);
    star.sfo = theory::sfo_complexity(k, curve.b_star);
  }
  curve.rows.push_back(star);
  return curve;
}

void write_sfo_curve_csv(const SfoCurve& curve, std::ostream& os) {
  csv::write_header(os, kSfoCurveColumns);
  for (const auto& r : curve.rows) {
    csv::Row row;
    row.add(r.b).add(r.iterations).add(r.sfo).add(curve.b_star).add(curve.n_star);
    csv::write_row(os, row);
  }
}

theory::BoundConstants constants_from_config(const ExperimentConfig& config) {
  if (!config.theory.eps) throw std::invalid_argument("sfo-curve: [theory] eps is required");
  const auto problem = make_problem(config, true);
  const auto& c = problem->constants();
  double f_gap = 0.0;
  if (config.theory.f_gap) {
    f_gap = *config.theory.f_gap;
  } else {
    for (auto seed : config.run.seeds) {
      f_gap += problem->loss(initial_point(c.dim, config.problem.init_scale, seed)) - c.f_star;
    }
    f_gap /= static_cast<double>(config.run.seeds.size());
  }
  const theory::ComplexityParams params(std::max(0.0, f_gap), c.L, c.sigma2.value_or(0.0),
                                        config.schedule.eta0, *config.theory.eps);
  return theory::constants(params);
}

int cmd_sfo_curve(const theory::BoundConstants& k, std::uint64_t b_lo, std::uint64_t b_hi,
                  const fs::path& dir, std::ostream& out) {
  const auto curve = sfo_curve(k, b_lo, b_hi);
  ensure_dir(dir);
  {
    auto os = open_out(dir / "sfo_curve.csv");
    write_sfo_curve_csv(curve, os);
  }
  write_manifest(dir);
  out << "C1=" << csv::format_double(k.c1) << " C2=" << csv::format_double(k.c2)
      << " eps=" << csv::format_double(k.eps) << '\n';
  out << "b*=" << csv::format_double(curve.b_star) << " N(b*)=" << csv::format_double(curve.n_star)
      << '\n';
  if (curve.diagnostic) out << "[info] " << *curve.diagnostic << '\n';
  out << "wrote " << (dir / "sfo_curve.csv").string() << '\n';
  return kExitOk;
}

// --- bound-report -----------------------------------------------------------

RunCsv read_run_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read run file " + path.string());
  RunCsv out;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = csv::trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        out.metadata[std::string(csv::trim(body.substr(0, eq)))] =
            std::string(csv::trim(body.substr(eq + 1)));
      }
      continue;
    }
    const auto fields = csv::split(line);
    if (!header_seen) {
      if (fields.size() != kRunColumns.size() || !std::equal(fields.begin(), fields.end(), kRunColumns.begin())) {
        throw bad("not a run CSV (unexpected header)");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kRunColumns.size()) throw bad("wrong field count");
    IterationRow r;
    auto t = csv::parse_uint(fields[0]);
    auto m = csv::parse_uint(fields[2]);
    auto b = csv::parse_uint(fields[3]);
    auto eta = csv::parse_double(fields[4]);
    auto sfo = csv::parse_uint(fields[5]);
    auto loss = csv::parse_double(fields[6]);
    auto g = csv::parse_double(fields[7]);
    if (!t || !m || !b || !eta || !sfo || !loss || !g) throw bad("unparseable field");
    r.t = *t;
    r.m = *m;
    r.batch = *b;
    r.lr = *eta;
    r.sfo_count = *sfo;
    r.loss = *loss;
    r.grad_norm = *g;
    out.rows.push_back(r);
  }
  if (!header_seen) throw std::runtime_error(path.string() + ": missing header");
  return out;
}

BoundReport bound_report(std::span<const RunCsv> runs, double L, double sigma2) {
  if (runs.empty()) throw std::invalid_argument("bound-report: no runs given");
  BoundReport report;
  for (const auto& run : runs) {
    auto meta = [&](const char* key) -> const std::string& {
      auto it = run.metadata.find(key);
      if (it == run.metadata.end()) {
        throw std::invalid_argument(std::string("bound-report: run is missing '# ") + key + "='");
      }
      return it->second;
    };
    const auto cadence = csv::parse_uint(meta("cadence"));
    if (!cadence || *cadence != 1) {
      throw std::invalid_argument("bound-report: runs must be recorded with cadence 1");
    }
    const auto f_gap = csv::parse_double(meta("f_gap"));
    const auto iterations = csv::parse_uint(meta("iterations"));
    if (!f_gap || !iterations) throw std::invalid_argument("bound-report: bad run metadata");
    if (*iterations == 0) throw std::invalid_argument("bound-report: run has no iterations");
    if (run.rows.size() != *iterations + 1) {
      throw std::invalid_argument("bound-report: expected one row per iteration plus the terminal row");
    }

    theory::Lemma1Accumulator acc(*f_gap, L, sigma2);
    double observed = INFINITY;
    for (std::uint64_t t = 0; t < *iterations; ++t) {
      const auto& row = run.rows[t];
      if (row.t != t) throw std::invalid_argument("bound-report: rows are not consecutive in t");
      acc.push(row.lr, row.batch);
      observed = std::min(observed, row.grad_norm * row.grad_norm);
    }
    SeedBound s;
    s.seed = run.metadata.count("seed") ? run.metadata.at("seed") : std::string("?");
    s.iterations = *iterations;
    s.f_gap = *f_gap;
    s.observed_min_sq = observed;
    s.bound = acc.bound();
    s.ratio = observed / s.bound;
    report.seeds.push_back(s);
  }
  for (const auto& s : report.seeds) {
    report.mean_observed += s.observed_min_sq;
    report.mean_bound += s.bound;
  }
  report.mean_observed /= static_cast<double>(report.seeds.size());
  report.mean_bound /= static_cast<double>(report.seeds.size());
  report.ratio = report.mean_observed / report.mean_bound;
  return report;
}

int cmd_bound_report(ExperimentConfig config, const CommandOptions& options,
                     const std::vector<fs::path>& runs, std::ostream& out) {
  apply_overrides(config, options);
  const auto paths = expand_run_paths(runs);
  if (paths.empty()) throw std::invalid_argument("bound-report: no run CSVs found");
  std::vector<RunCsv> parsed;
  for (const auto& p : paths) parsed.push_back(read_run_csv(p));

  const auto problem = make_problem(config, true);
  const auto& c = problem->constants();
  const double sigma2 = c.sigma2.value_or(0.0);
  const auto report = bound_report(parsed, c.L, sigma2);

  const auto dir = experiment_dir(config, options.out);
  ensure_dir(dir);
  {
    auto os = open_out(dir / "bound_report.csv");
    csv::write_header(os, kBoundColumns);
    for (const auto& s : report.seeds) {
      csv::Row row;
      row.add(s.seed).add(s.iterations).add(s.f_gap).add(s.observed_min_sq).add(s.bound).add(s.ratio);
      csv::write_row(os, row);
    }
  }
  std::ostringstream text;
  text << "L=" << csv::format_double(c.L) << " sigma2=" << csv::format_double(sigma2)
       << (c.sigma2_certified ? " (certified)" : " (estimated)") << '\n';
  for (const auto& s : report.seeds) {
    text << "seed " << s.seed << ": min_t ||grad||^2=" << csv::format_double(s.observed_min_sq)
         << " bound=" << csv::format_double(s.bound) << " ratio=" << csv::format_double(s.ratio) << '\n';
  }
  text << "mean over " << report.seeds.size() << " run(s): observed="
       << csv::format_double(report.mean_observed) << " bound=" << csv::format_double(report.mean_bound)
       << " ratio=" << csv::format_double(report.ratio) << (report.ratio <= 1.0 ? " (holds)" : " (VIOLATED)")
       << '\n';
  {
    auto os = open_out(dir / "bound_report.txt");
    os << text.str();
  }
  write_manifest(dir);
  out << text.str();
  return report.ratio <= 1.0 ? kExitOk : kExitBoundViolated;
}

}  // namespace sfolab::harness

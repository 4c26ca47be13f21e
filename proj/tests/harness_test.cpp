// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sfolab/harness/commands.hpp"
#include "sfolab/harness/config.hpp"
#include "sfolab/harness/csv.hpp"
#include "sfolab/harness/manifest.hpp"

namespace sfolab::harness {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("sfolab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kBasic = R"(# comment
[problem]
kind = noisy_quadratic
n = 256
dim = 4
sigma2 = 1.0

[schedule]
kind = exp_bs_exp_lr   # inline comment
b0 = 16
eta0 = 0.1
delta = 2.0
gamma = 1.4
num_stages = 3

[run]
seeds = 0..2
epochs_per_stage = 1

[output]
prefix = basic
)";

TEST(ParseConfig, Basic) {
  const auto c = parse_config(kBasic);
  EXPECT_EQ(c.problem.kind, ProblemKind::NoisyQuadratic);
  EXPECT_EQ(c.problem.n, 256u);
  EXPECT_EQ(c.schedule.kind, ScheduleKind::ExpBS_ExpLR);
  EXPECT_EQ(c.schedule.gamma, 1.4);
  EXPECT_EQ(c.run.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.stage_epochs(), (std::vector<std::uint64_t>{1, 1, 1}));
  EXPECT_FALSE(c.sfo_budget().has_value());
  EXPECT_EQ(c.output.prefix, "basic");
}

TEST(ParseConfig, EpochBudget) {
  std::string text = kBasic;
  text.replace(text.find("epochs_per_stage = 1"), 20, "total_epoch_budget = 7");
  const auto c = parse_config(text);
  EXPECT_EQ(c.stage_epochs(), (std::vector<std::uint64_t>{2, 2, 3}));
  EXPECT_EQ(c.sfo_budget(), 7u * 256u);
}

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return 0;
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[problem]\nkind = noisy_quadratic\nbogus = 3\n"), 3u);
  EXPECT_EQ(error_line("[nowhere]\n"), 1u);
  EXPECT_EQ(error_line("kind = linear\n"), 1u);
  EXPECT_EQ(error_line("[problem]\nn = 12x\n"), 2u);
  EXPECT_EQ(error_line("[problem]\nn = 1\nn = 2\n"), 3u);
  EXPECT_EQ(error_line("[problem]\n\nkind\n"), 3u);
  EXPECT_EQ(error_line("[problem]\nkind = mnist\n"), 2u);
  EXPECT_EQ(error_line("[schedule]\nkind =\n"), 2u);
}

TEST(ParseConfig, ValidationErrors) {
  std::string neither = kBasic;
  neither.replace(neither.find("epochs_per_stage = 1"), 20, "");
  EXPECT_THROW(parse_config(neither), ConfigError);
  std::string two = kBasic;
  two.replace(two.find("epochs_per_stage = 1"), 20, "epochs_per_stage = 1\ntotal_epoch_budget = 9");
  EXPECT_THROW(parse_config(two), ConfigError);
  std::string bad_gamma = kBasic;
  bad_gamma.replace(bad_gamma.find("gamma = 1.4"), 11, "gamma = 1.0");
  EXPECT_THROW(parse_config(bad_gamma), ConfigError);
  EXPECT_THROW(parse_config("[schedule]\nkind = constant\n[run]\nepochs_per_stage = 1\n"), ConfigError);
}

ExperimentConfig random_config(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ExperimentConfig c;
  c.problem.kind = static_cast<ProblemKind>(gen() % 3);
  c.problem.n = 1 + gen() % 100000;
  c.problem.dim = 1 + gen() % 20;
  c.problem.sigma2 = u(gen) * 3;
  c.problem.seed = gen() % 1000;
  c.problem.init_scale = u(gen) * 5 + 1e-3;
  if (gen() % 2) {
    for (std::size_t i = 0; i < c.problem.dim; ++i) c.problem.spectrum.push_back(u(gen) + 1e-9);
  }
  c.schedule.kind = static_cast<ScheduleKind>(gen() % 5);
  c.schedule.b0 = 1 + gen() % 512;
  c.schedule.eta0 = u(gen) / 3 + 1e-6;
  c.schedule.delta_b = gen() % 64;
  c.schedule.delta = 1.0 + u(gen) * 3 + 1e-6;
  c.schedule.gamma = c.schedule.kind == ScheduleKind::ExpBS_ExpLR ? 1.0 + u(gen) + 1e-6 : 1.0;
  c.schedule.num_stages = 1 + gen() % 8;
  if (c.schedule.kind == ScheduleKind::Explicit) {
    for (std::size_t m = 0; m < c.schedule.num_stages; ++m) {
      c.schedule.explicit_stages.push_back({1 + gen() % 300, u(gen) + 1e-3});
    }
  }
  c.run.seeds.clear();
  for (std::size_t i = 0, k = 1 + gen() % 6; i < k; ++i) c.run.seeds.push_back(gen() % 100);
  c.run.record_cadence = 1 + gen() % 10;
  if (gen() % 2) {
    c.run.total_epoch_budget = c.schedule.num_stages + gen() % 50;
  } else {
    c.run.epochs_per_stage = 1 + gen() % 5;
  }
  c.schedule.epochs_per_stage = c.run.epochs_per_stage.value_or(1);
  c.run.sampling = gen() % 2 ? SamplingMode::EpochShuffle : SamplingMode::WithReplacement;
  c.output.directory = gen() % 2 ? "" : "out/dir";
  c.output.prefix = "p" + std::to_string(gen() % 100);
  if (gen() % 2) c.theory.eps = u(gen) + 1e-3;
  if (gen() % 2) c.theory.f_gap = u(gen) * 10;
  return c;
}

TEST(ConfigRoundTrip, ParseSerializeParseIsIdentity) {
  std::mt19937_64 gen(2026);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_config(gen);
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    ASSERT_EQ(back, c) << text;
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(ParseLists, SeedsAndDoubles) {
  EXPECT_EQ(parse_seed_list("1,2,5..8"), (std::vector<std::uint64_t>{1, 2, 5, 6, 7, 8}));
  EXPECT_EQ(parse_seed_list(" 3 "), (std::vector<std::uint64_t>{3}));
  EXPECT_THROW(parse_seed_list("5..2"), std::invalid_argument);
  EXPECT_THROW(parse_seed_list("a"), std::invalid_argument);
  EXPECT_EQ(parse_double_list("1.1, 1.2,1.3"), (std::vector<double>{1.1, 1.2, 1.3}));
  EXPECT_THROW(parse_double_list("1.1,,2"), std::invalid_argument);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double(1e-300), "1e-300");
  EXPECT_EQ(csv::format_double(2.0), "2");
  EXPECT_EQ(csv::format_double(std::nan("")), "nan");
  std::mt19937_64 gen(1);
  for (int i = 0; i < 1000; ++i) {
    double v;
    const auto bits = gen();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(csv::parse_double(csv::format_double(v)), v);
  }
}

TEST(Csv, RowAndSplit) {
  csv::Row r;
  r.add(std::uint64_t{3}).add(0.5).empty().add(std::string_view("x"));
  EXPECT_EQ(r.str(), "3,0.5,,x");
  const auto f = csv::split(r.str());
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[2], "");
}

TEST(OutputDir, Precedence) {
  ExperimentConfig c;
  c.output.prefix = "px";
  ::setenv(kOutputRootEnv, "/env/root", 1);
  EXPECT_EQ(experiment_dir(c, fs::path("/cli")), fs::path("/cli/px"));
  EXPECT_EQ(experiment_dir(c, std::nullopt), fs::path("/env/root/px"));
  c.output.directory = "/cfg";
  EXPECT_EQ(experiment_dir(c, std::nullopt), fs::path("/cfg/px"));
  ::unsetenv(kOutputRootEnv);
  c.output.directory.clear();
  EXPECT_EQ(experiment_dir(c, std::nullopt), fs::path(kDefaultOutputRoot) / "px");
}

TEST(CmdPlan, WritesTableAndDiagnostics) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  CommandOptions o;
  o.out = tmp.path();
  std::ostringstream out;
  EXPECT_EQ(cmd_plan(c, o, out), kExitOk);
  EXPECT_NE(out.str().find("growth-aligned"), std::string::npos);
  const auto csv_text = slurp(tmp.path() / "basic" / "plan.csv");
  EXPECT_EQ(count_lines(csv_text), 4u);
  EXPECT_EQ(csv_text.substr(0, csv_text.find('\n')), "m,b_m,eta_m,epochs,delta_t,cumulative_t,cumulative_sfo,b_star_m");
  EXPECT_TRUE(fs::exists(tmp.path() / "basic" / kManifestName));

  c.schedule.gamma = 1.5;
  std::ostringstream warn;
  EXPECT_EQ(cmd_plan(c, o, warn), kExitOk);
  EXPECT_NE(warn.str().find("gamma-squared-exceeds-delta"), std::string::npos);

  c.schedule.eta0 = 1.5;
  std::ostringstream hard;
  EXPECT_EQ(cmd_plan(c, o, hard), kExitHardDiagnostic);
}

TEST(CmdPlan, SingleStageConstant) {
  TempDir tmp;
  auto c = parse_config("[problem]\nkind = noisy_quadratic\nn = 100\n[schedule]\nkind = constant\n"
                        "[run]\nepochs_per_stage = 1\n[theory]\neps = 0.5\n");
  const auto report = plan_report(c);
  ASSERT_EQ(report.plan.stages.size(), 1u);
  ASSERT_TRUE(report.critical_batches.has_value());
  std::ostringstream os;
  write_plan_csv(report, os);
  EXPECT_EQ(count_lines(os.str()), 2u);
}

TEST(CmdTrain, FilesRowCountsAndDeterminism) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  CommandOptions o;
  o.out = tmp.path();
  o.cadence = 3;
  std::ostringstream out;
  ASSERT_EQ(cmd_train(c, o, out), kExitOk);
  const auto dir = tmp.path() / "basic";
  const auto plan = make_plan(c);
  const std::uint64_t T = plan.total_iterations();
  const auto env = slurp(dir / "train_envelope.csv");
  EXPECT_EQ(count_lines(env), 1 + (T + 2) / 3 + 1);
  for (int s = 0; s < 3; ++s) EXPECT_TRUE(fs::exists(dir / ("train_seed" + std::to_string(s) + ".csv")));

  const auto first = slurp(dir / "train_seed1.csv");
  const auto summary = slurp(dir / "train_summary.csv");
  ASSERT_EQ(cmd_train(c, o, out), kExitOk);
  EXPECT_EQ(slurp(dir / "train_seed1.csv"), first);
  EXPECT_EQ(slurp(dir / "train_summary.csv"), summary);
  EXPECT_EQ(slurp(dir / "train_envelope.csv"), env);

  // Plan/execution SFO consistency.
  const auto rec = run_train(c, tmp.path() / "again");
  for (const auto& r : rec.record.runs) EXPECT_EQ(r.sfo_count, plan.total_sfo());
}

TEST(CmdTrain, NoiselessGradnormColumnIsGeometric) {
  TempDir tmp;
  auto c = parse_config("[problem]\nkind = noisy_quadratic\nn = 64\ndim = 3\nsigma2 = 0\n[schedule]\n"
                        "kind = constant\nb0 = 4\neta0 = 0.25\n[run]\nepochs_per_stage = 1\n");
  const auto result = run_train(c, tmp.path());
  const auto runcsv = read_run_csv(tmp.path() / "train_seed0.csv");
  ASSERT_EQ(runcsv.rows.size(), 17u);
  const double g0 = runcsv.rows[0].grad_norm;
  for (const auto& r : runcsv.rows) {
    EXPECT_NEAR(r.grad_norm, g0 * std::pow(0.75, static_cast<double>(r.t)), 1e-12 * g0);
  }
}

TEST(CmdTrain, DivergenceExitCode) {
  TempDir tmp;
  auto c = parse_config("[problem]\nkind = noisy_quadratic\nn = 4000\ndim = 2\nsigma2 = 0\n[schedule]\n"
                        "kind = constant\nb0 = 1\neta0 = 3\n[run]\nepochs_per_stage = 1\n");
  CommandOptions o;
  o.out = tmp.path();
  std::ostringstream out;
  EXPECT_EQ(cmd_train(c, o, out), kExitDiverged);
  EXPECT_NE(out.str().find("DIVERGED"), std::string::npos);
}

TEST(CmdSweep, MarksArgminAndWritesPerCellEnvelopes) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  const std::vector<double> values{1.1, 1.4};
  const auto result = run_sweep(c, SweepAxis::Gamma, values, tmp.path());
  ASSERT_EQ(result.cells.size(), 2u);
  ASSERT_TRUE(result.argmin.has_value());
  const auto text = slurp(tmp.path() / "sweep_gamma.csv");
  EXPECT_EQ(count_lines(text), 3u);
  EXPECT_TRUE(fs::exists(tmp.path() / "sweep_gamma_1.1_envelope.csv"));
  EXPECT_TRUE(fs::exists(tmp.path() / "sweep_gamma_1.4_envelope.csv"));
  EXPECT_THROW(run_sweep(c, SweepAxis::DeltaB, values, std::nullopt), std::invalid_argument);
}

TEST(CmdSweep, SingleValueMatchesTrain) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  const std::vector<double> values{1.4};
  const auto sweep = run_sweep(c, SweepAxis::Gamma, values, std::nullopt);
  const auto train = run_train(c, tmp.path());
  ASSERT_EQ(sweep.cells[0].record.runs.size(), train.record.runs.size());
  for (std::size_t i = 0; i < train.record.runs.size(); ++i) {
    EXPECT_EQ(sweep.cells[0].record.runs[i].rows, train.record.runs[i].rows);
  }
}

TEST(CmdSweep, EqualBudgetAcrossCells) {
  auto c = parse_config(kBasic);
  c.run.epochs_per_stage.reset();
  c.run.total_epoch_budget = 6;
  const std::vector<double> values{2.0, 3.0, 4.0};
  const auto sweep = run_sweep(c, SweepAxis::Delta, values, std::nullopt);
  for (const auto& cell : sweep.cells) {
    for (const auto& r : cell.record.runs) EXPECT_LE(r.sfo_count, 6u * 256u);
  }
}

TEST(SfoCurve, MinimumRowAndMarkers) {
  const theory::BoundConstants k{10, 0.05, 0.1};
  const auto curve = sfo_curve(k, 1, 100);
  ASSERT_EQ(curve.rows.size(), 101u);
  EXPECT_FALSE(curve.rows[4].sfo.has_value());  // b = 5 is the threshold
  EXPECT_TRUE(curve.rows[5].sfo.has_value());
  std::size_t best = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (curve.rows[i].sfo && (!curve.rows[best].sfo || *curve.rows[i].sfo < *curve.rows[best].sfo)) best = i;
  }
  EXPECT_EQ(curve.rows[best].b, 10.0);
  EXPECT_NEAR(*curve.rows[best].iterations, 2000.0, 1e-9);
  EXPECT_NEAR(*curve.rows[best].sfo, 20000.0, 1e-8);
  EXPECT_NEAR(curve.rows.back().b, 10.0, 1e-12);
  for (std::size_t i = 6; i + 1 < 100; ++i) {
    EXPECT_GE(*curve.rows[i + 1].sfo - 2 * *curve.rows[i].sfo + *curve.rows[i - 1].sfo, -1e-9);
  }
  std::ostringstream os;
  write_sfo_curve_csv(curve, os);
  EXPECT_NE(os.str().find("\n4,,,"), std::string::npos);
  EXPECT_THROW(sfo_curve(k, 1, 5), theory::DomainError);
}

TEST(SfoCurve, NoiselessIncreasing) {
  const auto curve = sfo_curve(theory::BoundConstants{3, 0, 0.2}, 1, 50);
  for (std::size_t i = 1; i < 50; ++i) EXPECT_GT(*curve.rows[i].sfo, *curve.rows[i - 1].sfo);
  EXPECT_TRUE(curve.diagnostic.has_value());
}

TEST(BoundReport, NoiselessMatchesTheory) {
  TempDir tmp;
  auto c = parse_config("[problem]\nkind = noisy_quadratic\nn = 200\ndim = 3\nsigma2 = 0\n[schedule]\n"
                        "kind = linear\nb0 = 4\ndelta_b = 4\neta0 = 0.3\nnum_stages = 3\n[run]\nseeds = 0,1\n"
                        "epochs_per_stage = 1\n");
  const auto train = run_train(c, tmp.path());
  std::vector<RunCsv> runs{read_run_csv(tmp.path() / "train_seed0.csv"),
                           read_run_csv(tmp.path() / "train_seed1.csv")};
  const auto report = bound_report(runs, 1.0, 0.0);
  const auto plan = make_plan(c);
  for (std::size_t i = 0; i < 2; ++i) {
    const double expect =
        theory::lemma1_bound(train.record.runs[i].f_gap, 1.0, 0.0, plan.lr_series(), plan.batch_series());
    EXPECT_NEAR(report.seeds[i].bound, expect, 1e-12 * expect);
  }
  EXPECT_LE(report.ratio, 1.0);
}

TEST(BoundReport, RejectsCoarseCadence) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  c.run.record_cadence = 2;
  run_train(c, tmp.path());
  std::vector<RunCsv> runs{read_run_csv(tmp.path() / "train_seed0.csv")};
  EXPECT_THROW(bound_report(runs, 1.0, 1.0), std::invalid_argument);
}

TEST(BoundReport, CommandOverDirectory) {
  TempDir tmp;
  auto c = parse_config(kBasic);
  CommandOptions o;
  o.out = tmp.path();
  std::ostringstream out;
  ASSERT_EQ(cmd_train(c, o, out), kExitOk);
  std::ostringstream rep;
  EXPECT_EQ(cmd_bound_report(c, o, {tmp.path() / "basic"}, rep), kExitOk);
  EXPECT_NE(rep.str().find("(holds)"), std::string::npos);
  EXPECT_EQ(count_lines(slurp(tmp.path() / "basic" / "bound_report.csv")), 4u);
}

TEST(Manifest, ListsFilesWithHashes) {
  TempDir tmp;
  {
    std::ofstream(tmp.path() / "b.csv") << "abc";
    std::ofstream(tmp.path() / "a.csv") << "";
  }
  write_manifest(tmp.path());
  const auto text = slurp(tmp.path() / kManifestName);
  EXPECT_EQ(text,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  a.csv\n"
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  b.csv\n");
}

}  // namespace
}  // namespace sfolab::harness

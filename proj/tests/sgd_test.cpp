// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/sgd.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "sfolab/theory.hpp"

namespace sfolab {
namespace {

ScheduleSpec constant_spec(std::uint64_t b, double eta) {
  ScheduleSpec s;
  s.b0 = b;
  s.eta0 = eta;
  return s;
}

TEST(RunSgd, NoiselessQuadraticContractsGeometrically) {
  const auto p = noisy_quadratic(4, {1, 1, 1, 1}, 0.0, 0);
  const auto plan = build_plan(constant_spec(4, 0.1), 200);  // 50 iterations
  RunOptions opt;
  opt.seed = 3;
  const auto rec = run_sgd(*p, plan, opt);
  ASSERT_EQ(rec.rows.size(), 51u);
  const double g0 = rec.rows[0].grad_norm;
  for (const auto& row : rec.rows) {
    EXPECT_NEAR(row.grad_norm, g0 * std::pow(0.9, static_cast<double>(row.t)), 1e-12 * g0);
  }
  EXPECT_NEAR(rec.min_grad_norm, g0 * std::pow(0.9, 49), 1e-12 * g0);
}

TEST(RunSgd, BitwiseDeterministic) {
  const auto p = finite_sum_logistic(256, 5, 1);
  ScheduleSpec s;
  s.kind = ScheduleKind::ExpBS_ExpLR;
  s.b0 = 8;
  s.eta0 = 0.5;
  s.gamma = 1.2;
  s.num_stages = 3;
  const auto plan = build_plan(s, 256);
  RunOptions opt;
  opt.seed = 42;
  const auto a = run_sgd(*p, plan, opt);
  const auto b = run_sgd(*p, plan, opt);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.final_theta, b.final_theta);
  opt.seed = 43;
  EXPECT_NE(run_sgd(*p, plan, opt).final_theta, a.final_theta);
}

TEST(RunSgd, CadenceRowCount) {
  const auto p = noisy_quadratic(3, {1, 1, 1}, 1.0, 0);
  const auto plan = build_plan(constant_spec(1, 0.1), 103);
  for (std::uint64_t k : {1, 2, 7, 10, 103, 500}) {
    RunOptions opt;
    opt.record_cadence = k;
    const auto rec = run_sgd(*p, plan, opt);
    EXPECT_EQ(rec.rows.size(), (103 + k - 1) / k + 1) << k;
    EXPECT_EQ(rec.rows.back().t, 103u);
    for (std::size_t i = 0; i + 1 < rec.rows.size(); ++i) EXPECT_EQ(rec.rows[i].t % k, 0u);
  }
}

TEST(RunSgd, CadenceOneIsIdentityOnSubsampledRows) {
  const auto p = finite_sum_least_squares(64, 3, 2);
  const auto plan = build_plan(constant_spec(4, 0.05), 64);
  RunOptions one, five;
  five.record_cadence = 5;
  const auto a = run_sgd(*p, plan, one);
  const auto b = run_sgd(*p, plan, five);
  for (const auto& row : b.rows) EXPECT_EQ(row, a.rows[row.t]);
  EXPECT_EQ(a.final_theta, b.final_theta);
}

TEST(RunSgd, SfoMatchesPlan) {
  const auto p = finite_sum_logistic(100, 3, 4);
  ScheduleSpec s;
  s.kind = ScheduleKind::LinearBS_ConstantLR;
  s.b0 = 7;
  s.delta_b = 13;
  s.num_stages = 5;
  s.epochs_per_stage = 2;
  const auto plan = build_plan(s, 100);
  const auto rec = run_sgd(*p, plan, RunOptions{});
  EXPECT_EQ(rec.sfo_count, plan.total_sfo());
  EXPECT_EQ(rec.iterations, plan.total_iterations());
  std::uint64_t expect = 0;
  for (const auto& st : plan.stages) expect += theory::epoch_sfo(100, st.batch_size, st.epochs);
  EXPECT_EQ(rec.sfo_count, expect);
}

TEST(RunSgd, StageTransitionsFollowPlan) {
  const auto p = noisy_quadratic(2, {1, 1}, 1.0, 0);
  ScheduleSpec s;
  s.kind = ScheduleKind::ExpBS_ExpLR;
  s.b0 = 4;
  s.eta0 = 0.1;
  s.gamma = 1.5;
  s.num_stages = 3;
  const auto plan = build_plan(s, 32);
  const auto rec = run_sgd(*p, plan, RunOptions{});
  ASSERT_EQ(rec.stages.size(), 3u);
  for (const auto& row : rec.rows) {
    if (row.t == rec.iterations) continue;
    const auto& st = plan.stage_at(row.t);
    EXPECT_EQ(row.m, st.m);
    EXPECT_EQ(row.batch, st.batch_size);
    EXPECT_EQ(row.lr, st.lr);
  }
  EXPECT_DOUBLE_EQ(rec.stages[1].entry_loss, rec.rows[plan.stages[0].cumulative_iterations].loss);
}

TEST(RunSgd, SfoBudgetTruncates) {
  const auto p = noisy_quadratic(2, {1, 1}, 1.0, 0);
  const auto plan = build_plan(constant_spec(10, 0.1), 100);  // 10 iterations
  RunOptions opt;
  opt.sfo_budget = 55;
  const auto rec = run_sgd(*p, plan, opt);
  EXPECT_TRUE(rec.truncated);
  EXPECT_EQ(rec.iterations, 5u);
  EXPECT_EQ(rec.sfo_count, 50u);
  EXPECT_EQ(rec.rows.back().t, 5u);
}

TEST(RunSgd, DivergenceIsFlagged) {
  const auto p = noisy_quadratic(2, {1, 1}, 0.0, 0);
  const auto plan = build_plan(constant_spec(1, 3.0), 2000);
  const auto rec = run_sgd(*p, plan, RunOptions{});
  EXPECT_TRUE(rec.diverged);
  ASSERT_TRUE(rec.diverged_at.has_value());
  EXPECT_LT(rec.iterations, 2000u);
}

TEST(RunSgd, MinExcludesTerminalRow) {
  const auto p = noisy_quadratic(2, {1, 1}, 0.0, 0);
  const auto plan = build_plan(constant_spec(1, 0.5), 3);
  const auto rec = run_sgd(*p, plan, RunOptions{});
  ASSERT_EQ(rec.rows.size(), 4u);
  EXPECT_EQ(rec.min_grad_norm, rec.rows[2].grad_norm);
  EXPECT_LT(rec.rows[3].grad_norm, rec.min_grad_norm);
}

TEST(RunSgd, EpochShuffleVisitsEverySampleOncePerPass) {
  const auto p = finite_sum_least_squares(40, 3, 5);
  const auto plan = build_plan(constant_spec(40, 0.1), 40);
  RunOptions opt;
  opt.sampling = SamplingMode::EpochShuffle;
  opt.theta0 = Vector::Zero(3);
  const auto rec = run_sgd(*p, plan, opt);
  // A full-batch pass without replacement is exactly one gradient-descent step.
  const Vector expect = -0.1 * p->full_gradient(Vector::Zero(3));
  EXPECT_LE((rec.final_theta - expect).norm(), 1e-12);
  EXPECT_THROW(run_sgd(*noisy_quadratic(3, {1, 1, 1}, 1, 0), plan, opt), std::invalid_argument);
}

TEST(RunSgd, RejectsMismatchedDataset) {
  const auto p = finite_sum_least_squares(40, 3, 5);
  EXPECT_THROW(run_sgd(*p, build_plan(constant_spec(4, 0.1), 41), RunOptions{}), std::invalid_argument);
}

TEST(RunReplicated, EnvelopeBracketsRunsAndIgnoresWorkerCount) {
  const auto p = noisy_quadratic(3, {1, 0.5, 0.2}, 1.0, 0);
  const auto plan = build_plan(constant_spec(2, 0.2), 50);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  RunOptions opt;
  opt.record_cadence = 3;
  const auto a = run_replicated(*p, plan, seeds, opt, 1);
  const auto b = run_replicated(*p, plan, seeds, opt, 4);
  ASSERT_EQ(a.runs.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.runs[i].seed, seeds[i]);
    EXPECT_EQ(a.runs[i].rows, b.runs[i].rows);
  }
  ASSERT_EQ(a.envelope.size(), a.runs[0].rows.size());
  for (std::size_t r = 0; r < a.envelope.size(); ++r) {
    const auto& e = a.envelope[r];
    double sum = 0, lo = INFINITY, hi = -INFINITY;
    for (const auto& run : a.runs) {
      sum += run.rows[r].grad_norm;
      lo = std::min(lo, run.rows[r].grad_norm);
      hi = std::max(hi, run.rows[r].grad_norm);
    }
    EXPECT_EQ(e.count, 5u);
    EXPECT_NEAR(e.grad_norm_mean, sum / 5, 1e-12);
    EXPECT_EQ(e.grad_norm_min, lo);
    EXPECT_EQ(e.grad_norm_max, hi);
    EXPECT_LE(e.loss_min, e.loss_mean);
    EXPECT_LE(e.loss_mean, e.loss_max);
  }
  double mean = 0;
  for (const auto& run : a.runs) mean += run.min_grad_norm;
  EXPECT_NEAR(a.mean_min_grad_norm(), mean / 5, 1e-15);
  EXPECT_EQ(a.diverged_runs(), 0u);
}

}  // namespace
}  // namespace sfolab

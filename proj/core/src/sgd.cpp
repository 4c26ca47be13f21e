// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/sgd.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace sfolab {

namespace {

bool is_divergent(double loss) { return !std::isfinite(loss) || loss > kDivergenceLoss; }

/// Index source for SamplingMode::EpochShuffle: a fresh permutation of [0, n)
/// per pass, consumed in order across iterations.
class ShuffleSampler {
 public:
  ShuffleSampler(std::uint64_t n, std::uint64_t seed) : seed_(seed), perm_(n) { reshuffle(); }

  void next(std::uint64_t b, std::vector<std::uint64_t>& out) {
    out.clear();
    while (out.size() < b) {
      if (pos_ == perm_.size()) reshuffle();
      out.push_back(perm_[pos_++]);
    }
  }

 private:
  void reshuffle() {
    std::iota(perm_.begin(), perm_.end(), std::uint64_t{0});
    CounterRng rng(seed_, streams::kEpochShuffleBase + pass_++);
    std::shuffle(perm_.begin(), perm_.end(), rng);
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::vector<std::uint64_t> perm_;
  std::size_t pos_ = 0;
  std::uint64_t pass_ = 0;
};

}  // namespace

RunRecord run_sgd(const Problem& problem, const TrainPlan& plan, const RunOptions& options) {
  if (options.record_cadence < 1) throw std::invalid_argument("run_sgd: record_cadence must be >= 1");
  if (plan.stages.empty()) throw std::invalid_argument("run_sgd: empty plan");
  const auto& c = problem.constants();
  if (c.n) {
    if (plan.dataset_size != *c.n) {
      throw std::invalid_argument("run_sgd: plan dataset size does not match the problem");
    }
  }
  for (const auto& s : plan.stages) {
    if (s.batch_size < 1 || s.batch_size > plan.dataset_size) {
      throw std::invalid_argument("run_sgd: plan batch sizes must lie in [1, n]");
    }
  }

  const auto* finite = dynamic_cast<const FiniteSumProblem*>(&problem);
  std::optional<ShuffleSampler> shuffler;
  if (options.sampling == SamplingMode::EpochShuffle) {
    if (finite == nullptr) throw std::invalid_argument("run_sgd: epoch shuffling needs a finite-sum problem");
    shuffler.emplace(finite->size(), options.seed);
  }

  const auto start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.seed = options.seed;
  rec.record_cadence = options.record_cadence;
  rec.init_scale = options.init_scale;

  Vector theta = options.theta0 ? *options.theta0
                                : initial_point(problem.dim(), options.init_scale, options.seed);
  if (static_cast<std::size_t>(theta.size()) != problem.dim()) {
    throw std::invalid_argument("run_sgd: theta0 has the wrong dimension");
  }
  Vector grad(theta.size());
  Vector full(theta.size());
  std::vector<std::uint64_t> indices;

  rec.initial_loss = problem.loss(theta);
  rec.f_gap = rec.initial_loss - c.f_star;

  std::uint64_t t = 0;
  std::uint64_t sfo = 0;
  bool stop = false;

  auto record = [&](std::size_t m, std::uint64_t b, double lr) {
    IterationRow row;
    row.t = t;
    row.m = m;
    row.batch = b;
    row.lr = lr;
    row.loss = problem.loss_and_gradient(theta, full);
    row.grad_norm = full.norm();
    row.sfo_count = sfo;
    rec.rows.push_back(row);
    return row.loss;
  };

  for (const auto& stage : plan.stages) {
    if (stop) break;
    StageRow srow;
    srow.m = stage.m;
    srow.entry_loss = problem.loss(theta);
    srow.min_grad_norm = std::numeric_limits<double>::quiet_NaN();
    rec.stages.push_back(srow);
    if (is_divergent(srow.entry_loss)) {
      rec.diverged = true;
      rec.diverged_at = t;
      break;
    }

    for (std::uint64_t i = 0; i < stage.num_iterations; ++i) {
      if (options.sfo_budget && sfo + stage.batch_size > *options.sfo_budget) {
        rec.truncated = true;
        stop = true;
        break;
      }
      if (t % options.record_cadence == 0) {
        if (is_divergent(record(stage.m, stage.batch_size, stage.lr))) {
          rec.diverged = true;
          rec.diverged_at = t;
          stop = true;
          break;
        }
      }

      if (shuffler) {
        shuffler->next(stage.batch_size, indices);
        finite->gradient_on_indices(theta, indices, grad);
      } else {
        CounterRng rng(options.seed, t);
        problem.minibatch_gradient(theta, stage.batch_size, rng, grad);
      }
      theta -= stage.lr * grad;
      sfo += stage.batch_size;
      ++t;

      if (!theta.allFinite()) {
        rec.diverged = true;
        rec.diverged_at = t;
        stop = true;
        break;
      }
    }
  }

  // Terminal iterate, unless divergence was detected on a row already taken at t.
  if (rec.rows.empty() || rec.rows.back().t != t) {
    const auto& last = rec.stages.empty() ? plan.stages.front() : plan.stages[rec.stages.back().m];
    const double loss = record(last.m, last.batch_size, last.lr);
    if (!rec.diverged && is_divergent(loss)) {
      rec.diverged = true;
      rec.diverged_at = t;
    }
  }

  rec.iterations = t;
  rec.sfo_count = sfo;
  rec.final_theta = theta;

  rec.min_grad_norm = std::numeric_limits<double>::infinity();
  for (const auto& row : rec.rows) {
    if (row.t >= t) continue;
    rec.min_grad_norm = std::min(rec.min_grad_norm, row.grad_norm);
    auto& srow = rec.stages[row.m];
    if (std::isnan(srow.min_grad_norm) || row.grad_norm < srow.min_grad_norm) {
      srow.min_grad_norm = row.grad_norm;
    }
  }
  if (t == 0) rec.min_grad_norm = rec.rows.back().grad_norm;

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

double ReplicatedRecord::mean_min_grad_norm() const {
  if (runs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& r : runs) s += r.min_grad_norm;
  return s / static_cast<double>(runs.size());
}

double ReplicatedRecord::mean_min_grad_norm_sq() const {
  if (runs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& r : runs) s += r.min_grad_norm * r.min_grad_norm;
  return s / static_cast<double>(runs.size());
}

double ReplicatedRecord::mean_f_gap() const {
  if (runs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& r : runs) s += r.f_gap;
  return s / static_cast<double>(runs.size());
}

std::size_t ReplicatedRecord::diverged_runs() const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return r.diverged; }));
}

std::vector<EnvelopeRow> build_envelope(std::span<const RunRecord> runs) {
  std::map<std::uint64_t, EnvelopeRow> by_t;
  for (const auto& run : runs) {
    for (const auto& row : run.rows) {
      auto [it, inserted] = by_t.try_emplace(row.t);
      auto& e = it->second;
      if (inserted) {
        e.t = row.t;
        e.sfo_count = row.sfo_count;
        e.batch = row.batch;
        e.lr = row.lr;
        e.loss_min = e.grad_norm_min = std::numeric_limits<double>::infinity();
        e.loss_max = e.grad_norm_max = -std::numeric_limits<double>::infinity();
      }
      e.loss_mean += row.loss;
      e.grad_norm_mean += row.grad_norm;
      e.loss_min = std::min(e.loss_min, row.loss);
      e.loss_max = std::max(e.loss_max, row.loss);
      e.grad_norm_min = std::min(e.grad_norm_min, row.grad_norm);
      e.grad_norm_max = std::max(e.grad_norm_max, row.grad_norm);
      ++e.count;
    }
  }
  std::vector<EnvelopeRow> out;
  out.reserve(by_t.size());
  for (auto& [t, e] : by_t) {
    e.loss_mean /= static_cast<double>(e.count);
    e.grad_norm_mean /= static_cast<double>(e.count);
    // Keep mean inside [min, max] when the replicas agree to the last bit.
    e.loss_mean = std::clamp(e.loss_mean, e.loss_min, e.loss_max);
    e.grad_norm_mean = std::clamp(e.grad_norm_mean, e.grad_norm_min, e.grad_norm_max);
    out.push_back(e);
  }
  return out;
}

ReplicatedRecord run_replicated(const Problem& problem, const TrainPlan& plan,
                                std::span<const std::uint64_t> seeds, const RunOptions& base,
                                std::size_t workers) {
  if (seeds.empty()) throw std::invalid_argument("run_replicated: need at least one seed");
  ReplicatedRecord out;
  out.runs.resize(seeds.size());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, seeds.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(seeds.size());
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RunOptions opts = base;
        opts.seed = seeds[i];
        out.runs[i] = run_sgd(problem, plan, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.envelope = build_envelope(out.runs);
  return out;
}

}  // namespace sfolab

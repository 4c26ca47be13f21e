// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

// Command line front end: plan, train, sweep, sfo-curve, bound-report.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sfolab/harness/commands.hpp"
#include "sfolab/harness/config.hpp"
#include "sfolab/theory.hpp"

namespace {

using namespace sfolab;
using namespace sfolab::harness;

struct Common {
  std::string config;
  std::string out;
  std::string seeds;
  std::uint64_t cadence = 0;

  CommandOptions options() const {
    CommandOptions o;
    if (!out.empty()) o.out = out;
    if (!seeds.empty()) o.seeds = parse_seed_list(seeds);
    if (cadence > 0) o.cadence = cadence;
    return o;
  }
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "Experiment config (INI)");
  if (config_required) opt->required();
  app->add_option("--out", c.out, "Output root (overrides [output] directory and $SFOLAB_OUTPUT_ROOT)");
  app->add_option("--seeds", c.seeds, "Seed list, e.g. 0,1,4..9");
  app->add_option("--cadence", c.cadence, "Record every k-th iteration")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sfolab: batch-size and learning-rate schedule experiments"};
  app.require_subcommand(1);

  Common plan_opts, train_opts, sweep_opts, curve_opts, bound_opts;

  auto* plan = app.add_subcommand("plan", "Resolve and validate a schedule");
  add_common(plan, plan_opts, true);

  auto* train = app.add_subcommand("train", "Run seed-replicated training");
  add_common(train, train_opts, true);

  auto* sweep = app.add_subcommand("sweep", "Sweep one schedule parameter under a fixed SFO budget");
  add_common(sweep, sweep_opts, true);
  std::string axis;
  std::string values;
  sweep->add_option("--axis", axis, "gamma | delta | delta_b")->required();
  sweep->add_option("--values", values, "Comma separated values")->required();

  auto* curve = app.add_subcommand("sfo-curve", "Emit T(b) and N(b) over a batch-size range");
  add_common(curve, curve_opts, false);
  std::optional<double> c1, c2, eps, f_gap, L, sigma2, eta;
  std::uint64_t b_min = 1, b_max = 100;
  curve->add_option("--c1", c1);
  curve->add_option("--c2", c2);
  curve->add_option("--eps", eps);
  curve->add_option("--f-gap", f_gap);
  curve->add_option("--L", L);
  curve->add_option("--sigma2", sigma2);
  curve->add_option("--eta", eta);
  curve->add_option("--b-min", b_min)->check(CLI::PositiveNumber);
  curve->add_option("--b-max", b_max)->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound-report", "Compare recorded runs with the gradient-norm bound");
  add_common(bound, bound_opts, true);
  std::vector<std::string> run_paths;
  bound->add_option("--run", run_paths, "Run CSV or train output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*plan) {
      return cmd_plan(load_config(plan_opts.config), plan_opts.options(), std::cout);
    }
    if (*train) {
      return cmd_train(load_config(train_opts.config), train_opts.options(), std::cout);
    }
    if (*sweep) {
      const auto parsed_axis = parse_sweep_axis(axis);
      if (!parsed_axis) {
        std::cerr << "error: unknown axis '" << axis << "'\n";
        return kExitUsage;
      }
      const auto vals = parse_double_list(values);
      return cmd_sweep(load_config(sweep_opts.config), sweep_opts.options(), *parsed_axis, vals,
                       std::cout);
    }
    if (*curve) {
      theory::BoundConstants k;
      std::filesystem::path dir;
      if (c1 || c2) {
        if (!c1 || !c2 || !eps) {
          std::cerr << "error: --c1, --c2 and --eps go together\n";
          return kExitUsage;
        }
        k = theory::BoundConstants{*c1, *c2, *eps};
        dir = default_output_root(curve_opts.out.empty() ? std::nullopt
                                                         : std::optional<std::filesystem::path>(curve_opts.out)) /
              "sfo-curve";
      } else if (f_gap || L || sigma2 || eta) {
        if (!f_gap || !L || !sigma2 || !eta || !eps) {
          std::cerr << "error: --f-gap, --L, --sigma2, --eta and --eps go together\n";
          return kExitUsage;
        }
        k = theory::constants(theory::ComplexityParams(*f_gap, *L, *sigma2, *eta, *eps));
        dir = default_output_root(curve_opts.out.empty() ? std::nullopt
                                                         : std::optional<std::filesystem::path>(curve_opts.out)) /
              "sfo-curve";
      } else if (!curve_opts.config.empty()) {
        auto config = load_config(curve_opts.config);
        apply_overrides(config, curve_opts.options());
        if (eps) config.theory.eps = *eps;
        k = constants_from_config(config);
        dir = experiment_dir(config, curve_opts.options().out);
      } else {
        std::cerr << "error: sfo-curve needs --c1/--c2/--eps, --f-gap/--L/--sigma2/--eta/--eps or --config\n";
        return kExitUsage;
      }
      return cmd_sfo_curve(k, b_min, b_max, dir, std::cout);
    }
    if (*bound) {
      std::vector<std::filesystem::path> paths(run_paths.begin(), run_paths.end());
      return cmd_bound_report(load_config(bound_opts.config), bound_opts.options(), paths, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

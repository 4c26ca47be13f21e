// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sfolab/harness/csv.hpp"

namespace sfolab::harness {

namespace {

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

std::string with_line(std::size_t line, const std::string& message) {
  return line == 0 ? message : "line " + std::to_string(line) + ": " + message;
}

// Throws a bare std::invalid_argument; the parser attaches the line number.
double to_double(std::string_view v) {
  auto d = csv::parse_double(v);
  if (!d) throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  return *d;
}

std::uint64_t to_uint(std::string_view v) {
  auto u = csv::parse_uint(v);
  if (!u) throw std::invalid_argument("expected a nonnegative integer, got '" + std::string(v) + "'");
  return *u;
}

std::string_view sampling_name(SamplingMode m) {
  return m == SamplingMode::EpochShuffle ? "epoch_shuffle" : "with_replacement";
}

std::vector<ExplicitStage> parse_stages(std::string_view text) {
  std::vector<ExplicitStage> out;
  for (auto item : csv::split(text, ',')) {
    item = csv::trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("explicit stage '" + std::string(item) + "' must be batch:lr");
    }
    out.push_back({to_uint(item.substr(0, colon)), to_double(item.substr(colon + 1))});
  }
  if (out.empty()) throw std::invalid_argument("stages list is empty");
  return out;
}

const std::map<std::string, std::map<std::string, Setter>>& key_table() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"problem",
       {
           {"kind",
            [](ExperimentConfig& c, std::string_view v) {
              auto k = parse_problem_kind(v);
              if (!k) throw std::invalid_argument("unknown problem kind '" + std::string(v) + "'");
              c.problem.kind = *k;
            }},
           {"n", [](ExperimentConfig& c, std::string_view v) { c.problem.n = to_uint(v); }},
           {"dim", [](ExperimentConfig& c, std::string_view v) { c.problem.dim = to_uint(v); }},
           {"sigma2", [](ExperimentConfig& c, std::string_view v) { c.problem.sigma2 = to_double(v); }},
           {"spectrum",
            [](ExperimentConfig& c, std::string_view v) { c.problem.spectrum = parse_double_list(v); }},
           {"seed", [](ExperimentConfig& c, std::string_view v) { c.problem.seed = to_uint(v); }},
           {"init_scale",
            [](ExperimentConfig& c, std::string_view v) { c.problem.init_scale = to_double(v); }},
           {"sigma2_draws",
            [](ExperimentConfig& c, std::string_view v) { c.problem.sigma2_draws = to_uint(v); }},
           {"sigma2_probes",
            [](ExperimentConfig& c, std::string_view v) { c.problem.sigma2_probes = to_uint(v); }},
       }},
      {"schedule",
       {
           {"kind",
            [](ExperimentConfig& c, std::string_view v) {
              auto k = parse_schedule_kind(v);
              if (!k) throw std::invalid_argument("unknown schedule kind '" + std::string(v) + "'");
              c.schedule.kind = *k;
            }},
           {"b0", [](ExperimentConfig& c, std::string_view v) { c.schedule.b0 = to_uint(v); }},
           {"eta0", [](ExperimentConfig& c, std::string_view v) { c.schedule.eta0 = to_double(v); }},
           {"delta_b", [](ExperimentConfig& c, std::string_view v) { c.schedule.delta_b = to_uint(v); }},
           {"delta", [](ExperimentConfig& c, std::string_view v) { c.schedule.delta = to_double(v); }},
           {"gamma", [](ExperimentConfig& c, std::string_view v) { c.schedule.gamma = to_double(v); }},
           {"num_stages",
            [](ExperimentConfig& c, std::string_view v) { c.schedule.num_stages = to_uint(v); }},
           {"stages",
            [](ExperimentConfig& c, std::string_view v) { c.schedule.explicit_stages = parse_stages(v); }},
       }},
      {"run",
       {
           {"seeds", [](ExperimentConfig& c, std::string_view v) { c.run.seeds = parse_seed_list(v); }},
           {"record_cadence",
            [](ExperimentConfig& c, std::string_view v) { c.run.record_cadence = to_uint(v); }},
           {"total_epoch_budget",
            [](ExperimentConfig& c, std::string_view v) { c.run.total_epoch_budget = to_uint(v); }},
           {"epochs_per_stage",
            [](ExperimentConfig& c, std::string_view v) { c.run.epochs_per_stage = to_uint(v); }},
           {"sampling",
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "with_replacement") {
                c.run.sampling = SamplingMode::WithReplacement;
              } else if (v == "epoch_shuffle") {
                c.run.sampling = SamplingMode::EpochShuffle;
              } else {
                throw std::invalid_argument("sampling must be with_replacement or epoch_shuffle");
              }
            }},
       }},
      {"output",
       {
           {"directory", [](ExperimentConfig& c, std::string_view v) { c.output.directory = v; }},
           {"prefix", [](ExperimentConfig& c, std::string_view v) { c.output.prefix = v; }},
       }},
      {"theory",
       {
           {"eps", [](ExperimentConfig& c, std::string_view v) { c.theory.eps = to_double(v); }},
           {"f_gap", [](ExperimentConfig& c, std::string_view v) { c.theory.f_gap = to_double(v); }},
       }},
  };
  return table;
}

void validate_config(ExperimentConfig& c, const std::map<std::string, std::size_t>& lines) {
  auto line_of = [&](const std::string& key) {
    auto it = lines.find(key);
    return it == lines.end() ? std::size_t{0} : it->second;
  };
  auto fail = [&](const std::string& key, const std::string& msg) {
    throw ConfigError(line_of(key), msg);
  };

  if (!lines.count("problem.kind")) fail("problem.kind", "[problem] kind is required");
  if (!lines.count("schedule.kind")) fail("schedule.kind", "[schedule] kind is required");

  if (c.problem.n < 1) fail("problem.n", "n must be >= 1");
  if (c.problem.dim < 1) fail("problem.dim", "dim must be >= 1");
  if (!(c.problem.sigma2 >= 0.0)) fail("problem.sigma2", "sigma2 must be >= 0");
  if (!(c.problem.init_scale >= 0.0)) fail("problem.init_scale", "init_scale must be >= 0");
  if (!c.problem.spectrum.empty() && c.problem.spectrum.size() != c.problem.dim) {
    fail("problem.spectrum", "spectrum must list exactly dim eigenvalues");
  }
  for (double v : c.problem.spectrum) {
    if (!(v > 0.0)) fail("problem.spectrum", "eigenvalues must be positive");
  }
  if (c.problem.sigma2_draws < 1000) fail("problem.sigma2_draws", "sigma2_draws must be >= 1000");
  if (c.problem.sigma2_probes < 1) fail("problem.sigma2_probes", "sigma2_probes must be >= 1");

  if (c.schedule.kind == ScheduleKind::Explicit) {
    if (c.schedule.explicit_stages.empty()) fail("schedule.stages", "explicit schedules need stages");
    if (!lines.count("schedule.num_stages")) c.schedule.num_stages = c.schedule.explicit_stages.size();
  }

  const bool has_budget = c.run.total_epoch_budget.has_value();
  const bool has_epochs = c.run.epochs_per_stage.has_value();
  if (has_budget == has_epochs) {
    const auto key = has_budget ? "run.epochs_per_stage" : "run.total_epoch_budget";
    fail(key, "[run] needs exactly one of total_epoch_budget and epochs_per_stage");
  }
  c.schedule.epochs_per_stage = c.run.epochs_per_stage.value_or(1);
  if (has_epochs && *c.run.epochs_per_stage < 1) fail("run.epochs_per_stage", "epochs_per_stage must be >= 1");
  if (has_budget && *c.run.total_epoch_budget < c.schedule.num_stages) {
    fail("run.total_epoch_budget", "total_epoch_budget must give every stage at least one epoch");
  }
  if (c.run.seeds.empty()) fail("run.seeds", "seeds list is empty");
  if (c.run.record_cadence < 1) fail("run.record_cadence", "record_cadence must be >= 1");
  if (c.output.prefix.empty() || c.output.prefix.find('/') != std::string::npos) {
    fail("output.prefix", "prefix must be a nonempty plain name");
  }
  if (c.theory.eps && !(*c.theory.eps > 0.0)) fail("theory.eps", "eps must be > 0");
  if (c.theory.f_gap && !(*c.theory.f_gap >= 0.0)) fail("theory.f_gap", "f_gap must be >= 0");

  try {
    c.schedule.check();
  } catch (const std::invalid_argument& e) {
    fail("schedule.kind", e.what());
  }
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += csv::format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(with_line(line, message)), line_(line) {}

std::vector<std::uint64_t> ExperimentConfig::stage_epochs() const {
  if (run.total_epoch_budget) return split_epoch_budget(*run.total_epoch_budget, schedule.num_stages);
  return std::vector<std::uint64_t>(schedule.num_stages, run.epochs_per_stage.value_or(1));
}

std::optional<std::uint64_t> ExperimentConfig::sfo_budget() const {
  if (!run.total_epoch_budget) return std::nullopt;
  return *run.total_epoch_budget * problem.n;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (auto item : csv::split(text, ',')) {
    item = csv::trim(item);
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(to_uint(item));
      continue;
    }
    const auto lo = to_uint(item.substr(0, dots));
    const auto hi = to_uint(item.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range '" + std::string(item) + "' is reversed");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (auto item : csv::split(text, ',')) {
    item = csv::trim(item);
    if (item.empty()) throw std::invalid_argument("empty item in list '" + std::string(text) + "'");
    out.push_back(to_double(item));
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::string section;
  std::map<std::string, std::size_t> lines;
  std::set<std::string> sections_seen;
  const auto& table = key_table();

  std::size_t line_no = 0;
  for (auto raw : csv::split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty() || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
      section = std::string(csv::trim(line.substr(1, line.size() - 2)));
      if (!table.count(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      if (!sections_seen.insert(section).second) {
        throw ConfigError(line_no, "section [" + section + "] appears twice");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
    if (section.empty()) throw ConfigError(line_no, "key outside of any section");
    const std::string key(csv::trim(line.substr(0, eq)));
    const auto value = csv::trim(line.substr(eq + 1));
    const auto& keys = table.at(section);
    auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(line_no, "unknown key '" + key + "' in [" + section + "]");
    const auto full = section + "." + key;
    if (!lines.emplace(full, line_no).second) throw ConfigError(line_no, "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");
    try {
      it->second(c, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, e.what());
    }
  }

  validate_config(c, lines);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto d = [](double v) { return csv::format_double(v); };

  os << "[problem]\n";
  os << "kind = " << to_string(c.problem.kind) << '\n';
  os << "n = " << c.problem.n << '\n';
  os << "dim = " << c.problem.dim << '\n';
  os << "sigma2 = " << d(c.problem.sigma2) << '\n';
  if (!c.problem.spectrum.empty()) os << "spectrum = " << join(c.problem.spectrum) << '\n';
  os << "seed = " << c.problem.seed << '\n';
  os << "init_scale = " << d(c.problem.init_scale) << '\n';
  os << "sigma2_draws = " << c.problem.sigma2_draws << '\n';
  os << "sigma2_probes = " << c.problem.sigma2_probes << '\n';

  os << "\n[schedule]\n";
  os << "kind = " << to_string(c.schedule.kind) << '\n';
  os << "b0 = " << c.schedule.b0 << '\n';
  os << "eta0 = " << d(c.schedule.eta0) << '\n';
  os << "delta_b = " << c.schedule.delta_b << '\n';
  os << "delta = " << d(c.schedule.delta) << '\n';
  os << "gamma = " << d(c.schedule.gamma) << '\n';
  os << "num_stages = " << c.schedule.num_stages << '\n';
  if (!c.schedule.explicit_stages.empty()) {
    os << "stages = ";
    for (std::size_t i = 0; i < c.schedule.explicit_stages.size(); ++i) {
      const auto& s = c.schedule.explicit_stages[i];
      os << (i ? ", " : "") << s.batch_size << ':' << d(s.lr);
    }
    os << '\n';
  }

  os << "\n[run]\n";
  os << "seeds = " << join(c.run.seeds) << '\n';
  os << "record_cadence = " << c.run.record_cadence << '\n';
  if (c.run.total_epoch_budget) os << "total_epoch_budget = " << *c.run.total_epoch_budget << '\n';
  if (c.run.epochs_per_stage) os << "epochs_per_stage = " << *c.run.epochs_per_stage << '\n';
  os << "sampling = " << sampling_name(c.run.sampling) << '\n';

  os << "\n[output]\n";
  if (!c.output.directory.empty()) os << "directory = " << c.output.directory << '\n';
  os << "prefix = " << c.output.prefix << '\n';

  if (c.theory.eps || c.theory.f_gap) {
    os << "\n[theory]\n";
    if (c.theory.eps) os << "eps = " << d(*c.theory.eps) << '\n';
    if (c.theory.f_gap) os << "f_gap = " << d(*c.theory.f_gap) << '\n';
  }
  return os.str();
}

TrainPlan make_plan(const ExperimentConfig& config) {
  const auto epochs = config.stage_epochs();
  return build_plan(config.schedule, config.problem.n, epochs);
}

std::unique_ptr<Problem> make_problem(const ExperimentConfig& config, bool estimate_noise) {
  const auto& p = config.problem;
  std::unique_ptr<Problem> problem;
  switch (p.kind) {
    case ProblemKind::NoisyQuadratic: {
      auto spectrum = p.spectrum.empty() ? std::vector<double>(p.dim, 1.0) : p.spectrum;
      problem = noisy_quadratic(p.dim, std::move(spectrum), p.sigma2, p.seed);
      break;
    }
    case ProblemKind::LeastSquares:
      problem = finite_sum_least_squares(p.n, p.dim, p.seed);
      break;
    case ProblemKind::Logistic:
      problem = finite_sum_logistic(p.n, p.dim, p.seed);
      break;
  }
  if (estimate_noise && !problem->constants().sigma2_certified) {
    std::vector<Vector> probes;
    probes.push_back(Vector::Zero(static_cast<Eigen::Index>(p.dim)));
    for (std::size_t k = 1; k < p.sigma2_probes; ++k) {
      probes.push_back(initial_point(p.dim, p.init_scale, p.seed + k));
    }
    problem->set_sigma2_estimate(estimate_sigma2(*problem, probes, p.sigma2_draws, p.seed));
  }
  return problem;
}

RunOptions make_run_options(const ExperimentConfig& config) {
  RunOptions o;
  o.record_cadence = config.run.record_cadence;
  o.init_scale = config.problem.init_scale;
  o.sfo_budget = config.sfo_budget();
  o.sampling = config.run.sampling;
  o.seed = config.run.seeds.front();
  return o;
}

std::filesystem::path experiment_dir(const ExperimentConfig& config,
                                     const std::optional<std::filesystem::path>& cli_out) {
  std::filesystem::path root;
  if (cli_out) {
    root = *cli_out;
  } else if (!config.output.directory.empty()) {
    root = config.output.directory;
  } else if (const char* env = std::getenv(kOutputRootEnv); env && *env) {
    root = env;
  } else {
    root = kDefaultOutputRoot;
  }
  return root / config.output.prefix;
}

}  // namespace sfolab::harness

// Command-line front end: analyze, synthesize, simulate, sweep.
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 loop not mean-square
// stable, 4 solver or numerical failure.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msd/analysis.hpp"
#include "msd/errors.hpp"
#include "msd/io.hpp"
#include "msd/simulation.hpp"
#include "msd/synthesis.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kUnstable = 3;
constexpr int kSolver = 4;

const msd::StateSpace& require_controller(const msd::ProblemConfig& cfg) {
  if (!cfg.controller) throw msd::ConfigError("field 'controller': missing (required by this command)");
  return *cfg.controller;
}

double sigma_v_sq(const msd::ProblemConfig& cfg) { return cfg.sigma_v_sq.value_or(1.0); }

int cmd_analyze(const std::string& path) {
  const msd::ProblemConfig cfg = msd::load_config(path);
  const msd::AnalysisReport r = msd::analyze(cfg.plant, require_controller(cfg), cfg.channel, sigma_v_sq(cfg));
  std::cout << msd::to_json(r).dump(2) << '\n';
  return r.ms_stable ? kOk : kUnstable;
}

int cmd_synthesize(const std::string& path) {
  const msd::ProblemConfig cfg = msd::load_config(path);
  if (cfg.controller) std::cerr << "warning: 'controller' is ignored by synthesize\n";
  const msd::SynthesisResult r = msd::synthesize(cfg.plant, cfg.channel);
  if (r.degenerate) std::cerr << "note: " << r.note << '\n';
  std::cout << msd::to_json(r).dump(2) << '\n';
  return r.ms_stabilizable ? kOk : kUnstable;
}

struct SimulateOptions {
  std::size_t trials = 10000;
  std::size_t horizon = 100;
  std::optional<std::uint64_t> seed;
  bool zero_input = false;
  std::string output;
};

int cmd_simulate(const std::string& path, const SimulateOptions& opt) {
  const msd::ProblemConfig cfg = msd::load_config(path);
  msd::SimConfig sim;
  sim.P = cfg.plant;
  sim.K = require_controller(cfg);
  sim.spec = cfg.channel;
  sim.horizon = opt.horizon;
  sim.trials = opt.trials;
  sim.seed = opt.seed.value_or(cfg.seed.value_or(0));
  const auto n_loop = sim.P.states() + sim.K.states();
  if (opt.zero_input) {
    msd::Matrix s0 = cfg.initial_covariance.value_or(msd::Matrix::Identity(n_loop, n_loop));
    sim.input_mode = msd::ZeroInput{std::move(s0)};
  } else {
    sim.input_mode = msd::WhiteInput{sigma_v_sq(cfg)};
  }
  sim.validate();

  const msd::AnalysisReport report = msd::analyze(cfg.plant, sim.K, cfg.channel, sigma_v_sq(cfg));
  const std::size_t N = std::max(opt.horizon, cfg.channel.max_delay());
  const msd::RecursionKernels kernels = msd::recursion_kernels(report.G, cfg.channel, N);
  msd::VarianceTrace rec;
  if (opt.zero_input) {
    const auto n = report.G.states();
    msd::Matrix s0g = msd::Matrix::Zero(n, n);
    s0g.topLeftCorner(n_loop, n_loop) = std::get<msd::ZeroInput>(sim.input_mode).sigma0;
    rec = msd::zero_input_recursion(report.G, s0g, kernels);
  } else {
    rec = msd::variance_recursion(kernels, msd::VarianceTrace::constant(sigma_v_sq(cfg), N));
  }
  const msd::SimResult emp = msd::estimate_variance(sim);
  if (emp.overflow) std::cerr << "warning: some trials overflowed; the loop diverges\n";

  std::ofstream file;
  if (!opt.output.empty()) {
    file.open(opt.output);
    if (!file) throw msd::ConfigError(opt.output + ": cannot open output file");
  }
  std::ostream& os = opt.output.empty() ? std::cout : file;
  os << "k,var_recursion,var_empirical,stderr" << (emp.cov_norm ? ",cov_norm" : "") << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k <= opt.horizon; ++k) {
    os << k << ',' << rec.sigma_sq[k] << ',' << emp.var_u.sigma_sq[k] << ',' << emp.stderr_u[k];
    if (emp.cov_norm) os << ',' << (*emp.cov_norm)[k];
    os << '\n';
  }
  return report.ms_stable ? kOk : kUnstable;
}

struct SweepOptions {
  double from = 0.5;
  double to = 2.5;
  std::size_t steps = 21;
  bool bisect = false;
};

int cmd_sweep(const std::string& path, const SweepOptions& opt) {
  const msd::ProblemConfig cfg = msd::load_config(path);
  const msd::StateSpace& K = require_controller(cfg);
  if (opt.steps < 1) throw msd::ConfigError("--steps must be at least 1");
  const double sv = sigma_v_sq(cfg);
  auto at = [&](double kappa) { return msd::analyze(cfg.plant, msd::scaled(K, kappa), cfg.channel, sv); };

  std::cout << "kappa,J_kappa,sigma_u_inf\n" << std::setprecision(17);
  std::vector<double> grid;
  std::vector<bool> stable;
  for (std::size_t i = 0; i < opt.steps; ++i) {
    const double kappa =
        opt.steps == 1 ? opt.from : opt.from + (opt.to - opt.from) * static_cast<double>(i) / static_cast<double>(opt.steps - 1);
    const msd::AnalysisReport r = at(kappa);
    grid.push_back(kappa);
    stable.push_back(r.ms_stable);
    std::cout << kappa << ',';
    if (r.J) std::cout << *r.J;
    std::cout << ',';
    if (r.sigma_u_inf) std::cout << *r.sigma_u_inf;
    std::cout << '\n';
  }
  if (opt.bisect) {
    // One line per change of verdict between neighbouring grid points.
    bool found = false;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (stable[i] == stable[i + 1]) continue;
      found = true;
      double lo = grid[i], hi = grid[i + 1];
      while (std::abs(hi - lo) > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (at(mid).ms_stable == stable[i] ? lo : hi) = mid;
      }
      std::cout << "# boundary_kappa=" << 0.5 * (lo + hi) << '\n';
    }
    if (!found) {
      std::cerr << "bisection: no change of mean-square stability on the kappa grid\n";
      std::cout << "# boundary_kappa=\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-square stability analysis and H2 design for loops closed over random-delay channels"};
  app.require_subcommand(1);
  std::string config;

  auto* analyze = app.add_subcommand("analyze", "Small-gain verdict and asymptotic variance (JSON)");
  analyze->add_option("config", config, "Problem configuration (JSON)")->required();

  auto* synth = app.add_subcommand("synthesize", "Optimal mean-square stabilizing controller (JSON)");
  synth->add_option("config", config, "Problem configuration (JSON)")->required();

  SimulateOptions sim_opt;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo variance against the recursion (CSV)");
  simulate->add_option("config", config, "Problem configuration (JSON)")->required();
  simulate->add_option("--trials", sim_opt.trials, "Number of trials")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", sim_opt.horizon, "Last time index")->check(CLI::PositiveNumber);
  auto* seed_opt = simulate->add_option("--seed", seed, "RNG seed (default: config seed or 0)");
  simulate->add_flag("--zero-input", sim_opt.zero_input, "v = 0, random initial state from input.initial_covariance");
  simulate->add_option("-o,--output", sim_opt.output, "Write CSV here instead of stdout");

  SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "J and asymptotic variance along K = kappa * K0 (CSV)");
  sweep->add_option("config", config, "Problem configuration (JSON)")->required();
  sweep->add_option("--from", sweep_opt.from, "First kappa");
  sweep->add_option("--to", sweep_opt.to, "Last kappa");
  sweep->add_option("--steps", sweep_opt.steps, "Number of rows")->check(CLI::PositiveNumber);
  sweep->add_flag("--bisect", sweep_opt.bisect, "Locate each change of mean-square stability on the grid to 1e-3 in kappa");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return kOk;
    }
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }

  try {
    if (*analyze) return cmd_analyze(config);
    if (*synth) return cmd_synthesize(config);
    if (*simulate) {
      if (*seed_opt) sim_opt.seed = seed;
      return cmd_simulate(config, sim_opt);
    }
    if (*sweep) return cmd_sweep(config, sweep_opt);
  } catch (const msd::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const msd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kConfig;
}

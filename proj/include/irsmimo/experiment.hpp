#ifndef IRSMIMO_EXPERIMENT_HPP
#define IRSMIMO_EXPERIMENT_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "irsmimo/solver.hpp"

namespace irsmimo {

enum class Method { mm, ccm, rand, noirs, netmimo };
std::string to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

enum class ExperimentKind {
    convergence,
    sweep_M,
    sweep_alpha_irs,
    sweep_irs_pos,
    sweep_user_pos,
    sweep_eta,
    weights_fairness,
    fourcell_single_irs,
    fourcell_two_irs,
};
std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment(const std::string& name);
std::vector<std::string> experiment_names();

// exit codes of run_experiment (and the CLI)
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnknownExperiment = 2;
inline constexpr int kExitBadConfig = 3;
inline constexpr int kExitBadOutDir = 4;

struct ExperimentOptions {
    int seeds = 50;
    int jobs = 0; // 0 = hardware concurrency
    std::vector<Method> methods; // empty = {mm, ccm, rand, noirs}
    SolveOptions solve;          // shared solver settings for every task
};

// Run one experiment: solve every (sweep point x seed x method), then write
// <experiment>.csv and <experiment>_summary.csv into out_dir. Rows are
// emitted in deterministic (scheme, sweep, method, seed) order regardless of
// worker completion order. Returns an exit code rather than throwing for the
// errors a CLI caller must distinguish.
int run_experiment(const std::string& config_path, const std::string& experiment,
                   const std::string& out_dir, const ExperimentOptions& opts);

// Combined BS->IRS->user path loss along a line of length D:
// 2*PL0 - 10 a log10(d) - 10 a log10(D-d); minimized at d = D/2.
std::vector<double> combined_pathloss_curve(double D, const std::vector<double>& d_grid,
                                            double alpha_irs, double pl0_db);

// Fixed-size task pool; tasks may run on n_jobs threads but are indexed so
// callers can store results deterministically.
void parallel_for(int n_jobs, int n_tasks, const std::function<void(int)>& fn);

// One solver invocation as used by the harness (solver picked by `method`,
// channel and initialization derived from `seed`).
SolveReport run_single(const ScenarioConfig& cfg, Method method, std::uint64_t seed,
                       const SolveOptions& base = SolveOptions{});

} // namespace irsmimo

#endif

#ifndef IRSMIMO_SOLVER_HPP
#define IRSMIMO_SOLVER_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "irsmimo/phasing.hpp"
#include "irsmimo/precoder.hpp"
#include "irsmimo/system.hpp"

namespace irsmimo {

enum class PhaseMethod { MM, CCM, RandPhase, NoIRS };
enum class Termination { converged, iter_cap };

struct SolveOptions {
    PhaseMethod phase_method = PhaseMethod::MM;
    int n_max = 300;           // outer iteration cap
    double epsilon = 1e-6;     // relative WSR change tolerance
    double precoder_tol = 1e-10;
    double phase_tol = 1e-6;   // inner MM/CCM relative objective tolerance
    int phase_max_iters = 500;
    std::optional<double> ccm_alpha; // overrides for the CCM step parameters
    std::optional<double> ccm_beta;
    std::uint64_t init_seed = 1;
};

struct SolveReport {
    std::vector<double> wsr_trace;      // bits/s/Hz, entry 0 is the initial point
    std::vector<double> per_user_rates; // final, cell-major (l*K + k)
    int iterations = 0;                 // completed outer iterations
    PhaseVector phase_final;
    PrecoderSet precoders_final;
    double wall_time_s = 0.0;
    Termination termination = Termination::iter_cap;

    double final_wsr() const { return wsr_trace.empty() ? 0.0 : wsr_trace.back(); }
};

// Feasible starting point: uniform random phases and per-user precoders along
// the leading right singular vectors of the in-cell equivalent channel,
// scaled so each BS transmits at exactly P_max.
std::pair<PrecoderSet, PhaseVector> initialize(const ChannelSet& ch, const ScenarioConfig& cfg,
                                               std::uint64_t seed);

// Block coordinate descent over (U, W, F, theta). RandPhase keeps the random
// initial phases; NoIRS additionally zeroes every IRS-related channel.
SolveReport bcd_solve(const ChannelSet& ch, const ScenarioConfig& cfg, const SolveOptions& opts);

// All BSs jointly precode all users' data; one precoder subproblem with L
// per-BS power constraints, solved by cyclic per-BS multiplier bisection.
SolveReport network_mimo_solve(const ChannelSet& ch, const ScenarioConfig& cfg,
                               const SolveOptions& opts);

// Coupled per-block power-constrained quadratic subproblem used by the
// network-MIMO precoder step. block i constrains rows [i*rows_per_block,
// (i+1)*rows_per_block) of every precoder to total power budgets[i].
struct NetworkPrecoderSolution {
    std::vector<arma::cx_mat> F;
    arma::vec lambdas;
};
NetworkPrecoderSolution solve_network_precoder(const arma::cx_mat& A,
                                               const std::vector<arma::cx_mat>& rhs,
                                               const std::vector<double>& budgets,
                                               int rows_per_block, double tol = 1e-10);

} // namespace irsmimo

#endif

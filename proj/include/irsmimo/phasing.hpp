#ifndef IRSMIMO_PHASING_HPP
#define IRSMIMO_PHASING_HPP

#include <armadillo>
#include <optional>
#include <vector>

#include "irsmimo/system.hpp"

namespace irsmimo {

// Unit-modulus quadratic program governing the phase update:
//   min_phi  f(phi) = phi^H Xi phi + 2 Re{phi^H conj(v)},  |phi_m| = 1.
// Xi = B o C^T is Hermitian PSD by construction. const_offset restores the
// dropped constants so that f + const_offset equals the phase-relevant part
// of the surrogate objective.
struct PhaseQuadratic {
    arma::cx_mat Xi;
    arma::cx_vec v;
    double lambda_max = 0.0;
    double const_offset = 0.0;
};

// Assemble Xi, v and the constant from the current iterate. eta is absorbed
// by scaling the IRS-to-user channels, keeping the unit-modulus form.
PhaseQuadratic assemble_quadratic(const ChannelSet& ch, const PrecoderSet& F, const DecoderSet& U,
                                  const WeightSet& W, const std::vector<double>& weights, double eta);

// f(phi); throws std::invalid_argument when any |phi_m| deviates from 1 by
// more than 1e-8.
double quadratic_value(const PhaseQuadratic& q, const arma::cx_vec& phi);

struct PhaseSolveResult {
    arma::cx_vec phi;
    std::vector<double> trace; // f(phi_t) per iteration, starting at phi0
    int iterations = 0;
    bool converged = false;
    double min_retraction_modulus = 1.0; // smallest |phi_bar_m| seen (CCM)
};

// Majorization-minimization: phi_{t+1} = exp(j arg((lmax I - Xi) phi_t - conj(v))).
PhaseSolveResult mm_solve(const PhaseQuadratic& q, const arma::cx_vec& phi0, double tol = 1e-6,
                          int max_iters = 500);

// Riemannian gradient descent on the product of unit circles with fixed step.
// With alpha/beta unset they default to the largest admissible values
// guaranteeing a non-increasing augmented objective; supplied values outside
// those bounds are accepted with a warning.
PhaseSolveResult ccm_solve(const PhaseQuadratic& q, const arma::cx_vec& phi0, double tol = 1e-6,
                           int max_iters = 500, std::optional<double> alpha = std::nullopt,
                           std::optional<double> beta = std::nullopt);

// Largest eigenvalue of a Hermitian PSD matrix; dense solver up to
// `dense_limit` rows, power iteration beyond.
double hermitian_lambda_max(const arma::cx_mat& X, arma::uword dense_limit = 2000);

// Dump a solver trace as (iteration, objective) CSV rows.
void write_trace_csv(const PhaseSolveResult& result, const std::string& path);

} // namespace irsmimo

#endif

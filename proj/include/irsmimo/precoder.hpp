#ifndef IRSMIMO_PRECODER_HPP
#define IRSMIMO_PRECODER_HPP

#include <armadillo>
#include <vector>

#include "irsmimo/system.hpp"

namespace irsmimo {

// Per-BS precoder subproblem
//   min_F  sum_k Tr(F_k^H A F_k) - 2 Re Tr(F_k^H rhs_k)
//   s.t.   sum_k ||F_k||_F^2 <= P_max
// with A Hermitian PSD. The eigendecomposition A = Q diag(evals) Q^H and
// Z = Q^H (sum_k rhs_k rhs_k^H) Q are cached for the power curve.
struct PrecoderSubproblem {
    arma::cx_mat A;
    std::vector<arma::cx_mat> rhs;
    double p_max = 0.0;

    arma::vec evals;        // ascending
    arma::cx_mat evecs;
    arma::cx_mat Z;
    arma::vec z_diag;       // real diagonal of Z, clamped at 0
    int rank = 0;           // eigenvalues above threshold
    double eig_threshold = 0.0;

    bool full_rank() const { return rank == static_cast<int>(A.n_rows); }
};

// Build the subproblem of cell l from the current iterate.
PrecoderSubproblem make_precoder_subproblem(const EquivalentChannels& eq, const DecoderSet& U,
                                            const WeightSet& W, const std::vector<double>& weights,
                                            double p_max, int l);

// Build directly from (A, rhs, P_max); used by tests and the network solver.
PrecoderSubproblem make_precoder_subproblem(arma::cx_mat A, std::vector<arma::cx_mat> rhs,
                                            double p_max);

// F_k(lambda) = (A + lambda I)^dagger rhs_k via the cached eigendecomposition.
// At lambda = 0 pseudoinverse semantics apply (sub-threshold modes dropped).
std::vector<arma::cx_mat> precoder_at(const PrecoderSubproblem& sub, double lambda);

// f(lambda) = sum_i Z_ii / (eval_i + lambda)^2, strictly decreasing.
// Throws std::domain_error for lambda = 0 when A is rank deficient.
double power_curve(const PrecoderSubproblem& sub, double lambda);

struct PrecoderSolution {
    std::vector<arma::cx_mat> F;
    double lambda = 0.0;
};

// Closed form + bisection on the multiplier (both rank cases). tol is the
// relative lambda-interval accuracy.
PrecoderSolution solve_precoder(const PrecoderSubproblem& sub, double tol = 1e-10);

} // namespace irsmimo

#endif

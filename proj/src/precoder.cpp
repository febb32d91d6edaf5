#include "irsmimo/precoder.hpp"

#include <cmath>
#include <stdexcept>

namespace irsmimo {

namespace {

constexpr double kRankRelTol = 1e-10;      // eigenvalue below this fraction of the max counts as zero
constexpr double kTrailingZRelTol = 1e-10; // null-space energy below this fraction is treated as absent

void finalize_subproblem(PrecoderSubproblem& sub) {
    arma::eig_sym(sub.evals, sub.evecs, hermitian_part(sub.A));
    sub.evals.transform([](double v) { return v > 0.0 ? v : 0.0; });

    const double max_eval = sub.evals.empty() ? 0.0 : sub.evals.max();
    sub.eig_threshold = kRankRelTol * max_eval;
    sub.rank = 0;
    for (arma::uword i = 0; i < sub.evals.n_elem; ++i)
        if (sub.evals[i] > sub.eig_threshold) ++sub.rank;

    arma::cx_mat R(sub.A.n_rows, sub.A.n_cols, arma::fill::zeros);
    for (const auto& r : sub.rhs) R += r * r.t();
    sub.Z = sub.evecs.t() * R * sub.evecs;
    sub.z_diag = arma::clamp(arma::real(sub.Z.diag()), 0.0, arma::datum::inf);
}

// sum of z_diag over the numerically-zero eigendirections
double trailing_z_sum(const PrecoderSubproblem& sub) {
    double s = 0.0;
    for (arma::uword i = 0; i < sub.evals.n_elem; ++i)
        if (sub.evals[i] <= sub.eig_threshold) s += sub.z_diag[i];
    return s;
}

} // namespace

PrecoderSubproblem make_precoder_subproblem(const EquivalentChannels& eq, const DecoderSet& U,
                                            const WeightSet& W, const std::vector<double>& weights,
                                            double p_max, int l) {
    const int Nt = static_cast<int>(eq.at(l, 0, 0).n_cols);
    PrecoderSubproblem sub;
    sub.p_max = p_max;
    sub.A = arma::cx_mat(Nt, Nt, arma::fill::zeros);
    for (int n = 0; n < eq.L; ++n)
        for (int m = 0; m < eq.K; ++m) {
            const double w = weights[static_cast<std::size_t>(n) * eq.K + m];
            if (w == 0.0) continue;
            const arma::cx_mat hu = eq.at(l, n, m).t() * U.U[n][m]; // Nt x d
            sub.A += w * (hu * W.W[n][m] * hu.t());
        }
    sub.A = hermitian_part(sub.A);

    sub.rhs.resize(eq.K);
    for (int k = 0; k < eq.K; ++k) {
        const double w = weights[static_cast<std::size_t>(l) * eq.K + k];
        sub.rhs[k] = w * (eq.at(l, l, k).t() * U.U[l][k] * W.W[l][k]);
    }
    finalize_subproblem(sub);
    return sub;
}

PrecoderSubproblem make_precoder_subproblem(arma::cx_mat A, std::vector<arma::cx_mat> rhs,
                                            double p_max) {
    PrecoderSubproblem sub;
    sub.A = hermitian_part(A);
    sub.rhs = std::move(rhs);
    sub.p_max = p_max;
    finalize_subproblem(sub);
    return sub;
}

std::vector<arma::cx_mat> precoder_at(const PrecoderSubproblem& sub, double lambda) {
    if (lambda < 0.0) throw std::domain_error("precoder_at: lambda must be >= 0");
    arma::vec gains(sub.evals.n_elem);
    for (arma::uword i = 0; i < sub.evals.n_elem; ++i) {
        if (lambda == 0.0 && sub.evals[i] <= sub.eig_threshold)
            gains[i] = 0.0; // pseudoinverse: drop the null space
        else
            gains[i] = 1.0 / (sub.evals[i] + lambda);
    }
    const arma::cx_vec cgains(gains, arma::vec(gains.n_elem, arma::fill::zeros));
    std::vector<arma::cx_mat> F(sub.rhs.size());
    for (std::size_t k = 0; k < sub.rhs.size(); ++k) {
        arma::cx_mat coeff = sub.evecs.t() * sub.rhs[k];
        coeff.each_col() %= cgains;
        F[k] = sub.evecs * coeff;
    }
    return F;
}

double power_curve(const PrecoderSubproblem& sub, double lambda) {
    if (lambda < 0.0) throw std::domain_error("power_curve: lambda must be >= 0");
    if (lambda == 0.0 && !sub.full_rank())
        throw std::domain_error("power_curve: lambda must be positive when A is rank deficient");
    double f = 0.0;
    for (arma::uword i = 0; i < sub.evals.n_elem; ++i) {
        const double ev = sub.evals[i] > sub.eig_threshold ? sub.evals[i] : 0.0;
        const double den = ev + lambda;
        f += sub.z_diag[i] / (den * den);
    }
    return f;
}

PrecoderSolution solve_precoder(const PrecoderSubproblem& sub, double tol) {
    if (tol <= 0.0) throw std::domain_error("solve_precoder: tol must be positive");

    const double z_total = arma::accu(sub.z_diag);
    if (z_total <= 0.0) {
        // no signal direction at all: the zero precoder is optimal
        std::vector<arma::cx_mat> F(sub.rhs.size());
        for (std::size_t k = 0; k < sub.rhs.size(); ++k)
            F[k] = arma::cx_mat(arma::size(sub.rhs[k]), arma::fill::zeros);
        return {std::move(F), 0.0};
    }

    // lambda = 0 candidate. In the rank-deficient case it is only admissible
    // when the right-hand side carries no null-space energy (otherwise the
    // power curve diverges as lambda -> 0+).
    const bool zero_admissible = sub.full_rank() || trailing_z_sum(sub) <= kTrailingZRelTol * z_total;
    if (zero_admissible) {
        std::vector<arma::cx_mat> F0 = precoder_at(sub, 0.0);
        double p0 = 0.0;
        for (const auto& f : F0) p0 += std::pow(arma::norm(f, "fro"), 2);
        if (p0 <= sub.p_max) return {std::move(F0), 0.0};
    }

    const double lambda_ub_0 = std::sqrt(z_total / sub.p_max);
    double ub = lambda_ub_0;
    double lb = 0.0;
    if (!sub.full_rank()) {
        lb = 1e-12 * ub;
        // expand downward by decades until the bracket holds
        while (lb > 1e-280 && power_curve(sub, lb) < sub.p_max) lb *= 0.1;
    }

    // invariant: f(lb) >= P_max >= f(ub); return the feasible (ub) endpoint
    while (ub - lb > tol * ub) {
        const double mid = 0.5 * (lb + ub);
        if (power_curve(sub, mid) <= sub.p_max)
            ub = mid;
        else
            lb = mid;
    }
    return {precoder_at(sub, ub), ub};
}

} // namespace irsmimo

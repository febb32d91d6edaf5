#include "irsmimo/phasing.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace irsmimo {

namespace {

bool warnings_enabled() {
    const char* lvl = std::getenv("IRSMIMO_LOG");
    return lvl == nullptr || std::string_view(lvl) != "quiet";
}

void warn(const std::string& msg) {
    if (warnings_enabled()) std::cerr << "[irsmimo] warning: " << msg << "\n";
}

arma::cx_vec unit_phases(const arma::cx_vec& q, const arma::cx_vec& previous) {
    if (arma::norm(q, 2) == 0.0) return previous; // flat objective, stay put
    arma::cx_vec phi(q.n_elem);
    for (arma::uword m = 0; m < q.n_elem; ++m)
        phi[m] = std::abs(q[m]) > 0.0 ? q[m] / std::abs(q[m]) : arma::cx_double(1.0, 0.0);
    return phi;
}

bool relative_change_below(double current, double previous, double tol) {
    const double denom = std::max(std::abs(current), 1e-300);
    return std::abs(current - previous) / denom <= tol;
}

} // namespace

double hermitian_lambda_max(const arma::cx_mat& X, arma::uword dense_limit) {
    if (X.n_rows == 0) return 0.0;
    if (X.n_rows <= dense_limit) {
        arma::vec ev = arma::eig_sym(hermitian_part(X));
        return ev.max();
    }
    // power iteration fallback for very large surfaces
    arma::cx_vec x(X.n_rows, arma::fill::ones);
    x /= arma::norm(x, 2);
    double lam = 0.0;
    for (int it = 0; it < 500; ++it) {
        arma::cx_vec y = X * x;
        const double ny = arma::norm(y, 2);
        if (ny == 0.0) return 0.0;
        y /= ny;
        const double lam_new = std::real(arma::cdot(y, X * y));
        if (std::abs(lam_new - lam) <= 1e-12 * std::max(1.0, std::abs(lam_new))) return lam_new;
        lam = lam_new;
        x = y;
    }
    return lam;
}

void write_trace_csv(const PhaseSolveResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
    out << "iteration,objective\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.17g", result.trace[i]);
        out << i << "," << buf << "\n";
    }
}

PhaseQuadratic assemble_quadratic(const ChannelSet& ch, const PrecoderSet& F, const DecoderSet& U,
                                  const WeightSet& W, const std::vector<double>& weights,
                                  double eta) {
    const arma::uword n = static_cast<arma::uword>(ch.A) * ch.M;
    PhaseQuadratic q;
    q.Xi = arma::cx_mat(n, n, arma::fill::zeros);
    q.v = arma::cx_vec(n, arma::fill::zeros);
    q.const_offset = 0.0;

    // per-BS transmit covariances sum_k F_k F_k^H
    std::vector<arma::cx_mat> Fcov(ch.L);
    for (int l = 0; l < ch.L; ++l) {
        Fcov[l] = arma::cx_mat(ch.Nt, ch.Nt, arma::fill::zeros);
        for (int k = 0; k < ch.K; ++k) Fcov[l] += F.F[l][k] * F.F[l][k].t();
    }

    arma::cx_mat B(n, n, arma::fill::zeros);
    arma::cx_mat C(n, n, arma::fill::zeros);
    arma::cx_mat V(n, n, arma::fill::zeros);

    for (int l = 0; l < ch.L; ++l) {
        const arma::cx_mat G = ch.stacked_bs_irs(l);
        C += G * Fcov[l] * G.t();
    }

    for (int nn = 0; nn < ch.L; ++nn)
        for (int m = 0; m < ch.K; ++m) {
            const double w = weights[static_cast<std::size_t>(nn) * ch.K + m];
            if (w == 0.0) continue;
            const arma::cx_mat hr = eta * ch.stacked_irs_user(nn, m); // Nr x n
            const arma::cx_mat uw = U.U[nn][m] * W.W[nn][m];          // Nr x d
            const arma::cx_mat hru = hr.t() * U.U[nn][m];             // n x d
            B += w * (hru * W.W[nn][m] * hru.t());

            // V accumulation, D terms: sum over transmitting BS l
            for (int l = 0; l < ch.L; ++l) {
                const arma::cx_mat G = ch.stacked_bs_irs(l);
                const arma::cx_mat& hd = ch.direct(l, nn, m);
                const arma::cx_mat x = G * Fcov[l] * hd.t(); // n x Nr
                V += w * (x * (uw * (U.U[nn][m].t() * hr)));
                q.const_offset += w * std::real(arma::trace(W.W[nn][m] *
                                                            (U.U[nn][m].t() * hd) * Fcov[l] *
                                                            (hd.t() * U.U[nn][m])));
            }
        }

    // linear terms of the desired-signal part
    for (int l = 0; l < ch.L; ++l)
        for (int k = 0; k < ch.K; ++k) {
            const double w = weights[static_cast<std::size_t>(l) * ch.K + k];
            if (w == 0.0) continue;
            const arma::cx_mat hr = eta * ch.stacked_irs_user(l, k);
            const arma::cx_mat G = ch.stacked_bs_irs(l);
            V -= w * (G * F.F[l][k] * W.W[l][k] * (U.U[l][k].t() * hr));
            const arma::cx_double t =
                arma::trace(W.W[l][k] * (U.U[l][k].t() * ch.direct(l, l, k)) * F.F[l][k]);
            q.const_offset -= w * 2.0 * std::real(t);
        }

    q.Xi = hermitian_part(B % arma::strans(C));
    q.v = V.diag();
    q.lambda_max = n > 0 ? std::max(0.0, hermitian_lambda_max(q.Xi)) : 0.0;
    return q;
}

double quadratic_value(const PhaseQuadratic& q, const arma::cx_vec& phi) {
    if (phi.n_elem != q.Xi.n_rows)
        throw std::invalid_argument("quadratic_value: phi length mismatch");
    for (arma::uword m = 0; m < phi.n_elem; ++m)
        if (std::abs(std::abs(phi[m]) - 1.0) > 1e-8)
            throw std::invalid_argument("quadratic_value: phi is not unit modulus");
    const arma::cx_double quad = arma::cdot(phi, q.Xi * phi);
    const arma::cx_double lin = arma::cdot(phi, arma::conj(q.v));
    return std::real(quad) + 2.0 * std::real(lin);
}

PhaseSolveResult mm_solve(const PhaseQuadratic& q, const arma::cx_vec& phi0, double tol,
                          int max_iters) {
    PhaseSolveResult res;
    res.phi = phi0;
    res.trace.push_back(quadratic_value(q, phi0));
    if (q.Xi.n_rows == 0) {
        res.converged = true;
        return res;
    }

    // the surrogate maximizer only needs (lmax I - Xi) phi - conj(v)
    const arma::cx_mat S = q.lambda_max * arma::eye<arma::cx_mat>(q.Xi.n_rows, q.Xi.n_cols) - q.Xi;
    const arma::cx_vec v_conj = arma::conj(q.v);

    for (int t = 1; t <= max_iters; ++t) {
        const arma::cx_vec dir = S * res.phi - v_conj;
        res.phi = unit_phases(dir, res.phi);
        res.iterations = t;
        res.trace.push_back(quadratic_value(q, res.phi));
        if (relative_change_below(res.trace[t], res.trace[t - 1], tol)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

PhaseSolveResult ccm_solve(const PhaseQuadratic& q, const arma::cx_vec& phi0, double tol,
                           int max_iters, std::optional<double> alpha_opt,
                           std::optional<double> beta_opt) {
    PhaseSolveResult res;
    res.phi = phi0;
    res.trace.push_back(quadratic_value(q, phi0));
    if (q.Xi.n_rows == 0) {
        res.converged = true;
        return res;
    }

    const double m_count = static_cast<double>(q.Xi.n_rows);
    const double alpha_bound = (m_count / 8.0) * q.lambda_max + arma::norm(q.v, 2);
    const double alpha = alpha_opt.value_or(alpha_bound);
    const double lam_aug = q.lambda_max + alpha;
    const double beta_bound = lam_aug > 0.0 ? 1.0 / lam_aug : arma::datum::inf;
    const double beta = beta_opt.value_or(lam_aug > 0.0 ? 0.99 * beta_bound : 1.0);

    const bool params_admissible = alpha >= alpha_bound - 1e-12 && beta > 0.0 && beta < beta_bound;
    if ((alpha_opt || beta_opt) && !params_admissible)
        warn("ccm_solve: user-supplied (alpha, beta) violate the convergence bounds; "
             "monotonic descent is not guaranteed");

    const arma::cx_mat Xi_aug =
        q.Xi + alpha * arma::eye<arma::cx_mat>(q.Xi.n_rows, q.Xi.n_cols);
    const arma::cx_vec v_conj = arma::conj(q.v);

    // The augmented objective f_bar = f + alpha*M carries the descent
    // guarantee, but the stopping rule tracks f itself: the constant
    // alpha*M would otherwise swamp the relative-change test for large
    // surfaces and stall the descent long before stationarity.
    bool warned_increase = false;
    for (int t = 1; t <= max_iters; ++t) {
        const arma::cx_vec grad = -2.0 * (Xi_aug * res.phi) - 2.0 * v_conj;
        // project onto the tangent space of the unit-circle product
        const arma::cx_vec riem = grad - arma::real(arma::conj(grad) % res.phi) % res.phi;
        arma::cx_vec stepped = res.phi + beta * riem;
        for (arma::uword m = 0; m < stepped.n_elem; ++m) {
            const double mod = std::abs(stepped[m]);
            res.min_retraction_modulus = std::min(res.min_retraction_modulus, mod);
            res.phi[m] = mod > 0.0 ? stepped[m] / mod : res.phi[m];
        }
        res.iterations = t;
        res.trace.push_back(quadratic_value(q, res.phi));
        if (!warned_increase &&
            res.trace[t] > res.trace[t - 1] + 1e-10 * std::max(1.0, std::abs(res.trace[t - 1]))) {
            warn(params_admissible
                     ? "ccm_solve: augmented objective increased; check conditioning"
                     : "ccm_solve: augmented objective increased under the supplied (alpha, beta)");
            warned_increase = true;
        }
        if (relative_change_below(res.trace[t], res.trace[t - 1], tol)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace irsmimo

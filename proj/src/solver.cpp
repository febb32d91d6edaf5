#include "irsmimo/solver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "irsmimo/wmmse.hpp"

namespace irsmimo {

namespace {

constexpr std::uint64_t kStreamInitPhase = 0x50;

arma::cx_vec random_unit_phases(std::uint64_t seed, arma::uword count) {
    Rng rng = Rng::substream(seed, kStreamInitPhase);
    arma::cx_vec phi(count);
    for (arma::uword m = 0; m < count; ++m)
        phi[m] = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
    return phi;
}

// leading-d right singular vectors as an Nt x d block
arma::cx_mat leading_right_singular_block(const arma::cx_mat& H, int d) {
    arma::cx_mat Uv, Vv;
    arma::vec s;
    arma::svd(Uv, s, Vv, H);
    return Vv.cols(0, d - 1);
}

struct Iterate {
    DecoderSet U;
    WeightSet W;
};

Iterate make_iterate(int L, int K) {
    Iterate it;
    it.U.U.assign(L, std::vector<arma::cx_mat>(K));
    it.W.W.assign(L, std::vector<arma::cx_mat>(K));
    return it;
}

// (U, W) closed-form updates for every user
void update_decoders_and_weights(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2,
                                 Iterate& it) {
    for (int l = 0; l < eq.L; ++l)
        for (int k = 0; k < eq.K; ++k) {
            it.U.U[l][k] = optimal_decoder(eq, F, sigma2, l, k);
            const arma::cx_mat E = mse_matrix(eq, F, it.U.U[l][k], sigma2, l, k);
            it.W.W[l][k] = optimal_weight(E);
        }
}

template <typename PrecoderStep, typename PhaseStep>
SolveReport bcd_core(const ChannelSet& ch, const std::vector<double>& weights, double sigma2,
                     PrecoderSet F, PhaseVector phase, const SolveOptions& opts,
                     PrecoderStep precoder_step, PhaseStep phase_step) {
    const auto t0 = std::chrono::steady_clock::now();

    SolveReport report;
    EquivalentChannels eq = equivalent_channels(ch, phase);
    report.wsr_trace.push_back(weighted_sum_rate(eq, F, sigma2, weights));

    Iterate it = make_iterate(ch.L, ch.K);
    report.termination = Termination::iter_cap;

    for (int n = 1; n <= opts.n_max; ++n) {
        update_decoders_and_weights(eq, F, sigma2, it);
        precoder_step(eq, it, F);
        if (phase_step(F, it, phase)) eq = equivalent_channels(ch, phase);

        const double wsr = weighted_sum_rate(eq, F, sigma2, weights);
        const double prev = report.wsr_trace.back();
        report.wsr_trace.push_back(wsr);
        report.iterations = n;
        if (std::abs(wsr - prev) / std::max(std::abs(wsr), 1e-300) < opts.epsilon) {
            report.termination = Termination::converged;
            break;
        }
    }

    report.per_user_rates.resize(static_cast<std::size_t>(ch.L) * ch.K);
    for (int l = 0; l < ch.L; ++l)
        for (int k = 0; k < ch.K; ++k)
            report.per_user_rates[static_cast<std::size_t>(l) * ch.K + k] =
                user_rate(eq, F, sigma2, l, k);
    report.phase_final = phase;
    report.precoders_final = std::move(F);
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// shared MM/CCM inner step; returns whether the phases changed
bool run_phase_update(const ChannelSet& ch, const PrecoderSet& F, const Iterate& it,
                      const std::vector<double>& weights, const SolveOptions& opts,
                      PhaseVector& phase) {
    if (phase.phi.n_elem == 0) return false;
    const PhaseQuadratic q = assemble_quadratic(ch, F, it.U, it.W, weights, phase.eta);
    PhaseSolveResult res;
    if (opts.phase_method == PhaseMethod::CCM)
        res = ccm_solve(q, phase.phi, opts.phase_tol, opts.phase_max_iters, opts.ccm_alpha,
                        opts.ccm_beta);
    else
        res = mm_solve(q, phase.phi, opts.phase_tol, opts.phase_max_iters);
    phase.phi = res.phi;
    return true;
}

} // namespace

std::pair<PrecoderSet, PhaseVector> initialize(const ChannelSet& ch, const ScenarioConfig& cfg,
                                               std::uint64_t seed) {
    PhaseVector phase;
    phase.eta = cfg.eta;
    phase.phi = random_unit_phases(seed, static_cast<arma::uword>(ch.A) * ch.M);

    const EquivalentChannels eq = equivalent_channels(ch, phase);
    PrecoderSet F;
    F.F.assign(ch.L, std::vector<arma::cx_mat>(ch.K));
    const double scale = std::sqrt(cfg.P_max / (static_cast<double>(ch.K) * cfg.d));
    for (int l = 0; l < ch.L; ++l)
        for (int k = 0; k < ch.K; ++k)
            F.F[l][k] = scale * leading_right_singular_block(eq.at(l, l, k), cfg.d);
    return {std::move(F), std::move(phase)};
}

SolveReport bcd_solve(const ChannelSet& ch_in, const ScenarioConfig& cfg, const SolveOptions& opts) {
    const ChannelSet ch =
        opts.phase_method == PhaseMethod::NoIRS ? ch_in.with_zeroed_irs() : ch_in;
    const double sigma2 = noise_power_watts(cfg);
    const std::vector<double> weights = cfg.weight_vector();

    auto [F0, phase0] = initialize(ch, cfg, opts.init_seed);

    auto precoder_step = [&](const EquivalentChannels& eq, const Iterate& it, PrecoderSet& F) {
        for (int l = 0; l < ch.L; ++l) {
            const PrecoderSubproblem sub =
                make_precoder_subproblem(eq, it.U, it.W, weights, cfg.P_max, l);
            F.F[l] = solve_precoder(sub, opts.precoder_tol).F;
        }
    };

    const bool optimize_phase =
        opts.phase_method == PhaseMethod::MM || opts.phase_method == PhaseMethod::CCM;
    auto phase_step = [&](const PrecoderSet& F, const Iterate& it, PhaseVector& phase) {
        if (!optimize_phase) return false;
        return run_phase_update(ch, F, it, weights, opts, phase);
    };

    return bcd_core(ch, weights, sigma2, std::move(F0), std::move(phase0), opts, precoder_step,
                    phase_step);
}

namespace {

// view of the multicell system as one giant transmitter with L*Nt antennas
ChannelSet stack_for_network(const ChannelSet& ch) {
    ChannelSet out;
    out.L = 1;
    out.K = ch.L * ch.K;
    out.A = ch.A;
    out.M = ch.M;
    out.Nt = ch.L * ch.Nt;
    out.Nr = ch.Nr;
    out.seed = ch.seed;

    out.H_direct.resize(static_cast<std::size_t>(out.K));
    out.user_positions.resize(static_cast<std::size_t>(out.K));
    for (int l = 0; l < ch.L; ++l)
        for (int k = 0; k < ch.K; ++k) {
            arma::cx_mat h(ch.Nr, out.Nt);
            for (int n = 0; n < ch.L; ++n)
                h.cols(static_cast<arma::uword>(n) * ch.Nt,
                       static_cast<arma::uword>(n + 1) * ch.Nt - 1) = ch.direct(n, l, k);
            const int u = l * ch.K + k;
            out.H_direct[u] = std::move(h);
            out.user_positions[u] = ch.user_position(l, k);
        }

    out.G_bs_irs.resize(static_cast<std::size_t>(ch.A));
    for (int a = 0; a < ch.A; ++a) {
        arma::cx_mat g(ch.M, out.Nt);
        for (int n = 0; n < ch.L; ++n)
            g.cols(static_cast<arma::uword>(n) * ch.Nt,
                   static_cast<arma::uword>(n + 1) * ch.Nt - 1) = ch.bs_irs(n, a);
        out.G_bs_irs[a] = std::move(g);
    }

    out.H_irs_user.resize(static_cast<std::size_t>(ch.A) * out.K);
    for (int a = 0; a < ch.A; ++a)
        for (int l = 0; l < ch.L; ++l)
            for (int k = 0; k < ch.K; ++k)
                out.H_irs_user[static_cast<std::size_t>(a) * out.K + l * ch.K + k] =
                    ch.irs_user(a, l, k);
    return out;
}

double block_power(const std::vector<arma::cx_mat>& F, int block, int rows_per_block) {
    const arma::uword r0 = static_cast<arma::uword>(block) * rows_per_block;
    const arma::uword r1 = r0 + rows_per_block - 1;
    double p = 0.0;
    for (const auto& f : F) p += std::pow(arma::norm(f.rows(r0, r1), "fro"), 2);
    return p;
}

// pseudoinverse solve of (A + blockdiag(lambda)) X = rhs for Hermitian PSD A.
// null_energy reports the right-hand-side energy along null directions,
// weighted by each direction's support inside `null_block`'s rows: nonzero
// means the power of that block diverges as its multiplier approaches zero,
// so lambda = 0 is inadmissible for it.
struct BlockSolve {
    std::vector<arma::cx_mat> X;
    double null_energy = 0.0;
};

BlockSolve pinv_solve_blocks(const arma::cx_mat& A, const arma::vec& lambdas, int rows_per_block,
                             const std::vector<arma::cx_mat>& rhs, int null_block = -1) {
    arma::cx_mat Ml = A;
    for (arma::uword i = 0; i < lambdas.n_elem; ++i) {
        const arma::uword r0 = i * rows_per_block;
        for (int r = 0; r < rows_per_block; ++r) Ml(r0 + r, r0 + r) += lambdas[i];
    }
    arma::vec ev;
    arma::cx_mat Q;
    arma::eig_sym(ev, Q, hermitian_part(Ml));
    const double thresh = 1e-12 * std::max(ev.max(), 0.0);
    arma::vec gains(ev.n_elem, arma::fill::zeros);
    for (arma::uword i = 0; i < ev.n_elem; ++i)
        if (ev[i] > thresh) gains[i] = 1.0 / ev[i];
    const arma::cx_vec cgains(gains, arma::vec(gains.n_elem, arma::fill::zeros));

    arma::vec null_support(ev.n_elem, arma::fill::zeros);
    if (null_block >= 0) {
        const arma::uword r0 = static_cast<arma::uword>(null_block) * rows_per_block;
        for (arma::uword i = 0; i < ev.n_elem; ++i)
            if (ev[i] <= thresh)
                null_support[i] =
                    std::pow(arma::norm(Q.col(i).subvec(r0, r0 + rows_per_block - 1), 2), 2);
    }

    BlockSolve out;
    out.X.resize(rhs.size());
    for (std::size_t u = 0; u < rhs.size(); ++u) {
        arma::cx_mat coeff = Q.t() * rhs[u];
        for (arma::uword i = 0; i < ev.n_elem; ++i)
            if (ev[i] <= thresh && null_support[i] > 0.0)
                out.null_energy +=
                    null_support[i] * std::pow(arma::norm(coeff.row(i), "fro"), 2);
        coeff.each_col() %= cgains;
        out.X[u] = Q * coeff;
    }
    return out;
}

} // namespace

NetworkPrecoderSolution solve_network_precoder(const arma::cx_mat& A,
                                               const std::vector<arma::cx_mat>& rhs,
                                               const std::vector<double>& budgets,
                                               int rows_per_block, double tol) {
    const int blocks = static_cast<int>(budgets.size());
    NetworkPrecoderSolution sol;
    sol.lambdas = arma::vec(blocks, arma::fill::zeros);

    double rhs_energy = 0.0;
    for (const auto& r : rhs) rhs_energy += std::pow(arma::norm(r, "fro"), 2);
    if (rhs_energy == 0.0) {
        sol.F.resize(rhs.size());
        for (std::size_t u = 0; u < rhs.size(); ++u)
            sol.F[u] = arma::cx_mat(arma::size(rhs[u]), arma::fill::zeros);
        return sol;
    }

    // cyclic dual coordinate ascent: each pass bisects one multiplier while
    // holding the others, which is exact for the concave differentiable dual
    constexpr int kMaxPasses = 100;
    auto power_at = [&](const arma::vec& lam, int i) {
        const BlockSolve bs = pinv_solve_blocks(A, lam, rows_per_block, rhs, i);
        const bool diverges = bs.null_energy > 1e-10 * rhs_energy;
        return diverges ? arma::datum::inf : block_power(bs.X, i, rows_per_block);
    };
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        double max_move = 0.0;
        for (int i = 0; i < blocks; ++i) {
            const double old = sol.lambdas[i];
            arma::vec lam = sol.lambdas;

            lam[i] = 0.0;
            if (power_at(lam, i) <= budgets[i]) {
                sol.lambdas[i] = 0.0;
            } else {
                double ub = std::max(std::sqrt(rhs_energy / budgets[i]), 1e-6);
                lam[i] = ub;
                int grow = 0;
                while (power_at(lam, i) > budgets[i] && ++grow < 200) lam[i] = ub *= 2.0;
                double lb = 0.0;
                while (ub - lb > tol * ub) {
                    const double mid = 0.5 * (lb + ub);
                    lam[i] = mid;
                    if (power_at(lam, i) <= budgets[i])
                        ub = mid;
                    else
                        lb = mid;
                }
                sol.lambdas[i] = ub;
            }
            max_move = std::max(max_move,
                                std::abs(sol.lambdas[i] - old) / std::max(1e-300, sol.lambdas[i] + old));
        }

        sol.F = pinv_solve_blocks(A, sol.lambdas, rows_per_block, rhs).X;

        bool satisfied = true;
        for (int i = 0; i < blocks; ++i) {
            const double p = block_power(sol.F, i, rows_per_block);
            if (p > budgets[i] * (1.0 + 1e-9)) satisfied = false;
            if (sol.lambdas[i] > 0.0 && std::abs(p - budgets[i]) > 1e-6 * budgets[i])
                satisfied = false;
        }
        if (satisfied && max_move < 1e-7) break;
    }
    return sol;
}

SolveReport network_mimo_solve(const ChannelSet& ch_in, const ScenarioConfig& cfg,
                               const SolveOptions& opts) {
    const ChannelSet base =
        opts.phase_method == PhaseMethod::NoIRS ? ch_in.with_zeroed_irs() : ch_in;
    const ChannelSet ch = stack_for_network(base);
    const double sigma2 = noise_power_watts(cfg);
    const std::vector<double> weights = cfg.weight_vector(); // cell-major == stacked order

    // feasible start: per-user singular-vector precoders scaled to satisfy
    // every per-BS block budget, tightest block at equality
    PhaseVector phase0;
    phase0.eta = cfg.eta;
    phase0.phi = random_unit_phases(opts.init_seed, static_cast<arma::uword>(ch.A) * ch.M);
    const EquivalentChannels eq0 = equivalent_channels(ch, phase0);
    PrecoderSet F0;
    F0.F.assign(1, std::vector<arma::cx_mat>(ch.K));
    for (int u = 0; u < ch.K; ++u) F0.F[0][u] = leading_right_singular_block(eq0.at(0, 0, u), cfg.d);
    double scale = arma::datum::inf;
    for (int i = 0; i < ch_in.L; ++i) {
        const double p = block_power(F0.F[0], i, ch_in.Nt);
        if (p > 0.0) scale = std::min(scale, std::sqrt(cfg.P_max / p));
    }
    if (!std::isfinite(scale)) scale = std::sqrt(cfg.P_max / (static_cast<double>(ch.K) * cfg.d));
    for (auto& f : F0.F[0]) f *= scale;

    const std::vector<double> budgets(static_cast<std::size_t>(ch_in.L), cfg.P_max);
    auto precoder_step = [&](const EquivalentChannels& eq, const Iterate& it, PrecoderSet& F) {
        const int Ntot = ch.Nt;
        arma::cx_mat A(Ntot, Ntot, arma::fill::zeros);
        std::vector<arma::cx_mat> rhs(ch.K);
        for (int u = 0; u < ch.K; ++u) {
            const arma::cx_mat hu = eq.at(0, 0, u).t() * it.U.U[0][u];
            A += weights[u] * (hu * it.W.W[0][u] * hu.t());
            rhs[u] = weights[u] * (hu * it.W.W[0][u]);
        }
        F.F[0] = solve_network_precoder(hermitian_part(A), rhs, budgets, ch_in.Nt,
                                        opts.precoder_tol).F;
    };

    const bool optimize_phase =
        opts.phase_method == PhaseMethod::MM || opts.phase_method == PhaseMethod::CCM;
    auto phase_step = [&](const PrecoderSet& F, const Iterate& it, PhaseVector& phase) {
        if (!optimize_phase) return false;
        return run_phase_update(ch, F, it, weights, opts, phase);
    };

    return bcd_core(ch, weights, sigma2, std::move(F0), std::move(phase0), opts, precoder_step,
                    phase_step);
}

} // namespace irsmimo

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "irsmimo/precoder.hpp"
#include "irsmimo/wmmse.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace irsmimo;
using namespace irsmimo::testing;

namespace {

constexpr double kSigma2 = 0.1;

// random subproblem straight from a synthetic iterate
PrecoderSubproblem iterate_subproblem(std::uint64_t seed, int l) {
    const ChannelSet ch = random_channelset(seed, 2, 2, 4, 2, 1, 4);
    const PhaseVector phase = random_phase_vector(seed + 1, ch);
    const PrecoderSet F = random_precoders(seed + 2, ch, 2, 1.0);
    const EquivalentChannels eq = equivalent_channels(ch, phase);
    DecoderSet U;
    WeightSet W;
    U.U.assign(2, std::vector<arma::cx_mat>(2));
    W.W.assign(2, std::vector<arma::cx_mat>(2));
    for (int n = 0; n < 2; ++n)
        for (int k = 0; k < 2; ++k) {
            U.U[n][k] = optimal_decoder(eq, F, kSigma2, n, k);
            W.W[n][k] = optimal_weight(mse_matrix(eq, F, U.U[n][k], kSigma2, n, k));
        }
    return make_precoder_subproblem(eq, U, W, {1.0, 0.7, 1.3, 1.0}, 1.0, l);
}

// synthetic subproblem with controlled rank
PrecoderSubproblem synthetic_subproblem(std::uint64_t seed, int nt, int users, int d, int rank,
                                        double p_max) {
    Rng rng(seed);
    const arma::cx_mat A = random_psd(rng, nt, rank);
    std::vector<arma::cx_mat> rhs(users);
    for (int k = 0; k < users; ++k) rhs[k] = random_matrix(rng, nt, d);
    return make_precoder_subproblem(A, rhs, p_max);
}

double total_power(const std::vector<arma::cx_mat>& F) {
    double p = 0.0;
    for (const auto& f : F) p += std::pow(arma::norm(f, "fro"), 2);
    return p;
}

} // namespace

TEST_CASE("subproblem with zero weights collapses") {
    const ChannelSet ch = random_channelset(90, 2, 2, 4, 2, 1, 4);
    const EquivalentChannels eq = equivalent_channels(ch, random_phase_vector(91, ch));
    DecoderSet U;
    WeightSet W;
    U.U.assign(2, std::vector<arma::cx_mat>(2, arma::cx_mat(2, 2, arma::fill::ones)));
    W.W.assign(2, std::vector<arma::cx_mat>(2, arma::cx_mat(2, 2, arma::fill::zeros)));
    const PrecoderSubproblem sub = make_precoder_subproblem(eq, U, W, {1, 1, 1, 1}, 1.0, 0);
    CHECK(arma::norm(sub.A, "fro") == 0.0);
    for (const auto& r : sub.rhs) CHECK(arma::norm(r, "fro") == 0.0);
}

TEST_CASE("single-user rank-one quadratic term") {
    const ChannelSet ch = random_channelset(92, 1, 1, 3, 1, 1, 2);
    const EquivalentChannels eq = equivalent_channels(ch, random_phase_vector(93, ch));
    DecoderSet U;
    WeightSet W;
    Rng rng(94);
    U.U.assign(1, std::vector<arma::cx_mat>(1, random_matrix(rng, 1, 1)));
    arma::cx_mat w_scalar(1, 1, arma::fill::zeros);
    w_scalar(0, 0) = 0.8;
    W.W.assign(1, std::vector<arma::cx_mat>(1, w_scalar));
    const double omega = 1.4;
    const PrecoderSubproblem sub = make_precoder_subproblem(eq, U, W, {omega}, 1.0, 0);
    const arma::cx_mat hu = eq.at(0, 0, 0).t() * U.U[0][0]; // Nt x 1
    const arma::cx_mat expect = omega * 0.8 * (hu * hu.t());
    CHECK(arma::norm(sub.A - expect, "fro") < 1e-12 * arma::norm(expect, "fro"));
}

TEST_CASE("eigendecomposition round trip") {
    for (std::uint64_t seed : {100, 101, 102}) {
        const PrecoderSubproblem sub = iterate_subproblem(seed, seed % 2);
        const arma::cx_mat back =
            sub.evecs * arma::diagmat(arma::cx_vec(sub.evals, arma::vec(4, arma::fill::zeros))) *
            sub.evecs.t();
        CHECK(arma::norm(back - sub.A, "fro") <= 1e-10 * std::max(1.0, arma::norm(sub.A, "fro")));
    }
}

TEST_CASE("precoder_at closed forms") {
    // A = I, lambda = 1 halves the right-hand side
    Rng rng(110);
    std::vector<arma::cx_mat> rhs{random_matrix(rng, 3, 2)};
    const PrecoderSubproblem sub =
        make_precoder_subproblem(arma::eye<arma::cx_mat>(3, 3), rhs, 1.0);
    const auto F = precoder_at(sub, 1.0);
    CHECK(arma::norm(F[0] - 0.5 * rhs[0], "fro") < 1e-12);

    // norm decreases monotonically to zero as lambda grows
    double prev = total_power(precoder_at(sub, 0.0));
    for (double lam : {0.5, 2.0, 8.0, 64.0, 1e4}) {
        const double p = total_power(precoder_at(sub, lam));
        CHECK(p < prev);
        prev = p;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("precoder_at matches a generic linear solve at lambda = 0.3") {
    const PrecoderSubproblem sub = synthetic_subproblem(111, 4, 2, 2, 4, 1.0);
    const auto F = precoder_at(sub, 0.3);
    for (int k = 0; k < 2; ++k) {
        const arma::cx_mat direct =
            arma::solve(sub.A + 0.3 * arma::eye<arma::cx_mat>(4, 4), sub.rhs[k]);
        CHECK(arma::norm(F[k] - direct, "fro") < 1e-10 * arma::norm(direct, "fro"));
    }
}

TEST_CASE("power_curve diagonal identities") {
    // A = I (eigenvalues 1), rhs chosen so Z = I
    std::vector<arma::cx_mat> rhs{arma::eye<arma::cx_mat>(2, 2)};
    const PrecoderSubproblem sub =
        make_precoder_subproblem(arma::eye<arma::cx_mat>(2, 2), rhs, 1.0);
    CHECK(power_curve(sub, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(power_curve(sub, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("power_curve equals the precoder norm along the curve") {
    for (std::uint64_t seed : {120, 121, 122}) {
        const PrecoderSubproblem sub = iterate_subproblem(seed, 0);
        for (double lam : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
            const double f = power_curve(sub, lam);
            const double p = total_power(precoder_at(sub, lam));
            CHECK(f == doctest::Approx(p).epsilon(1e-8));
        }
    }
}

TEST_CASE("power_curve is strictly decreasing") {
    const PrecoderSubproblem sub = synthetic_subproblem(123, 4, 2, 2, 4, 1.0);
    double prev = power_curve(sub, 1e-8);
    for (int i = 1; i <= 100; ++i) {
        const double lam = 1e-8 * std::pow(10.0, 10.0 * i / 100.0);
        const double f = power_curve(sub, lam);
        CHECK(f < prev);
        prev = f;
    }
}

TEST_CASE("power_curve domain error in the rank-deficient case") {
    const PrecoderSubproblem sub = synthetic_subproblem(124, 4, 2, 2, 2, 1.0); // rank 2
    CHECK(sub.rank == 2);
    CHECK_THROWS_AS(power_curve(sub, 0.0), std::domain_error);
    CHECK(power_curve(sub, 1e-3) > 0.0);
}

TEST_CASE("solve_precoder trivial zero case and tolerance validation") {
    std::vector<arma::cx_mat> rhs{arma::cx_mat(3, 2, arma::fill::zeros)};
    const PrecoderSubproblem sub =
        make_precoder_subproblem(arma::eye<arma::cx_mat>(3, 3), rhs, 1.0);
    const PrecoderSolution sol = solve_precoder(sub);
    CHECK(sol.lambda == 0.0);
    CHECK(total_power(sol.F) == 0.0);
    CHECK_THROWS_AS(solve_precoder(sub, 0.0), std::domain_error);
}

TEST_CASE("solve_precoder active constraint and slackness under tiny budgets") {
    for (std::uint64_t seed : {130, 131, 132, 133}) {
        PrecoderSubproblem sub = synthetic_subproblem(seed, 4, 2, 2, 4, 1e-3);
        const PrecoderSolution sol = solve_precoder(sub);
        CHECK(sol.lambda > 0.0);
        const double p = total_power(sol.F);
        CHECK(p <= sub.p_max * (1.0 + 1e-6));
        CHECK(p == doctest::Approx(sub.p_max).epsilon(1e-6));
        CHECK(std::abs(sol.lambda * (power_curve(sub, sol.lambda) - sub.p_max)) <
              1e-6 * sub.p_max);
    }
}

TEST_CASE("multiplier upper bound always over-shrinks the power") {
    Rng rng(140);
    for (int trial = 0; trial < 1000; ++trial) {
        const int nt = 2 + static_cast<int>(rng.uniform() * 4);
        const int rank = 1 + static_cast<int>(rng.uniform() * nt);
        const double p_max = std::pow(10.0, rng.uniform(-3.0, 1.0));
        const PrecoderSubproblem sub =
            synthetic_subproblem(1000 + trial, nt, 2, 2, rank, p_max);
        const double z_total = arma::accu(sub.z_diag);
        if (z_total <= 0.0) continue;
        const double ub = std::sqrt(z_total / p_max);
        CHECK(power_curve(sub, ub) < p_max);
    }
}

TEST_CASE("rank-deficient dispatch produces full-power finite precoders") {
    int active = 0;
    for (std::uint64_t seed : {150, 151, 152, 153, 154}) {
        const PrecoderSubproblem sub = synthetic_subproblem(seed, 4, 2, 2, 2, 0.5);
        REQUIRE(sub.rank == 2);
        const PrecoderSolution sol = solve_precoder(sub);
        for (const auto& f : sol.F) CHECK(f.is_finite());
        if (sol.lambda > 0.0) {
            CHECK(total_power(sol.F) == doctest::Approx(sub.p_max).epsilon(1e-6));
            ++active;
        }
    }
    CHECK(active > 0); // generic right-hand sides push the constraint active
}

TEST_CASE("rank-deficient with range-space rhs accepts lambda = 0") {
    Rng rng(160);
    const int nt = 4;
    const arma::cx_mat B = random_matrix(rng, nt, 2);
    const arma::cx_mat A = hermitian_part(B * B.t()); // rank 2
    // rhs inside range(A): unconstrained minimum exists
    std::vector<arma::cx_mat> rhs{0.01 * A * random_matrix(rng, nt, 2)};
    const PrecoderSubproblem sub = make_precoder_subproblem(A, rhs, 100.0);
    const PrecoderSolution sol = solve_precoder(sub);
    CHECK(sol.lambda == 0.0);
    CHECK(total_power(sol.F) < 100.0);
}

TEST_CASE("bisection matches the projected-gradient oracle") {
    int rank_deficient = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int rank = (trial % 5 == 0) ? 2 : 4; // 10 rank-deficient instances
        if (rank < 4) ++rank_deficient;
        const PrecoderSubproblem sub =
            synthetic_subproblem(200 + trial, 4, 2, 2, rank, trial % 3 == 0 ? 0.05 : 1.0);
        const PrecoderSolution sol = solve_precoder(sub);
        const auto oracle = precoder_pgd_oracle(sub);

        const double obj_fast = precoder_objective(sub, sol.F);
        const double obj_oracle = precoder_objective(sub, oracle);
        CHECK(std::abs(obj_fast - obj_oracle) <=
              1e-4 * std::max({1e-12, std::abs(obj_fast), std::abs(obj_oracle)}));
        CHECK(total_power(sol.F) <= sub.p_max * (1.0 + 1e-6));
    }
    CHECK(rank_deficient == 10);
}

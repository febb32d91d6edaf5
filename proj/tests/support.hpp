#ifndef IRSMIMO_TESTS_SUPPORT_HPP
#define IRSMIMO_TESTS_SUPPORT_HPP

// Shared generators and independent oracles for the test suites. Everything
// here is deliberately brute-force and stays off the library's fast paths.

#include <armadillo>
#include <cmath>
#include <numbers>
#include <vector>

#include "irsmimo/rng.hpp"
#include "irsmimo/scenario.hpp"
#include "irsmimo/system.hpp"

namespace irsmimo::testing {

inline arma::cx_mat random_matrix(Rng& rng, int rows, int cols) {
    arma::cx_mat m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.cgauss();
    return m;
}

inline arma::cx_vec random_unit_phases(Rng& rng, int count) {
    arma::cx_vec phi(count);
    for (int m = 0; m < count; ++m)
        phi[m] = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
    return phi;
}

// Hermitian PSD matrix of the given rank with O(1) entries.
inline arma::cx_mat random_psd(Rng& rng, int n, int rank) {
    const arma::cx_mat b = random_matrix(rng, n, rank);
    return hermitian_part(b * b.t());
}

// Unit-scale synthetic network (no path loss, CN(0,1) channel entries):
// well-conditioned inputs for algebraic oracles.
inline ChannelSet random_channelset(std::uint64_t seed, int L, int K, int Nt, int Nr, int A, int M) {
    Rng rng(seed);
    ChannelSet ch;
    ch.L = L;
    ch.K = K;
    ch.A = A;
    ch.M = M;
    ch.Nt = Nt;
    ch.Nr = Nr;
    ch.seed = seed;
    ch.user_positions.assign(static_cast<std::size_t>(L) * K, arma::vec3{0, 0, 0});
    for (int n = 0; n < L; ++n)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) ch.H_direct.push_back(random_matrix(rng, Nr, Nt));
    for (int a = 0; a < A; ++a)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) ch.H_irs_user.push_back(random_matrix(rng, Nr, M));
    for (int n = 0; n < L; ++n)
        for (int a = 0; a < A; ++a) ch.G_bs_irs.push_back(random_matrix(rng, M, Nt));
    return ch;
}

inline PhaseVector random_phase_vector(std::uint64_t seed, const ChannelSet& ch, double eta = 1.0) {
    Rng rng(seed);
    PhaseVector p;
    p.eta = eta;
    p.phi = random_unit_phases(rng, ch.A * ch.M);
    return p;
}

// random precoders scaled to per-BS power exactly `power`
inline PrecoderSet random_precoders(std::uint64_t seed, const ChannelSet& ch, int d, double power) {
    Rng rng(seed);
    PrecoderSet F;
    F.F.assign(ch.L, std::vector<arma::cx_mat>(ch.K));
    for (int l = 0; l < ch.L; ++l) {
        double p = 0.0;
        for (int k = 0; k < ch.K; ++k) {
            F.F[l][k] = random_matrix(rng, ch.Nt, d);
            p += std::pow(arma::norm(F.F[l][k], "fro"), 2);
        }
        const double s = std::sqrt(power / p);
        for (int k = 0; k < ch.K; ++k) F.F[l][k] *= s;
    }
    return F;
}

// Entrywise expansion of the equivalent channel, independent of the stacked
// matrix-product implementation: sum_m eta*phi_m*hr(:,m)*g(m,:) + Hd.
inline arma::cx_mat equivalent_channel_bruteforce(const ChannelSet& ch, const PhaseVector& phase,
                                                  int bs, int l, int k) {
    arma::cx_mat h = ch.direct(bs, l, k);
    for (int a = 0; a < ch.A; ++a) {
        const arma::cx_mat& hr = ch.irs_user(a, l, k);
        const arma::cx_mat& g = ch.bs_irs(bs, a);
        for (int m = 0; m < ch.M; ++m) {
            const arma::cx_double coeff = phase.eta * phase.phi[a * ch.M + m];
            h += coeff * (hr.col(m) * g.row(m));
        }
    }
    return h;
}

} // namespace irsmimo::testing

#endif

#ifndef IRSMIMO_SYSTEM_HPP
#define IRSMIMO_SYSTEM_HPP

#include <armadillo>
#include <vector>

#include "irsmimo/scenario.hpp"

namespace irsmimo {

// Unit-modulus reflection coefficients of all IRSs (stacked, length A*M)
// plus the common amplitude eta. The effective reflection is eta*phi_m.
struct PhaseVector {
    arma::cx_vec phi;
    double eta = 1.0;
};

struct PrecoderSet {
    std::vector<std::vector<arma::cx_mat>> F; // [l][k], Nt x d
};

struct DecoderSet {
    std::vector<std::vector<arma::cx_mat>> U; // [l][k], Nr x d
};

struct WeightSet {
    std::vector<std::vector<arma::cx_mat>> W; // [l][k], d x d Hermitian PSD
};

// All equivalent channels of one iterate, indexed (bs, l, k). Computing them
// once per BCD sweep avoids rebuilding the stacked IRS products in every
// covariance/rate call.
struct EquivalentChannels {
    int L = 0, K = 0;
    std::vector<arma::cx_mat> H; // (bs*L + l)*K + k -> Nr x Nt

    const arma::cx_mat& at(int bs, int l, int k) const {
        return H[(static_cast<std::size_t>(bs) * L + l) * K + k];
    }
};

// H_bar(n,l,k) = Hr(l,k) * diag(eta*phi) * G(n) + Hd(n,l,k)
arma::cx_mat equivalent_channel(const ChannelSet& ch, const PhaseVector& phase, int bs, int l, int k);
EquivalentChannels equivalent_channels(const ChannelSet& ch, const PhaseVector& phase);

// Interference-plus-noise covariance of user (l,k); Hermitian, >= sigma2*I.
arma::cx_mat interference_covariance(const EquivalentChannels& eq, const PrecoderSet& F,
                                     double sigma2, int l, int k);
arma::cx_mat interference_covariance(const ChannelSet& ch, const PhaseVector& phase,
                                     const PrecoderSet& F, double sigma2, int l, int k);

// Achievable rate in bits/s/Hz: log2 det(I + Hbar F F^H Hbar^H J^{-1}).
double user_rate(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2, int l, int k);
double user_rate(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                 double sigma2, int l, int k);

// MSE matrix E(l,k) for an arbitrary linear decoder U of that user.
arma::cx_mat mse_matrix(const EquivalentChannels& eq, const PrecoderSet& F, const arma::cx_mat& U,
                        double sigma2, int l, int k);
arma::cx_mat mse_matrix(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                        const arma::cx_mat& U, double sigma2, int l, int k);

double weighted_sum_rate(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2,
                         const std::vector<double>& weights);
double weighted_sum_rate(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                         double sigma2, const std::vector<double>& weights);

// Sum of per-user powers at BS l.
double bs_power(const PrecoderSet& F, int l);

arma::cx_mat hermitian_part(const arma::cx_mat& X);

} // namespace irsmimo

#endif

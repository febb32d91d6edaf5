#ifndef IRSMIMO_WMMSE_HPP
#define IRSMIMO_WMMSE_HPP

#include <armadillo>

#include "irsmimo/system.hpp"

namespace irsmimo {

// MMSE receiver: (J + Hbar F F^H Hbar^H)^{-1} Hbar F.
arma::cx_mat optimal_decoder(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2,
                             int l, int k);
arma::cx_mat optimal_decoder(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                             double sigma2, int l, int k);

// W = E^{-1} for Hermitian positive definite E. Throws std::runtime_error
// with a condition report when E is singular beyond working precision.
arma::cx_mat optimal_weight(const arma::cx_mat& E);

// Per-user surrogate weight*(log det W - Tr(W E) + d)/ln2. With W and E at
// their closed-form values this equals the weighted user rate in bits.
double surrogate_value(const arma::cx_mat& W, const arma::cx_mat& E, double weight);

} // namespace irsmimo

#endif

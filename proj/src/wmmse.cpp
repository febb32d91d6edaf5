#include "irsmimo/wmmse.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace irsmimo {

arma::cx_mat optimal_decoder(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2,
                             int l, int k) {
    const arma::cx_mat hf = eq.at(l, l, k) * F.F[l][k];
    const arma::cx_mat R = hermitian_part(interference_covariance(eq, F, sigma2, l, k) + hf * hf.t());
    return arma::solve(R, hf, arma::solve_opts::likely_sympd);
}

arma::cx_mat optimal_decoder(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                             double sigma2, int l, int k) {
    return optimal_decoder(equivalent_channels(ch, phase), F, sigma2, l, k);
}

arma::cx_mat optimal_weight(const arma::cx_mat& E) {
    const arma::cx_mat Es = hermitian_part(E);
    arma::cx_mat W;
    const bool ok = arma::inv_sympd(W, Es);
    if (!ok) {
        std::ostringstream msg;
        msg << "optimal_weight: E is numerically singular (rcond=" << arma::rcond(Es) << ")";
        throw std::runtime_error(msg.str());
    }
    return hermitian_part(W);
}

double surrogate_value(const arma::cx_mat& W, const arma::cx_mat& E, double weight) {
    const double d = static_cast<double>(E.n_rows);
    const double logdet_w = arma::log_det_sympd(hermitian_part(W));
    const double tr = std::real(arma::trace(W * E));
    return weight * (logdet_w - tr + d) / std::numbers::ln2;
}

} // namespace irsmimo

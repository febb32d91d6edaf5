#include "irsmimo/system.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace irsmimo {

arma::cx_mat hermitian_part(const arma::cx_mat& X) { return 0.5 * (X + X.t()); }

arma::cx_mat equivalent_channel(const ChannelSet& ch, const PhaseVector& phase, int bs, int l, int k) {
    const arma::cx_mat& hd = ch.direct(bs, l, k);
    if (ch.A == 0 || phase.phi.n_elem == 0) return hd;
    if (phase.phi.n_elem != static_cast<arma::uword>(ch.A) * ch.M)
        throw std::invalid_argument("equivalent_channel: phase vector length != A*M");
    const arma::cx_mat hr = ch.stacked_irs_user(l, k);
    const arma::cx_mat g = ch.stacked_bs_irs(bs);
    // Hr * diag(eta*phi) * G: scale the columns of Hr, then one product.
    arma::cx_mat hr_scaled = hr;
    hr_scaled.each_row() %= arma::strans(phase.eta * phase.phi);
    return hr_scaled * g + hd;
}

EquivalentChannels equivalent_channels(const ChannelSet& ch, const PhaseVector& phase) {
    EquivalentChannels eq;
    eq.L = ch.L;
    eq.K = ch.K;
    eq.H.resize(static_cast<std::size_t>(ch.L) * ch.L * ch.K);
    for (int bs = 0; bs < ch.L; ++bs)
        for (int l = 0; l < ch.L; ++l)
            for (int k = 0; k < ch.K; ++k)
                eq.H[(static_cast<std::size_t>(bs) * ch.L + l) * ch.K + k] =
                    equivalent_channel(ch, phase, bs, l, k);
    return eq;
}

arma::cx_mat interference_covariance(const EquivalentChannels& eq, const PrecoderSet& F,
                                     double sigma2, int l, int k) {
    const int Nr = static_cast<int>(eq.at(l, l, k).n_rows);
    arma::cx_mat J(Nr, Nr, arma::fill::zeros);
    for (int n = 0; n < eq.L; ++n) {
        const arma::cx_mat& h = eq.at(n, l, k);
        for (int m = 0; m < eq.K; ++m) {
            if (n == l && m == k) continue;
            const arma::cx_mat hf = h * F.F[n][m];
            J += hf * hf.t();
        }
    }
    J.diag() += sigma2;
    return hermitian_part(J);
}

arma::cx_mat interference_covariance(const ChannelSet& ch, const PhaseVector& phase,
                                     const PrecoderSet& F, double sigma2, int l, int k) {
    return interference_covariance(equivalent_channels(ch, phase), F, sigma2, l, k);
}

double user_rate(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2, int l, int k) {
    if (sigma2 <= 0.0) throw std::domain_error("user_rate: sigma2 must be positive");
    const arma::cx_mat J = interference_covariance(eq, F, sigma2, l, k);
    const arma::cx_mat hf = eq.at(l, l, k) * F.F[l][k];
    const arma::cx_mat S = hermitian_part(J + hf * hf.t());
    // log2 det(I + S_signal J^{-1}) = (logdet(J+S) - logdet(J)) / ln 2
    const double ld = arma::log_det_sympd(S) - arma::log_det_sympd(J);
    return std::max(0.0, ld / std::numbers::ln2);
}

double user_rate(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                 double sigma2, int l, int k) {
    return user_rate(equivalent_channels(ch, phase), F, sigma2, l, k);
}

arma::cx_mat mse_matrix(const EquivalentChannels& eq, const PrecoderSet& F, const arma::cx_mat& U,
                        double sigma2, int l, int k) {
    const int d = static_cast<int>(F.F[l][k].n_cols);
    const arma::cx_mat uh = U.t();
    arma::cx_mat E = arma::cx_mat(d, d, arma::fill::zeros);
    const arma::cx_mat own = uh * eq.at(l, l, k) * F.F[l][k] - arma::cx_mat(d, d, arma::fill::eye);
    E += own * own.t();
    for (int n = 0; n < eq.L; ++n) {
        const arma::cx_mat uhh = uh * eq.at(n, l, k);
        for (int m = 0; m < eq.K; ++m) {
            if (n == l && m == k) continue;
            const arma::cx_mat x = uhh * F.F[n][m];
            E += x * x.t();
        }
    }
    E += sigma2 * (uh * U);
    return hermitian_part(E);
}

arma::cx_mat mse_matrix(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                        const arma::cx_mat& U, double sigma2, int l, int k) {
    return mse_matrix(equivalent_channels(ch, phase), F, U, sigma2, l, k);
}

double weighted_sum_rate(const EquivalentChannels& eq, const PrecoderSet& F, double sigma2,
                         const std::vector<double>& weights) {
    double wsr = 0.0;
    for (int l = 0; l < eq.L; ++l)
        for (int k = 0; k < eq.K; ++k) {
            const double w = weights[static_cast<std::size_t>(l) * eq.K + k];
            if (w == 0.0) continue;
            wsr += w * user_rate(eq, F, sigma2, l, k);
        }
    return wsr;
}

double weighted_sum_rate(const ChannelSet& ch, const PhaseVector& phase, const PrecoderSet& F,
                         double sigma2, const std::vector<double>& weights) {
    return weighted_sum_rate(equivalent_channels(ch, phase), F, sigma2, weights);
}

double bs_power(const PrecoderSet& F, int l) {
    double p = 0.0;
    for (const auto& f : F.F[l]) p += std::pow(arma::norm(f, "fro"), 2);
    return p;
}

} // namespace irsmimo

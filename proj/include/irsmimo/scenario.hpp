#ifndef IRSMIMO_SCENARIO_HPP
#define IRSMIMO_SCENARIO_HPP

#include <armadillo>
#include <cstdint>
#include <string>
#include <vector>

#include "irsmimo/rng.hpp"

namespace irsmimo {

struct Heights {
    double bs_m = 30.0;
    double irs_m = 10.0;
    double user_m = 1.5;
};

// Geometry, power budget, fading and weighting parameters of one deployment.
// Together with a seed this fully determines a channel realization.
struct ScenarioConfig {
    int L = 2;  // cells / BSs
    int K = 2;  // users per cell
    int Nt = 4; // transmit antennas per BS
    int Nr = 2; // receive antennas per user
    int d = 2;  // data streams per user
    int A = 1;  // IRS count
    int M = 50; // reflection elements per IRS

    std::vector<arma::vec3> bs_positions;  // meters, one per BS
    std::vector<arma::vec3> irs_positions; // meters, one per IRS
    std::vector<arma::vec2> user_cluster_centers; // ground-plane center per cell
    double user_cluster_radius = 20.0;            // meters
    Heights heights;

    double P_max = 1.0;                   // per-BS power budget, watts
    double noise_density_dbm_hz = -174.0;
    double bandwidth_hz = 10e6;

    double alpha_bu = 3.75; // BS-user path-loss exponent
    double alpha_bi = 2.2;  // BS-IRS
    double alpha_iu = 2.2;  // IRS-user
    double pl0_db = -30.0;  // reference path loss at d0
    double d0_m = 1.0;

    double rician_beta = 3.0; // Rician factor of IRS-related links
    double eta = 1.0;         // common reflection amplitude, [0,1]
    std::vector<double> weights; // per user, cell-major (l*K + k); empty = all 1
    double antenna_spacing_ratio = 0.5; // d/lambda

    // Optional per-user ground positions overriding the cluster draw
    // (cell-major, length L*K). Used by the fixed-coordinate fairness study.
    std::vector<arma::vec2> fixed_user_positions;

    void validate() const; // throws std::invalid_argument on violation
    double weight(int l, int k) const;
    std::vector<double> weight_vector() const; // length L*K, filled with 1s when empty
    int user_count() const { return L * K; }

    // Canned layouts used throughout the experiment suite.
    static ScenarioConfig two_cell(double x_user = 280.0);
    static ScenarioConfig four_cell();

    static ScenarioConfig from_json_text(const std::string& text);
    static ScenarioConfig from_json_file(const std::string& path);
    std::string to_json_text() const;
};

// One realization of every channel matrix in the network. Immutable after
// synthesis; all accessors are index helpers into flat storage.
struct ChannelSet {
    int L = 0, K = 0, A = 0, M = 0, Nt = 0, Nr = 0;
    std::uint64_t seed = 0;

    std::vector<arma::cx_mat> H_direct;   // (n,l,k) -> Nr x Nt, BS n -> user (l,k)
    std::vector<arma::cx_mat> H_irs_user; // (a,l,k) -> Nr x M, IRS a -> user (l,k)
    std::vector<arma::cx_mat> G_bs_irs;   // (n,a)   -> M x Nt, BS n -> IRS a
    std::vector<arma::vec3> user_positions; // (l,k), the drawn 3D positions

    const arma::cx_mat& direct(int n, int l, int k) const {
        return H_direct[(static_cast<std::size_t>(n) * L + l) * K + k];
    }
    const arma::cx_mat& irs_user(int a, int l, int k) const {
        return H_irs_user[(static_cast<std::size_t>(a) * L + l) * K + k];
    }
    const arma::cx_mat& bs_irs(int n, int a) const {
        return G_bs_irs[static_cast<std::size_t>(n) * A + a];
    }
    const arma::vec3& user_position(int l, int k) const {
        return user_positions[static_cast<std::size_t>(l) * K + k];
    }

    // Multi-IRS stacked forms: Nr x (A*M) and (A*M) x Nt.
    arma::cx_mat stacked_irs_user(int l, int k) const;
    arma::cx_mat stacked_bs_irs(int n) const;

    // Copy with all IRS-related matrices set to zero (the No-IRS baseline).
    ChannelSet with_zeroed_irs() const;
};

double distance_3d(const arma::vec3& a, const arma::vec3& b);

// PL0 - 10*alpha*log10(d/d0), in dB. Throws std::domain_error for d <= 0.
double path_loss_db(double distance_m, double alpha, const ScenarioConfig& cfg);

// ULA steering vector, element i = exp(j*2*pi*spacing_ratio*i*sin(angle)).
arma::cx_vec steering_vector(double angle_rad, int count, double spacing_ratio);

// Rician mixture sqrt(b/(b+1))*a_r*a_t^H + sqrt(1/(b+1))*W with W iid CN(0,1).
arma::cx_mat rician_channel(Rng& rng, double beta, int rows, int cols,
                            double aoa_rad, double aod_rad, double spacing_ratio);

// Draw user positions and every channel matrix for one realization.
// Pure function of (cfg, seed).
ChannelSet synthesize(const ScenarioConfig& cfg, std::uint64_t seed);

double noise_power_watts(const ScenarioConfig& cfg);

} // namespace irsmimo

#endif

#include "irsmimo/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace irsmimo {

namespace {

// substream tags, one family per link kind
constexpr std::uint64_t kStreamUserPos = 0x10;
constexpr std::uint64_t kStreamDirect = 0x20;
constexpr std::uint64_t kStreamBsIrs = 0x30;
constexpr std::uint64_t kStreamIrsUser = 0x40;

double amplitude_from_pl_db(double pl_db) {
    return std::sqrt(std::pow(10.0, pl_db / 10.0));
}

} // namespace

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("ScenarioConfig: " + msg); };
    if (L < 1) fail("L must be >= 1");
    if (K < 1) fail("K must be >= 1");
    if (A < 0) fail("A must be >= 0");
    if (M < 1) fail("M must be >= 1");
    if (d < 1) fail("d must be >= 1");
    if (Nt < d) fail("Nt must be >= d");
    if (Nr < d) fail("Nr must be >= d");
    if (P_max <= 0.0) fail("P_max must be positive");
    if (eta < 0.0 || eta > 1.0) fail("eta must lie in [0,1]");
    if (rician_beta < 0.0) fail("rician_beta must be >= 0");
    if (user_cluster_radius < 0.0) fail("user_cluster_radius must be >= 0");
    if (bandwidth_hz <= 0.0) fail("bandwidth_hz must be positive");
    if (d0_m <= 0.0) fail("d0_m must be positive");
    if (antenna_spacing_ratio <= 0.0) fail("antenna_spacing_ratio must be positive");
    if (static_cast<int>(bs_positions.size()) != L) fail("bs_positions must have length L");
    if (static_cast<int>(irs_positions.size()) != A) fail("irs_positions must have length A");
    if (static_cast<int>(user_cluster_centers.size()) != L) fail("user_cluster_centers must have length L");
    if (!weights.empty() && static_cast<int>(weights.size()) != L * K)
        fail("weights must be empty or have length L*K");
    for (double w : weights)
        if (w < 0.0) fail("weights must be >= 0");
    if (!fixed_user_positions.empty() && static_cast<int>(fixed_user_positions.size()) != L * K)
        fail("fixed_user_positions must be empty or have length L*K");
}

double ScenarioConfig::weight(int l, int k) const {
    if (weights.empty()) return 1.0;
    return weights[static_cast<std::size_t>(l) * K + k];
}

std::vector<double> ScenarioConfig::weight_vector() const {
    if (!weights.empty()) return weights;
    return std::vector<double>(static_cast<std::size_t>(L) * K, 1.0);
}

ScenarioConfig ScenarioConfig::two_cell(double x_user) {
    ScenarioConfig cfg;
    cfg.L = 2;
    cfg.K = 2;
    cfg.Nt = 4;
    cfg.Nr = 2;
    cfg.d = 2;
    cfg.A = 1;
    cfg.M = 50;
    cfg.bs_positions = {arma::vec3{0.0, 0.0, cfg.heights.bs_m},
                        arma::vec3{600.0, 0.0, cfg.heights.bs_m}};
    cfg.irs_positions = {arma::vec3{300.0, 0.0, cfg.heights.irs_m}};
    cfg.user_cluster_centers = {arma::vec2{x_user, 0.0}, arma::vec2{600.0 - x_user, 0.0}};
    return cfg;
}

ScenarioConfig ScenarioConfig::four_cell() {
    ScenarioConfig cfg;
    cfg.L = 4;
    cfg.K = 3;
    cfg.Nt = 2;
    cfg.Nr = 2;
    cfg.d = 2;
    cfg.A = 1;
    cfg.M = 50;
    cfg.bs_positions = {arma::vec3{0.0, 0.0, cfg.heights.bs_m},
                        arma::vec3{600.0, 0.0, cfg.heights.bs_m},
                        arma::vec3{0.0, 600.0, cfg.heights.bs_m},
                        arma::vec3{600.0, 600.0, cfg.heights.bs_m}};
    cfg.irs_positions = {arma::vec3{300.0, 0.0, cfg.heights.irs_m}};
    cfg.user_cluster_centers = {arma::vec2{280.0, 0.0}, arma::vec2{320.0, 0.0},
                                arma::vec2{280.0, 600.0}, arma::vec2{320.0, 600.0}};
    return cfg;
}

namespace {

arma::vec3 parse_position3(const nlohmann::json& j, double default_z) {
    if (!j.is_array() || (j.size() != 2 && j.size() != 3))
        throw std::invalid_argument("position must be a 2- or 3-element array");
    arma::vec3 p;
    p[0] = j[0].get<double>();
    p[1] = j[1].get<double>();
    p[2] = j.size() == 3 ? j[2].get<double>() : default_z;
    return p;
}

} // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }

    ScenarioConfig cfg;
    try {
        cfg.L = j.at("L").get<int>();
        cfg.K = j.at("K").get<int>();
        cfg.Nt = j.at("Nt").get<int>();
        cfg.Nr = j.at("Nr").get<int>();
        cfg.d = j.at("d").get<int>();
        cfg.A = j.at("A").get<int>();
        cfg.M = j.at("M").get<int>();

        if (j.contains("heights")) {
            const auto& h = j.at("heights");
            cfg.heights.bs_m = h.value("bs_m", cfg.heights.bs_m);
            cfg.heights.irs_m = h.value("irs_m", cfg.heights.irs_m);
            cfg.heights.user_m = h.value("user_m", cfg.heights.user_m);
        }

        cfg.bs_positions.clear();
        for (const auto& p : j.at("bs_positions"))
            cfg.bs_positions.push_back(parse_position3(p, cfg.heights.bs_m));
        cfg.irs_positions.clear();
        for (const auto& p : j.at("irs_positions"))
            cfg.irs_positions.push_back(parse_position3(p, cfg.heights.irs_m));
        cfg.user_cluster_centers.clear();
        for (const auto& p : j.at("user_cluster_centers")) {
            if (!p.is_array() || p.size() != 2)
                throw std::invalid_argument("user_cluster_centers entries must be [x,y]");
            cfg.user_cluster_centers.push_back(arma::vec2{p[0].get<double>(), p[1].get<double>()});
        }
        cfg.user_cluster_radius = j.at("user_cluster_radius").get<double>();
        cfg.P_max = j.at("P_max").get<double>();
        cfg.noise_density_dbm_hz = j.at("noise_density_dbm_hz").get<double>();
        cfg.bandwidth_hz = j.at("bandwidth_hz").get<double>();
        cfg.alpha_bu = j.at("alpha_bu").get<double>();
        cfg.alpha_bi = j.at("alpha_bi").get<double>();
        cfg.alpha_iu = j.at("alpha_iu").get<double>();
        cfg.pl0_db = j.at("pl0_db").get<double>();
        cfg.d0_m = j.at("d0_m").get<double>();
        cfg.rician_beta = j.at("rician_beta").get<double>();
        cfg.eta = j.at("eta").get<double>();
        cfg.antenna_spacing_ratio = j.value("antenna_spacing_ratio", 0.5);
        cfg.weights.clear();
        if (j.contains("weights"))
            for (const auto& w : j.at("weights")) cfg.weights.push_back(w.get<double>());
        cfg.fixed_user_positions.clear();
        if (j.contains("fixed_user_positions"))
            for (const auto& p : j.at("fixed_user_positions")) {
                if (!p.is_array() || p.size() != 2)
                    throw std::invalid_argument("fixed_user_positions entries must be [x,y]");
                cfg.fixed_user_positions.push_back(arma::vec2{p[0].get<double>(), p[1].get<double>()});
            }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config field error: ") + e.what());
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ScenarioConfig::to_json_text() const {
    nlohmann::json j;
    j["L"] = L;
    j["K"] = K;
    j["Nt"] = Nt;
    j["Nr"] = Nr;
    j["d"] = d;
    j["A"] = A;
    j["M"] = M;
    auto pos3 = [](const std::vector<arma::vec3>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : v) a.push_back({p[0], p[1], p[2]});
        return a;
    };
    j["bs_positions"] = pos3(bs_positions);
    j["irs_positions"] = pos3(irs_positions);
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : user_cluster_centers) centers.push_back({c[0], c[1]});
    j["user_cluster_centers"] = centers;
    j["user_cluster_radius"] = user_cluster_radius;
    j["heights"] = {{"bs_m", heights.bs_m}, {"irs_m", heights.irs_m}, {"user_m", heights.user_m}};
    j["P_max"] = P_max;
    j["noise_density_dbm_hz"] = noise_density_dbm_hz;
    j["bandwidth_hz"] = bandwidth_hz;
    j["alpha_bu"] = alpha_bu;
    j["alpha_bi"] = alpha_bi;
    j["alpha_iu"] = alpha_iu;
    j["pl0_db"] = pl0_db;
    j["d0_m"] = d0_m;
    j["rician_beta"] = rician_beta;
    j["eta"] = eta;
    j["antenna_spacing_ratio"] = antenna_spacing_ratio;
    if (!weights.empty()) j["weights"] = weights;
    if (!fixed_user_positions.empty()) {
        nlohmann::json fixed = nlohmann::json::array();
        for (const auto& p : fixed_user_positions) fixed.push_back({p[0], p[1]});
        j["fixed_user_positions"] = fixed;
    }
    return j.dump(2) + "\n";
}

arma::cx_mat ChannelSet::stacked_irs_user(int l, int k) const {
    arma::cx_mat H(Nr, static_cast<arma::uword>(A) * M, arma::fill::zeros);
    for (int a = 0; a < A; ++a)
        H.cols(static_cast<arma::uword>(a) * M, static_cast<arma::uword>(a + 1) * M - 1) =
            irs_user(a, l, k);
    return H;
}

arma::cx_mat ChannelSet::stacked_bs_irs(int n) const {
    arma::cx_mat G(static_cast<arma::uword>(A) * M, Nt, arma::fill::zeros);
    for (int a = 0; a < A; ++a)
        G.rows(static_cast<arma::uword>(a) * M, static_cast<arma::uword>(a + 1) * M - 1) =
            bs_irs(n, a);
    return G;
}

ChannelSet ChannelSet::with_zeroed_irs() const {
    ChannelSet out = *this;
    for (auto& h : out.H_irs_user) h.zeros();
    for (auto& g : out.G_bs_irs) g.zeros();
    return out;
}

double distance_3d(const arma::vec3& a, const arma::vec3& b) {
    return arma::norm(arma::vec(a) - arma::vec(b), 2);
}

double path_loss_db(double distance_m, double alpha, const ScenarioConfig& cfg) {
    if (distance_m <= 0.0) throw std::domain_error("path_loss_db: distance must be positive");
    return cfg.pl0_db - 10.0 * alpha * std::log10(distance_m / cfg.d0_m);
}

arma::cx_vec steering_vector(double angle_rad, int count, double spacing_ratio) {
    arma::cx_vec a(count);
    const double phase_step = 2.0 * std::numbers::pi * spacing_ratio * std::sin(angle_rad);
    for (int i = 0; i < count; ++i) a[i] = std::polar(1.0, phase_step * i);
    return a;
}

arma::cx_mat rician_channel(Rng& rng, double beta, int rows, int cols, double aoa_rad,
                            double aod_rad, double spacing_ratio) {
    if (beta < 0.0) throw std::domain_error("rician_channel: beta must be >= 0");
    const arma::cx_vec ar = steering_vector(aoa_rad, rows, spacing_ratio);
    const arma::cx_vec at = steering_vector(aod_rad, cols, spacing_ratio);
    arma::cx_mat nlos(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) nlos(r, c) = rng.cgauss();
    const double w_los = std::sqrt(beta / (beta + 1.0));
    const double w_nlos = std::sqrt(1.0 / (beta + 1.0));
    return w_los * (ar * at.t()) + w_nlos * nlos;
}

ChannelSet synthesize(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    ChannelSet ch;
    ch.L = cfg.L;
    ch.K = cfg.K;
    ch.A = cfg.A;
    ch.M = cfg.M;
    ch.Nt = cfg.Nt;
    ch.Nr = cfg.Nr;
    ch.seed = seed;

    // user drops: uniform over the cluster disk, or the fixed override
    ch.user_positions.resize(static_cast<std::size_t>(cfg.L) * cfg.K);
    for (int l = 0; l < cfg.L; ++l)
        for (int k = 0; k < cfg.K; ++k) {
            arma::vec3 p;
            if (!cfg.fixed_user_positions.empty()) {
                const auto& q = cfg.fixed_user_positions[static_cast<std::size_t>(l) * cfg.K + k];
                p = {q[0], q[1], cfg.heights.user_m};
            } else {
                Rng rng = Rng::substream(seed, kStreamUserPos, l, k);
                const double radius = cfg.user_cluster_radius * std::sqrt(rng.uniform());
                const double angle = rng.uniform(0.0, two_pi);
                const auto& c = cfg.user_cluster_centers[l];
                p = {c[0] + radius * std::cos(angle), c[1] + radius * std::sin(angle),
                     cfg.heights.user_m};
            }
            ch.user_positions[static_cast<std::size_t>(l) * cfg.K + k] = p;
        }

    // BS -> user, Rayleigh
    ch.H_direct.resize(static_cast<std::size_t>(cfg.L) * cfg.L * cfg.K);
    for (int n = 0; n < cfg.L; ++n)
        for (int l = 0; l < cfg.L; ++l)
            for (int k = 0; k < cfg.K; ++k) {
                Rng rng = Rng::substream(seed, kStreamDirect, n, l, k);
                const double dist = distance_3d(cfg.bs_positions[n], ch.user_position(l, k));
                const double amp = amplitude_from_pl_db(path_loss_db(dist, cfg.alpha_bu, cfg));
                arma::cx_mat h(cfg.Nr, cfg.Nt);
                for (int c = 0; c < cfg.Nt; ++c)
                    for (int r = 0; r < cfg.Nr; ++r) h(r, c) = rng.cgauss();
                ch.H_direct[(static_cast<std::size_t>(n) * cfg.L + l) * cfg.K + k] = amp * h;
            }

    // BS -> IRS, Rician with fresh angles per link
    ch.G_bs_irs.resize(static_cast<std::size_t>(cfg.L) * cfg.A);
    for (int n = 0; n < cfg.L; ++n)
        for (int a = 0; a < cfg.A; ++a) {
            Rng rng = Rng::substream(seed, kStreamBsIrs, n, a);
            const double aoa = rng.uniform(0.0, two_pi);
            const double aod = rng.uniform(0.0, two_pi);
            const double dist = distance_3d(cfg.bs_positions[n], cfg.irs_positions[a]);
            const double amp = amplitude_from_pl_db(path_loss_db(dist, cfg.alpha_bi, cfg));
            ch.G_bs_irs[static_cast<std::size_t>(n) * cfg.A + a] =
                amp * rician_channel(rng, cfg.rician_beta, cfg.M, cfg.Nt, aoa, aod,
                                     cfg.antenna_spacing_ratio);
        }

    // IRS -> user, Rician
    ch.H_irs_user.resize(static_cast<std::size_t>(cfg.A) * cfg.L * cfg.K);
    for (int a = 0; a < cfg.A; ++a)
        for (int l = 0; l < cfg.L; ++l)
            for (int k = 0; k < cfg.K; ++k) {
                Rng rng = Rng::substream(seed, kStreamIrsUser, a, l, k);
                const double aoa = rng.uniform(0.0, two_pi);
                const double aod = rng.uniform(0.0, two_pi);
                const double dist = distance_3d(cfg.irs_positions[a], ch.user_position(l, k));
                const double amp = amplitude_from_pl_db(path_loss_db(dist, cfg.alpha_iu, cfg));
                ch.H_irs_user[(static_cast<std::size_t>(a) * cfg.L + l) * cfg.K + k] =
                    amp * rician_channel(rng, cfg.rician_beta, cfg.Nr, cfg.M, aoa, aod,
                                         cfg.antenna_spacing_ratio);
            }

    return ch;
}

double noise_power_watts(const ScenarioConfig& cfg) {
    if (cfg.bandwidth_hz <= 0.0) throw std::domain_error("noise_power_watts: bandwidth must be positive");
    const double dbm = cfg.noise_density_dbm_hz + 10.0 * std::log10(cfg.bandwidth_hz);
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

} // namespace irsmimo

#include "irsmimo/experiment.hpp"

#include "irsmimo/wmmse.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace irsmimo {

namespace {

namespace fs = std::filesystem;

std::string fmt_g(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// sweep grid points are short decimals; 12 significant digits keep them tidy
std::string fmt_sweep(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string fmt_ms(double seconds) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", seconds * 1e3);
    return buf;
}

bool log_info_enabled() {
    const char* lvl = std::getenv("IRSMIMO_LOG");
    return lvl == nullptr || std::string_view(lvl) == "info" || std::string_view(lvl) == "debug";
}

} // namespace

std::string to_string(Method m) {
    switch (m) {
    case Method::mm: return "mm";
    case Method::ccm: return "ccm";
    case Method::rand: return "rand";
    case Method::noirs: return "noirs";
    case Method::netmimo: return "netmimo";
    }
    return "?";
}

std::optional<Method> parse_method(const std::string& name) {
    for (Method m : {Method::mm, Method::ccm, Method::rand, Method::noirs, Method::netmimo})
        if (name == to_string(m)) return m;
    return std::nullopt;
}

std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::sweep_M: return "sweep_M";
    case ExperimentKind::sweep_alpha_irs: return "sweep_alpha_irs";
    case ExperimentKind::sweep_irs_pos: return "sweep_irs_pos";
    case ExperimentKind::sweep_user_pos: return "sweep_user_pos";
    case ExperimentKind::sweep_eta: return "sweep_eta";
    case ExperimentKind::weights_fairness: return "weights_fairness";
    case ExperimentKind::fourcell_single_irs: return "fourcell_single_irs";
    case ExperimentKind::fourcell_two_irs: return "fourcell_two_irs";
    }
    return "?";
}

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (auto k : {ExperimentKind::convergence, ExperimentKind::sweep_M,
                   ExperimentKind::sweep_alpha_irs, ExperimentKind::sweep_irs_pos,
                   ExperimentKind::sweep_user_pos, ExperimentKind::sweep_eta,
                   ExperimentKind::weights_fairness, ExperimentKind::fourcell_single_irs,
                   ExperimentKind::fourcell_two_irs})
        names.push_back(to_string(k));
    return names;
}

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
    for (auto k : {ExperimentKind::convergence, ExperimentKind::sweep_M,
                   ExperimentKind::sweep_alpha_irs, ExperimentKind::sweep_irs_pos,
                   ExperimentKind::sweep_user_pos, ExperimentKind::sweep_eta,
                   ExperimentKind::weights_fairness, ExperimentKind::fourcell_single_irs,
                   ExperimentKind::fourcell_two_irs})
        if (name == to_string(k)) return k;
    return std::nullopt;
}

void parallel_for(int n_jobs, int n_tasks, const std::function<void(int)>& fn) {
    if (n_tasks <= 0) return;
    if (n_jobs <= 0) n_jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (n_jobs <= 0) n_jobs = 1;
    n_jobs = std::min(n_jobs, n_tasks);

    if (n_jobs == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_jobs);
    for (int t = 0; t < n_jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

SolveReport run_single(const ScenarioConfig& cfg, Method method, std::uint64_t seed,
                       const SolveOptions& base) {
    const ChannelSet ch = synthesize(cfg, seed);
    SolveOptions opts = base;
    opts.init_seed = seed;
    switch (method) {
    case Method::mm: opts.phase_method = PhaseMethod::MM; break;
    case Method::ccm: opts.phase_method = PhaseMethod::CCM; break;
    case Method::rand: opts.phase_method = PhaseMethod::RandPhase; break;
    case Method::noirs: opts.phase_method = PhaseMethod::NoIRS; break;
    case Method::netmimo: opts.phase_method = PhaseMethod::MM; return network_mimo_solve(ch, cfg, opts);
    }
    return bcd_solve(ch, cfg, opts);
}

std::vector<double> combined_pathloss_curve(double D, const std::vector<double>& d_grid,
                                            double alpha_irs, double pl0_db) {
    std::vector<double> out;
    out.reserve(d_grid.size());
    for (double d : d_grid) {
        if (d <= 0.0 || d >= D)
            throw std::domain_error("combined_pathloss_curve: grid point outside (0, D)");
        out.push_back(2.0 * pl0_db - 10.0 * alpha_irs * std::log10(d) -
                      10.0 * alpha_irs * std::log10(D - d));
    }
    return out;
}

namespace {

struct Task {
    int scheme = 0; // 0 = not a multi-scheme experiment
    double sweep_value = 0.0;
    Method method = Method::mm;
    std::uint64_t seed = 0;
    ScenarioConfig cfg;
};

arma::vec2 ground(const arma::vec3& p) { return arma::vec2{p[0], p[1]}; }

// straight-line IRS trajectories of the four-cell studies; s is the
// x-coordinate of the (first) IRS along its path
arma::vec3 lerp_xy(const arma::vec2& from, const arma::vec2& to, double t, double z) {
    return arma::vec3{from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1]), z};
}

std::vector<Task> build_tasks(ExperimentKind kind, const ScenarioConfig& base,
                              const ExperimentOptions& opts) {
    const std::vector<Method> methods =
        opts.methods.empty()
            ? std::vector<Method>{Method::mm, Method::ccm, Method::rand, Method::noirs}
            : opts.methods;

    struct Point {
        int scheme;
        double value;
        ScenarioConfig cfg;
    };
    std::vector<Point> points;

    auto two_cell_axis = [&]() {
        if (base.L != 2)
            throw std::invalid_argument(to_string(kind) + " expects a two-cell layout");
        const arma::vec2 b1 = ground(base.bs_positions[0]);
        const arma::vec2 b2 = ground(base.bs_positions[1]);
        arma::vec2 dir = b2 - b1;
        const double dist = arma::norm(dir, 2);
        if (dist <= 0.0) throw std::invalid_argument("coincident BS positions");
        dir /= dist;
        return std::tuple{b1, b2, dir, dist};
    };

    switch (kind) {
    case ExperimentKind::convergence:
        for (int m : {10, 20, 40}) {
            ScenarioConfig c = base;
            c.M = m;
            points.push_back({0, static_cast<double>(m), std::move(c)});
        }
        break;
    case ExperimentKind::sweep_M:
        for (int m : {10, 20, 40, 60, 80}) {
            ScenarioConfig c = base;
            c.M = m;
            points.push_back({0, static_cast<double>(m), std::move(c)});
        }
        break;
    case ExperimentKind::sweep_alpha_irs:
        for (double a : {2.0, 2.4, 2.8, 3.2, 3.6, 4.0}) {
            ScenarioConfig c = base;
            c.alpha_bi = a;
            c.alpha_iu = a;
            points.push_back({0, a, std::move(c)});
        }
        break;
    case ExperimentKind::sweep_irs_pos: {
        auto [b1, b2, dir, dist] = two_cell_axis();
        (void)b2;
        (void)dist;
        if (base.A < 1) throw std::invalid_argument("sweep_irs_pos requires at least one IRS");
        for (double x : {50.0, 100.0, 150.0, 200.0, 250.0, 300.0}) {
            ScenarioConfig c = base;
            const arma::vec2 p = b1 + x * dir;
            c.irs_positions[0] = arma::vec3{p[0], p[1], base.irs_positions[0][2]};
            points.push_back({0, x, std::move(c)});
        }
        break;
    }
    case ExperimentKind::sweep_user_pos: {
        auto [b1, b2, dir, dist] = two_cell_axis();
        (void)dist;
        for (double x : {200.0, 220.0, 240.0, 260.0, 280.0}) {
            ScenarioConfig c = base;
            c.user_cluster_centers[0] = b1 + x * dir;
            c.user_cluster_centers[1] = b2 - x * dir;
            points.push_back({0, x, std::move(c)});
        }
        break;
    }
    case ExperimentKind::sweep_eta:
        for (double e : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            ScenarioConfig c = base;
            c.eta = e;
            points.push_back({0, e, std::move(c)});
        }
        break;
    case ExperimentKind::weights_fairness: {
        if (base.L * base.K != 4)
            throw std::invalid_argument("weights_fairness expects 4 users (two-cell, K=2)");
        ScenarioConfig c = base;
        c.fixed_user_positions = {arma::vec2{100.0, 0.0}, arma::vec2{250.0, 0.0},
                                  arma::vec2{350.0, 0.0}, arma::vec2{500.0, 0.0}};
        ScenarioConfig equal = c;
        equal.weights = {0.5, 0.5, 0.5, 0.5};
        points.push_back({0, 1.0, std::move(equal)});
        ScenarioConfig skewed = c;
        skewed.weights = {0.15, 0.85, 0.3, 0.7};
        points.push_back({0, 2.0, std::move(skewed)});
        break;
    }
    case ExperimentKind::fourcell_single_irs: {
        if (base.L != 4) throw std::invalid_argument("fourcell experiments expect a four-cell layout");
        if (base.A < 1) throw std::invalid_argument("fourcell_single_irs requires one IRS");
        const double z = base.irs_positions[0][2];
        for (int scheme = 1; scheme <= 3; ++scheme)
            for (double s : {0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0}) {
                const double t = s / 600.0;
                ScenarioConfig c = base;
                c.A = 1;
                c.irs_positions.resize(1);
                switch (scheme) {
                case 1: c.irs_positions[0] = lerp_xy({0, 0}, {600, 0}, t, z); break;     // BS1 -> BS2
                case 2: c.irs_positions[0] = lerp_xy({0, 300}, {600, 300}, t, z); break; // B -> D
                case 3: c.irs_positions[0] = lerp_xy({0, 600}, {600, 0}, t, z); break;   // BS3 -> BS2
                }
                points.push_back({scheme, s, std::move(c)});
            }
        break;
    }
    case ExperimentKind::fourcell_two_irs: {
        if (base.L != 4) throw std::invalid_argument("fourcell experiments expect a four-cell layout");
        const double z = base.irs_positions.empty() ? base.heights.irs_m : base.irs_positions[0][2];
        const int m_each = std::max(1, base.M / 2); // same total element count as single-IRS
        for (int scheme = 1; scheme <= 3; ++scheme)
            for (double s : {0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0}) {
                const double t = s / 600.0;
                ScenarioConfig c = base;
                c.A = 2;
                c.M = m_each;
                c.irs_positions.resize(2);
                switch (scheme) {
                case 1: // BS1 -> BS2 and BS3 -> BS4
                    c.irs_positions[0] = lerp_xy({0, 0}, {600, 0}, t, z);
                    c.irs_positions[1] = lerp_xy({0, 600}, {600, 600}, t, z);
                    break;
                case 2: // BS1 -> BS4 and BS3 -> BS2
                    c.irs_positions[0] = lerp_xy({0, 0}, {600, 600}, t, z);
                    c.irs_positions[1] = lerp_xy({0, 600}, {600, 0}, t, z);
                    break;
                case 3: // B -> D and C -> A
                    c.irs_positions[0] = lerp_xy({0, 300}, {600, 300}, t, z);
                    c.irs_positions[1] = lerp_xy({300, 600}, {300, 0}, t, z);
                    break;
                }
                points.push_back({scheme, s, std::move(c)});
            }
        break;
    }
    }

    std::vector<Task> tasks;
    for (const auto& p : points)
        for (Method m : methods)
            for (int s = 0; s < opts.seeds; ++s)
                tasks.push_back({p.scheme, p.value, m, static_cast<std::uint64_t>(s) + 1, p.cfg});
    return tasks;
}

struct SummaryAcc {
    int n = 0;
    double wsr_sum = 0.0, wsr_sq = 0.0;
    double iters_sum = 0.0;
    double wall_sum = 0.0;
};

// Inner MM/CCM convergence of the first BCD iteration (the classic companion
// plot to the outer trace): one subproblem per M, both solvers, seed 1.
void write_inner_phase_traces(const ScenarioConfig& base, ExperimentKind kind,
                              const std::string& out_dir, const ExperimentOptions& opts) {
    (void)kind;
    std::ofstream csv(fs::path(out_dir) / "phase_inner_trace.csv");
    csv << "sweep_value,method,iteration,objective\n";
    for (int m : {10, 20, 40}) {
        ScenarioConfig cfg = base;
        cfg.M = m;
        const ChannelSet ch = synthesize(cfg, 1);
        const double sigma2 = noise_power_watts(cfg);
        const auto weights = cfg.weight_vector();
        auto [F, phase] = initialize(ch, cfg, 1);
        EquivalentChannels eq = equivalent_channels(ch, phase);

        DecoderSet U;
        WeightSet W;
        U.U.assign(cfg.L, std::vector<arma::cx_mat>(cfg.K));
        W.W.assign(cfg.L, std::vector<arma::cx_mat>(cfg.K));
        for (int l = 0; l < cfg.L; ++l)
            for (int k = 0; k < cfg.K; ++k) {
                U.U[l][k] = optimal_decoder(eq, F, sigma2, l, k);
                W.W[l][k] = optimal_weight(mse_matrix(eq, F, U.U[l][k], sigma2, l, k));
            }
        for (int l = 0; l < cfg.L; ++l) {
            const PrecoderSubproblem sub =
                make_precoder_subproblem(eq, U, W, weights, cfg.P_max, l);
            F.F[l] = solve_precoder(sub, opts.solve.precoder_tol).F;
        }
        const PhaseQuadratic q = assemble_quadratic(ch, F, U, W, weights, cfg.eta);

        const PhaseSolveResult mm =
            mm_solve(q, phase.phi, opts.solve.phase_tol, opts.solve.phase_max_iters);
        const PhaseSolveResult ccm = ccm_solve(q, phase.phi, opts.solve.phase_tol,
                                               opts.solve.phase_max_iters);
        for (std::size_t i = 0; i < mm.trace.size(); ++i)
            csv << m << ",mm," << i << "," << fmt_g(mm.trace[i]) << "\n";
        for (std::size_t i = 0; i < ccm.trace.size(); ++i)
            csv << m << ",ccm," << i << "," << fmt_g(ccm.trace[i]) << "\n";
    }
}

} // namespace

int run_experiment(const std::string& config_path, const std::string& experiment,
                   const std::string& out_dir, const ExperimentOptions& opts) {
    const auto kind = parse_experiment(experiment);
    if (!kind) {
        std::cerr << "unknown experiment '" << experiment << "'; expected one of:";
        for (const auto& n : experiment_names()) std::cerr << " " << n;
        std::cerr << "\n";
        return kExitUnknownExperiment;
    }

    ScenarioConfig base;
    try {
        base = ScenarioConfig::from_json_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    }

    std::vector<Task> tasks;
    try {
        tasks = build_tasks(*kind, base, opts);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const fs::path main_path = fs::path(out_dir) / (experiment + ".csv");
    std::ofstream main_csv(main_path);
    if (!main_csv) {
        std::cerr << "cannot write to output directory '" << out_dir << "'\n";
        return kExitBadOutDir;
    }

    if (log_info_enabled())
        std::cerr << "[irsmimo] " << experiment << ": " << tasks.size() << " solves\n";

    std::vector<SolveReport> reports(tasks.size());
    try {
        parallel_for(opts.jobs, static_cast<int>(tasks.size()), [&](int i) {
            const Task& t = tasks[i];
            reports[i] = run_single(t.cfg, t.method, t.seed, opts.solve);
            if (log_info_enabled())
                std::cerr << "[irsmimo] done " << to_string(t.method) << " sweep=" << t.sweep_value
                          << " seed=" << t.seed << " wsr=" << reports[i].final_wsr() << "\n";
        });
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    }

    const bool has_scheme =
        *kind == ExperimentKind::fourcell_single_irs || *kind == ExperimentKind::fourcell_two_irs;

    if (has_scheme)
        main_csv << "scheme,sweep_value,method,seed,wsr_bits,iterations,wall_ms\n";
    else
        main_csv << "sweep_value,method,seed,wsr_bits,iterations,wall_ms\n";

    std::map<std::tuple<int, double, std::string>, SummaryAcc> summary; // insertion irrelevant; key order deterministic
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        const SolveReport& r = reports[i];
        if (has_scheme) main_csv << t.scheme << ",";
        main_csv << fmt_sweep(t.sweep_value) << "," << to_string(t.method) << "," << t.seed << ","
                 << fmt_g(r.final_wsr()) << "," << r.iterations << "," << fmt_ms(r.wall_time_s)
                 << "\n";
        auto& acc = summary[{t.scheme, t.sweep_value, to_string(t.method)}];
        acc.n += 1;
        acc.wsr_sum += r.final_wsr();
        acc.wsr_sq += r.final_wsr() * r.final_wsr();
        acc.iters_sum += r.iterations;
        acc.wall_sum += r.wall_time_s;
    }
    main_csv.close();

    const fs::path summary_path = fs::path(out_dir) / (experiment + "_summary.csv");
    std::ofstream sum_csv(summary_path);
    if (has_scheme)
        sum_csv << "scheme,sweep_value,method,n,wsr_mean,wsr_ci95,iterations_mean,wall_ms_mean\n";
    else
        sum_csv << "sweep_value,method,n,wsr_mean,wsr_ci95,iterations_mean,wall_ms_mean\n";
    for (const auto& [key, acc] : summary) {
        const auto& [scheme, sweep, method] = key;
        const double mean = acc.wsr_sum / acc.n;
        const double var = acc.n > 1 ? std::max(0.0, (acc.wsr_sq - acc.n * mean * mean) / (acc.n - 1))
                                     : 0.0;
        const double ci = acc.n > 1 ? 1.96 * std::sqrt(var / acc.n) : 0.0;
        if (has_scheme) sum_csv << scheme << ",";
        sum_csv << fmt_sweep(sweep) << "," << method << "," << acc.n << "," << fmt_g(mean) << ","
                << fmt_g(ci) << "," << fmt_g(acc.iters_sum / acc.n) << ","
                << fmt_ms(acc.wall_sum / acc.n) << "\n";
    }
    sum_csv.close();

    // experiment-specific side artifacts
    if (*kind == ExperimentKind::convergence) {
        std::ofstream trace_csv(fs::path(out_dir) / "convergence_trace.csv");
        trace_csv << "sweep_value,method,seed,iteration,wsr_bits\n";
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const Task& t = tasks[i];
            for (std::size_t it = 0; it < reports[i].wsr_trace.size(); ++it)
                trace_csv << fmt_sweep(t.sweep_value) << "," << to_string(t.method) << "," << t.seed
                          << "," << it << "," << fmt_g(reports[i].wsr_trace[it]) << "\n";
        }
        write_inner_phase_traces(base, *kind, out_dir, opts);
    }
    if (*kind == ExperimentKind::weights_fairness) {
        std::ofstream rates_csv(fs::path(out_dir) / "weights_fairness_rates.csv");
        rates_csv << "weight_set,method,seed,user,rate_bits\n";
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const Task& t = tasks[i];
            for (std::size_t u = 0; u < reports[i].per_user_rates.size(); ++u)
                rates_csv << static_cast<int>(t.sweep_value) << "," << to_string(t.method) << ","
                          << t.seed << "," << u + 1 << "," << fmt_g(reports[i].per_user_rates[u])
                          << "\n";
        }
    }
    if (*kind == ExperimentKind::sweep_irs_pos) {
        // analytic midpoint proxy: combined path loss along the BS1->BS2 line
        const double D = arma::norm(ground(base.bs_positions[1]) - ground(base.bs_positions[0]), 2);
        std::vector<double> grid;
        for (double x = 1.0; x < D; x += 1.0) grid.push_back(x);
        const auto curve = combined_pathloss_curve(D, grid, base.alpha_bi, base.pl0_db);
        std::ofstream proxy_csv(fs::path(out_dir) / "pathloss_proxy.csv");
        proxy_csv << "x_irs_m,pl_combined_db\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            proxy_csv << fmt_g(grid[i]) << "," << fmt_g(curve[i]) << "\n";
    }

    return kExitOk;
}

} // namespace irsmimo

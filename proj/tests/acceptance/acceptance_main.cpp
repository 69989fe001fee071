// Acceptance suite: one quantitative criterion per section, one pass/fail
// line each, exit 0 iff all pass. Tolerances are fixed here, not tuned at
// run time. Usage: rdlab_acceptance [--workers N] [--out DIR]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdlab/harness.hpp"
#include "support/oracles.hpp"

using namespace rdlab;
namespace fs = std::filesystem;

namespace {

int g_workers = 8;
fs::path g_out = "acceptance_out";
int g_failures = 0;
constexpr std::uint64_t kSeed = 0xACCE57ull;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void report(int idx, const std::string& name, bool pass, const std::string& detail,
            double secs) {
    std::printf("[%s] criterion %2d: %-34s %s (%.1fs)\n", pass ? "PASS" : "FAIL", idx,
                name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

NoiseSpec noise_spec(double eps, double guard, double space_radius = 0.5) {
    NoiseSpec s;
    s.eps = eps;
    s.mode = NoiseMode::white_in_time;
    s.min_cells_per_corr = guard;
    s.mollifier.space_radius = space_radius;
    return s;
}

// ---------------------------------------------------------------- criterion 1
void cubic_null_suite() {
    Timer t;
    Grid g(3, 32);
    NoiseSpec spec = noise_spec(0.5, 2.5);
    CovarianceModel model(spec, 3, g);
    const double s2 = sigma_eps_squared(model);
    NonlinearitySpec F = hermite_series_nonlinearity({0, 0, 0, 1.3}, s2);
    CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 10));
    std::vector<double> worst(16, 0.0);
    parallel_for_index(16, g_workers, [&](std::size_t r) {
        StationaryFieldSampler s(spec, g, 0.05, RngStream(kSeed, r));
        Field y = s.current();
        double w = 0.0;
        for (int m = 0; m <= 3; ++m)
            w = std::max(w, linf_norm(chaos_remainder(m, spec.eps, y, ft,
                                                      ft.coeffs.f(3), model)));
        Field v(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            v.values[i] = 0.7 * std::cos(g.site(i)[0]);
        w = std::max(w, linf_norm(taylor_remainder(spec.eps, y, v, ft)));
        worst[r] = w;
    });
    double w = 0.0;
    for (double x : worst) w = std::max(w, x);
    report(1, "cubic-null structural suite", w < 1e-8,
           "max remainder " + format_double(w), t.seconds());
}

// ---------------------------------------------------------------- criterion 2
void renorm_identities() {
    Timer t;
    const std::array<double, 4> lam{0.5, -0.3, 0.7, 1.0};
    double worst_rel = 0.0, worst_abs = 0.0, worst_lambda = 0.0;
    for (double eps : {1.0, 0.5, 0.25, 0.125}) {
        CovarianceModel m(noise_spec(eps, 4.0), 3);
        const double s2 = sigma_eps_squared(m);
        const double L = compute_L_eps(m).value;
        NonlinearitySpec F = cubic_family(lam, s2, L, eps);
        CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 12));
        DConstants d = compute_d_constants(ft, m);
        worst_rel = std::max(worst_rel,
                             std::abs(d.d23 - lam[3] * lam[3] * L) /
                                 std::abs(lam[3] * lam[3] * L));
        worst_rel = std::max(worst_rel,
                             std::abs(d.d23_bar - lam[3] * lam[2] * L) /
                                 std::abs(lam[3] * lam[2] * L));
        worst_abs = std::max({worst_abs, std::abs(d.d32), std::abs(d.d33)});
        LambdaVector lv = compute_lambda(ft.coeffs, d, eps);
        for (int i = 0; i < 4; ++i)
            worst_lambda = std::max(worst_lambda, std::abs(lv[i] - lam[i]));
    }
    const bool pass = worst_rel < 1e-4 && worst_abs < 1e-6 && worst_lambda < 1e-4;
    report(2, "renormalization identities", pass,
           "rel " + format_double(worst_rel) + ", abs " + format_double(worst_abs) +
               ", lambda " + format_double(worst_lambda),
           t.seconds());
}

// ---------------------------------------------------------------- criterion 3
void log_divergence() {
    Timer t;
    std::vector<double> x, y;
    for (int k = 0; k <= 5; ++k) {
        const double eps = std::pow(2.0, -k);
        x.push_back(std::log(1.0 / eps));
        y.push_back(compute_L_eps(CovarianceModel(noise_spec(eps, 4.0), 3)).value);
    }
    auto fit = oracles::least_squares(x, y);
    report(3, "L_eps log divergence", fit.r2 >= 0.99 && fit.slope > 0.0,
           "R^2 = " + format_double(fit.r2), t.seconds());
}

// ---------------------------------------------------------------- criterion 4
void mehler_vs_quadrature() {
    Timer t;
    const double eps = 0.5;
    CovarianceModel m(noise_spec(eps, 4.0), 3);
    const double s2 = sigma_eps_squared(m);
    NonlinearitySpec F = hermite_series_nonlinearity({0, 0, 0, 1}, s2) +
                         sine_nonlinearity(0.3 * std::sqrt(eps));
    CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 14));
    RenormQuadrature quad;
    DConstants d = compute_d_constants(ft, m, quad);

    oracles::PairExpectationGh2d e11([&](double v) { return ft.d(1, v); },
                                     [&](double v) { return ft.d(1, v); }, s2);
    oracles::PairExpectationGh2d e02([&](double v) { return ft.d(0, v); },
                                     [&](double v) { return ft.d(2, v); }, s2);
    oracles::PairExpectationGh2d e01([&](double v) { return ft.d(0, v); },
                                     [&](double v) { return ft.d(1, v); }, s2);
    HeatCovarianceQuadrature hq(m, quad.refined());
    const double d23_o =
        std::pow(eps, -2.0) / 9.0 * hq.integrate([&](double c) { return e11(eps * c); });
    const double d32_o =
        std::pow(eps, -2.0) / 6.0 * hq.integrate([&](double c) { return e02(eps * c); });
    const double d33_o =
        std::pow(eps, -2.5) / 3.0 * hq.integrate([&](double c) { return e01(eps * c); });
    const double d23b_o = 2.0 * std::pow(eps, -0.5) * ft.coeffs.f(3) * ft.coeffs.f(2) *
                          hq.integrate([](double c) { return c * c; });
    auto agree = [](double a, double b) {
        return std::abs(a - b) <= 1e-5 * std::max(std::abs(a), std::abs(b)) ||
               (std::abs(a) < 1e-9 && std::abs(b) < 1e-9);
    };
    const bool pass = agree(d.d23, d23_o) && agree(d.d32, d32_o) &&
                      agree(d.d33, d33_o) && agree(d.d23_bar, d23b_o);
    std::ostringstream det;
    det << "d23 " << format_double(d.d23) << " vs " << format_double(d23_o);
    report(4, "Mehler vs 2D quadrature oracle", pass, det.str(), t.seconds());
}

// ---------------------------------------------------------------- criterion 5
void paraproduct_exactness() {
    Timer t;
    Grid g(3, 16);
    auto part = dyadic_partition(g);
    const double defect = part->partition_defect();
    std::vector<double> worst(1000, 0.0);
    parallel_for_index(1000, g_workers, [&](std::size_t i) {
        RngStream rng(kSeed ^ 0x5a5a, i);
        Field a = gaussian_field(g, rng);
        Field b = gaussian_field(g, rng);
        Field dec =
            para_lower(a, b, *part) + para_upper(a, b, *part) + resonant(a, b, *part);
        double w = 0.0;
        for (std::size_t s = 0; s < g.size(); ++s)
            w = std::max(w, std::abs(dec.values[s] - a.values[s] * b.values[s]));
        worst[i] = w;
    });
    double w = 0.0;
    for (double x : worst) w = std::max(w, x);
    report(5, "paraproduct exactness", w < 1e-10 && defect <= 1e-12,
           "identity " + format_double(w) + ", partition " + format_double(defect),
           t.seconds());
}

// ---------------------------------------------------------------- criterion 6
void homogeneity_slopes() {
    Timer t;
    Grid g(3, 64);
    // space_radius 0.25 keeps the mollifier cutoff above the fitted shells
    NoiseSpec spec = noise_spec(0.25, 2.0, 0.25);
    CovarianceModel model(spec, 3, g);
    const double c0 = model.c0();
    struct Entry {
        const char* name;
        int wick;
        double target;
    };
    const Entry entries[] = {{"Y", 1, 0.5}, {"Y^2", 2, 1.0}, {"Y^3", 3, 1.5}};
    bool pass = true;
    std::ostringstream det;
    for (const Entry& e : entries) {
        std::vector<BlockNormEstimate> pts;
        for (int q : detail::resolved_q_range(g)) {
            auto sampler = [&](std::size_t r) {
                StationaryFieldSampler s(spec, g, 0.05, RngStream(kSeed ^ 0x600d, r));
                Field y = s.current();
                return e.wick == 1 ? y : wick_power(y, e.wick, c0);
            };
            BlockNormEstimate est = block_norm_mc(sampler, q, 2, 512, g_workers);
            est.eps = spec.eps;
            pts.push_back(est);
        }
        SlopeFit fit = decay_slope(pts, SlopeAbscissa::log2_q_scale);
        det << e.name << " " << format_double(fit.slope).substr(0, 6) << " ";
        if (std::abs(fit.slope - e.target) > 0.25) pass = false;
    }
    report(6, "homogeneity slopes 1/2, 1, 3/2", pass, det.str(), t.seconds());
}

// ---------------------------------------------------------------- criterion 7
void remainder_decay() {
    Timer t;
    Grid g(3, 32);
    std::map<int, std::vector<BlockNormEstimate>> series;
    for (double eps : {0.4, 0.28, 0.2, 0.14}) {
        NoiseSpec spec = noise_spec(eps, 0.5, 0.25);
        CovarianceModel model(spec, 3, g);
        const double s2 = sigma_eps_squared(model);
        NonlinearitySpec F = hermite_series_nonlinearity({0, 0, 0, 1}, s2) +
                             sine_nonlinearity(0.3 * std::sqrt(eps));
        CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 12));
        for (int q : {2, 3, 4}) {
            auto sampler = [&](std::size_t r) {
                StationaryFieldSampler s(spec, g, 0.05, RngStream(kSeed ^ 0xdeca, r));
                Field rem =
                    chaos_remainder(1, eps, s.current(), ft, ft.coeffs.f(3), model);
                rem *= 1.0 / 3.0; // the Y^2-tree remainder is Phi_hat^[1]/3
                return rem;
            };
            BlockNormEstimate est = block_norm_mc(sampler, q, 2, 1024, g_workers);
            est.eps = eps;
            series[q].push_back(est);
        }
    }
    bool pass = true;
    std::ostringstream det;
    for (auto& [q, pts] : series) {
        SlopeFit fit = decay_slope(pts, SlopeAbscissa::log_eps);
        det << "q" << q << ": " << format_double(fit.slope).substr(0, 5) << "/"
            << format_double(fit.r_squared).substr(0, 5) << " ";
        if (fit.slope < 0.2 || fit.r_squared < 0.9) pass = false;
    }
    report(7, "remainder decay in eps", pass, det.str(), t.seconds());
}

// ---------------------------------------------------------------- criterion 8
void universality_pair() {
    Timer t;
    std::string text = "experiment = universality\n"
                       "grid.dim = 3\n"
                       "grid.n = 32\n"
                       "noise.eps = 0.2\n"
                       "noise.min_cells_per_corr = 1\n"
                       "model.lambda3 = 1.0\n"
                       "model.theta = 0.3\n"
                       "sim.dt = 0.01\n"
                       "sim.horizon = 0.5\n"
                       "mc.replicas = 512\n";
    KeyValueConfig kv = KeyValueConfig::parse(text);
    ExperimentConfig cfg = ExperimentConfig::from_config(kv);
    cfg.master_seed = kSeed;
    cfg.workers = g_workers;
    cfg.out_dir = g_out / "universality";
    RunRecord rec = run_universality(cfg);
    report(8, "desk-scale universality", rec.all_passed,
           "lambda gap " + format_double(rec.summary["lambda_gap"]) + ", survival " +
               format_double(rec.summary["survival_fraction"]),
           t.seconds());
}

// ---------------------------------------------------------------- criterion 9
void orthogonality_suite() {
    Timer t;
    Grid g(1, 8);
    NoiseSpec spec = noise_spec(0.25, 0.25);
    CovarianceModel model(spec, 1, g);
    const double c00 = model.c0();
    const double s2 = sigma_eps_squared(model);
    NonlinearitySpec F = hermite_series_nonlinearity({0, 0, 0, 1}, s2) +
                         sine_nonlinearity(0.3 * std::sqrt(spec.eps));
    CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 12));
    bool pass = true;
    double worst_sigma = 0.0;
    for (int n = 0; n <= 3; ++n) {
        for (int m = 0; m < 4 - n; ++m) {
            const int replicas = 10000;
            std::vector<double> vals(replicas);
            for (int r = 0; r < replicas; ++r) {
                RngStream rng(kSeed + n * 17 + m, r);
                const double x = std::sqrt(c00) * rng.normal();
                Field y(g, x);
                Field rem =
                    chaos_remainder(n, spec.eps, y, ft, ft.coeffs.f(3), model);
                vals[r] = rem.values[0] * hermite(m, x, c00);
            }
            MeanSE ms = mean_and_se(vals);
            const double sigmas =
                ms.std_error > 0 ? std::abs(ms.mean) / ms.std_error : 0.0;
            worst_sigma = std::max(worst_sigma, sigmas);
            if (std::abs(ms.mean) > 3.0 * ms.std_error + 1e-12) pass = false;
        }
    }
    report(9, "orthogonality suite", pass,
           "worst " + format_double(worst_sigma).substr(0, 5) + " SE", t.seconds());
}

// --------------------------------------------------------------- criterion 10
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void reproducibility() {
    Timer t;
    bool pass = true;
    std::string detail;

    // renorm sweep twice, same seed
    {
        std::string text = "experiment = renorm\nnoise.eps_list = 1, 0.5\n";
        KeyValueConfig kv = KeyValueConfig::parse(text);
        ExperimentConfig cfg = ExperimentConfig::from_config(kv);
        cfg.master_seed = kSeed;
        cfg.out_dir = g_out / "repro_renorm_a";
        run_renorm_sweep(cfg);
        const std::string a = slurp(cfg.out_dir / "renorm.csv");
        cfg.out_dir = g_out / "repro_renorm_b";
        run_renorm_sweep(cfg);
        if (slurp(cfg.out_dir / "renorm.csv") != a) {
            pass = false;
            detail += "renorm differs; ";
        }
    }
    // Monte-Carlo run across worker counts
    {
        std::string text = "experiment = trees\n"
                           "grid.dim = 3\ngrid.n = 16\n"
                           "noise.eps = 1.0\nnoise.min_cells_per_corr = 2\n"
                           "mc.replicas = 64\nmodel.kind = cubic\n";
        KeyValueConfig kv = KeyValueConfig::parse(text);
        ExperimentConfig cfg = ExperimentConfig::from_config(kv);
        cfg.master_seed = kSeed;
        cfg.workers = 1;
        cfg.out_dir = g_out / "repro_trees_w1";
        run_trees(cfg);
        const std::string a = slurp(cfg.out_dir / "tree_block_norms.csv");
        cfg.workers = g_workers;
        cfg.out_dir = g_out / "repro_trees_wN";
        run_trees(cfg);
        if (slurp(cfg.out_dir / "tree_block_norms.csv") != a) {
            pass = false;
            detail += "trees differ across workers; ";
        }
    }
    // trajectory snapshots across worker counts
    {
        std::string text = "experiment = simulate\n"
                           "grid.dim = 1\ngrid.n = 64\nnoise.eps = 1.0\n"
                           "model.kind = cubic\nmodel.lambda3 = 1.0\n"
                           "sim.dt = 0.005\nsim.horizon = 0.1\nsim.save_times = 0.1\n"
                           "sim.stability_constant = 8\n";
        KeyValueConfig kv = KeyValueConfig::parse(text);
        ExperimentConfig cfg = ExperimentConfig::from_config(kv);
        cfg.master_seed = kSeed;
        cfg.out_dir = g_out / "repro_sim_a";
        run_simulate(cfg);
        const std::string a = slurp(cfg.out_dir / "trajectory.dat");
        cfg.out_dir = g_out / "repro_sim_b";
        cfg.workers = g_workers;
        run_simulate(cfg);
        if (slurp(cfg.out_dir / "trajectory.dat") != a) {
            pass = false;
            detail += "trajectory differs; ";
        }
    }
    report(10, "byte-identical reproducibility", pass,
           pass ? "three run kinds, reruns + worker sweeps" : detail, t.seconds());
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--workers") && i + 1 < argc) g_workers = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--out") && i + 1 < argc) g_out = argv[++i];
    }
    fs::create_directories(g_out);
    std::printf("acceptance suite (%s), workers = %d\n", kVersion, g_workers);

    cubic_null_suite();
    renorm_identities();
    log_divergence();
    mehler_vs_quadrature();
    paraproduct_exactness();
    homogeneity_slopes();
    remainder_decay();
    universality_pair();
    orthogonality_suite();
    reproducibility();

    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}

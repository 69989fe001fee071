#pragma once

#include <filesystem>

#include "rdlab/dynamics.hpp"
#include "rdlab/io.hpp"
#include "rdlab/trees.hpp"
#include "rdlab/version.hpp"

namespace rdlab {

enum class ExperimentKind { renorm_sweep, trees, universality, paratest, simulate };

/// Parsed, validated experiment description. The config file is flat
/// key-value text with dotted section keys; unknown keys are rejected.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::paratest;
    int dim = 3;
    int n = 32;
    NoiseSpec noise; // eps field holds the first sweep entry
    std::vector<double> eps_list{1.0};
    std::size_t replicas = 64;
    int block_p = 2;
    std::array<double, 4> lambda{0.0, 0.0, 0.0, 1.0};
    double theta = 0.3; // sine perturbation amplitude (universality, trees)
    std::string model_kind = "cubic"; // cubic | cubic_plus_sine | linear_field
    double dt = 0.01;
    double horizon = 0.5;
    double linear_mass = 1.0;
    double init_constant = 0.0;
    std::string init_kind = "constant"; // constant | sampled
    bool dealias = false;
    double stability_constant = 8.0;
    std::vector<double> save_times{0.5};
    long paratest_pairs = 1000;
    std::vector<double> fit_q{2, 3, 4};
    double lambda_match_tol = 1e-6;
    std::string check; // optional named check for run_simulate
    std::uint64_t master_seed = 1;
    std::filesystem::path out_dir = ".";
    int workers = 1;
    std::string raw_text;

    static ExperimentKind parse_kind(const std::string& s) {
        if (s == "renorm") return ExperimentKind::renorm_sweep;
        if (s == "trees") return ExperimentKind::trees;
        if (s == "universality") return ExperimentKind::universality;
        if (s == "paratest") return ExperimentKind::paratest;
        if (s == "simulate") return ExperimentKind::simulate;
        throw configuration_error("config: unknown experiment '" + s + "'");
    }

    static ExperimentConfig from_config(KeyValueConfig& kv) {
        ExperimentConfig c;
        c.raw_text = kv.raw_text();
        c.kind = parse_kind(kv.get_string("experiment", "paratest"));
        c.dim = static_cast<int>(kv.get_int("grid.dim", 3));
        c.n = static_cast<int>(kv.get_int("grid.n", 32));
        const std::string mode = kv.get_string("noise.mode", "white_in_time");
        if (mode == "white_in_time")
            c.noise.mode = NoiseMode::white_in_time;
        else if (mode == "fully_mollified")
            c.noise.mode = NoiseMode::fully_mollified;
        else
            throw configuration_error("config: unknown noise.mode '" + mode + "'");
        c.noise.mollifier.time_radius = kv.get_double("noise.time_radius", 0.5);
        c.noise.mollifier.space_radius = kv.get_double("noise.space_radius", 0.5);
        c.noise.min_cells_per_corr = kv.get_double("noise.min_cells_per_corr", 4.0);
        c.noise.burn_in = kv.get_double("noise.burn_in", 1.5);
        c.eps_list = kv.get_double_list("noise.eps_list",
                                        {kv.get_double("noise.eps", 1.0)});
        c.replicas = static_cast<std::size_t>(kv.get_int("mc.replicas", 64));
        c.block_p = static_cast<int>(kv.get_int("mc.block_p", 2));
        c.lambda = {kv.get_double("model.lambda0", 0.0), kv.get_double("model.lambda1", 0.0),
                    kv.get_double("model.lambda2", 0.0), kv.get_double("model.lambda3", 1.0)};
        c.theta = kv.get_double("model.theta", 0.3);
        c.model_kind = kv.get_string("model.kind", "cubic");
        c.dt = kv.get_double("sim.dt", 0.01);
        c.horizon = kv.get_double("sim.horizon", 0.5);
        c.linear_mass = kv.get_double("sim.linear_mass", 1.0);
        c.init_constant = kv.get_double("sim.init_constant", 0.0);
        c.init_kind = kv.get_string("sim.init", "constant");
        c.dealias = kv.get_bool("sim.dealias", false);
        c.stability_constant = kv.get_double("sim.stability_constant", 8.0);
        c.save_times = kv.get_double_list("sim.save_times", {c.horizon});
        c.paratest_pairs = kv.get_int("paratest.pairs", 1000);
        c.fit_q = kv.get_double_list("trees.fit_q", {2, 3, 4});
        c.lambda_match_tol = kv.get_double("universality.lambda_tol", 1e-6);
        c.check = kv.get_string("sim.check", "");
        kv.reject_unknown_keys();
        c.validate();
        return c;
    }

    void validate() const {
        if (eps_list.empty())
            throw configuration_error("config: eps list must not be empty");
        for (std::size_t i = 0; i < eps_list.size(); ++i) {
            if (!(eps_list[i] > 0.0) || eps_list[i] > 1.0)
                throw configuration_error("config: eps values must be in (0, 1]");
            if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
                throw configuration_error("config: eps list must be sorted descending");
        }
        if (replicas < 1) throw configuration_error("config: replicas >= 1");
        noise.validate();
    }

    NoiseSpec noise_at(double eps) const {
        NoiseSpec s = noise;
        s.eps = eps;
        s.seed = master_seed;
        return s;
    }

    std::uint64_t config_hash() const {
        return fnv1a64(raw_text + "|seed=" + std::to_string(master_seed));
    }
};

struct RunRecord {
    std::uint64_t config_hash = 0;
    std::vector<std::string> outputs;
    std::map<std::string, double> summary;
    std::vector<std::string> failures; // invariant violations, human readable
    bool all_passed = true;
};

/// Full JSON form of a renormalization report, including quadrature metadata
/// and refinement residuals.
inline nlohmann::json renorm_report_json(const RenormReport& r) {
    nlohmann::json j;
    j["eps"] = r.eps;
    j["sigma2"] = r.sigma2;
    j["L_eps"] = r.L_eps;
    j["d"] = {{"d23", r.d.d23},       {"d23_bar", r.d.d23_bar}, {"d32", r.d.d32},
              {"d33", r.d.d33},       {"dprime", r.d.dprime},   {"eps", r.d.eps}};
    j["integration"] = {{"method", r.d.report.method},
                        {"s_nodes", r.d.report.s_nodes},
                        {"rho_nodes", r.d.report.rho_nodes},
                        {"mehler_terms", r.d.report.mehler_terms},
                        {"residual", r.d.report.residual}};
    j["lambda"] = {r.lambda[0], r.lambda[1], r.lambda[2], r.lambda[3]};
    j["counterterm_mass"] = r.counterterm_mass;
    j["counterterm_const"] = r.counterterm_const;
    return j;
}

namespace detail {

inline void write_manifest(const ExperimentConfig& cfg, const RunRecord& rec,
                           const std::string& name,
                           const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(rec.config_hash));
    j["config_hash"] = hex;
    j["version"] = kVersion;
    j["seed"] = cfg.master_seed;
    j["experiment"] = name;
    j["outputs"] = rec.outputs;
    j["summary"] = rec.summary;
    j["invariants_passed"] = rec.all_passed;
    j["failures"] = rec.failures;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::ofstream out(cfg.out_dir / (name + "_manifest.json"));
    out << j.dump(2) << "\n";
}

inline std::vector<int> resolved_q_range(const Grid& g) {
    std::vector<int> qs;
    auto part = dyadic_partition(g);
    for (int q = 0; q <= part->q_max(); ++q)
        if ((8.0 / 3.0) * std::pow(2.0, q) <= g.n / 2.0) qs.push_back(q);
    return qs;
}

/// the matched pair of nonlinearities for the universality comparison: the
/// cubic family at lambda, and cubic + theta sqrt(eps) sin with its low
/// Hermite orders removed and first-order counterterms adjusted so both
/// lambda vectors coincide. All constants (sigma2, L, d) are evaluated
/// against the covariance of the field the comparison actually simulates:
/// lattice quantities for a grid-attached model, continuum-radial otherwise.
struct MatchedPair {
    NonlinearitySpec a, b;
    LambdaVector lambda_a, lambda_b;
    double sigma2 = 0.0;
    double L = 0.0;
};

inline MatchedPair matched_universality_pair(const std::array<double, 4>& lambda,
                                             double theta, const CovarianceModel& model,
                                             const RenormQuadrature& quad = {}) {
    MatchedPair mp;
    const double eps = model.eps();
    const bool lattice = model.grid().has_value();
    auto d_of = [&](const CenteredNonlinearity& ft) {
        return lattice ? compute_d_constants_lattice(ft, model, quad)
                       : compute_d_constants(ft, model, quad);
    };
    mp.sigma2 = sigma_eps_squared(model);
    mp.L = lattice ? compute_L_eps_lattice(model, quad) : compute_L_eps(model, quad).value;
    mp.a = cubic_family(lambda, mp.sigma2, mp.L, eps);

    NonlinearitySpec sine = sine_nonlinearity(1.0);
    ChaosCoefficients sc = chaos_coefficients(sine, mp.sigma2, 12);
    NonlinearitySpec sine_high =
        sine + (-1.0) * hermite_series_nonlinearity(
                            {sc.f(0), sc.f(1), sc.f(2), sc.f(3)}, mp.sigma2);
    const double amp = theta * std::sqrt(eps);
    NonlinearitySpec base =
        hermite_series_nonlinearity({0.0, 0.0, std::sqrt(eps) * lambda[2], lambda[3]},
                                    mp.sigma2) +
        amp * sine_high;
    // d constants of the perturbed family fix the order 0/1 counterterms
    CenteredNonlinearity ft_b =
        center_nonlinearity(base, chaos_coefficients(base, mp.sigma2, 14));
    DConstants db = d_of(ft_b);
    const double b1 = lambda[1] + 9.0 * db.d23 + 6.0 * db.d32;
    const double b0 =
        lambda[0] + lambda[2] * db.d32 + 3.0 * db.d33 + 3.0 * db.d23_bar;
    mp.b = base + hermite_series_nonlinearity(
                      {std::pow(eps, 1.5) * b0, eps * b1}, mp.sigma2);

    CenteredNonlinearity ft_a =
        center_nonlinearity(mp.a, chaos_coefficients(mp.a, mp.sigma2, 14));
    mp.lambda_a = compute_lambda(ft_a.coeffs, d_of(ft_a), eps);
    CenteredNonlinearity ft_b2 =
        center_nonlinearity(mp.b, chaos_coefficients(mp.b, mp.sigma2, 14));
    mp.lambda_b = compute_lambda(ft_b2.coeffs, d_of(ft_b2), eps);
    return mp;
}

} // namespace detail

/// Renormalization sweep: one RenormReport row per epsilon for the cubic
/// family at the configured lambda target, plus the log fit of L_eps.
inline RunRecord run_renorm_sweep(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.config_hash = cfg.config_hash();
    std::filesystem::create_directories(cfg.out_dir);
    CsvWriter csv(cfg.out_dir / "renorm.csv",
                  {"eps", "sigma2", "L_eps", "d23", "d23_bar", "d32", "d33", "dprime",
                   "lambda0", "lambda1", "lambda2", "lambda3", "counterterm_mass",
                   "counterterm_const", "residual"});
    std::vector<BlockNormEstimate> lpoints;
    double worst_lambda_err = 0.0;
    for (double eps : cfg.eps_list) {
        try {
            CovarianceModel model(cfg.noise_at(eps), cfg.dim);
            const double s2 = sigma_eps_squared(model);
            const double L = compute_L_eps(model).value;
            NonlinearitySpec F = cubic_family(cfg.lambda, s2, L, eps);
            CenteredNonlinearity ft =
                center_nonlinearity(F, chaos_coefficients(F, s2, 12));
            RenormReport r = make_renorm_report(ft, model);
            {
                std::ofstream jout(cfg.out_dir /
                                   ("renorm_eps_" + format_double(eps) + ".json"));
                jout << renorm_report_json(r).dump(2) << "\n";
                rec.outputs.push_back("renorm_eps_" + format_double(eps) + ".json");
            }
            csv.row({format_double(eps), format_double(r.sigma2), format_double(r.L_eps),
                     format_double(r.d.d23), format_double(r.d.d23_bar),
                     format_double(r.d.d32), format_double(r.d.d33),
                     format_double(r.d.dprime), format_double(r.lambda[0]),
                     format_double(r.lambda[1]), format_double(r.lambda[2]),
                     format_double(r.lambda[3]), format_double(r.counterterm_mass),
                     format_double(r.counterterm_const),
                     format_double(r.d.report.residual)});
            for (int i = 0; i < 4; ++i)
                worst_lambda_err =
                    std::max(worst_lambda_err, std::abs(r.lambda[i] - cfg.lambda[i]));
            BlockNormEstimate le;
            le.eps = eps;
            le.estimate = r.L_eps;
            le.std_error = 1e-9 * r.L_eps;
            lpoints.push_back(le);
        } catch (const numerical_error& e) {
            throw numerical_error("renorm sweep failed at eps = " + format_double(eps) +
                                      ": " + e.what(),
                                  e.residual);
        }
    }
    rec.outputs.push_back("renorm.csv");
    rec.summary["worst_lambda_error"] = worst_lambda_err;
    if (worst_lambda_err > 1e-4) {
        rec.all_passed = false;
        rec.failures.push_back("lambda reproduction above 1e-4");
    }
    if (lpoints.size() >= 4) {
        // fit L = a log(1/eps) + b, reported as slope on log(eps) (so -a)
        SlopeFit fit = decay_slope(lpoints, SlopeAbscissa::log_eps);
        CsvWriter fcsv(cfg.out_dir / "renorm_logfit.csv",
                       {"abscissa", "slope", "intercept", "r2"});
        fcsv.row({"log_eps", format_double(fit.slope), format_double(fit.intercept),
                  format_double(fit.r_squared)});
        rec.outputs.push_back("renorm_logfit.csv");
        rec.summary["L_logfit_r2"] = fit.r_squared;
    }
    detail::write_manifest(cfg, rec, "renorm");
    return rec;
}

/// Paraproduct self-checks: partition exactness, the Bony decomposition
/// identity on random pairs, resonance symmetry.
inline RunRecord run_paratest(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.config_hash = cfg.config_hash();
    std::filesystem::create_directories(cfg.out_dir);
    Grid g(cfg.dim, cfg.n);
    auto part = dyadic_partition(g);
    const double defect = part->partition_defect();

    double worst_identity = 0.0, worst_symmetry = 0.0;
    std::vector<double> worst_per(cfg.paratest_pairs, 0.0);
    std::vector<double> sym_per(cfg.paratest_pairs, 0.0);
    parallel_for_index(static_cast<std::size_t>(cfg.paratest_pairs), cfg.workers,
                       [&](std::size_t t) {
                           RngStream rng(cfg.master_seed, t);
                           Field a = gaussian_field(g, rng);
                           Field b = gaussian_field(g, rng);
                           Field dec = para_lower(a, b, *part) + para_upper(a, b, *part) +
                                       resonant(a, b, *part);
                           double w = 0.0;
                           for (std::size_t i = 0; i < g.size(); ++i)
                               w = std::max(w, std::abs(dec.values[i] -
                                                        a.values[i] * b.values[i]));
                           worst_per[t] = w;
                           Field ab = resonant(a, b, *part);
                           Field ba = resonant(b, a, *part);
                           double s = 0.0;
                           for (std::size_t i = 0; i < g.size(); ++i)
                               s = std::max(s, std::abs(ab.values[i] - ba.values[i]));
                           sym_per[t] = s;
                       });
    for (double w : worst_per) worst_identity = std::max(worst_identity, w);
    for (double s : sym_per) worst_symmetry = std::max(worst_symmetry, s);

    CsvWriter csv(cfg.out_dir / "paratest.csv", {"check", "value", "threshold", "pass"});
    auto emit = [&](const std::string& name, double value, double thr) {
        const bool ok = value <= thr;
        csv.row({name, format_double(value), format_double(thr), ok ? "1" : "0"});
        if (!ok) {
            rec.all_passed = false;
            rec.failures.push_back(name);
        }
        rec.summary[name] = value;
    };
    emit("partition_defect", defect, 1e-12);
    emit("decomposition_identity", worst_identity, 1e-10);
    emit("resonant_symmetry", worst_symmetry, 0.0);
    rec.outputs.push_back("paratest.csv");
    detail::write_manifest(cfg, rec, "paratest");
    return rec;
}

/// Tree block-norm estimation and slope fits over the configured eps sweep.
inline RunRecord run_trees(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.config_hash = cfg.config_hash();
    std::filesystem::create_directories(cfg.out_dir);
    Grid g(cfg.dim, cfg.n);
    CsvWriter est_csv(cfg.out_dir / "tree_block_norms.csv",
                      {"tree", "eps", "q", "p", "estimate", "std_error", "replicas",
                       "time"});
    CsvWriter fit_csv(cfg.out_dir / "tree_fits.csv",
                      {"tree", "abscissa", "slope", "intercept", "r2"});

    struct Entry {
        std::string name;
        TreeKind kind;
    };
    std::vector<Entry> trees{{"Y", TreeKind::simple(TreeTag::Y)},
                             {"Y2", TreeKind::simple(TreeTag::Y2)},
                             {"Y3", TreeKind::simple(TreeTag::Y3)},
                             {"phi_hat_1", TreeKind::phi_hat(1)}};

    std::map<std::string, std::vector<BlockNormEstimate>> eps_series;
    double worst_cubic_null = 0.0;
    for (double eps : cfg.eps_list) {
        NoiseSpec spec = cfg.noise_at(eps);
        CovarianceModel model(spec, cfg.dim, g);
        const double s2 = sigma_eps_squared(model);
        NonlinearitySpec F = hermite_series_nonlinearity({0, 0, 0, cfg.lambda[3]}, s2);
        if (cfg.model_kind == "cubic_plus_sine")
            F = F + sine_nonlinearity(cfg.theta * std::sqrt(eps));
        CenteredNonlinearity ft = center_nonlinearity(F, chaos_coefficients(F, s2, 12));
        DConstants d; // pointwise kinds below do not consume the constants

        if (cfg.model_kind == "cubic") {
            // structural cubic-null check: remainders vanish to precision
            for (int m = 0; m <= 3; ++m) {
                for (std::size_t r = 0; r < std::min<std::size_t>(cfg.replicas, 16); ++r) {
                    StationaryFieldSampler s(spec, g, cfg.dt, RngStream(cfg.master_seed, r));
                    Field rem = chaos_remainder(m, eps, s.current(), ft,
                                                ft.coeffs.f(3), model);
                    worst_cubic_null = std::max(worst_cubic_null, linf_norm(rem));
                }
            }
        }

        for (const auto& entry : trees) {
            auto sampler = [&](std::size_t r) {
                StationaryFieldSampler s(spec, g, cfg.dt,
                                         RngStream(cfg.master_seed ^ 0x7ee5, r));
                FieldPath path;
                path.push(0.0, s.current());
                FieldPath tree = build_tree(entry.kind, path, ft, model, d);
                return tree.frames[0];
            };
            std::vector<BlockNormEstimate> points;
            for (int q : detail::resolved_q_range(g)) {
                BlockNormEstimate e =
                    block_norm_mc(sampler, q, cfg.block_p, cfg.replicas, cfg.workers);
                e.eps = eps;
                est_csv.row({entry.name, format_double(eps), std::to_string(e.q),
                             std::to_string(e.p), format_double(e.estimate),
                             format_double(e.std_error), std::to_string(e.replicas),
                             format_double(e.time)});
                points.push_back(e);
                for (double fq : cfg.fit_q)
                    if (static_cast<int>(fq) == q) eps_series[entry.name + ":q" +
                                                              std::to_string(q)]
                        .push_back(e);
            }
            if (points.size() >= 4) {
                bool positive = true;
                for (const auto& pt : points) positive = positive && pt.estimate > 0.0;
                if (positive) {
                    SlopeFit fit = decay_slope(points, SlopeAbscissa::log2_q_scale);
                    fit_csv.row({entry.name, "log2_q_scale", format_double(fit.slope),
                                 format_double(fit.intercept),
                                 format_double(fit.r_squared)});
                    rec.summary[entry.name + "_q_slope_eps" + format_double(eps)] =
                        fit.slope;
                }
            }
        }
    }
    for (auto& [name, pts] : eps_series) {
        if (pts.size() < 4) continue;
        bool positive = true;
        for (const auto& pt : pts) positive = positive && pt.estimate > 0.0;
        if (!positive) continue;
        SlopeFit fit = decay_slope(pts, SlopeAbscissa::log_eps);
        fit_csv.row({name, "log_eps", format_double(fit.slope),
                     format_double(fit.intercept), format_double(fit.r_squared)});
        rec.summary[name + "_eps_slope"] = fit.slope;
    }
    rec.summary["cubic_null_worst"] = worst_cubic_null;
    if (cfg.model_kind == "cubic" && worst_cubic_null > 1e-8) {
        rec.all_passed = false;
        rec.failures.push_back("cubic-null remainder above 1e-8");
    }
    rec.outputs.push_back("tree_block_norms.csv");
    rec.outputs.push_back("tree_fits.csv");
    detail::write_manifest(cfg, rec, "trees");
    return rec;
}

/// Single-trajectory simulation with snapshot persistence; the optional
/// free-field check runs a replica batch of the linear reduction and
/// compares per-mode variances with the closed-form target.
inline RunRecord run_simulate(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.config_hash = cfg.config_hash();
    std::filesystem::create_directories(cfg.out_dir);
    const double eps = cfg.eps_list.front();
    SimConfig sim;
    sim.grid = Grid(cfg.dim, cfg.n);
    sim.noise = cfg.noise_at(eps);
    sim.dt = cfg.dt;
    sim.horizon = cfg.horizon;
    sim.linear_mass = cfg.linear_mass;
    sim.stability_constant = cfg.stability_constant;
    sim.dealias_23 = cfg.dealias;
    sim.init = cfg.init_kind == "sampled" ? InitKind::sampled : InitKind::constant;
    sim.init_constant = cfg.init_constant;

    CovarianceModel model(sim.noise, cfg.dim, sim.grid);
    const double s2 = sigma_eps_squared(model);
    const double L = compute_L_eps(CovarianceModel(sim.noise, cfg.dim)).value;
    if (cfg.model_kind == "linear_field") {
        sim.model = ModelKind::mesoscopic_general;
        NonlinearitySpec lin;
        lin.deriv[0] = [eps](double x) { return eps * x; };
        lin.deriv[1] = [eps](double) { return eps; };
        sim.nonlinearity = lin;
    } else if (cfg.model_kind == "cubic") {
        sim.model = ModelKind::cubic_renormalized;
        sim.cubic.lambda.lambda = cfg.lambda;
        sim.cubic.lambda.eps = eps;
        sim.cubic.sigma2 = s2;
        sim.cubic.L_eps = L;
    } else {
        sim.model = ModelKind::mesoscopic_general;
        sim.nonlinearity = cubic_family(cfg.lambda, s2, L, eps);
    }

    FieldPath path = simulate(sim, RngStream(cfg.master_seed, 0), cfg.save_times);
    write_field_path(cfg.out_dir / "trajectory.dat", path);
    rec.outputs.push_back("trajectory.dat");
    rec.summary["final_linf"] = linf_norm(path.frames.back());

    if (cfg.check == "free_field") {
        // replicas of the linear reduction; per-mode variance vs the OU law
        SimConfig lin = sim;
        lin.model = ModelKind::mesoscopic_general;
        NonlinearitySpec linf;
        linf.deriv[0] = [eps](double x) { return eps * x; };
        lin.nonlinearity = linf;
        lin.init = InitKind::sampled;
        const std::size_t reps = cfg.replicas;
        std::vector<std::vector<double>> mode_sq(sim.grid.size(),
                                                 std::vector<double>(reps));
        parallel_for_index(reps, cfg.workers, [&](std::size_t r) {
            Simulator s(lin, RngStream(cfg.master_seed, r));
            const long steps = std::lround(lin.horizon / lin.dt);
            for (long st = 0; st < steps; ++st) s.step();
            SpectralField uh = fft_forward(s.field());
            for (std::size_t i = 0; i < uh.modes.size(); ++i)
                mode_sq[i][r] = std::norm(uh.modes[i]);
        });
        StationaryFieldSampler ref(lin.noise, lin.grid, lin.dt, RngStream(1, 0));
        std::size_t violations = 0, checked = 0;
        for (std::size_t i = 0; i < sim.grid.size(); i += 3) {
            MeanSE ms = mean_and_se(mode_sq[i]);
            ++checked;
            if (std::abs(ms.mean - ref.stationary_mode_variance(i)) >
                3.0 * ms.std_error + 1e-12)
                ++violations;
        }
        rec.summary["free_field_modes_checked"] = static_cast<double>(checked);
        rec.summary["free_field_violations"] = static_cast<double>(violations);
        // 3-sigma gate per mode: allow the statistical 0.3% plus slack
        if (violations > std::max<std::size_t>(2, checked / 50)) {
            rec.all_passed = false;
            rec.failures.push_back("free-field mode variances outside 3 SE");
        }
    }
    nlohmann::json extra;
    extra["model"] = cfg.model_kind;
    extra["eps"] = eps;
    extra["dt"] = cfg.dt;
    extra["horizon"] = cfg.horizon;
    extra["grid"] = {{"dim", cfg.dim}, {"n", cfg.n}};
    detail::write_manifest(cfg, rec, "simulate", extra);
    return rec;
}

/// Paired-stream universality comparison: cubic family vs matched cubic+sin,
/// common random numbers, moments 1..4 of the test-function pairings.
inline RunRecord run_universality(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.config_hash = cfg.config_hash();
    std::filesystem::create_directories(cfg.out_dir);
    const double eps = cfg.eps_list.front();
    Grid grid(cfg.dim, cfg.n);
    NoiseSpec spec = cfg.noise_at(eps);
    CovarianceModel model(spec, cfg.dim, grid);
    detail::MatchedPair mp = detail::matched_universality_pair(cfg.lambda, cfg.theta, model);

    double lambda_gap = 0.0;
    for (int i = 0; i < 4; ++i)
        lambda_gap = std::max(lambda_gap, std::abs(mp.lambda_a[i] - mp.lambda_b[i]));
    rec.summary["lambda_gap"] = lambda_gap;
    if (lambda_gap > cfg.lambda_match_tol)
        throw configuration_error("universality: lambda vectors differ by " +
                                  format_double(lambda_gap) + " > tolerance");

    SimConfig a;
    a.grid = grid;
    a.noise = spec;
    a.model = ModelKind::mesoscopic_general;
    a.nonlinearity = mp.a;
    a.dt = cfg.dt;
    a.horizon = cfg.horizon;
    a.stability_constant = cfg.stability_constant;
    a.init = cfg.init_kind == "sampled" ? InitKind::sampled : InitKind::constant;
    a.init_constant = cfg.init_constant;
    SimConfig b = a;
    b.nonlinearity = mp.b;

    std::vector<Field> phis;
    {
        Field p1(grid, 1.0);
        Field p2(grid), p3(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto x = grid.site(i);
            p2.values[i] = std::cos(x[0]);
            p3.values[i] = std::sin(x[0] + (grid.dim > 1 ? x[1] : 0.0));
        }
        phis = {p1, p2, p3};
    }

    const std::size_t reps = cfg.replicas;
    std::vector<std::vector<double>> obs_a(phis.size(), std::vector<double>(reps, 0.0));
    std::vector<std::vector<double>> obs_b(phis.size(), std::vector<double>(reps, 0.0));
    std::vector<char> ok(reps, 1);
    parallel_for_index(reps, cfg.workers, [&](std::size_t r) {
        try {
            auto [pa, pb] =
                simulate_pair(a, b, RngStream(cfg.master_seed, r), {cfg.horizon});
            for (std::size_t j = 0; j < phis.size(); ++j) {
                obs_a[j][r] = pair_with_test_function(pa.frames.back(), phis[j]);
                obs_b[j][r] = pair_with_test_function(pb.frames.back(), phis[j]);
            }
        } catch (const blowup_error&) {
            ok[r] = 0;
        }
    });
    std::size_t survived = 0;
    for (char c : ok) survived += c;
    rec.summary["survival_fraction"] = double(survived) / double(reps);
    if (survived < reps * 95 / 100)
        throw numerical_error("universality: replica survival below 95%",
                              1.0 - double(survived) / double(reps));

    CsvWriter mom_csv(cfg.out_dir / "universality_moments.csv",
                      {"model", "phi", "order", "eps", "value", "std_error", "replicas"});
    CsvWriter diff_csv(cfg.out_dir / "universality_diffs.csv",
                       {"phi", "order", "eps", "diff", "combined_se", "pass"});
    auto moment_stats = [&](const std::vector<double>& xs, int order) {
        std::vector<double> powered;
        powered.reserve(xs.size());
        for (std::size_t r = 0; r < reps; ++r)
            if (ok[r]) powered.push_back(std::pow(xs[r], order));
        return mean_and_se(powered);
    };
    bool gates_pass = true;
    for (std::size_t j = 0; j < phis.size(); ++j) {
        for (int order = 1; order <= 4; ++order) {
            MeanSE ma = moment_stats(obs_a[j], order);
            MeanSE mb = moment_stats(obs_b[j], order);
            mom_csv.row({"cubic", std::to_string(j), std::to_string(order),
                         format_double(eps), format_double(ma.mean),
                         format_double(ma.std_error), std::to_string(ma.n)});
            mom_csv.row({"cubic_plus_sine", std::to_string(j), std::to_string(order),
                         format_double(eps), format_double(mb.mean),
                         format_double(mb.std_error), std::to_string(mb.n)});
            const double diff = std::abs(ma.mean - mb.mean);
            const double comb =
                std::sqrt(ma.std_error * ma.std_error + mb.std_error * mb.std_error);
            const bool gate = order <= 2;
            const bool pass = diff <= 3.0 * comb;
            diff_csv.row({std::to_string(j), std::to_string(order), format_double(eps),
                          format_double(diff), format_double(comb),
                          pass ? "1" : "0"});
            if (gate && !pass) {
                gates_pass = false;
                rec.failures.push_back("moment " + std::to_string(order) + " of phi_" +
                                       std::to_string(j) + " outside 3 combined SE");
            }
        }
    }
    rec.all_passed = gates_pass;
    rec.outputs.push_back("universality_moments.csv");
    rec.outputs.push_back("universality_diffs.csv");
    detail::write_manifest(cfg, rec, "universality");
    return rec;
}

inline RunRecord run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::renorm_sweep: return run_renorm_sweep(cfg);
        case ExperimentKind::trees: return run_trees(cfg);
        case ExperimentKind::universality: return run_universality(cfg);
        case ExperimentKind::paratest: return run_paratest(cfg);
        case ExperimentKind::simulate: return run_simulate(cfg);
    }
    throw std::logic_error("run_experiment: unreachable");
}

} // namespace rdlab

#pragma once

#include <memory>
#include <optional>

#include "rdlab/covariance.hpp"
#include "rdlab/renorm.hpp"
#include "rdlab/spectral.hpp"

namespace rdlab {

struct blowup_error : std::runtime_error {
    double time, norm;
    blowup_error(double t, double n)
        : std::runtime_error("blow-up ceiling exceeded at t = " + std::to_string(t) +
                             ", |u|_inf = " + std::to_string(n)),
          time(t), norm(n) {}
};

enum class ModelKind { mesoscopic_general, cubic_renormalized };
enum class InitKind { constant, file, sampled };

/// Parameters of the renormalized cubic model
///   Lu = -l3 u^3 - l2 u^2 - mass u + constant + eta
/// with (mass, constant) from cubic_counterterms.
struct CubicModel {
    LambdaVector lambda;
    double sigma2 = 0.0;
    double L_eps = 0.0;
};

struct SimConfig {
    Grid grid;
    NoiseSpec noise;
    ModelKind model = ModelKind::mesoscopic_general;
    NonlinearitySpec nonlinearity; // mesoscopic mode
    CubicModel cubic;              // cubic mode
    double dt = 0.01;
    double horizon = 1.0;
    double linear_mass = 1.0; // mass of the exactly integrated linear part
    InitKind init = InitKind::constant;
    double init_constant = 0.0;
    std::string init_file;
    double blowup_ceiling = 1e6;
    double stability_constant = 8.0;
    double ic_bound = 1e3;
    bool dealias_23 = false; // optional 2/3-rule on the drift
    bool noise_on = true;

    void validate() const {
        noise.validate_for_grid(grid);
        if (!(dt > 0.0)) throw configuration_error("SimConfig: dt must be > 0");
        if (horizon < 0.0) throw configuration_error("SimConfig: horizon must be >= 0");
        const double kmax2 = grid.dim * std::pow(grid.n / 2.0, 2.0);
        if (dt * (kmax2 + linear_mass) > stability_constant)
            throw configuration_error(
                "SimConfig: dt stability bound violated: dt*(max|k|^2 + mass) = " +
                std::to_string(dt * (kmax2 + linear_mass)) + " > " +
                std::to_string(stability_constant));
        if (init == InitKind::constant && std::abs(init_constant) > ic_bound)
            throw configuration_error("SimConfig: initial condition exceeds the L^inf bound");
        if (noise.mode == NoiseMode::fully_mollified &&
            dt > noise.eps * noise.eps * noise.mollifier.time_radius / 4.0 + 1e-15)
            throw configuration_error(
                "SimConfig: fully_mollified mode requires dt <= eps^2*time_radius/4");
    }
};

struct SimState {
    double time = 0.0;
    Field field;
    RngStream rng;
};

namespace detail {

/// drift evaluated pointwise in real space; the exactly integrated linear part
/// is (d/dt - Lap + linear_mass), so the drift carries linear_mass*u plus the
/// model's reaction term
inline void eval_drift(const SimConfig& cfg, const Field& u, Field& out) {
    const std::size_t n = u.size();
    if (cfg.model == ModelKind::mesoscopic_general) {
        const double eps = cfg.noise.eps;
        const double pre = std::pow(eps, -1.5);
        const double root = std::sqrt(eps);
        const auto& F = cfg.nonlinearity.deriv[0];
        for (std::size_t i = 0; i < n; ++i)
            out.values[i] = cfg.linear_mass * u.values[i] - pre * F(root * u.values[i]);
    } else {
        const auto& lam = cfg.cubic.lambda;
        CubicCounterterms ct = cubic_counterterms(lam, cfg.cubic.sigma2, cfg.cubic.L_eps);
        const double l3 = lam[3], l2 = lam[2];
        for (std::size_t i = 0; i < n; ++i) {
            const double x = u.values[i];
            out.values[i] = cfg.linear_mass * x -
                            (l3 * x * x * x + l2 * x * x + ct.mass * x) + ct.constant;
        }
    }
}

inline void dealias_23(const Grid& g, SpectralField& f) {
    const double cutoff = g.n / 3.0;
    for (std::size_t i = 0; i < f.modes.size(); ++i) {
        auto k = g.wavevector(i);
        for (int d = 0; d < g.dim; ++d)
            if (std::abs(k[d]) > cutoff) {
                f.modes[i] = 0.0;
                break;
            }
    }
}

} // namespace detail

/// One exponential-Euler step: exact semigroup on the linear part, explicit
/// drift through the phi1 weight, and the stochastic forcing integrated per
/// mode (exact OU increment in white_in_time mode, frame-summed in
/// fully_mollified mode). Deterministic given the state's rng cursor.
class Simulator {
  public:
    explicit Simulator(const SimConfig& cfg, RngStream rng,
                       std::optional<Field> initial = std::nullopt, double t0 = 0.0)
        : cfg_(cfg), rng_(std::move(rng)),
          tables_(detail::mollifier_tables(cfg.noise.mollifier, cfg.grid.dim)) {
        cfg.validate();
        psi_ = detail::spatial_multiplier(cfg_.grid, cfg_.noise.eps, *tables_);
        if (cfg_.noise.mode == NoiseMode::fully_mollified && cfg_.noise_on)
            synth_ = std::make_unique<NoiseSynthesizer>(cfg_.noise, cfg_.grid, cfg_.dt,
                                                        rng_.child(0xe7a));
        if (initial) {
            if (!(initial->grid == cfg_.grid))
                throw configuration_error("Simulator: initial field grid mismatch");
            uhat_ = fft_forward(*initial).modes;
            t_ = t0;
            drift_real_ = Field(cfg_.grid, 0.0);
        } else {
            init_state();
        }
    }

    RngStream rng_cursor() const { return rng_; }

    const SimConfig& config() const { return cfg_; }
    double time() const { return t_; }

    Field field() const {
        SpectralField s(cfg_.grid);
        s.modes = uhat_;
        return fft_inverse(s);
    }

    /// advance one step drawing the noise from the internal stream
    void step() {
        if (cfg_.noise.mode == NoiseMode::fully_mollified || !cfg_.noise_on) {
            Field eta = cfg_.noise_on ? synth_->next() : Field(cfg_.grid, 0.0);
            advance(fft_forward(eta), /*white=*/false);
        } else {
            Field w = gaussian_field(cfg_.grid, rng_);
            advance(fft_forward(w), /*white=*/true);
        }
    }

    /// advance with externally supplied standard-normal white field
    /// (white_in_time mode; used for common-random-number pairings)
    void step_with_white(const SpectralField& what) { advance(what, true); }
    /// advance with an externally supplied eta frame (fully_mollified mode)
    void step_with_eta(const SpectralField& ehat) { advance(ehat, false); }
    /// advance with a fully assembled per-mode stochastic increment
    /// (used by step-size coupling tests)
    void step_with_mode_increment(const std::vector<std::complex<double>>& inc) {
        SpectralField s(cfg_.grid);
        s.modes = inc;
        advance(s, false, true);
    }

    /// exact per-mode weight applied to a unit white transform to obtain the
    /// stochastic increment of one step
    double noise_increment_amplitude(std::size_t mode_idx) const {
        const double mu = cfg_.grid.k_squared(mode_idx) + cfg_.linear_mass;
        const double decay = std::exp(-mu * cfg_.dt);
        return psi_[mode_idx] *
               std::sqrt((1.0 - decay * decay) / (2.0 * mu * cfg_.grid.cell_volume()));
    }
    double mode_decay(std::size_t mode_idx) const {
        return std::exp(-(cfg_.grid.k_squared(mode_idx) + cfg_.linear_mass) * cfg_.dt);
    }

  private:
    void init_state() {
        Field u0(cfg_.grid, 0.0);
        switch (cfg_.init) {
            case InitKind::constant:
                u0 = Field(cfg_.grid, cfg_.init_constant);
                break;
            case InitKind::sampled: {
                StationaryFieldSampler s(cfg_.noise, cfg_.grid, cfg_.dt, rng_.child(0x1c));
                u0 = s.current();
                break;
            }
            case InitKind::file:
                throw configuration_error("Simulator: file initial conditions are loaded "
                                          "by the harness, not the integrator");
        }
        uhat_ = fft_forward(u0).modes;
        t_ = 0.0;
        drift_real_ = Field(cfg_.grid, 0.0);
    }

    void advance(const SpectralField& noise_hat, bool white, bool preassembled = false) {
        const Grid& g = cfg_.grid;
        Field u = field();
        const double norm = linf_norm(u);
        if (norm > cfg_.blowup_ceiling) throw blowup_error(t_, norm);
        detail::eval_drift(cfg_, u, drift_real_);
        SpectralField dhat = fft_forward(drift_real_);
        if (cfg_.dealias_23) detail::dealias_23(g, dhat);
        const double cell = g.cell_volume();
        for (std::size_t i = 0; i < uhat_.size(); ++i) {
            const double mu = g.k_squared(i) + cfg_.linear_mass;
            const double decay = std::exp(-mu * cfg_.dt);
            const double phi1dt = mu > 1e-14 ? (1.0 - decay) / mu : cfg_.dt;
            std::complex<double> inc = 0.0;
            if (preassembled) {
                inc = noise_hat.modes[i];
            } else if (cfg_.noise_on) {
                if (white) {
                    const double amp =
                        psi_[i] * std::sqrt((1.0 - decay * decay) / (2.0 * mu * cell));
                    inc = amp * noise_hat.modes[i];
                } else {
                    inc = noise_hat.modes[i] * phi1dt;
                }
            }
            uhat_[i] = decay * uhat_[i] + phi1dt * dhat.modes[i] + inc;
        }
        t_ += cfg_.dt;
    }

    SimConfig cfg_;
    RngStream rng_;
    std::shared_ptr<const detail::MollifierTables> tables_;
    std::vector<double> psi_;
    std::vector<std::complex<double>> uhat_;
    Field drift_real_;
    std::unique_ptr<NoiseSynthesizer> synth_;
    double t_ = 0.0;
};

/// One step on a plain state. The state is self-contained in white_in_time
/// mode (field + rng cursor); fully_mollified stepping carries a noise ring
/// buffer and must go through a persistent Simulator.
inline SimState step(const SimState& state, const SimConfig& cfg) {
    if (cfg.noise.mode == NoiseMode::fully_mollified && cfg.noise_on)
        throw configuration_error(
            "step(SimState): fully_mollified stepping needs a persistent Simulator");
    Simulator sim(cfg, state.rng, state.field, state.time);
    sim.step();
    return SimState{sim.time(), sim.field(), sim.rng_cursor()};
}

/// Trajectory snapshots at save_times (each must be a step multiple within
/// [0, horizon]); bit-reproducible for fixed seed and config.
inline FieldPath simulate(const SimConfig& cfg, RngStream rng,
                          const std::vector<double>& save_times) {
    cfg.validate();
    for (double t : save_times)
        if (t < -1e-12 || t > cfg.horizon + 1e-12)
            throw configuration_error("simulate: save_times must lie in [0, horizon]");
    Simulator sim(cfg, std::move(rng));
    FieldPath path;
    auto maybe_save = [&](double t) {
        for (double s : save_times)
            if (std::abs(s - t) < 0.5 * cfg.dt) {
                path.push(t, sim.field());
                return;
            }
    };
    maybe_save(0.0);
    const long steps = std::lround(cfg.horizon / cfg.dt);
    for (long s = 1; s <= steps; ++s) {
        sim.step();
        maybe_save(sim.time());
    }
    return path;
}

/// Common-random-number pair: both configurations are driven by the identical
/// noise realization, step by step. Grids, dt and noise specs must agree.
inline std::pair<FieldPath, FieldPath> simulate_pair(const SimConfig& a, const SimConfig& b,
                                                     RngStream rng,
                                                     const std::vector<double>& save_times) {
    a.validate();
    b.validate();
    if (!(a.grid == b.grid) || a.dt != b.dt || a.noise.eps != b.noise.eps ||
        a.noise.mode != b.noise.mode)
        throw configuration_error("simulate_pair: paired configs must share grid/dt/noise");
    Simulator sa(a, rng.child(1));
    Simulator sb(b, rng.child(2));
    std::unique_ptr<NoiseSynthesizer> synth;
    if (a.noise.mode == NoiseMode::fully_mollified)
        synth = std::make_unique<NoiseSynthesizer>(a.noise, a.grid, a.dt, rng.child(3));
    FieldPath pa, pb;
    auto maybe_save = [&](double t) {
        for (double s : save_times)
            if (std::abs(s - t) < 0.5 * a.dt) {
                pa.push(t, sa.field());
                pb.push(t, sb.field());
                return;
            }
    };
    maybe_save(0.0);
    const long steps = std::lround(a.horizon / a.dt);
    for (long s = 1; s <= steps; ++s) {
        if (a.noise.mode == NoiseMode::white_in_time) {
            Field w = gaussian_field(a.grid, rng);
            SpectralField what = fft_forward(w);
            sa.step_with_white(what);
            sb.step_with_white(what);
        } else {
            SpectralField ehat = fft_forward(synth->next());
            sa.step_with_eta(ehat);
            sb.step_with_eta(ehat);
        }
        maybe_save(sa.time());
    }
    return {std::move(pa), std::move(pb)};
}

} // namespace rdlab

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rdlab/grid.hpp"
#include "rdlab/mollifier.hpp"
#include "rdlab/rng.hpp"
#include "rdlab/spectral.hpp"

namespace rdlab {

/// Configuration rejected before any numerics run.
struct configuration_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class NoiseMode { fully_mollified, white_in_time };

/// The driving noise eta_eps: a space-time mollification of white noise at
/// correlation scale (eps^2, eps), or the cheap variant that keeps the spatial
/// mollification but is white in time.
struct NoiseSpec {
    double eps = 1.0;
    MollifierSpec mollifier;
    NoiseMode mode = NoiseMode::white_in_time;
    std::uint64_t seed = 1;
    double min_cells_per_corr = 4.0; // resolvability guard, configurable
    double burn_in = 1.5;            // relaxation time before stationary sampling
                                     // (fully_mollified mode)

    void validate() const {
        if (!(eps > 0.0) || eps > 1.0)
            throw configuration_error("NoiseSpec: eps must be in (0, 1]");
        mollifier.validate();
    }

    void validate_for_grid(const Grid& grid) const {
        validate();
        const double cells = eps * grid.n / (2.0 * M_PI);
        if (cells < min_cells_per_corr)
            throw configuration_error(
                "NoiseSpec: resolvability invariant violated: eps*points_per_axis/(2pi) = " +
                std::to_string(cells) + " < min_cells_per_corr = " +
                std::to_string(min_cells_per_corr));
    }
};

/// Space-time white noise frame: iid centered Gaussians with variance
/// 1/(dt h^dim), the lattice density of white noise averaged over one frame.
inline Field sample_white_noise(const Grid& grid, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw std::domain_error("sample_white_noise: dt must be > 0");
    return gaussian_field(grid, rng, 1.0 / std::sqrt(dt * grid.cell_volume()));
}

namespace detail {

/// Per-mode time kernel of the stationary field: G_mu(tau) such that
/// E[Yhat(t+tau,k) conj(Yhat(t,k))] = (2pi)^dim |psi_hat(eps k)|^2 G_mu(tau)
/// with mu = |k|^2 + 1. white_in_time: exact OU kernel e^{-mu|tau|}/(2mu);
/// fully_mollified: the OU kernel convolved with the rescaled time
/// autocorrelation of the mollifier.
inline double time_kernel_g(NoiseMode mode, double eps, const MollifierTables& tables,
                            double mu, double tau) {
    if (mode == NoiseMode::white_in_time) return std::exp(-mu * std::abs(tau)) / (2.0 * mu);
    const double eps2 = eps * eps;
    const double width = eps2 * (tables.time_support_hi() - tables.time_support_lo());
    QuadRule gl = gauss_legendre(48, -width, width);
    double acc = 0.0;
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const double v = gl.nodes[i];
        acc += gl.weights[i] * std::exp(-mu * std::abs(tau - v)) / (2.0 * mu) *
               tables.sigma_t(v / eps2) / eps2;
    }
    return acc;
}

/// Spatial mollification multiplier per lattice mode, psi_hat(eps |k|).
inline std::vector<double> spatial_multiplier(const Grid& grid, double eps,
                                              const MollifierTables& tables) {
    std::vector<double> m(grid.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = tables.phi_x_hat(eps * std::sqrt(grid.k_squared(i)));
    return m;
}

inline Field apply_mode_multiplier(const Field& f, const std::vector<double>& m) {
    SpectralField g = fft_forward(f);
    for (std::size_t i = 0; i < g.modes.size(); ++i) g.modes[i] *= m[i];
    return fft_inverse(g);
}

} // namespace detail

/// Synthesizes frames of eta_eps on the grid. In white_in_time mode each frame
/// is an independent spatially mollified white-noise frame; in fully_mollified
/// mode frames are additionally convolved in time against the rescaled time
/// profile (which requires dt <= eps^2 * time_radius / 4 so the profile is
/// resolved by at least four frames).
class NoiseSynthesizer {
  public:
    NoiseSynthesizer(const NoiseSpec& spec, const Grid& grid, double dt, RngStream rng)
        : spec_(spec), grid_(grid), dt_(dt), rng_(std::move(rng)),
          tables_(detail::mollifier_tables(spec.mollifier, grid.dim)) {
        spec.validate_for_grid(grid);
        if (!(dt > 0.0)) throw std::domain_error("NoiseSynthesizer: dt must be > 0");
        multiplier_ = detail::spatial_multiplier(grid, spec.eps, *tables_);
        if (spec.mode == NoiseMode::fully_mollified) {
            const double eps2 = spec.eps * spec.eps;
            if (dt > eps2 * spec.mollifier.time_radius / 4.0 + 1e-15)
                throw configuration_error(
                    "NoiseSynthesizer: fully_mollified mode requires dt <= "
                    "eps^2*time_radius/4");
            build_time_weights();
            ring_.assign(weights_.size(), Field(grid_, 0.0));
            for (auto& f : ring_) f = mollified_white_frame();
        }
    }

    /// next frame of eta_eps (advances the stream)
    Field next() {
        if (spec_.mode == NoiseMode::white_in_time) return mollified_white_frame();
        // time convolution against the ring of mollified white frames
        Field out(grid_, 0.0);
        for (std::size_t j = 0; j < weights_.size(); ++j) {
            const Field& w = ring_[(head_ + ring_.size() - j) % ring_.size()];
            for (std::size_t i = 0; i < out.size(); ++i)
                out.values[i] += weights_[j] * w.values[i];
        }
        head_ = (head_ + 1) % ring_.size();
        ring_[head_] = mollified_white_frame();
        return out;
    }

    const std::vector<double>& spatial_mode_multiplier() const { return multiplier_; }
    const detail::MollifierTables& tables() const { return *tables_; }
    double dt() const { return dt_; }

  private:
    Field mollified_white_frame() {
        Field w = sample_white_noise(grid_, dt_, rng_);
        return detail::apply_mode_multiplier(w, multiplier_);
    }

    void build_time_weights() {
        // w_j = integral of the rescaled time profile over frame j
        const double eps2 = spec_.eps * spec_.eps;
        const double lo = eps2 * tables_->time_support_lo();
        const double hi = eps2 * tables_->time_support_hi();
        const int first = static_cast<int>(std::floor(lo / dt_));
        const int last = static_cast<int>(std::ceil(hi / dt_));
        weights_.clear();
        for (int j = first; j < last; ++j) {
            QuadRule gl = gauss_legendre(8, j * dt_, (j + 1) * dt_);
            double acc = 0.0;
            for (std::size_t i = 0; i < gl.size(); ++i)
                acc += gl.weights[i] * tables_->phi_t(gl.nodes[i] / eps2) / eps2;
            weights_.push_back(acc);
        }
        if (weights_.empty()) weights_.push_back(1.0);
    }

    NoiseSpec spec_;
    Grid grid_;
    double dt_;
    RngStream rng_;
    std::shared_ptr<const detail::MollifierTables> tables_;
    std::vector<double> multiplier_;
    std::vector<double> weights_;
    std::vector<Field> ring_;
    std::size_t head_ = 0;
};

inline std::vector<Field> synthesize_eta_eps(const NoiseSpec& spec, const Grid& grid,
                                             double dt, RngStream rng, int frames) {
    NoiseSynthesizer synth(spec, grid, dt, std::move(rng));
    std::vector<Field> out;
    out.reserve(frames);
    for (int i = 0; i < frames; ++i) out.push_back(synth.next());
    return out;
}

/// Stationary solution of (d/dt - Lap + 1) Y = eta_eps, sampled per mode.
/// white_in_time: the t=0 frame is drawn from the exact per-mode stationary
/// law and subsequent frames use the exact OU increment. fully_mollified:
/// initialized at the continuum per-mode stationary variance and relaxed over
/// spec.burn_in before t=0, then advanced by exact exponential integration of
/// the linear part with frame-summed forcing.
class StationaryFieldSampler {
  public:
    StationaryFieldSampler(const NoiseSpec& spec, const Grid& grid, double dt, RngStream rng)
        : spec_(spec), grid_(grid), dt_(dt), rng_(std::move(rng)),
          tables_(detail::mollifier_tables(spec.mollifier, grid.dim)) {
        spec.validate_for_grid(grid);
        if (!(dt > 0.0)) throw std::domain_error("StationaryFieldSampler: dt must be > 0");
        psi_ = detail::spatial_multiplier(grid, spec.eps, *tables_);
        state_.assign(grid.size(), {0.0, 0.0});
        init_stationary();
        if (spec.mode == NoiseMode::fully_mollified) {
            synth_ = std::make_unique<NoiseSynthesizer>(spec_, grid_, dt_, rng_.child(1));
            const int burn = static_cast<int>(std::ceil(spec.burn_in / dt_));
            for (int i = 0; i < burn; ++i) advance();
        }
    }

    /// per-mode stationary variance of the mode coefficients (white_in_time)
    double stationary_mode_variance(std::size_t idx) const {
        const double mu = grid_.k_squared(idx) + 1.0;
        return grid_.volume() * psi_[idx] * psi_[idx] / (2.0 * mu);
    }

    Field current() const {
        SpectralField s(grid_);
        s.modes = state_;
        return fft_inverse(s);
    }

    void advance() {
        if (spec_.mode == NoiseMode::white_in_time) {
            Field w = gaussian_field(grid_, rng_);
            SpectralField what = fft_forward(w);
            const double cell = grid_.cell_volume();
            for (std::size_t i = 0; i < state_.size(); ++i) {
                const double mu = grid_.k_squared(i) + 1.0;
                const double decay = std::exp(-mu * dt_);
                const double amp =
                    psi_[i] * std::sqrt((1.0 - decay * decay) / (2.0 * mu * cell));
                state_[i] = decay * state_[i] + amp * what.modes[i];
            }
        } else {
            Field eta = synth_->next();
            SpectralField ehat = fft_forward(eta);
            for (std::size_t i = 0; i < state_.size(); ++i) {
                const double mu = grid_.k_squared(i) + 1.0;
                const double decay = std::exp(-mu * dt_);
                state_[i] = decay * state_[i] + ehat.modes[i] * ((1.0 - decay) / mu);
            }
        }
    }

    /// continuum stationary variance of mode idx (both modes)
    double continuum_mode_variance(std::size_t idx) const {
        const double mu = grid_.k_squared(idx) + 1.0;
        const double p2 = psi_[idx] * psi_[idx];
        return grid_.volume() * p2 *
               detail::time_kernel_g(spec_.mode, spec_.eps, *tables_, mu, 0.0);
    }

  private:
    void init_stationary() {
        Field w = gaussian_field(grid_, rng_);
        SpectralField what = fft_forward(w);
        const double cell = grid_.cell_volume();
        for (std::size_t i = 0; i < state_.size(); ++i) {
            const double var = continuum_mode_variance(i);
            state_[i] = what.modes[i] * std::sqrt(var / (cell * grid_.volume()));
        }
    }

    NoiseSpec spec_;
    Grid grid_;
    double dt_;
    RngStream rng_;
    std::shared_ptr<const detail::MollifierTables> tables_;
    std::vector<double> psi_;
    std::vector<std::complex<double>> state_;
    std::unique_ptr<NoiseSynthesizer> synth_;
};

/// Trajectory of the stationary linear field on [0, horizon] at spacing dt.
inline FieldPath sample_stationary_Y(const NoiseSpec& spec, const Grid& grid, double horizon,
                                     double dt, RngStream rng) {
    StationaryFieldSampler sampler(spec, grid, dt, std::move(rng));
    FieldPath path;
    path.push(0.0, sampler.current());
    const int steps = horizon > 0 ? static_cast<int>(std::round(horizon / dt)) : 0;
    for (int s = 1; s <= steps; ++s) {
        sampler.advance();
        path.push(s * dt, sampler.current());
    }
    return path;
}

} // namespace rdlab

#pragma once

#include <optional>

#include "rdlab/mc.hpp"
#include "rdlab/noise.hpp"

namespace rdlab {

enum class CovarianceMethod { spectral_quadrature, monte_carlo };

/// Covariance C_eps(t, x) of the stationary linear field driven by the given
/// noise. Two evaluators:
///   - lattice: the exact covariance of the field the samplers actually
///     simulate -- a sum over the grid's modes (requires a grid);
///   - radial: the continuum rotational-invariant form, a 1D integral over
///     |k|, used by the renormalization quadratures where lags far below any
///     affordable lattice spacing are needed.
class CovarianceModel {
  public:
    CovarianceModel(const NoiseSpec& spec, int dim,
                    std::optional<Grid> grid = std::nullopt,
                    CovarianceMethod method = CovarianceMethod::spectral_quadrature)
        : spec_(spec), dim_(dim), grid_(grid), method_(method),
          tables_(detail::mollifier_tables(spec.mollifier, dim)) {
        spec.validate();
        if (grid_) {
            if (grid_->dim != dim) throw configuration_error("CovarianceModel: dim mismatch");
            spec.validate_for_grid(*grid_);
            psi_ = detail::spatial_multiplier(*grid_, spec.eps, *tables_);
            c0_ = lattice_covariance(0.0, {0, 0, 0});
        } else {
            c0_ = radial_covariance(0.0, 0.0);
        }
        if (!(c0_ > 0.0)) throw configuration_error("CovarianceModel: C(0,0) must be positive");
    }

    const NoiseSpec& spec() const { return spec_; }
    int dim() const { return dim_; }
    double eps() const { return spec_.eps; }
    const std::optional<Grid>& grid() const { return grid_; }
    CovarianceMethod method() const { return method_; }
    const detail::MollifierTables& tables() const { return *tables_; }

    /// C_eps(0,0), the one-point variance of Y
    double c0() const { return c0_; }

    /// Exact covariance of the simulated lattice field at a lattice lag.
    double lattice_covariance(double lag_t, const std::array<int, 3>& lag) const {
        if (!grid_) throw configuration_error("CovarianceModel: no grid attached");
        const Grid& g = *grid_;
        for (int d = 0; d < g.dim; ++d)
            if (std::abs(lag[d]) >= g.n)
                throw std::domain_error("covariance_C_eps: lag outside grid");
        const double h = g.h();
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double p = psi_[i];
            if (p == 0.0) continue;
            const double mu = g.k_squared(i) + 1.0;
            auto k = g.wavevector(i);
            double phase = 0.0;
            for (int d = 0; d < g.dim; ++d) phase += k[d] * lag[d] * h;
            acc += p * p * detail::time_kernel_g(spec_.mode, spec_.eps, *tables_, mu, lag_t) *
                   std::cos(phase);
        }
        // C = (2pi)^{-2d} sum_k Var(Yhat(k)) e^{ik.z} with Var = (2pi)^d psi^2 G
        return acc / g.volume();
    }

    /// Continuum radial covariance C(s, r), s = time lag, r = |x|.
    double radial_covariance(double s, double r) const {
        const double eps = spec_.eps;
        const double cutoff = tables_->spectral_cutoff() / eps;
        double kappa_max = cutoff;
        const double sa = std::abs(s);
        if (sa > 0.0) kappa_max = std::min(kappa_max, std::sqrt(120.0 / sa) + 2.0);
        int nodes = 96 + static_cast<int>(1.5 * kappa_max * r);
        nodes = std::min((nodes + 63) / 64 * 64, 1024); // bucketed for rule reuse
        QuadRule gl = gauss_legendre(nodes, 0.0, kappa_max);
        double acc = 0.0;
        for (std::size_t i = 0; i < gl.size(); ++i) {
            const double k = gl.nodes[i];
            const double p = tables_->phi_x_hat(eps * k);
            if (p == 0.0) continue;
            const double mu = k * k + 1.0;
            const double gmu = detail::time_kernel_g(spec_.mode, eps, *tables_, mu, sa);
            acc += gl.weights[i] * p * p * gmu * angular_kernel(k, r);
        }
        return acc;
    }

    /// Monte-Carlo estimate of the covariance at a lattice lag, averaged over
    /// sites (stationarity) and replicas; returns mean and standard error.
    MeanSE monte_carlo_covariance(double lag_t, const std::array<int, 3>& lag,
                                  std::size_t replicas, std::uint64_t seed,
                                  int workers = 1) const {
        if (!grid_) throw configuration_error("CovarianceModel: no grid attached");
        const Grid g = *grid_;
        const NoiseSpec spec = spec_;
        const double dt = lag_t > 0 ? lag_t : 0.25 * spec.eps * spec.eps *
                                                  spec.mollifier.time_radius;
        auto vals = replica_map(replicas, seed, workers, [&](std::size_t, RngStream& rng) {
            StationaryFieldSampler sampler(spec, g, dt, rng);
            Field y0 = sampler.current();
            Field y1 = y0;
            if (lag_t > 0) {
                sampler.advance();
                y1 = sampler.current();
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                auto c = g.coords(i);
                std::array<int, 3> shifted{c[0] + lag[0], c[1] + lag[1], c[2] + lag[2]};
                acc += y0.values[i] * y1.values[g.index(shifted)];
            }
            return acc / static_cast<double>(g.size());
        });
        return mean_and_se(vals);
    }

  private:
    double angular_kernel(double k, double r) const {
        // (2pi)^{-d} integral over angles of e^{ik.x}, times the radial measure
        switch (dim_) {
            case 1:
                return std::cos(k * r) / M_PI;
            case 2:
                return k * std::cyl_bessel_j(0.0, k * r) / (2.0 * M_PI);
            default: {
                const double z = k * r;
                const double sinc = z < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
                return k * k * sinc / (2.0 * M_PI * M_PI);
            }
        }
    }

    NoiseSpec spec_;
    int dim_;
    std::optional<Grid> grid_;
    CovarianceMethod method_;
    std::shared_ptr<const detail::MollifierTables> tables_;
    std::vector<double> psi_;
    double c0_ = 0.0;
};

/// Covariance at a lattice lag using the model's configured method.
inline double covariance_C_eps(const CovarianceModel& model, double lag_t,
                               const std::array<int, 3>& lag_x) {
    if (model.method() == CovarianceMethod::monte_carlo)
        return model.monte_carlo_covariance(lag_t, lag_x, 1024, model.spec().seed).mean;
    return model.lattice_covariance(lag_t, lag_x);
}

/// sigma_eps^2 = eps * C_eps(0,0)
inline double sigma_eps_squared(const CovarianceModel& model) {
    return model.eps() * model.c0();
}

} // namespace rdlab

#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "rdlab/quadrature.hpp"

namespace rdlab {

/// The smooth compactly supported bump, b(u) = exp(-1/(1-u^2)) for |u|<1.
inline double bump(double u) {
    const double u2 = u * u;
    if (u2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u2));
}

enum class TimeProfile { one_sided, centered };

/// Space-time mollifier psi(t,x) = psi_t(t) psi_x(x), both factors normalized
/// to unit mass. The spatial factor is the radial bump b(|x|/space_radius);
/// the default time factor is one-sided, supported in (0, time_radius), so the
/// self-convolution psi*psi is supported in [0,1] x B(0,1) whenever both radii
/// are <= 1/2.
struct MollifierSpec {
    double time_radius = 0.5;  // in (0, 1/2]
    double space_radius = 0.5; // in (0, 1/2]
    TimeProfile time_profile = TimeProfile::one_sided;

    void validate() const {
        if (!(time_radius > 0.0) || time_radius > 0.5)
            throw std::invalid_argument("MollifierSpec: time_radius must be in (0, 1/2]");
        if (!(space_radius > 0.0) || space_radius > 0.5)
            throw std::invalid_argument("MollifierSpec: space_radius must be in (0, 1/2]");
    }

    /// unnormalized time profile
    double time_bump(double t) const {
        if (time_profile == TimeProfile::one_sided)
            return bump(2.0 * t / time_radius - 1.0); // supported in (0, time_radius)
        return bump(2.0 * t / time_radius); // supported in (-r/2, r/2)
    }
};

namespace detail {

/// Immutable per-mollifier tables: normalization constants, the radial
/// Fourier transform of the spatial factor, and the time autocorrelation.
class MollifierTables {
  public:
    MollifierTables(const MollifierSpec& spec, int dim) : spec_(spec), dim_(dim) {
        spec.validate();
        const double rx = spec.space_radius;
        QuadRule gl = gauss_legendre(96, 0.0, rx);

        // spatial normalization: integral of b(|x|/rx) over R^dim
        double mass = 0.0;
        for (std::size_t i = 0; i < gl.size(); ++i) {
            const double r = gl.nodes[i];
            mass += gl.weights[i] * bump(r / rx) * sphere_area(dim, r);
        }
        cx_ = 1.0 / mass;

        // time normalization
        const double rt = spec.time_radius;
        const double t0 = spec.time_profile == TimeProfile::one_sided ? 0.0 : -rt / 2;
        const double t1 = spec.time_profile == TimeProfile::one_sided ? rt : rt / 2;
        QuadRule glt = gauss_legendre(96, t0, t1);
        double tmass = 0.0;
        for (std::size_t i = 0; i < glt.size(); ++i)
            tmass += glt.weights[i] * spec.time_bump(glt.nodes[i]);
        ct_ = 1.0 / tmass;
        time_lo_ = t0;
        time_hi_ = t1;

        build_spatial_transform_table();
        build_time_correlation_table();
    }

    int dim() const { return dim_; }
    const MollifierSpec& spec() const { return spec_; }

    /// normalized spatial factor
    double phi_x(double r) const { return cx_ * bump(r / spec_.space_radius); }
    /// normalized time factor
    double phi_t(double t) const { return ct_ * spec_.time_bump(t); }
    double time_support_lo() const { return time_lo_; }
    double time_support_hi() const { return time_hi_; }

    /// radial Fourier transform of the spatial factor, phi_x_hat(0) = 1
    double phi_x_hat(double w) const {
        w = std::abs(w);
        if (w >= table_wmax_) return 0.0;
        const double pos = w / table_dw_;
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= table_.size()) return table_.back();
        const double frac = pos - i;
        return table_[i] * (1.0 - frac) + table_[i + 1] * frac;
    }

    /// time autocorrelation (phi_t * phi_t~)(v) = int phi_t(u) phi_t(u+v) du,
    /// even, supported in |v| < time width
    double sigma_t(double v) const {
        v = std::abs(v);
        const double width = time_hi_ - time_lo_;
        if (v >= width) return 0.0;
        const double pos = v / sigmat_dv_;
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= sigmat_.size()) return 0.0;
        const double frac = pos - i;
        return sigmat_[i] * (1.0 - frac) + sigmat_[i + 1] * frac;
    }

    /// |k| beyond which phi_x_hat is numerically zero
    double spectral_cutoff() const { return effective_cutoff_; }

  private:
    static double sphere_area(int dim, double r) {
        switch (dim) {
            case 1: return 2.0;
            case 2: return 2.0 * M_PI * r;
            default: return 4.0 * M_PI * r * r;
        }
    }

    void build_spatial_transform_table() {
        const double rx = spec_.space_radius;
        QuadRule gl = gauss_legendre(192, 0.0, rx);
        table_wmax_ = 320.0 / (2.0 * rx); // transform is negligible well before this
        const std::size_t npts = 16384;
        table_.resize(npts);
        table_dw_ = table_wmax_ / (npts - 1);
        for (std::size_t j = 0; j < npts; ++j) {
            const double w = j * table_dw_;
            double acc = 0.0;
            for (std::size_t i = 0; i < gl.size(); ++i) {
                const double r = gl.nodes[i];
                double kernel;
                if (dim_ == 1) {
                    kernel = std::cos(w * r);
                } else if (dim_ == 2) {
                    kernel = std::cyl_bessel_j(0.0, w * r);
                } else {
                    const double z = w * r;
                    kernel = z < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
                }
                acc += gl.weights[i] * phi_x(r) * kernel * sphere_area(dim_, r);
            }
            table_[j] = acc;
        }
        effective_cutoff_ = table_wmax_;
        for (std::size_t j = npts; j-- > 0;) {
            if (std::abs(table_[j]) > 1e-12) {
                effective_cutoff_ = std::min(table_wmax_, (j + 2) * table_dw_);
                break;
            }
        }
    }

    void build_time_correlation_table() {
        const double width = time_hi_ - time_lo_;
        const std::size_t npts = 2048;
        sigmat_.resize(npts);
        sigmat_dv_ = width / (npts - 1);
        QuadRule gl = gauss_legendre(128, time_lo_, time_hi_);
        for (std::size_t j = 0; j < npts; ++j) {
            const double v = j * sigmat_dv_;
            double acc = 0.0;
            for (std::size_t i = 0; i < gl.size(); ++i)
                acc += gl.weights[i] * phi_t(gl.nodes[i]) * phi_t(gl.nodes[i] + v);
            sigmat_[j] = acc;
        }
    }

    MollifierSpec spec_;
    int dim_;
    double cx_ = 1.0, ct_ = 1.0;
    double time_lo_ = 0.0, time_hi_ = 0.5;
    std::vector<double> table_;
    double table_dw_ = 1.0, table_wmax_ = 1.0, effective_cutoff_ = 1.0;
    std::vector<double> sigmat_;
    double sigmat_dv_ = 1.0;
};

/// Memoized tables: construction is expensive (transform tabulation), the
/// result immutable, so instances are shared across samplers and threads.
inline std::shared_ptr<const MollifierTables> mollifier_tables(const MollifierSpec& spec,
                                                               int dim) {
    using Key = std::tuple<double, double, int, int>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const MollifierTables>> cache;
    Key key{spec.time_radius, spec.space_radius, static_cast<int>(spec.time_profile), dim};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_shared<const MollifierTables>(spec, dim)).first;
    return it->second;
}

} // namespace detail

} // namespace rdlab

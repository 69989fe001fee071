#pragma once

#include <functional>

#include "rdlab/chaos.hpp"
#include "rdlab/covariance.hpp"
#include "rdlab/mc.hpp"
#include "rdlab/paraproduct.hpp"
#include "rdlab/renorm.hpp"

namespace rdlab {

enum class TreeTag {
    Y,         // the linear field (the first-order tree)
    Y2,        // (1/3) eps^{-1} Ftilde'(eps^{1/2} Y)
    Y2bar,     // eps^{-1/2} f2 [[Y^2]]
    Y3,        // eps^{-3/2} Ftilde(eps^{1/2} Y)
    IY3,       // heat integral of Y3, zero initial condition
    IY2,       // heat integral of Y2
    IY2bar,    // heat integral of Y2bar
    res_23,    // IY2  o Y2 - d23
    res_23bar, // IY2bar o Y2 - d23_bar
    res_32,    // IY3 o Y1 - d32, Y1 = (1/6) eps^{-1/2} Ftilde''(eps^{1/2} Y)
    res_33,    // IY3 o Y2 - d' Y - d33
    phi_m,     // Phi^[m]
    phi_hat_m, // chaos remainder of Phi^[m]
};

struct TreeKind {
    TreeTag tag = TreeTag::Y;
    int m = 0; // order for phi_m / phi_hat_m

    static TreeKind simple(TreeTag t) { return TreeKind{t, 0}; }
    static TreeKind phi(int m) { return TreeKind{TreeTag::phi_m, m}; }
    static TreeKind phi_hat(int m) { return TreeKind{TreeTag::phi_hat_m, m}; }
};

/// Parabolic homogeneity |tau| of the finite-chaos trees.
inline double homogeneity(const TreeKind& kind) {
    switch (kind.tag) {
        case TreeTag::Y: return -0.5;
        case TreeTag::Y2: return -1.0;
        case TreeTag::Y2bar: return -1.0;
        case TreeTag::Y3: return -1.5;
        case TreeTag::IY3: return 0.5;
        case TreeTag::res_23: return 0.0;
        case TreeTag::res_23bar: return 0.0;
        case TreeTag::res_32: return 0.0;
        case TreeTag::res_33: return -0.5;
        case TreeTag::phi_m: return -0.5 * (3 - kind.m);
        default:
            throw std::domain_error("homogeneity: no table entry for this kind");
    }
}

/// Phi^[m] minus its leading Wick part:
/// Phi_hat^[m] = Phi^[m] - (3!/(3-m)!) f3 [[Y^{3-m}]].
inline Field chaos_remainder(int m, double eps, const Field& y,
                             const CenteredNonlinearity& ft, double f3,
                             const CovarianceModel& model) {
    if (m < 0 || m > 3) throw std::domain_error("chaos_remainder: m must be in 0..3");
    Field phi = phi_field(m, eps, y, ft);
    Field wick = wick_power(y, 3 - m, model.c0());
    double fall = 1.0;
    for (int j = 0; j < m; ++j) fall *= double(3 - j); // 3!/(3-m)!
    for (std::size_t i = 0; i < phi.size(); ++i) phi.values[i] -= fall * f3 * wick.values[i];
    return phi;
}

namespace detail {

/// heat integral I(f)(t) = int_0^t P_{t-s} f(s) ds on path frames
/// (exponential accumulation, massless semigroup, zero initial condition)
class HeatAccumulator {
  public:
    explicit HeatAccumulator(const Grid& g) : grid_(g), state_(g.size(), {0.0, 0.0}) {}

    void push(const Field& frame, double dt) {
        SpectralField fh = fft_forward(frame);
        for (std::size_t i = 0; i < state_.size(); ++i) {
            const double k2 = grid_.k_squared(i);
            const double decay = std::exp(-k2 * dt);
            const double phi1dt = k2 > 1e-14 ? (1.0 - decay) / k2 : dt;
            state_[i] = decay * state_[i] + phi1dt * fh.modes[i];
        }
    }

    Field current() const {
        SpectralField s(grid_);
        s.modes = state_;
        return fft_inverse(s);
    }

  private:
    Grid grid_;
    std::vector<std::complex<double>> state_;
};

} // namespace detail

/// Builds the requested tree along the path of the linear field. Integrated
/// kinds accumulate the massless heat integral with zero initial condition;
/// resonant kinds pair the integrated factor with the pointwise one through
/// the resonant product and subtract the matching renormalization constant.
inline FieldPath build_tree(const TreeKind& kind, const FieldPath& y_path,
                            const CenteredNonlinearity& ft, const CovarianceModel& model,
                            const DConstants& d) {
    if (y_path.size() == 0) throw configuration_error("build_tree: empty path");
    const Grid& grid = y_path.frames.front().grid;
    const double eps = model.eps();
    const double c00 = model.c0();
    const double f2 = ft.coeffs.f(2);
    const double f3 = ft.coeffs.f(3);

    auto pointwise = [&](const std::function<Field(const Field&)>& fn) {
        FieldPath out;
        for (std::size_t i = 0; i < y_path.size(); ++i)
            out.push(y_path.times[i], fn(y_path.frames[i]));
        return out;
    };
    auto integrated = [&](const std::function<Field(const Field&)>& fn) {
        FieldPath out;
        detail::HeatAccumulator acc(grid);
        out.push(y_path.times[0], Field(grid, 0.0)); // zero initial condition
        for (std::size_t i = 1; i < y_path.size(); ++i) {
            acc.push(fn(y_path.frames[i - 1]), y_path.times[i] - y_path.times[i - 1]);
            out.push(y_path.times[i], acc.current());
        }
        return out;
    };

    auto y2 = [&](const Field& y) {
        Field f = phi_field(1, eps, y, ft);
        f *= 1.0 / 3.0;
        return f;
    };
    auto y1 = [&](const Field& y) {
        Field f = phi_field(2, eps, y, ft);
        f *= 1.0 / 6.0;
        return f;
    };
    auto y3 = [&](const Field& y) { return phi_field(0, eps, y, ft); };
    auto y2bar = [&](const Field& y) {
        Field f = wick_power(y, 2, c00);
        f *= f2 / std::sqrt(eps);
        return f;
    };

    auto resonant_minus = [&](const FieldPath& left, const FieldPath& right, double constant,
                              const FieldPath* y_sub = nullptr, double y_coeff = 0.0) {
        auto part = dyadic_partition(grid);
        FieldPath out;
        for (std::size_t i = 0; i < left.size(); ++i) {
            Field f = resonant(left.frames[i], right.frames[i], *part);
            for (std::size_t s = 0; s < f.size(); ++s) {
                f.values[s] -= constant;
                if (y_sub) f.values[s] -= y_coeff * y_sub->frames[i].values[s];
            }
            out.push(left.times[i], std::move(f));
        }
        return out;
    };

    switch (kind.tag) {
        case TreeTag::Y:
            return pointwise([](const Field& y) { return y; });
        case TreeTag::Y2:
            return pointwise(y2);
        case TreeTag::Y2bar:
            return pointwise(y2bar);
        case TreeTag::Y3:
            return pointwise(y3);
        case TreeTag::IY3:
            return integrated(y3);
        case TreeTag::IY2:
            return integrated(y2);
        case TreeTag::IY2bar:
            return integrated(y2bar);
        case TreeTag::res_23:
            return resonant_minus(integrated(y2), pointwise(y2), d.d23);
        case TreeTag::res_23bar:
            return resonant_minus(integrated(y2bar), pointwise(y2), d.d23_bar);
        case TreeTag::res_32:
            return resonant_minus(integrated(y3), pointwise(y1), d.d32);
        case TreeTag::res_33:
            return resonant_minus(integrated(y3), pointwise(y2), d.d33, &y_path, d.dprime);
        case TreeTag::phi_m:
            return pointwise([&](const Field& y) { return phi_field(kind.m, eps, y, ft); });
        case TreeTag::phi_hat_m:
            return pointwise(
                [&](const Field& y) { return chaos_remainder(kind.m, eps, y, ft, f3, model); });
    }
    throw std::logic_error("build_tree: unreachable");
}

/// Monte-Carlo estimate of || Delta_q f(t, x0) ||_{L^p(Omega)} at a fixed
/// site, with a replica-bootstrap standard error. The sampler maps a replica
/// index to a field (deterministically).
struct BlockNormEstimate {
    int q = 0;
    int p = 2;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t replicas = 0;
    double eps = 0.0;
    double time = 0.0;
};

inline BlockNormEstimate block_norm_mc(const std::function<Field(std::size_t)>& sampler,
                                       int q, int p, std::size_t replicas, int workers = 1,
                                       double failure_threshold = 0.05) {
    if (p != 2 && p != 4 && p != 8)
        throw std::domain_error("block_norm_mc: p must be one of {2, 4, 8}");
    if (replicas < 64) throw std::domain_error("block_norm_mc: need at least 64 replicas");
    std::vector<double> vals(replicas, 0.0);
    std::vector<char> ok(replicas, 1);
    parallel_for_index(replicas, workers, [&](std::size_t r) {
        try {
            Field f = sampler(r);
            auto part = dyadic_partition(f.grid);
            SpectralField fh = fft_forward(f);
            const auto& mult = part->block_multiplier(q);
            // Delta_q f at site 0 = (2pi)^{-d} sum_k rho_q(k) fhat(k)
            std::complex<double> acc = 0.0;
            for (std::size_t i = 0; i < fh.modes.size(); ++i) acc += mult[i] * fh.modes[i];
            vals[r] = std::pow(std::abs(acc.real() / f.grid.volume()),
                               static_cast<double>(p));
        } catch (const std::exception&) {
            ok[r] = 0;
        }
    });
    std::vector<double> good;
    good.reserve(replicas);
    for (std::size_t r = 0; r < replicas; ++r)
        if (ok[r]) good.push_back(vals[r]);
    const double failure_rate = 1.0 - double(good.size()) / double(replicas);
    if (failure_rate > failure_threshold)
        throw numerical_error("block_norm_mc: replica failure rate above threshold",
                              failure_rate);
    auto root_mean = [p](const std::vector<double>& xs) {
        double m = 0.0;
        for (double x : xs) m += x;
        m /= xs.size();
        return std::pow(m, 1.0 / p);
    };
    BlockNormEstimate est;
    est.q = q;
    est.p = p;
    est.replicas = good.size();
    est.estimate = root_mean(good);
    est.std_error = bootstrap_se(good, root_mean);
    return est;
}

/// Ensemble realization of the chaos projections for composite trees:
/// (1 - J0) is a cross-replica mean subtraction, (1 - J0 - J1) additionally
/// regresses out the Y component at each site; the fitted coefficient is
/// recorded rather than asserted against d'.
struct EnsembleProjection {
    double mean = 0.0;          // fitted J0 component
    double y_coefficient = 0.0; // fitted J1 coefficient against Y
};

inline EnsembleProjection ensemble_project(std::vector<double>& tree_values,
                                           const std::vector<double>* y_values = nullptr) {
    EnsembleProjection proj;
    const std::size_t n = tree_values.size();
    if (n == 0) return proj;
    double m = 0.0;
    for (double v : tree_values) m += v;
    proj.mean = m / n;
    double my = 0.0;
    if (y_values) {
        for (double v : *y_values) my += v;
        my /= n;
        double cov = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cov += (tree_values[i] - proj.mean) * ((*y_values)[i] - my);
            var += ((*y_values)[i] - my) * ((*y_values)[i] - my);
        }
        proj.y_coefficient = var > 0 ? cov / var : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        tree_values[i] -= proj.mean;
        if (y_values) tree_values[i] -= proj.y_coefficient * ((*y_values)[i] - my);
    }
    return proj;
}

enum class SlopeAbscissa { log2_q_scale, log_eps };

struct SlopeFit {
    SlopeAbscissa abscissa = SlopeAbscissa::log2_q_scale;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points_used = 0;
};

/// Weighted least squares of log(estimate) on the abscissa (q for block
/// scales, log(eps) for epsilon sweeps), weights from the standard errors.
inline SlopeFit decay_slope(const std::vector<BlockNormEstimate>& points,
                            SlopeAbscissa abscissa) {
    if (points.size() < 4) throw std::invalid_argument("decay_slope: need >= 4 points");
    std::vector<double> x, y, w;
    for (const auto& pt : points) {
        if (!(pt.estimate > 0.0))
            throw std::invalid_argument("decay_slope: estimates must be positive");
        x.push_back(abscissa == SlopeAbscissa::log2_q_scale ? double(pt.q)
                                                            : std::log(pt.eps));
        y.push_back(abscissa == SlopeAbscissa::log2_q_scale
                        ? std::log2(pt.estimate)
                        : std::log(pt.estimate));
        const double rel = pt.std_error > 0.0 ? pt.std_error / pt.estimate : 1e-6;
        w.push_back(1.0 / (rel * rel + 1e-12));
    }
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    SlopeFit fit;
    fit.abscissa = abscissa;
    const double det = sw * sxx - sx * sx;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / sw;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / sw;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fitval = fit.slope * x[i] + fit.intercept;
        ss_res += w[i] * (y[i] - fitval) * (y[i] - fitval);
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.points_used = x.size();
    return fit;
}

/// Taylor remainder of the reaction term around eps^{1/2} Y:
/// R(v) = eps^{-3/2} Ft(eps^{1/2}(Y+v))
///      - [eps^{-3/2} Ft + eps^{-1} Ft' v + eps^{-1/2} Ft'' v^2/2 + Ft''' v^3/6]
/// with all derivatives evaluated at eps^{1/2} Y.
inline Field taylor_remainder(double eps, const Field& y, const Field& v,
                              const CenteredNonlinearity& ft) {
    require_same_grid(y, v);
    const double root = std::sqrt(eps);
    Field out(y.grid);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double a = root * y.values[i];
        const double vv = v.values[i];
        const double full = std::pow(eps, -1.5) * ft.d(0, a + root * vv);
        const double taylor = std::pow(eps, -1.5) * ft.d(0, a) +
                              ft.d(1, a) * vv / eps +
                              0.5 * ft.d(2, a) * vv * vv / root +
                              ft.d(3, a) * vv * vv * vv / 6.0;
        out.values[i] = full - taylor;
    }
    return out;
}

/// M_{eps,delta} = eps^{delta/2} || exp(c eps^{1/2}|Y| + c eps^{1/2}|P_t(u0 -
/// Y(0))|) ||_{L^p([0,T] x torus)} on the path's time grid (trapezoid in t).
inline double m_statistic(double eps, double delta, const FieldPath& y_path, const Field& u0,
                          double c, int p) {
    if (p < 2) throw std::domain_error("m_statistic: p must be >= 2");
    if (y_path.size() < 2) throw configuration_error("m_statistic: need >= 2 frames");
    const Grid& g = u0.grid;
    Field v0 = u0;
    v0 -= y_path.frames.front();
    const double root = std::sqrt(eps);
    double acc = 0.0;
    Field prop = v0;
    for (std::size_t i = 0; i < y_path.size(); ++i) {
        if (i > 0)
            prop = apply_semigroup(prop, y_path.times[i] - y_path.times[i - 1], 0.0);
        double space = 0.0;
        for (std::size_t s = 0; s < g.size(); ++s) {
            const double e = std::exp(c * root * std::abs(y_path.frames[i].values[s]) +
                                      c * root * std::abs(prop.values[s]));
            space += std::pow(e, p);
        }
        space *= g.cell_volume();
        const double w = (i == 0 || i + 1 == y_path.size()) ? 0.5 : 1.0;
        acc += w * space * (y_path.times[1] - y_path.times[0]);
    }
    return std::pow(eps, 0.5 * delta) * std::pow(acc, 1.0 / p);
}

} // namespace rdlab

#pragma once

#include <string>

#include "rdlab/covariance.hpp"
#include "rdlab/hermite.hpp"

namespace rdlab {

/// Quadrature controls for the heat-kernel-weighted covariance integrals.
/// Time uses composite Gauss-Legendre on geometric panels starting at
/// s_min_factor * eps^2 (the integrand behaves like 1/s between eps^2 and 1);
/// space uses the substitution r = sqrt(s) rho with Gaussian weight.
struct RenormQuadrature {
    double s_min_factor = 1e-3;
    double s_max = 30.0;
    double s_panel_ratio = 2.0;
    int s_nodes_per_panel = 6;
    int rho_nodes = 48;
    double rho_max = 12.0;
    int mehler_terms = 16;
    bool refine_check = true;
    double refine_rel_tol = 1e-4;

    RenormQuadrature refined() const {
        RenormQuadrature q = *this;
        q.s_panel_ratio = std::sqrt(s_panel_ratio);
        q.rho_nodes = rho_nodes + rho_nodes / 2;
        q.refine_check = false;
        return q;
    }
};

struct IntegrationReport {
    std::string method = "radial-tensor-quadrature";
    int s_nodes = 0;
    int rho_nodes = 0;
    int mehler_terms = 0;
    double residual = 0.0; // relative change under grid refinement
};

/// Tensor quadrature of int_0^inf ds int P_s(x) f(C(s,|x|)) dx against the
/// model's continuum radial covariance. All renormalization constants are
/// computed against one shared table so their algebraic relations hold to
/// roundoff.
class HeatCovarianceQuadrature {
  public:
    HeatCovarianceQuadrature(const CovarianceModel& model, const RenormQuadrature& q)
        : dim_(model.dim()) {
        const double eps2 = model.eps() * model.eps();
        QuadRule srule = geometric_panels(q.s_min_factor * eps2, q.s_max, q.s_panel_ratio,
                                          q.s_nodes_per_panel);
        QuadRule rrule = gauss_legendre(q.rho_nodes, 0.0, q.rho_max);
        s_nodes_ = srule.nodes;
        s_weights_ = srule.weights;
        rho_nodes_ = rrule.nodes;
        rho_weights_.resize(rrule.size());
        const double sd = dim_ == 1 ? 2.0 : (dim_ == 2 ? 2.0 * M_PI : 4.0 * M_PI);
        const double pref = sd * std::pow(4.0 * M_PI, -0.5 * dim_);
        for (std::size_t j = 0; j < rrule.size(); ++j) {
            const double rho = rrule.nodes[j];
            rho_weights_[j] = rrule.weights[j] * pref * std::pow(rho, dim_ - 1) *
                              std::exp(-rho * rho / 4.0);
        }
        cov_.resize(s_nodes_.size());
        for (std::size_t i = 0; i < s_nodes_.size(); ++i) {
            cov_[i].resize(rho_nodes_.size());
            const double s = s_nodes_[i];
            for (std::size_t j = 0; j < rho_nodes_.size(); ++j)
                cov_[i][j] = model.radial_covariance(s, std::sqrt(s) * rho_nodes_[j]);
        }
    }

    /// integral of P_s(x) f(C(s,|x|)) over (0,inf) x R^dim
    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < s_nodes_.size(); ++i) {
            double inner = 0.0;
            for (std::size_t j = 0; j < rho_nodes_.size(); ++j)
                inner += rho_weights_[j] * f(cov_[i][j]);
            acc += s_weights_[i] * inner;
        }
        return acc;
    }

    int s_count() const { return static_cast<int>(s_nodes_.size()); }
    int rho_count() const { return static_cast<int>(rho_nodes_.size()); }

  private:
    int dim_;
    std::vector<double> s_nodes_, s_weights_, rho_nodes_, rho_weights_;
    std::vector<std::vector<double>> cov_;
};

/// Same heat-weighted integral evaluated against the exact lattice covariance
/// of a grid-attached model: time on the graded grid, space summed over the
/// torus lattice with the spectral (torus) heat kernel. This is the evaluator
/// to use when the constants feed a simulation on that same grid.
class LatticeHeatCovarianceQuadrature {
  public:
    LatticeHeatCovarianceQuadrature(const CovarianceModel& model, const RenormQuadrature& q) {
        if (!model.grid())
            throw configuration_error("LatticeHeatCovarianceQuadrature: grid required");
        const Grid g = *model.grid();
        const double eps2 = model.eps() * model.eps();
        QuadRule srule = geometric_panels(q.s_min_factor * eps2, q.s_max, q.s_panel_ratio,
                                          q.s_nodes_per_panel);
        s_weights_ = srule.weights;
        cell_ = g.cell_volume();
        const auto& psi = detail::spatial_multiplier(g, model.eps(), model.tables());
        heat_.resize(srule.size());
        cov_.resize(srule.size());
        SpectralField kernel(g), covhat(g);
        for (std::size_t i = 0; i < srule.size(); ++i) {
            const double s = srule.nodes[i];
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double k2 = g.k_squared(k);
                kernel.modes[k] = std::exp(-s * k2); // torus heat kernel
                const double mu = k2 + 1.0;
                // fft_inverse supplies the (2pi)^{-d}, matching lattice_covariance
                covhat.modes[k] = psi[k] * psi[k] *
                                  detail::time_kernel_g(model.spec().mode, model.eps(),
                                                        model.tables(), mu, s);
            }
            heat_[i] = fft_inverse(kernel).values;
            cov_[i] = fft_inverse(covhat).values;
        }
    }

    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < s_weights_.size(); ++i) {
            double inner = 0.0;
            const auto& heat = heat_[i];
            const auto& cov = cov_[i];
            for (std::size_t x = 0; x < heat.size(); ++x) inner += heat[x] * f(cov[x]);
            acc += s_weights_[i] * inner * cell_;
        }
        return acc;
    }

    int s_count() const { return static_cast<int>(s_weights_.size()); }

  private:
    std::vector<double> s_weights_;
    std::vector<std::vector<double>> heat_, cov_;
    double cell_ = 1.0;
};

struct LEpsResult {
    double value = 0.0;
    IntegrationReport report;
};

/// L_eps = 2 int_{s,x} P_s(x) C(s,x)^2.
inline LEpsResult compute_L_eps(const CovarianceModel& model,
                                const RenormQuadrature& quad = {}) {
    HeatCovarianceQuadrature base(model, quad);
    LEpsResult out;
    out.value = 2.0 * base.integrate([](double c) { return c * c; });
    out.report.s_nodes = base.s_count();
    out.report.rho_nodes = base.rho_count();
    if (quad.refine_check) {
        HeatCovarianceQuadrature fine(model, quad.refined());
        const double v2 = 2.0 * fine.integrate([](double c) { return c * c; });
        out.report.residual = std::abs(v2 - out.value) / std::max(std::abs(v2), 1e-300);
        if (out.report.residual > quad.refine_rel_tol)
            throw numerical_error("compute_L_eps: refinement residual above tolerance",
                                  out.report.residual);
        out.value = v2;
    }
    return out;
}

/// E[g(A) h(B)] for jointly Gaussian (A, B) with Var = sigma2 of the
/// coefficient sets and Cov(A,B) = corr, via the Mehler series
/// sum_n n! a_n b_n corr^n.
inline double mehler_pair_expectation(const ChaosCoefficients& a, const ChaosCoefficients& b,
                                      double corr, int terms = 16,
                                      double* tail_out = nullptr) {
    const double bound = std::sqrt(a.sigma2 * b.sigma2) * (1.0 + 1e-9);
    if (std::abs(corr) > bound)
        throw std::domain_error("mehler_pair_expectation: |corr| exceeds the variances");
    double acc = 0.0, fact = 1.0, power = 1.0, last = 0.0;
    const int top = std::min({terms, a.max_order(), b.max_order()});
    for (int n = 0; n <= top; ++n) {
        if (n > 0) {
            fact *= n;
            power *= corr;
        }
        last = fact * a.f(n) * b.f(n) * power;
        acc += last;
    }
    if (tail_out) *tail_out = std::abs(last);
    if (!std::isfinite(acc))
        throw numerical_error("mehler_pair_expectation: series diverged", std::abs(last));
    return acc;
}

/// The four epsilon-dependent renormalization constants and the derived
/// d' = 2 d32 + 3 d23.
struct DConstants {
    double d23 = 0.0;     // (2,3)-tree
    double d23_bar = 0.0; // barred (2,3)-tree
    double d32 = 0.0;     // (3,2)-tree
    double d33 = 0.0;     // (3,3)-tree
    double dprime = 0.0;
    double eps = 1.0;
    IntegrationReport report;
};

namespace detail {
struct DRaw {
    double i_ff1 = 0.0, i_ff0_2 = 0.0, i_ff0_1 = 0.0, i_c2 = 0.0;
};

template <typename Quadrature>
inline DRaw d_integrals(const Quadrature& hq, const CenteredNonlinearity& ft,
                        double eps, int mehler_terms) {
    ChaosCoefficients g0 = ft.tilde_derivative_coeffs(0);
    ChaosCoefficients g1 = ft.tilde_derivative_coeffs(1);
    ChaosCoefficients g2 = ft.tilde_derivative_coeffs(2);
    DRaw r;
    r.i_ff1 = hq.integrate(
        [&](double c) { return mehler_pair_expectation(g1, g1, eps * c, mehler_terms); });
    r.i_ff0_2 = hq.integrate(
        [&](double c) { return mehler_pair_expectation(g0, g2, eps * c, mehler_terms); });
    r.i_ff0_1 = hq.integrate(
        [&](double c) { return mehler_pair_expectation(g0, g1, eps * c, mehler_terms); });
    r.i_c2 = hq.integrate([](double c) { return c * c; });
    return r;
}
} // namespace detail

/// d23  = eps^{-2}/9 int P E[Ftilde'(A) Ftilde'(B)]
/// d23b = 2 eps^{-1/2} f3 f2 int P C^2
/// d32  = eps^{-2}/6 int P E[Ftilde(A) Ftilde''(B)]
/// d33  = eps^{-5/2}/3 int P E[Ftilde(A) Ftilde'(B)]
/// with (A,B) the Gaussian pair at covariance eps C(s,x).
namespace detail {
inline DConstants assemble_d_constants(const DRaw& r, const CenteredNonlinearity& ft,
                                       double eps) {
    DConstants d;
    d.eps = eps;
    d.d23 = std::pow(eps, -2.0) / 9.0 * r.i_ff1;
    d.d23_bar = 2.0 * std::pow(eps, -0.5) * ft.coeffs.f(3) * ft.coeffs.f(2) * r.i_c2;
    d.d32 = std::pow(eps, -2.0) / 6.0 * r.i_ff0_2;
    d.d33 = std::pow(eps, -2.5) / 3.0 * r.i_ff0_1;
    d.dprime = 2.0 * d.d32 + 3.0 * d.d23;
    return d;
}
} // namespace detail

inline DConstants compute_d_constants(const CenteredNonlinearity& ft,
                                      const CovarianceModel& model,
                                      const RenormQuadrature& quad = {}) {
    const double eps = model.eps();
    HeatCovarianceQuadrature base(model, quad);
    detail::DRaw raw = detail::d_integrals(base, ft, eps, quad.mehler_terms);
    auto assemble = [&](const detail::DRaw& r) {
        return detail::assemble_d_constants(r, ft, eps);
    };
    DConstants d = assemble(raw);
    d.report.s_nodes = base.s_count();
    d.report.rho_nodes = base.rho_count();
    d.report.mehler_terms = quad.mehler_terms;
    if (quad.refine_check) {
        HeatCovarianceQuadrature fine(model, quad.refined());
        DConstants d2 = assemble(detail::d_integrals(fine, ft, eps, quad.mehler_terms));
        double res = 0.0;
        auto rel = [](double a, double b) {
            return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-9});
        };
        res = std::max({rel(d.d23, d2.d23), rel(d.d23_bar, d2.d23_bar),
                        rel(d.d32, d2.d32), rel(d.d33, d2.d33)});
        if (res > quad.refine_rel_tol)
            throw numerical_error("compute_d_constants: refinement residual above tolerance",
                                  res);
        d2.report = d.report;
        d2.report.residual = res;
        return d2;
    }
    return d;
}

/// d constants against the lattice covariance of a grid-attached model; the
/// choice for constants that feed a simulation on that grid.
inline DConstants compute_d_constants_lattice(const CenteredNonlinearity& ft,
                                              const CovarianceModel& model,
                                              const RenormQuadrature& quad = {}) {
    LatticeHeatCovarianceQuadrature hq(model, quad);
    DConstants d = detail::assemble_d_constants(
        detail::d_integrals(hq, ft, model.eps(), quad.mehler_terms), ft, model.eps());
    d.report.method = "lattice-tensor-quadrature";
    d.report.s_nodes = hq.s_count();
    d.report.mehler_terms = quad.mehler_terms;
    return d;
}

/// L_eps against the lattice covariance of a grid-attached model.
inline double compute_L_eps_lattice(const CovarianceModel& model,
                                    const RenormQuadrature& quad = {}) {
    LatticeHeatCovarianceQuadrature hq(model, quad);
    return 2.0 * hq.integrate([](double c) { return c * c; });
}

struct LambdaVector {
    std::array<double, 4> lambda{0.0, 0.0, 0.0, 0.0};
    double eps = 1.0;
    double operator[](int i) const { return lambda[static_cast<std::size_t>(i)]; }
};

inline LambdaVector compute_lambda(const ChaosCoefficients& coeffs, const DConstants& d,
                                   double eps) {
    LambdaVector v;
    v.eps = eps;
    v.lambda[3] = coeffs.f(3);
    v.lambda[2] = std::pow(eps, -0.5) * coeffs.f(2);
    v.lambda[1] = coeffs.f(1) / eps - 9.0 * d.d23 - 6.0 * d.d32;
    v.lambda[0] = std::pow(eps, -1.5) * coeffs.f(0) -
                  std::pow(eps, -0.5) * coeffs.f(2) * d.d32 - 3.0 * d.d33 - 3.0 * d.d23_bar;
    return v;
}

struct CubicCounterterms {
    double mass = 0.0;     // decay-rate coefficient of u (RHS carries -mass*u)
    double constant = 0.0; // additive constant on the RHS
};

/// Counterterms of the renormalized cubic equation
///   Lu = -l3 u^3 - l2 u^2 - mass*u + constant + eta.
/// mass = l1 - 3 l3 sigma2/eps + 9 l3^2 L; constant = -l0 + l2 sigma2/eps
/// - 3 l3 l2 L (the sigma2/eps = C(0,0) term is the Wick correction of u^2).
inline CubicCounterterms cubic_counterterms(const LambdaVector& lambda, double sigma2,
                                            double L) {
    CubicCounterterms c;
    const double eps = lambda.eps;
    c.mass = lambda[1] - 3.0 * lambda[3] * sigma2 / eps + 9.0 * lambda[3] * lambda[3] * L;
    c.constant = -lambda[0] + lambda[2] * sigma2 / eps - 3.0 * lambda[3] * lambda[2] * L;
    return c;
}

/// The cubic family realizing a target lambda:
/// F = l3 H3 + eps^{1/2} l2 H2 + eps (l1 + 9 l3^2 L) H1 + eps^{3/2}(l0 + 3 l3 l2 L).
inline NonlinearitySpec cubic_family(const std::array<double, 4>& lambda, double sigma2,
                                     double L, double eps) {
    const double gamma1 = 9.0 * lambda[3] * lambda[3] * L;
    const double gamma0 = 3.0 * lambda[3] * lambda[2] * L;
    return hermite_series_nonlinearity(
        {std::pow(eps, 1.5) * (lambda[0] + gamma0), eps * (lambda[1] + gamma1),
         std::sqrt(eps) * lambda[2], lambda[3]},
        sigma2);
}

/// Everything the integrator and the reports need for one epsilon.
struct RenormReport {
    double eps = 1.0;
    double sigma2 = 0.0;
    double L_eps = 0.0;
    DConstants d;
    LambdaVector lambda;
    double counterterm_mass = 0.0;
    double counterterm_const = 0.0;
};

inline RenormReport make_renorm_report(const CenteredNonlinearity& ft,
                                       const CovarianceModel& model,
                                       const RenormQuadrature& quad = {}) {
    RenormReport r;
    r.eps = model.eps();
    r.sigma2 = sigma_eps_squared(model);
    r.L_eps = compute_L_eps(model, quad).value;
    r.d = compute_d_constants(ft, model, quad);
    r.lambda = compute_lambda(ft.coeffs, r.d, r.eps);
    CubicCounterterms c = cubic_counterterms(r.lambda, r.sigma2, r.L_eps);
    r.counterterm_mass = c.mass;
    r.counterterm_const = c.constant;
    return r;
}

} // namespace rdlab

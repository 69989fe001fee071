#pragma once

// Test-side oracles, independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "rdlab/grid.hpp"
#include "rdlab/quadrature.hpp"

namespace oracles {

/// Direct O(N^2) periodic convolution in real space (1D only).
inline rdlab::Field direct_convolve_1d(const rdlab::Field& f, const rdlab::Field& g) {
    const int n = f.grid.n;
    const double h = f.grid.h();
    rdlab::Field out(f.grid);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += f.values[j] * g.values[(i - j + n) % n];
        out.values[i] = s * h;
    }
    return out;
}

/// Whole-space heat kernel (4 pi t)^{-d/2} e^{-|x|^2/(4t)}.
inline double heat_kernel(int dim, double t, double r2) {
    return std::pow(4.0 * M_PI * t, -0.5 * dim) * std::exp(-r2 / (4.0 * t));
}

/// E[g(A) h(B)] for jointly Gaussian (A,B), Var A = Var B = sigma2,
/// Cov(A,B) = c, via 2D tensor Gauss-Hermite quadrature. Independent of the
/// Mehler-series evaluator it cross-checks.
inline double pair_expectation_gh2d(const std::function<double(double)>& g,
                                    const std::function<double(double)>& h,
                                    double sigma2, double c, int order = 80) {
    const double sigma = std::sqrt(sigma2);
    double rho = c / sigma2;
    rho = std::max(-1.0, std::min(1.0, rho));
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    rdlab::QuadRule gh = rdlab::gauss_hermite(order);
    const double scale = std::sqrt(2.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) {
        const double x = scale * gh.nodes[i];
        const double gi = g(sigma * x);
        double inner = 0.0;
        for (std::size_t j = 0; j < gh.size(); ++j) {
            const double y = scale * gh.nodes[j];
            inner += gh.weights[j] * h(sigma * (rho * x + s * y));
        }
        acc += gh.weights[i] * gi * inner;
    }
    return acc / M_PI;
}

/// Central finite difference.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Chebyshev interpolant of c -> pair_expectation_gh2d(g, h, sigma2, c) on
/// [-sigma2, sigma2]; makes the 2D-quadrature oracle affordable inside
/// integral sweeps while staying independent of the Mehler series.
class PairExpectationGh2d {
  public:
    PairExpectationGh2d(std::function<double(double)> g, std::function<double(double)> h,
                        double sigma2, int nodes = 48, int gh_order = 64)
        : sigma2_(sigma2), vals_(nodes) {
        nodes_.resize(nodes);
        for (int j = 0; j < nodes; ++j) {
            nodes_[j] = std::cos(M_PI * (j + 0.5) / nodes); // in (-1, 1)
            vals_[j] = pair_expectation_gh2d(g, h, sigma2, sigma2 * nodes_[j], gh_order);
        }
    }

    double operator()(double c) const {
        const double x = std::max(-1.0, std::min(1.0, c / sigma2_));
        // barycentric form for Chebyshev points of the first kind
        double num = 0.0, den = 0.0;
        const int n = static_cast<int>(nodes_.size());
        for (int j = 0; j < n; ++j) {
            const double diff = x - nodes_[j];
            if (std::abs(diff) < 1e-14) return vals_[j];
            const double w = (j % 2 == 0 ? 1.0 : -1.0) *
                             std::sin(M_PI * (j + 0.5) / n);
            num += w / diff * vals_[j];
            den += w / diff;
        }
        return num / den;
    }

  private:
    double sigma2_;
    std::vector<double> nodes_, vals_;
};

/// Plain least squares of y on x; returns (slope, intercept, r2).
struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double fit = f.slope * x[i] + f.intercept;
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

} // namespace oracles

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rdlab {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1,1] (Newton on the three-term recurrence).
inline QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1");
    QuadRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

/// Cached Gauss-Legendre base rule (rules are immutable once built).
inline const QuadRule& cached_gauss_legendre(int n) {
    thread_local std::vector<QuadRule> cache(1025);
    if (n < 1 || n > 1024) throw std::invalid_argument("cached_gauss_legendre: n in 1..1024");
    QuadRule& r = cache[static_cast<std::size_t>(n)];
    if (r.nodes.empty()) r = gauss_legendre(n);
    return r;
}

/// Gauss-Legendre mapped to [a,b].
inline QuadRule gauss_legendre(int n, double a, double b) {
    const QuadRule& base = cached_gauss_legendre(n);
    QuadRule r;
    r.nodes.resize(base.size());
    r.weights.resize(base.size());
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < base.size(); ++i) {
        r.nodes[i] = mid + half * base.nodes[i];
        r.weights[i] = half * base.weights[i];
    }
    return r;
}

/// Composite rule on geometric panels [a, a r), [a r, a r^2), ..., up to b.
inline QuadRule geometric_panels(double a, double b, double ratio, int nodes_per_panel) {
    if (!(a > 0.0) || !(b > a) || !(ratio > 1.0))
        throw std::invalid_argument("geometric_panels: need 0 < a < b, ratio > 1");
    QuadRule r;
    double lo = a;
    while (lo < b) {
        double hi = std::min(lo * ratio, b);
        QuadRule p = gauss_legendre(nodes_per_panel, lo, hi);
        r.nodes.insert(r.nodes.end(), p.nodes.begin(), p.nodes.end());
        r.weights.insert(r.weights.end(), p.weights.begin(), p.weights.end());
        lo = hi;
    }
    return r;
}

namespace detail {

/// Eigenvalues + first eigenvector components of a symmetric tridiagonal
/// matrix (implicit QL with Wilkinson shifts, the classical tql2 routine).
/// d = diagonal (overwritten with eigenvalues), e = off-diagonal (e[0..n-2]),
/// z = first components of the normalized eigenvectors.
inline void tql2_first_components(std::vector<double>& d, std::vector<double>& e,
                                  std::vector<double>& z) {
    const int n = static_cast<int>(d.size());
    e.resize(n, 0.0);
    z.assign(n, 0.0);
    if (n == 0) return;
    z[0] = 1.0;
    // full first-row eigenvector tracking needs the rotation applied to a row
    // vector; we carry the whole row.
    std::vector<double> row(n, 0.0);
    row[0] = 1.0;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 1e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) throw std::runtime_error("tql2: too many iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    double ri = row[i], ri1 = row[i + 1];
                    row[i + 1] = s * ri + c * ri1;
                    row[i] = c * ri - s * ri1;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    z = row;
    // sort ascending, carrying first components
    for (int i = 0; i < n - 1; ++i) {
        int k = i;
        for (int j = i + 1; j < n; ++j)
            if (d[j] < d[k]) k = j;
        if (k != i) {
            std::swap(d[i], d[k]);
            std::swap(z[i], z[k]);
        }
    }
}

} // namespace detail

/// Gauss-Hermite rule for weight e^{-t^2} on the real line (Golub-Welsch).
inline QuadRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1");
    std::vector<double> d(n, 0.0), e(n, 0.0), z;
    for (int j = 1; j < n; ++j) e[j - 1] = std::sqrt(j / 2.0);
    detail::tql2_first_components(d, e, z);
    QuadRule r;
    r.nodes = d;
    r.weights.resize(n);
    const double mu0 = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) r.weights[i] = mu0 * z[i] * z[i];
    return r;
}

/// E[g(sigma G)] for standard Gaussian G via Gauss-Hermite.
template <typename F>
double gauss_expectation(const QuadRule& gh, double sigma, F&& g) {
    const double s2 = std::sqrt(2.0) * sigma;
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) acc += gh.weights[i] * g(s2 * gh.nodes[i]);
    return acc / std::sqrt(M_PI);
}

} // namespace rdlab

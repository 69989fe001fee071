#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdlab/quadrature.hpp"

namespace rdlab {

/// A numerical routine failed to meet its tolerance; carries the residual.
struct numerical_error : std::runtime_error {
    double residual;
    explicit numerical_error(const std::string& what, double res)
        : std::runtime_error(what + " (residual " + std::to_string(res) + ")"),
          residual(res) {}
};

/// Hermite polynomial with variance parameter: H_0 = 1, H_1 = x,
/// H_{n+1} = x H_n - n sigma2 H_{n-1}. Leading coefficient 1; orthogonal under
/// N(0, sigma2) with E[H_m H_n] = delta_{mn} n! sigma2^n.
inline double hermite(int n, double x, double sigma2) {
    if (n < 0) throw std::domain_error("hermite: n must be >= 0");
    if (n > 20) throw std::range_error("hermite: n > 20 exceeds the documented range");
    if (!(sigma2 > 0.0)) throw std::domain_error("hermite: sigma2 must be > 0");
    double hm = 1.0, h = x;
    if (n == 0) return hm;
    for (int k = 1; k < n; ++k) {
        double hp = x * h - k * sigma2 * hm;
        hm = h;
        h = hp;
    }
    return h;
}

/// A reaction function with evaluators for derivatives 0..9 and exponential
/// growth constants: |F^{(k)}(x)| <= C e^{c|x|}.
struct NonlinearitySpec {
    std::array<std::function<double(double)>, 10> deriv;
    double growth_c = 1.0;
    double growth_C = 10.0;

    NonlinearitySpec() {
        for (auto& d : deriv) d = [](double) { return 0.0; };
    }

    double operator()(double x) const { return deriv[0](x); }
    double d(int k, double x) const {
        if (k < 0 || k > 9) throw std::domain_error("NonlinearitySpec: derivative order 0..9");
        return deriv[k](x);
    }

    /// spot-check the growth bound on a sample grid
    void validate_growth() const {
        for (int k = 0; k <= 9; ++k)
            for (double x = -6.0; x <= 6.0; x += 0.5)
                if (std::abs(deriv[k](x)) > growth_C * std::exp(growth_c * std::abs(x)))
                    throw std::invalid_argument(
                        "NonlinearitySpec: growth bound violated at derivative " +
                        std::to_string(k) + ", x = " + std::to_string(x));
    }
};

/// F = sum_n coeffs[n] H_n(x, sigma2); derivatives via d/dx H_n = n H_{n-1}.
inline NonlinearitySpec hermite_series_nonlinearity(std::vector<double> coeffs,
                                                    double sigma2) {
    if (coeffs.size() > 11)
        throw std::invalid_argument("hermite_series_nonlinearity: degree too high");
    NonlinearitySpec f;
    double scale = 0.0;
    for (double c : coeffs) scale += std::abs(c);
    f.growth_C = 1e6 * std::max(1.0, scale);
    for (int k = 0; k <= 9; ++k) {
        f.deriv[k] = [coeffs, sigma2, k](double x) {
            double acc = 0.0;
            for (std::size_t n = k; n < coeffs.size(); ++n) {
                double fall = 1.0;
                for (int j = 0; j < k; ++j) fall *= double(n - j);
                acc += coeffs[n] * fall * hermite(static_cast<int>(n - k), x, sigma2);
            }
            return acc;
        };
    }
    return f;
}

/// amplitude * sin(freq x + phase)
inline NonlinearitySpec sine_nonlinearity(double amplitude, double freq = 1.0,
                                          double phase = 0.0) {
    NonlinearitySpec f;
    f.growth_C = std::abs(amplitude) * std::pow(std::abs(freq), 9) + 1.0;
    for (int k = 0; k <= 9; ++k) {
        f.deriv[k] = [amplitude, freq, phase, k](double x) {
            const double p = std::pow(freq, k);
            switch (k % 4) {
                case 0: return amplitude * p * std::sin(freq * x + phase);
                case 1: return amplitude * p * std::cos(freq * x + phase);
                case 2: return -amplitude * p * std::sin(freq * x + phase);
                default: return -amplitude * p * std::cos(freq * x + phase);
            }
        };
    }
    return f;
}

inline NonlinearitySpec operator+(const NonlinearitySpec& a, const NonlinearitySpec& b) {
    NonlinearitySpec f;
    f.growth_c = std::max(a.growth_c, b.growth_c);
    f.growth_C = a.growth_C + b.growth_C;
    for (int k = 0; k <= 9; ++k) {
        auto da = a.deriv[k];
        auto db = b.deriv[k];
        f.deriv[k] = [da, db](double x) { return da(x) + db(x); };
    }
    return f;
}

inline NonlinearitySpec operator*(double s, const NonlinearitySpec& a) {
    NonlinearitySpec f;
    f.growth_c = a.growth_c;
    f.growth_C = std::abs(s) * a.growth_C;
    for (int k = 0; k <= 9; ++k) {
        auto da = a.deriv[k];
        f.deriv[k] = [s, da](double x) { return s * da(x); };
    }
    return f;
}

/// Hermite coefficients of F at variance sigma2:
/// f_n = E[F(sigma G) H_n(sigma G, sigma2)] / (n! sigma2^n).
struct ChaosCoefficients {
    double sigma2 = 1.0;
    std::vector<double> coeffs; // f_0 .. f_N
    int quadrature_order = 0;
    double residual = 0.0; // difference between the order and 2x-order runs

    double f(int n) const {
        return n < static_cast<int>(coeffs.size()) ? coeffs[static_cast<std::size_t>(n)]
                                                   : 0.0;
    }
    int max_order() const { return static_cast<int>(coeffs.size()) - 1; }

    /// reconstruction sum_{n<=N} f_n H_n(x, sigma2)
    double reconstruct(double x) const {
        double acc = 0.0;
        for (int n = 0; n <= max_order(); ++n) acc += coeffs[n] * hermite(n, x, sigma2);
        return acc;
    }

    /// coefficients of the m-th derivative: g_n = (n+m)!/n! f_{n+m}
    ChaosCoefficients derivative(int m) const {
        ChaosCoefficients g;
        g.sigma2 = sigma2;
        g.quadrature_order = quadrature_order;
        g.residual = residual;
        const int top = max_order() - m;
        for (int n = 0; n <= std::max(top, -1); ++n) {
            double fall = 1.0;
            for (int j = 0; j < m; ++j) fall *= double(n + m - j);
            g.coeffs.push_back(fall * f(n + m));
        }
        if (g.coeffs.empty()) g.coeffs.push_back(0.0);
        return g;
    }
};

namespace detail {
inline std::vector<double> chaos_by_quadrature(const std::function<double(double)>& F,
                                               double sigma2, int N, int order) {
    QuadRule gh = gauss_hermite(order);
    const double sigma = std::sqrt(sigma2);
    std::vector<double> out(N + 1, 0.0);
    double fact = 1.0;
    for (int n = 0; n <= N; ++n) {
        if (n > 0) fact *= n;
        const double num = gauss_expectation(
            gh, sigma, [&](double y) { return F(y) * hermite(n, y, sigma2); });
        out[n] = num / (fact * std::pow(sigma2, n));
    }
    return out;
}
} // namespace detail

/// Chaos coefficients by Gauss-Hermite quadrature (order doubled for the
/// convergence check; failure to converge raises numerical_error with the
/// residual attached).
inline ChaosCoefficients chaos_coefficients(const NonlinearitySpec& F, double sigma2, int N,
                                            int order = 200, double tol = 1e-7) {
    if (N > 20) throw std::range_error("chaos_coefficients: N > 20");
    if (!(sigma2 > 0.0)) throw std::domain_error("chaos_coefficients: sigma2 must be > 0");
    ChaosCoefficients out;
    out.sigma2 = sigma2;
    out.quadrature_order = order;
    out.coeffs = detail::chaos_by_quadrature(F.deriv[0], sigma2, N, order);
    std::vector<double> check = detail::chaos_by_quadrature(F.deriv[0], sigma2, N, 2 * order);
    double res = 0.0;
    for (int n = 0; n <= N; ++n) res = std::max(res, std::abs(out.coeffs[n] - check[n]));
    out.residual = res;
    if (res > tol)
        throw numerical_error("chaos_coefficients: quadrature did not converge", res);
    out.coeffs = std::move(check); // keep the finer run
    return out;
}

/// F centered up to the second chaos: Ftilde = F - f0 - f1 x - f2 H2.
/// Derivatives adjust accordingly; orders >= 3 are untouched.
struct CenteredNonlinearity {
    NonlinearitySpec base;
    ChaosCoefficients coeffs; // of the *uncentered* F

    double sigma2() const { return coeffs.sigma2; }

    /// Hermite coefficients of Ftilde (orders 0..2 vanish)
    double f_tilde(int n) const { return n <= 2 ? 0.0 : coeffs.f(n); }

    double d(int k, double x) const {
        const double f0 = coeffs.f(0), f1 = coeffs.f(1), f2 = coeffs.f(2);
        const double s2 = coeffs.sigma2;
        switch (k) {
            case 0:
                return base.d(0, x) - f0 - f1 * x - f2 * hermite(2, x, s2);
            case 1:
                return base.d(1, x) - f1 - 2.0 * f2 * x;
            case 2:
                return base.d(2, x) - 2.0 * f2;
            default:
                return base.d(k, x);
        }
    }
    double operator()(double x) const { return d(0, x); }

    /// chaos coefficients of Ftilde^{(m)}, from the series
    ChaosCoefficients tilde_derivative_coeffs(int m) const {
        ChaosCoefficients t = coeffs;
        for (int n = 0; n <= std::min(2, t.max_order()); ++n) t.coeffs[n] = 0.0;
        return t.derivative(m);
    }
};

inline CenteredNonlinearity center_nonlinearity(const NonlinearitySpec& F,
                                                const ChaosCoefficients& coeffs) {
    return CenteredNonlinearity{F, coeffs};
}

} // namespace rdlab

#pragma once

#include "rdlab/grid.hpp"
#include "rdlab/hermite.hpp"

namespace rdlab {

/// Wick power of a Gaussian field: [[Y^n]] = H_n(Y, variance) pointwise,
/// variance = one-point variance of Y (caller supplied). n <= 4.
inline Field wick_power(const Field& y, int n, double variance) {
    if (n < 0 || n > 4) throw std::range_error("wick_power: n must be in 0..4");
    if (!(variance > 0.0)) throw std::domain_error("wick_power: variance must be > 0");
    Field out(y.grid);
    for (std::size_t i = 0; i < y.size(); ++i)
        out.values[i] = hermite(n, y.values[i], variance);
    return out;
}

/// Phi^[m] = eps^{(m-3)/2} Ftilde^{(m)}(eps^{1/2} Y) pointwise.
inline Field phi_field(int m, double eps, const Field& y, const CenteredNonlinearity& ft) {
    if (m < 0 || m > 9) throw std::domain_error("phi_field: m must be in 0..9");
    const double pre = std::pow(eps, 0.5 * (m - 3));
    const double root = std::sqrt(eps);
    Field out(y.grid);
    for (std::size_t i = 0; i < y.size(); ++i)
        out.values[i] = pre * ft.d(m, root * y.values[i]);
    return out;
}

/// One term of the Skorohod product formula: contraction indices (q, r, i)
/// with combinatorial count C(m,q) C(n,r) C(q,i) C(r,i) i!.
struct ContractionTerm {
    int q = 0, r = 0, i = 0;
    long long count = 1;
};

namespace detail {
inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}
inline long long factorial(int n) {
    long long r = 1;
    for (int j = 2; j <= n; ++j) r *= j;
    return r;
}
} // namespace detail

/// Enumerates I_{m,n} = {(q,r,i): 0<=q<=m, 0<=r<=n, 0<=i<=min(q,r)} with the
/// multiplication-formula counts.
inline std::vector<ContractionTerm> product_formula_terms(int m, int n) {
    if (m < 0 || n < 0 || m > 8 || n > 8)
        throw std::domain_error("product_formula_terms: m, n must be in 0..8");
    std::vector<ContractionTerm> out;
    for (int q = 0; q <= m; ++q)
        for (int r = 0; r <= n; ++r)
            for (int i = 0; i <= std::min(q, r); ++i) {
                ContractionTerm t;
                t.q = q;
                t.r = r;
                t.i = i;
                t.count = detail::binomial(m, q) * detail::binomial(n, r) *
                          detail::binomial(q, i) * detail::binomial(r, i) *
                          detail::factorial(i);
                out.push_back(t);
            }
    return out;
}

/// E[[[Y^m]](z1) [[Y^n]](z2)] = m! cov^m if m == n, else 0, where cov is the
/// covariance of the two Gaussian evaluations.
inline double expected_wick_pair(int m, int n, double cov) {
    if (m < 0 || n < 0 || m > 4 || n > 4)
        throw std::domain_error("expected_wick_pair: orders must be in 0..4");
    if (m != n) return 0.0;
    return detail::factorial(m) * std::pow(cov, m);
}

} // namespace rdlab

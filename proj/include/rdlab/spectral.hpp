#pragma once

#include <functional>

#include "rdlab/fft.hpp"
#include "rdlab/grid.hpp"

namespace rdlab {

/// Forward transform, fhat(k) = h^dim sum_x f(x) e^{-ik.x}.
/// With this normalization a constant field c has fhat(0) = c (2pi)^dim and
/// white-noise fields have a flat spectral variance.
inline SpectralField fft_forward(const Field& f) {
    SpectralField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out.modes[i] = f.values[i];
    detail::fft_nd(out.modes, f.grid.dim, f.grid.n, false);
    const double scale = f.grid.cell_volume();
    for (auto& m : out.modes) m *= scale;
    return out;
}

/// Inverse transform, f(x) = (2pi)^{-dim} sum_k fhat(k) e^{ik.x}.
/// fft_inverse(fft_forward(f)) == f up to roundoff.
inline Field fft_inverse(const SpectralField& g) {
    std::vector<std::complex<double>> buf = g.modes;
    detail::fft_nd(buf, g.grid.dim, g.grid.n, true);
    const double scale = 1.0 / g.grid.volume();
    Field out(g.grid);
    for (std::size_t i = 0; i < buf.size(); ++i) out.values[i] = buf[i].real() * scale;
    return out;
}

/// Plancherel sums: sum_x |f|^2 h^dim == (2pi)^{-dim} sum_k |fhat|^2.
inline double l2_squared_real(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return s * f.grid.cell_volume();
}
inline double l2_squared_spectral(const SpectralField& g) {
    double s = 0.0;
    for (const auto& m : g.modes) s += std::norm(m);
    return s / g.grid.volume();
}

/// Apply a real Fourier multiplier m(k): field -> IFFT(m(k) fhat(k)).
inline Field apply_multiplier(const Field& f,
                              const std::function<double(double /*k2*/)>& m) {
    SpectralField g = fft_forward(f);
    for (std::size_t i = 0; i < g.modes.size(); ++i)
        g.modes[i] *= m(f.grid.k_squared(i));
    return fft_inverse(g);
}

/// Heat semigroup with mass: every mode multiplied by exp(-t(|k|^2 + mass)).
inline Field apply_semigroup(const Field& f, double t, double mass) {
    if (t < 0.0) throw std::domain_error("apply_semigroup: t must be >= 0");
    if (t == 0.0 && mass == 0.0) return f;
    return apply_multiplier(f, [t, mass](double k2) { return std::exp(-t * (k2 + mass)); });
}

/// Periodic convolution (f*g)(x) = h^dim sum_y f(y) g(x-y); spectrally the
/// product of the two transforms. Convolving with the discrete delta
/// (mass 1/h^dim at the origin) returns g.
inline Field periodic_convolve(const Field& f, const Field& g) {
    require_same_grid(f, g);
    SpectralField a = fft_forward(f);
    SpectralField b = fft_forward(g);
    for (std::size_t i = 0; i < a.modes.size(); ++i) a.modes[i] *= b.modes[i];
    return fft_inverse(a);
}

/// Lattice pairing <f, phi> = h^dim sum_x f(x) phi(x).
inline double pair_with_test_function(const Field& f, const Field& phi) {
    require_same_grid(f, phi);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.values[i] * phi.values[i];
    return s * f.grid.cell_volume();
}

/// Spectral inner product (2pi)^{-dim} sum_k fhat conj(phihat); equals the
/// lattice pairing for real fields.
inline double spectral_pairing(const SpectralField& f, const SpectralField& phi) {
    if (!(f.grid == phi.grid)) throw std::invalid_argument("grid mismatch");
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < f.modes.size(); ++i)
        s += f.modes[i] * std::conj(phi.modes[i]);
    return s.real() / f.grid.volume();
}

/// max_k |modes(-k) - conj(modes(k))|, zero for transforms of real fields
inline double hermitian_defect(const SpectralField& g) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.modes.size(); ++i) {
        auto c = g.grid.coords(i);
        std::array<int, 3> neg{0, 0, 0};
        for (int d = 0; d < g.grid.dim; ++d) neg[d] = (g.grid.n - c[d]) % g.grid.n;
        std::size_t j = g.grid.index(neg);
        worst = std::max(worst, std::abs(g.modes[j] - std::conj(g.modes[i])));
    }
    return worst;
}

} // namespace rdlab

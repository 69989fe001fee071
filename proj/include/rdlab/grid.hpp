#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rdlab {

/// Periodic lattice on [0,2pi)^dim with a power-of-two number of points per
/// axis. The domain length is fixed to 2pi; resolution is the only tunable.
struct Grid {
    int dim = 3;
    int n = 32; // points per axis, power of two, >= 8

    Grid() = default;
    Grid(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim < 1 || dim > 3)
            throw std::invalid_argument("Grid: dim must be 1, 2 or 3");
        if (n < 8 || (n & (n - 1)) != 0)
            throw std::invalid_argument("Grid: points_per_axis must be a power of two >= 8");
    }

    double length() const { return 2.0 * M_PI; }
    double h() const { return 2.0 * M_PI / n; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
        return s;
    }
    double cell_volume() const { return std::pow(h(), dim); }
    double volume() const { return std::pow(length(), dim); }

    // lexicographic site index <-> integer coordinates (axis 0 slowest)
    std::size_t index(const std::array<int, 3>& c) const {
        std::size_t idx = 0;
        for (int d = 0; d < dim; ++d)
            idx = idx * n + static_cast<std::size_t>((c[d] % n + n) % n);
        return idx;
    }
    std::array<int, 3> coords(std::size_t idx) const {
        std::array<int, 3> c{0, 0, 0};
        for (int d = dim - 1; d >= 0; --d) {
            c[d] = static_cast<int>(idx % n);
            idx /= n;
        }
        return c;
    }
    std::array<double, 3> site(std::size_t idx) const {
        auto c = coords(idx);
        return {c[0] * h(), c[1] * h(), c[2] * h()};
    }

    /// signed wavevector component for DFT bin j
    int wavenumber(int j) const { return j < n / 2 ? j : j - n; }
    std::array<int, 3> wavevector(std::size_t idx) const {
        auto c = coords(idx);
        return {wavenumber(c[0]), dim > 1 ? wavenumber(c[1]) : 0,
                dim > 2 ? wavenumber(c[2]) : 0};
    }
    double k_squared(std::size_t idx) const {
        auto k = wavevector(idx);
        return double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
    }

    bool operator==(const Grid& o) const { return dim == o.dim && n == o.n; }
};

/// Real scalar lattice field.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Complex Fourier coefficients, stored in DFT bin order.
/// Convention: modes(k) = h^dim * sum_x f(x) e^{-i k.x}, the trapezoid
/// approximation of the torus Fourier integral. A real field satisfies
/// modes(-k) = conj(modes(k)).
struct SpectralField {
    Grid grid;
    std::vector<std::complex<double>> modes;

    SpectralField() = default;
    explicit SpectralField(const Grid& g) : grid(g), modes(g.size()) {}
};

/// Time trajectory of fields on a common grid.
struct FieldPath {
    std::vector<double> times;
    std::vector<Field> frames;

    void push(double t, Field f) {
        if (!times.empty() && t <= times.back())
            throw std::invalid_argument("FieldPath: times must be strictly increasing");
        if (!frames.empty() && !(f.grid == frames.front().grid))
            throw std::invalid_argument("FieldPath: frames must share one grid");
        times.push_back(t);
        frames.push_back(std::move(f));
    }
    std::size_t size() const { return times.size(); }
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("grid mismatch");
}

// small arithmetic helpers; fields are value types
inline Field& operator+=(Field& a, const Field& b) {
    require_same_grid(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a.values[i] += b.values[i];
    return a;
}
inline Field& operator-=(Field& a, const Field& b) {
    require_same_grid(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a.values[i] -= b.values[i];
    return a;
}
inline Field& operator*=(Field& a, double s) {
    for (auto& v : a.values) v *= s;
    return a;
}
inline Field operator+(Field a, const Field& b) { a += b; return a; }
inline Field operator-(Field a, const Field& b) { a -= b; return a; }
inline Field operator*(double s, Field a) { a *= s; return a; }

inline double linf_norm(const Field& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) return linf_norm(f);
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline bool all_finite(const Field& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace rdlab

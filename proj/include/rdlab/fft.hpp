#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

namespace rdlab::detail {

/// Precomputed twiddles + bit-reversal for a radix-2 length. Immutable after
/// construction, so plans can be shared read-only between threads.
struct FftPlan {
    int n = 0;
    std::vector<std::size_t> rev;
    std::vector<std::complex<double>> w; // forward twiddles e^{-2pi i j / n}, j < n/2

    explicit FftPlan(int n_) : n(n_), rev(n_), w(n_ / 2) {
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument("fft: length must be a power of two");
        int lg = 0;
        while ((1 << lg) < n) ++lg;
        for (int i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < lg; ++b)
                if (i & (1 << b)) r |= std::size_t(1) << (lg - 1 - b);
            rev[i] = r;
        }
        for (int j = 0; j < n / 2; ++j) {
            double ang = -2.0 * M_PI * j / n;
            w[j] = {std::cos(ang), std::sin(ang)};
        }
    }
};

inline const FftPlan& plan_for(int n) {
    thread_local std::map<int, FftPlan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, FftPlan(n)).first;
    return it->second;
}

/// In-place unnormalized DFT of length plan.n. inverse=true conjugates the
/// twiddles (no 1/n scaling).
inline void fft_1d(std::complex<double>* a, const FftPlan& p, bool inverse) {
    const int n = p.n;
    for (int i = 0; i < n; ++i) {
        std::size_t r = p.rev[i];
        if (static_cast<std::size_t>(i) < r) std::swap(a[i], a[r]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int stride = n / len;
        for (int i = 0; i < n; i += len) {
            for (int j = 0; j < half; ++j) {
                std::complex<double> tw = p.w[j * stride];
                if (inverse) tw = std::conj(tw);
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + half] * tw;
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
}

/// Unnormalized multi-dimensional DFT on a cubic lattice (n points per axis,
/// dim axes, lexicographic layout with axis 0 slowest).
inline void fft_nd(std::vector<std::complex<double>>& data, int dim, int n, bool inverse) {
    const FftPlan& p = plan_for(n);
    const std::size_t total = data.size();
    std::vector<std::complex<double>> line(n);
    for (int axis = 0; axis < dim; ++axis) {
        // stride between consecutive entries along `axis`
        std::size_t stride = 1;
        for (int d = axis + 1; d < dim; ++d) stride *= n;
        const std::size_t block = stride * n; // span of one full line set
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                if (stride == 1) {
                    fft_1d(&data[base], p, inverse);
                    continue;
                }
                std::complex<double>* src = &data[base + off];
                for (int i = 0; i < n; ++i) line[i] = src[i * stride];
                fft_1d(line.data(), p, inverse);
                for (int i = 0; i < n; ++i) src[i * stride] = line[i];
            }
            if (stride == 1) continue;
        }
    }
}

} // namespace rdlab::detail

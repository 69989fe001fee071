#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "rdlab/spectral.hpp"

namespace rdlab {

namespace detail {
/// smooth transition: 1 for t <= 0, 0 for t >= 1
inline double smooth_step_down(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return b / (a + b);
}
} // namespace detail

/// Dyadic Littlewood-Paley partition on the lattice. chi is 1 on |k| <= 3/4
/// and supported in |k| <= 4/3; rho(k) = chi(k/2) - chi(k) is supported in
/// 3/4 <= |k| <= 8/3, so blocks two apart never overlap. The telescoping sum
/// chi(k) + sum_{q<Q} rho(2^{-q} k) collapses to chi(2^{-Q} k), and the last
/// block Q_max = log2(N/2) absorbs the remainder up to the grid cutoff; the
/// reconstruction sum is therefore exactly 1 at every resolved frequency.
class DyadicPartition {
  public:
    explicit DyadicPartition(const Grid& grid) : grid_(grid) {
        q_max_ = 0;
        while ((1 << (q_max_ + 1)) <= grid.n / 2) ++q_max_;
        multipliers_.resize(q_max_ + 2);
        for (int q = -1; q <= q_max_; ++q) {
            std::vector<double>& m = multipliers_[q + 1];
            m.resize(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double kn = std::sqrt(grid.k_squared(i));
                m[i] = q == -1 ? chi(kn)
                     : q < q_max_ ? rho(std::ldexp(kn, -q))
                                  : 1.0 - chi(std::ldexp(kn, -q_max_));
            }
        }
    }

    static double chi(double k) { return detail::smooth_step_down((k - 0.75) / (4.0 / 3.0 - 0.75)); }
    static double rho(double k) { return chi(k / 2.0) - chi(k); }

    const Grid& grid() const { return grid_; }
    int q_max() const { return q_max_; }

    const std::vector<double>& block_multiplier(int q) const {
        if (q < -1 || q > q_max_) throw std::domain_error("DyadicPartition: q out of range");
        return multipliers_[q + 1];
    }

    /// multiplier of S_j = sum_{i<j} Delta_i (telescopes to chi(2^{-j} k))
    std::vector<double> low_pass_multiplier(int j) const {
        std::vector<double> m(grid_.size(), 0.0);
        for (int q = -1; q < std::min(j, q_max_ + 1); ++q)
            for (std::size_t i = 0; i < m.size(); ++i) m[i] += multipliers_[q + 1][i];
        return m;
    }

    /// worst deviation of sum_q rho-blocks + chi from 1 over the grid
    double partition_defect() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            double s = 0.0;
            for (int q = -1; q <= q_max_; ++q) s += multipliers_[q + 1][i];
            worst = std::max(worst, std::abs(s - 1.0));
        }
        return worst;
    }

  private:
    Grid grid_;
    int q_max_ = 0;
    std::vector<std::vector<double>> multipliers_;
};

/// Memoized partition per grid (construction scans the lattice once per q).
inline std::shared_ptr<const DyadicPartition> dyadic_partition(const Grid& grid) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const DyadicPartition>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(grid.dim, grid.n);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_shared<const DyadicPartition>(grid)).first;
    return it->second;
}

namespace detail {
inline Field apply_real_multiplier(const SpectralField& fh, const std::vector<double>& m) {
    SpectralField g = fh;
    for (std::size_t i = 0; i < g.modes.size(); ++i) g.modes[i] *= m[i];
    return fft_inverse(g);
}
} // namespace detail

/// Littlewood-Paley block Delta_q f.
inline Field lp_block(const Field& f, int q, const DyadicPartition& part) {
    return detail::apply_real_multiplier(fft_forward(f), part.block_multiplier(q));
}

/// All blocks q = -1 .. Q_max; summing them reconstructs f.
struct BlockSeries {
    std::vector<Field> blocks; // index q+1
    int q_max = 0;
    const Field& block(int q) const { return blocks[static_cast<std::size_t>(q + 1)]; }
};

inline BlockSeries block_series(const Field& f, const DyadicPartition& part) {
    BlockSeries out;
    out.q_max = part.q_max();
    SpectralField fh = fft_forward(f);
    out.blocks.reserve(part.q_max() + 2);
    for (int q = -1; q <= part.q_max(); ++q)
        out.blocks.push_back(detail::apply_real_multiplier(fh, part.block_multiplier(q)));
    return out;
}

/// Besov norm || 2^{q alpha} ||Delta_q f||_{L^p} ||_{l^r}; p, r may be
/// infinity. C^alpha is (alpha, inf, inf).
inline double besov_norm(const Field& f, double alpha, double p, double r,
                         const DyadicPartition& part) {
    BlockSeries bs = block_series(f, part);
    std::vector<double> terms;
    for (int q = -1; q <= bs.q_max; ++q)
        terms.push_back(std::pow(2.0, q * alpha) * lp_norm(bs.block(q), p));
    if (std::isinf(r)) {
        double m = 0.0;
        for (double t : terms) m = std::max(m, t);
        return m;
    }
    double acc = 0.0;
    for (double t : terms) acc += std::pow(t, r);
    return std::pow(acc, 1.0 / r);
}

/// Bony paraproduct f -< g = sum_{j>=1} S_{j-1} f Delta_j g (low frequencies
/// of f against high of g).
inline Field para_lower(const Field& f, const Field& g, const DyadicPartition& part) {
    require_same_grid(f, g);
    SpectralField fh = fft_forward(f);
    SpectralField gh = fft_forward(g);
    Field out(f.grid, 0.0);
    for (int j = 1; j <= part.q_max(); ++j) {
        Field sf = detail::apply_real_multiplier(fh, part.low_pass_multiplier(j - 1));
        Field dg = detail::apply_real_multiplier(gh, part.block_multiplier(j));
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] += sf.values[i] * dg.values[i];
    }
    return out;
}

inline Field para_upper(const Field& f, const Field& g, const DyadicPartition& part) {
    return para_lower(g, f, part);
}

/// Resonant product f o g = sum_{|i-j|<=1} Delta_i f Delta_j g. Terms are
/// grouped by unordered block pair so the result is bitwise symmetric in
/// (f, g).
inline Field resonant(const Field& f, const Field& g, const DyadicPartition& part) {
    require_same_grid(f, g);
    BlockSeries bf = block_series(f, part);
    BlockSeries bg = block_series(g, part);
    Field out(f.grid, 0.0);
    for (int i = -1; i <= part.q_max(); ++i) {
        const Field& ai = bf.block(i);
        const Field& bi = bg.block(i);
        for (std::size_t s = 0; s < out.size(); ++s)
            out.values[s] += ai.values[s] * bi.values[s];
        if (i + 1 <= part.q_max()) {
            const Field& an = bf.block(i + 1);
            const Field& bn = bg.block(i + 1);
            for (std::size_t s = 0; s < out.size(); ++s)
                out.values[s] += ai.values[s] * bn.values[s] + an.values[s] * bi.values[s];
        }
    }
    return out;
}

/// com1(f, g, h) = (f -< g) o h - f (g o h).
inline Field commutator_com1(const Field& f, const Field& g, const Field& h,
                             const DyadicPartition& part) {
    require_same_grid(f, g);
    require_same_grid(f, h);
    Field lhs = resonant(para_lower(f, g, part), h, part);
    Field gh = resonant(g, h, part);
    for (std::size_t i = 0; i < lhs.size(); ++i) lhs.values[i] -= f.values[i] * gh.values[i];
    return lhs;
}

} // namespace rdlab

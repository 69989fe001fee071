#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rdlab/grid.hpp"
#include "rdlab/rng.hpp"
#include "rdlab/spectral.hpp"
#include "support/oracles.hpp"

using namespace rdlab;

TEST_SUITE_BEGIN("grid_spectral");

TEST_CASE("grid invariants") {
    Grid g(3, 32);
    CHECK(g.size() == 32768);
    CHECK(g.h() == doctest::Approx(2.0 * M_PI / 32));
    CHECK_THROWS_AS(Grid(3, 33), std::invalid_argument);
    CHECK_THROWS_AS(Grid(3, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid(4, 32), std::invalid_argument);
}

TEST_CASE("roundtrip equals identity on random fields") {
    for (int dim : {1, 2, 3}) {
        Grid g(dim, dim == 1 ? 64 : (dim == 2 ? 16 : 8));
        RngStream rng(7, dim);
        Field f = gaussian_field(g, rng);
        Field back = fft_inverse(fft_forward(f));
        double worst = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            worst = std::max(worst, std::abs(back.values[i] - f.values[i]));
        CHECK(worst < 1e-12 * std::max(1.0, linf_norm(f)));
    }
}

TEST_CASE("constant field transforms to a single zero mode") {
    Grid g(3, 16);
    Field f(g, 2.5);
    SpectralField fh = fft_forward(f);
    const double vol = std::pow(2.0 * M_PI, 3);
    CHECK(fh.modes[0].real() == doctest::Approx(2.5 * vol).epsilon(1e-12));
    double off = 0.0;
    for (std::size_t i = 1; i < fh.modes.size(); ++i) off = std::max(off, std::abs(fh.modes[i]));
    CHECK(off < 1e-12 * 2.5 * vol);
}

TEST_CASE("cos(x1) occupies exactly the two k=(+-1,0,0) modes") {
    Grid g(3, 32);
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = std::cos(g.site(i)[0]);
    SpectralField fh = fft_forward(f);
    const double expected = 0.5 * g.volume();
    int nonzero = 0;
    for (std::size_t i = 0; i < fh.modes.size(); ++i) {
        if (std::abs(fh.modes[i]) > 1e-9) {
            ++nonzero;
            auto k = g.wavevector(i);
            CHECK(std::abs(k[0]) == 1);
            CHECK(k[1] == 0);
            CHECK(k[2] == 0);
            CHECK(fh.modes[i].real() == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(nonzero == 2);
}

TEST_CASE("roundtrip and Plancherel over many random fields") {
    // spec asks for 1e4 trials at 1e-10; keep the grid small so this is cheap
    Grid g(1, 64);
    RngStream rng(42, 0);
    for (int trial = 0; trial < 10000; ++trial) {
        Field f = gaussian_field(g, rng);
        SpectralField fh = fft_forward(f);
        Field back = fft_inverse(fh);
        double worst = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            worst = std::max(worst, std::abs(back.values[i] - f.values[i]));
        REQUIRE(worst < 1e-10);
        REQUIRE(l2_squared_real(f) ==
                doctest::Approx(l2_squared_spectral(fh)).epsilon(1e-10));
    }
}

TEST_CASE("hermitian symmetry of real-field transforms") {
    Grid g(3, 16);
    RngStream rng(3, 3);
    Field f = gaussian_field(g, rng);
    CHECK(hermitian_defect(fft_forward(f)) < 1e-10);
}

TEST_CASE("semigroup: t=0 identity, constants decay by the mass") {
    Grid g(2, 16);
    Field f(g, 1.7);
    Field same = apply_semigroup(f, 0.0, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(f.values[i]).epsilon(1e-14));
    Field decayed = apply_semigroup(f, 0.5, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(decayed.values[i] == doctest::Approx(1.7 * std::exp(-0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(apply_semigroup(f, -0.1, 0.0), std::domain_error);
}

TEST_CASE("semigroup: cos(x1) with mass 0 decays at rate |k|^2 = 1") {
    Grid g(3, 16);
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = std::cos(g.site(i)[0]);
    Field out = apply_semigroup(f, 1.0, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(out.values[i] - std::exp(-1.0) * f.values[i]) < 1e-12);
}

TEST_CASE("semigroup matches the closed-form heat kernel from a point mass") {
    // derived oracle: evaluate (4 pi t)^{-d/2} e^{-|x|^2/4t} directly
    for (int dim : {1, 3}) {
        Grid g(dim, dim == 1 ? 256 : 64);
        Field delta(g);
        delta.values[0] = 1.0 / g.cell_volume();
        const double t = 0.1;
        Field out = apply_semigroup(delta, t, 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            auto x = g.site(i);
            double r2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                double xd = x[d] > M_PI ? x[d] - 2.0 * M_PI : x[d];
                r2 += xd * xd;
            }
            if (r2 > 1.0) continue;
            const double exact = oracles::heat_kernel(dim, t, r2);
            REQUIRE(std::abs(out.values[i] - exact) <= 1e-3 * exact);
        }
    }
}

TEST_CASE("semigroup composes: P_{t1+t2} = P_{t2} P_{t1}") {
    Grid g(2, 32);
    RngStream rng(11, 0);
    Field f = gaussian_field(g, rng);
    Field two_step = apply_semigroup(apply_semigroup(f, 0.3, 1.0), 0.2, 1.0);
    Field one_step = apply_semigroup(f, 0.5, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(two_step.values[i] - one_step.values[i]) < 1e-12);
}

TEST_CASE("convolution with a discrete delta returns the other factor") {
    Grid g(3, 16);
    RngStream rng(5, 0);
    Field gfield = gaussian_field(g, rng);
    Field delta(g);
    delta.values[0] = 1.0 / g.cell_volume();
    Field out = periodic_convolve(delta, gfield);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(std::abs(out.values[i] - gfield.values[i]) < 1e-10);
}

TEST_CASE("convolution of two centered bumps is even") {
    Grid g(1, 128);
    Field b1(g), b2(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.site(i)[0];
        double c = x > M_PI ? x - 2.0 * M_PI : x; // centered coordinate
        b1.values[i] = std::exp(-8.0 * c * c);
        b2.values[i] = std::exp(-2.0 * c * c);
    }
    Field out = periodic_convolve(b1, b2);
    const int n = g.n;
    for (int i = 1; i < n; ++i)
        CHECK(out.values[i] == doctest::Approx(out.values[n - i]).epsilon(1e-10));
}

TEST_CASE("box * box = triangle against the direct O(N^2) oracle") {
    Grid g(1, 256);
    Field box(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.site(i)[0];
        double c = x > M_PI ? x - 2.0 * M_PI : x;
        box.values[i] = std::abs(c) <= 0.5 ? 1.0 : 0.0;
    }
    Field fast = periodic_convolve(box, box);
    Field slow = oracles::direct_convolve_1d(box, box);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(fast.values[i] - slow.values[i]) < 1e-8);
    // triangle apex: (box*box)(0) = h * (#points inside the box), which is the
    // lattice value of the width 1 up to one cell
    CHECK(std::abs(fast.values[0] - 1.0) < 2.0 * g.h());
}

TEST_CASE("convolution is commutative and bilinear") {
    Grid g(1, 64);
    RngStream rng(9, 1);
    Field a = gaussian_field(g, rng), b = gaussian_field(g, rng), c = gaussian_field(g, rng);
    Field ab = periodic_convolve(a, b);
    Field ba = periodic_convolve(b, a);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(ab.values[i] - ba.values[i]) < 1e-10);
    Field lhs = periodic_convolve(a, b + 2.0 * c);
    Field rhs = periodic_convolve(a, b) + 2.0 * periodic_convolve(a, c);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(lhs.values[i] - rhs.values[i]) < 1e-10);
}

TEST_CASE("lattice pairing: constants, linearity, Parseval") {
    Grid g(3, 16);
    Field c(g, 1.3);
    Field one(g, 1.0);
    CHECK(pair_with_test_function(c, one) ==
          doctest::Approx(1.3 * std::pow(2.0 * M_PI, 3)).epsilon(1e-12));
    RngStream rng(2, 2);
    Field f = gaussian_field(g, rng), h = gaussian_field(g, rng), phi = gaussian_field(g, rng);
    CHECK(pair_with_test_function(f + h, phi) ==
          doctest::Approx(pair_with_test_function(f, phi) + pair_with_test_function(h, phi))
              .epsilon(1e-12));
    // spectral cross-check
    CHECK(pair_with_test_function(f, phi) ==
          doctest::Approx(spectral_pairing(fft_forward(f), fft_forward(phi))).epsilon(1e-10));
}

TEST_SUITE_END();

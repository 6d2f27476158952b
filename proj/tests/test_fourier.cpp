#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "skewlab/fourier.hpp"

using namespace skewlab;

namespace {

// Random real trig polynomial with amplitudes in [-1, 1].
CircleFunction random_trig(std::mt19937_64& rng, int max_deg, bool zero_mean = false) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    CircleFunction f = zero_mean ? CircleFunction::zero() : CircleFunction::constant(amp(rng));
    for (int k = 1; k <= max_deg; ++k)
        f = f + CircleFunction::cosine(k, amp(rng)) + CircleFunction::sine(k, amp(rng));
    return f;
}

}  // namespace

TEST_CASE("evaluate") {
    REQUIRE(CircleFunction::sine(1).evaluate(0.25) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(CircleFunction::constant(3.0).evaluate(0.77) == 3.0);
    const auto f = CircleFunction::cosine(2) - CircleFunction::cosine(1);
    REQUIRE(f.evaluate(0.5) == Catch::Approx(2.0).margin(1e-14));
    // coefficient convention: sin has c(1) = -i/2
    REQUIRE(CircleFunction::sine(1).coeff(1).imag() == Catch::Approx(-0.5));
    REQUIRE(CircleFunction::sine(1).coeff(-1).imag() == Catch::Approx(0.5));
}

TEST_CASE("derivative") {
    REQUIRE(CircleFunction::constant(5.0).derivative().is_zero());

    const auto ds = CircleFunction::sine(1).derivative();  // 2 pi cos 2 pi x
    REQUIRE(ds.coeff(1).real() == Catch::Approx(kTwoPi / 2));
    REQUIRE(ds.coeff(1).imag() == Catch::Approx(0.0).margin(1e-16));
    REQUIRE(ds.evaluate(0.0) == Catch::Approx(kTwoPi).margin(1e-13));

    const auto dc = CircleFunction::cosine(2).derivative();  // -4 pi sin 4 pi x
    REQUIRE(dc.evaluate(0.125) == Catch::Approx(-2.0 * kTwoPi).margin(1e-12));
}

TEST_CASE("fit_from_samples") {
    SECTION("recovers sin exactly from 16 samples") {
        std::vector<double> samples(16);
        for (int j = 0; j < 16; ++j) samples[j] = std::sin(kTwoPi * j / 16.0);
        const auto fit = fit_from_samples(samples, 1);
        REQUIRE(std::abs(fit.f.coeff(1) - std::complex<double>(0.0, -0.5)) < 1e-12);
        REQUIRE(std::abs(fit.f.coeff(-1) - std::complex<double>(0.0, 0.5)) < 1e-12);
        REQUIRE(fit.aliasing_residual < 1e-12);
    }
    SECTION("constant samples give only c(0)") {
        const auto fit = fit_from_samples(std::vector<double>(8, 2.5), 1);
        REQUIRE(fit.f.coeff(0).real() == Catch::Approx(2.5));
        REQUIRE(fit.f.coeffs().size() == 1);
        REQUIRE(fit.aliasing_residual < 1e-14);
    }
    SECTION("frequency above cutoff surfaces as aliasing residual") {
        std::vector<double> samples(16);
        for (int j = 0; j < 16; ++j) samples[j] = std::cos(3.0 * kTwoPi * j / 16.0);
        const auto fit = fit_from_samples(samples, 1);
        REQUIRE(fit.aliasing_residual > 0.5);
    }
    SECTION("too few samples rejected") {
        REQUIRE_THROWS_AS(fit_from_samples(std::vector<double>(4, 0.0), 2),
                          InsufficientSamples);
    }
}

TEST_CASE("sup_norm bounds") {
    const auto b1 = sup_norm(CircleFunction::sine(1));
    REQUIRE(b1.upper == Catch::Approx(1.0));
    REQUIRE(b1.grid_max <= b1.upper);
    REQUIRE(b1.grid_max > 0.999);

    REQUIRE(sup_norm(CircleFunction::constant(-4.0)).upper == Catch::Approx(4.0));

    const auto f = CircleFunction::cosine(1) + CircleFunction::cosine(2);
    const auto b2 = sup_norm(f);
    REQUIRE(b2.upper == Catch::Approx(2.0));
    REQUIRE(b2.grid_max == Catch::Approx(2.0));  // attained at x = 0

    SECTION("upper bound dominates a dense grid for random functions") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const auto g = random_trig(rng, 16);
            const auto b = sup_norm(g);
            REQUIRE(b.grid_max <= b.upper + 1e-12);
        }
    }
}

TEST_CASE("round-trip and calculus properties") {
    std::mt19937_64 rng(23);

    SECTION("fit(evaluate(f)) reproduces degree-<=K trig polynomials") {
        for (int trial = 0; trial < 30; ++trial) {
            const auto f = random_trig(rng, 8);
            std::vector<double> samples(64);
            for (int j = 0; j < 64; ++j) samples[j] = f.evaluate(j / 64.0);
            const auto fit = fit_from_samples(samples, 8);
            for (const auto& [k, c] : f.coeffs())
                REQUIRE(std::abs(fit.f.coeff(k) - c) < 1e-12);
            REQUIRE(fit.aliasing_residual < 1e-12);
        }
    }
    SECTION("integrate(derivative(f)) recovers f minus its mean") {
        for (int trial = 0; trial < 30; ++trial) {
            const auto f = random_trig(rng, 16);
            const auto g = f.derivative().antiderivative_zero_mean();
            for (const auto& [k, c] : f.coeffs()) {
                if (k == 0) continue;
                REQUIRE(std::abs(g.coeff(k) - c) < 1e-12);
            }
            REQUIRE(g.coeff(0) == std::complex<double>(0.0));
        }
    }
}

TEST_CASE("realness enforcement") {
    CircleFunction::CoeffMap bad;
    bad[1] = {0.3, 0.1};
    bad[-1] = {0.3, 0.1};  // not the conjugate
    REQUIRE_THROWS_AS(CircleFunction(std::move(bad), true), std::invalid_argument);

    CircleFunction::CoeffMap good;
    good[1] = {0.3, 0.1};
    good[-1] = {0.3, -0.1};
    REQUIRE_NOTHROW(CircleFunction(std::move(good), true));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "skewlab/cohomology.hpp"
#include "skewlab/ergodicity.hpp"
#include "skewlab/mc.hpp"

using namespace skewlab;

TEST_CASE("build_system certificates") {
    const auto phi = 0.5 * CircleFunction::sine(1);

    SECTION("unperturbed systems are always accepted") {
        const auto sys = build_system(2, phi);
        REQUIRE(sys.cone_ok);
        REQUIRE(sys.cone_margin > 0.0);
        REQUIRE(sys.expansion_margin > 0.0);
    }
    SECTION("a large shear destroys domination") {
        REQUIRE_THROWS_AS(
            build_system(2, phi,
                         Perturbation{CircleFunction::sine(1), CircleFunction::sine(1), 10.0}),
            ConeViolation);
    }
    SECTION("eps=0.01 on lambda=0.5 genuinely has no invariant constant cone") {
        // Dg at the g-fixed point (0, 1/2) has complex eigenvalues
        // (trace 2.7947, det 2, disc < 0), so the certificate must refuse;
        // Warn mode constructs the system and records the failure.
        const Perturbation pert{CircleFunction::sine(1), CircleFunction::sine(1), 0.01};
        REQUIRE_THROWS_AS(build_system(2, phi, pert), ConeViolation);
        BuildConfig warn;
        warn.cone_policy = ConePolicy::Warn;
        const auto sys = build_system(2, phi, pert, warn);
        REQUIRE_FALSE(sys.cone_ok);
        REQUIRE(sys.cone_margin < 0.0);
        REQUIRE(sys.expansion_margin > 0.0);  // expansion itself survives
    }
    SECTION("a smaller fiber slope passes the certificate at eps=0.01") {
        const auto sys = build_system(
            2, 0.2 * CircleFunction::sine(1),
            Perturbation{CircleFunction::sine(1), CircleFunction::sine(1), 0.01});
        REQUIRE(sys.cone_ok);
        REQUIRE(sys.cone_margin > 0.0);
    }
    SECTION("Jacobian determinant equals l on the grid for accepted systems") {
        for (const double eps : {0.0, 0.005}) {
            BuildConfig warn;
            warn.cone_policy = ConePolicy::Warn;
            const auto sys = build_system(
                2, phi, eps == 0.0
                            ? std::optional<Perturbation>{}
                            : std::optional<Perturbation>{Perturbation{
                                  CircleFunction::sine(1), CircleFunction::sine(1), eps}},
                warn);
            for (int i = 0; i < 16; ++i)
                for (int j = 0; j < 16; ++j) {
                    const auto D = sys.differential({i / 16.0, j / 16.0});
                    REQUIRE(std::abs(D[0] * D[3] - D[1] * D[2] - 2.0) < 1e-9);
                }
        }
    }
}

TEST_CASE("iterate") {
    SECTION("fixed point of the unperturbed map") {
        const auto sys = build_system(2, CircleFunction::zero());
        const auto orbit = iterate(sys, {0.0, 0.0}, 5);
        for (const auto& z : orbit) {
            REQUIRE(z.x == 0.0);
            REQUIRE(z.y == 0.0);
        }
    }
    SECTION("doubling of 1/3") {
        const auto sys = build_system(2, CircleFunction::zero());
        const auto orbit = iterate(sys, {1.0 / 3.0, 0.2}, 3);
        REQUIRE(orbit[1].x == Catch::Approx(2.0 / 3.0).margin(1e-15));
        REQUIRE(orbit[2].x == Catch::Approx(1.0 / 3.0).margin(1e-15));
    }
    SECTION("one step of the flagship map: (1/4, 0) -> (1/2, lambda)") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto z = sys.apply({0.25, 0.0});
        REQUIRE(z.x == Catch::Approx(0.5).margin(1e-15));
        REQUIRE(z.y == Catch::Approx(0.5).margin(1e-15));
    }
}

TEST_CASE("birkhoff_average") {
    SECTION("constant observables average to the constant") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        REQUIRE(birkhoff_average(sys, Observable::constant(2.5), {0.12, 0.9}, 100) == 2.5);
    }
    SECTION("frozen vertical coordinate: f(x,y) = (2x, y), obs = sin 2 pi y") {
        const auto sys = build_system(2, CircleFunction::zero());
        const auto obs = Observable::character(0, 1, true);
        for (int n : {1, 10, 1000})
            REQUIRE(birkhoff_average(sys, obs, {0.77, 0.25}, n) ==
                    Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("ergodic system: generic-lift time average near the space average") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto obs = Observable::character(1, 1, false);  // cos 2 pi (x+y)
        REQUIRE(obs.space_average() == 0.0);
        const double avg = birkhoff_average(sys, obs, {0.123456, 0.654321}, 100000,
                                            BaseLift::Generic);
        REQUIRE(std::abs(avg) < 5e-2);
    }
    SECTION("literal dyadic starts collapse onto the fixed fiber of the base") {
        // the mantissa of a double is exhausted by ~53 doublings; this is
        // why long unperturbed experiments run on the generic lift
        const auto sys = build_system(2, CircleFunction::zero());
        Point2 z{0.123456, 0.2};
        for (int i = 0; i < 60; ++i) z = sys.apply(z);
        REQUIRE(z.x == 0.0);
    }
}

TEST_CASE("observables") {
    const auto cosxy = Observable::character(1, 1, false);
    REQUIRE(cosxy.eval({0.3, 0.4}) == Catch::Approx(std::cos(kTwoPi * 0.7)).margin(1e-14));
    const auto sin2xmy = Observable::character(2, -1, true);
    REQUIRE(sin2xmy.eval({0.3, 0.4}) ==
            Catch::Approx(std::sin(kTwoPi * (0.6 - 0.4))).margin(1e-14));
    REQUIRE(sin2xmy.space_average() == 0.0);
    REQUIRE(Observable::constant(3.0).space_average() == 3.0);
    REQUIRE(standard_observables().size() == 5);
}

TEST_CASE("ergodicity_score") {
    SECTION("ergodic flagship: small deviation across starts") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto rep = ergodicity_score(sys, standard_observables(), 40, 20000, 4242, 2);
        REQUIRE(rep.max_deviation < 5e-2);
    }
    SECTION("non-ergodic control: sin 2 pi y disperses across starts") {
        const auto sys = build_system(2, CircleFunction::zero());
        const auto rep =
            ergodicity_score(sys, {Observable::character(0, 1, true)}, 200, 500, 4242, 2);
        REQUIRE(rep.dispersion[0] > 0.5);  // std of sin(2 pi y0) over uniform y0 ~ 0.707
    }
    SECTION("constant observable: zero deviation and dispersion") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto rep = ergodicity_score(sys, {Observable::constant(1.5)}, 8, 100, 7, 1);
        REQUIRE(rep.max_deviation == 0.0);
        REQUIRE(rep.dispersion[0] == 0.0);
    }
    SECTION("determinism across thread counts") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto r1 = ergodicity_score(sys, standard_observables(), 16, 2000, 99, 1);
        const auto r2 = ergodicity_score(sys, standard_observables(), 16, 2000, 99, 2);
        REQUIRE(r1.time_averages == r2.time_averages);
        REQUIRE(r1.max_deviation == r2.max_deviation);
    }
}

TEST_CASE("correlation_sequence") {
    SECTION("constant chi has exactly zero correlation") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        SamplerConfig cfg;
        cfg.samples = 5000;
        const auto rep = correlation_sequence(sys, Observable::character(1, 1, false),
                                              Observable::constant(2.0), 5, cfg);
        for (double c : rep.correlation) REQUIRE(c == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("frozen control: C_n = 1/2 for all n with psi = chi = sin 2 pi y") {
        const auto sys = build_system(2, CircleFunction::zero());
        const auto s = Observable::character(0, 1, true);
        SamplerConfig cfg;
        cfg.samples = 100000;
        cfg.threads = 2;
        const auto rep = correlation_sequence(sys, s, s, 10, cfg);
        for (std::size_t n = 0; n < rep.correlation.size(); ++n)
            REQUIRE(std::abs(rep.correlation[n] - 0.5) <= 3.0 * rep.std_error[n]);
        REQUIRE(rep.usable_points == 10);
    }
    SECTION("mixing flagship: autocorrelation of cos 2 pi (x+y) decays") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        const auto obs = Observable::character(1, 1, false);
        SamplerConfig cfg;
        cfg.samples = 200000;
        cfg.threads = 2;
        const auto rep = correlation_sequence(sys, obs, obs, 20, cfg);
        REQUIRE(std::abs(rep.correlation.back()) < 1e-2);
    }
}

TEST_CASE("invariant_witness_value") {
    SECTION("l=2, a=0, b=0: psi = -y mod 1 is exactly invariant") {
        const auto w = invariant_witness_value(2, 0, 0, 1, {0.37, 0.81});
        REQUIRE(w.c == 0);
        REQUIRE(w.d == 1);
        REQUIRE(w.value == Catch::Approx(1.0 - 0.81).margin(1e-15));
        REQUIRE(w.invariance_error < 1e-15);
    }
    SECTION("l=2, a=0, b=1/2: psi = -2y mod 1") {
        const auto w = invariant_witness_value(2, 0, 1, 2, {0.2, 0.3});
        REQUIRE(w.d == 2);
        REQUIRE(w.invariance_error < 1e-15);
    }
    SECTION("l=3, a=1, b=1/2: c=2, d=4") {
        const auto w = invariant_witness_value(3, 1, 1, 2, {0.3, 0.7});
        REQUIRE(w.c == 2);
        REQUIRE(w.d == 4);
        REQUIRE(w.invariance_error < 1e-12);
    }
    SECTION("exact invariance at random points, random rational b") {
        std::mt19937_64 rng(321);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 10000; ++trial) {
            const int l = 2 + static_cast<int>(rng() % 4);
            const std::int64_t a = static_cast<std::int64_t>(rng() % 7) - 3;
            const std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 16);
            const std::int64_t num = static_cast<std::int64_t>(rng() % 32) - 16;
            const auto w = invariant_witness_value(l, a, num, den, {u(rng), u(rng)});
            REQUIRE(w.invariance_error < 1e-12);
        }
    }
    SECTION("non-rational offsets are rejected") {
        REQUIRE_THROWS_AS(invariant_witness_value(2, 0, 1, 0, {0.1, 0.1}), NonRational);
    }
}

TEST_CASE("volume preservation and degree, statistically") {
    // pushforward of a uniform cloud stays uniform: 16x16 box discrepancy
    // must not grow with iteration count beyond 3 sigma of sampling noise
    const std::int64_t N = 120000;
    const double p = 1.0 / 256.0;
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(N));

    auto discrepancy = [&](const std::vector<Point2>& cloud) {
        std::array<std::int64_t, 256> count{};
        for (const auto& z : cloud) {
            const int bx = std::min(15, static_cast<int>(z.x * 16));
            const int by = std::min(15, static_cast<int>(z.y * 16));
            ++count[static_cast<std::size_t>(bx * 16 + by)];
        }
        double worst = 0.0;
        for (const auto c : count)
            worst = std::max(worst, std::abs(static_cast<double>(c) / N - p));
        return worst;
    };
    auto ks_x = [&](const std::vector<Point2>& cloud) {
        std::vector<double> xs(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) xs[i] = cloud[i].x;
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double ecdf = static_cast<double>(i + 1) / static_cast<double>(xs.size());
            ks = std::max(ks, std::abs(ecdf - xs[i]));
        }
        return ks;
    };

    SECTION("unperturbed flagship on the generic lift") {
        const auto sys = build_system(2, 0.5 * CircleFunction::sine(1));
        std::vector<GenericBasePoint> base;
        std::vector<double> ys(static_cast<std::size_t>(N));
        base.reserve(static_cast<std::size_t>(N));
        auto rng = substream(777, 0);
        for (std::int64_t i = 0; i < N; ++i) {
            ys[static_cast<std::size_t>(i)] = uniform01(rng);
            base.emplace_back(2, rng());
        }
        std::vector<Point2> cloud(static_cast<std::size_t>(N));
        auto snapshot = [&]() {
            for (std::size_t i = 0; i < cloud.size(); ++i)
                cloud[i] = {base[i].value(), ys[i]};
        };
        snapshot();
        const double d0 = discrepancy(cloud);
        double worst_growth = 0.0;
        for (int step = 1; step <= 50; ++step) {
            for (std::size_t i = 0; i < base.size(); ++i) {
                ys[i] = wrap01(ys[i] + sys.phi.evaluate(base[i].value()));
                base[i].advance();
            }
            if (step % 10 == 0 || step == 1) {
                snapshot();
                worst_growth = std::max(worst_growth, discrepancy(cloud) - d0);
            }
        }
        REQUIRE(worst_growth <= 3.0 * sigma);
        // x marginal stays uniform: the base map is exactly l-to-1
        REQUIRE(ks_x(cloud) < 2.0 / std::sqrt(static_cast<double>(N)));
    }
    SECTION("small accepted shear, literal iteration") {
        const auto sys = build_system(
            2, 0.5 * CircleFunction::sine(1),
            Perturbation{CircleFunction::sine(1), CircleFunction::sine(1), 0.002});
        REQUIRE(sys.cone_ok);
        std::vector<Point2> cloud(static_cast<std::size_t>(N));
        auto rng = substream(778, 0);
        for (auto& z : cloud) z = {uniform01(rng), uniform01(rng)};
        const double d0 = discrepancy(cloud);
        double worst_growth = 0.0;
        for (int step = 1; step <= 50; ++step) {
            for (auto& z : cloud) z = sys.apply(z);
            if (step % 10 == 0 || step == 1)
                worst_growth = std::max(worst_growth, discrepancy(cloud) - d0);
        }
        REQUIRE(worst_growth <= 3.0 * sigma);
        REQUIRE(ks_x(cloud) < 2.0 / std::sqrt(static_cast<double>(N)));
    }
}

TEST_CASE("dichotomy linkage") {
    SECTION("StablyErgodic phi: small deviations, with and without shear") {
        const auto phi = 0.5 * CircleFunction::sine(1);
        REQUIRE(classify(phi, 2).verdict == DichotomyVerdict::StablyErgodic);
        for (const double eps : {0.0, 0.01}) {
            BuildConfig warn;
            warn.cone_policy = ConePolicy::Warn;
            const auto sys = build_system(
                2, phi, eps == 0.0
                            ? std::optional<Perturbation>{}
                            : std::optional<Perturbation>{Perturbation{
                                  CircleFunction::sine(1), CircleFunction::sine(1), eps}},
                warn);
            const auto rep = ergodicity_score(sys, standard_observables(), 40, 20000, 11, 2);
            REQUIRE(rep.max_deviation < 5e-2);
        }
    }
    SECTION("Special phi with rational constant: conjugated witness disperses") {
        // phi = u o T - u + 1/2 is smoothly conjugate to the rotation model;
        // sin(2 pi d (y - u(x))) with d = (l-1)*2 is pointwise invariant.
        const auto u = 0.3 * CircleFunction::cosine(1);
        const auto phi = u.compose_with_scaling(2) - u + CircleFunction::constant(0.5);
        REQUIRE(classify(phi, 2).verdict == DichotomyVerdict::Special);
        const auto sys = build_system(2, phi);
        const int d = (2 - 1) * 2;

        auto rng = substream(5150, 1);
        std::vector<double> time_avgs;
        for (int m = 0; m < 200; ++m) {
            Point2 z{uniform01(rng), uniform01(rng)};
            double sum = 0.0;
            const int n = 400;
            for (int i = 0; i < n; ++i) {
                sum += std::sin(kTwoPi * d * (z.y - u.evaluate(z.x)));
                z = sys.apply(z);
            }
            time_avgs.push_back(sum / n);
        }
        double mean = 0.0;
        for (double v : time_avgs) mean += v;
        mean /= static_cast<double>(time_avgs.size());
        double ss = 0.0;
        for (double v : time_avgs) ss += (v - mean) * (v - mean);
        const double dispersion = std::sqrt(ss / (time_avgs.size() - 1));
        REQUIRE(dispersion > 0.5);
    }
}

#pragma once

// The expanding base map T(x) = l x (mod 1) on the circle, its inverse
// branches tau_i(x) = (x + i)/l, backward orbits selected by an itinerary,
// and the exact periodic-orbit enumeration used by the Livsic oracle.
//
// Points are carried either as doubles in [0,1) or as exact rationals;
// periodic orbits are always exact (fixed points of T^n are k/(l^n - 1)).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skewlab/itinerary.hpp"
#include "skewlab/rational.hpp"

namespace skewlab {

class OverflowBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExpandingBase {
    int degree;

    explicit ExpandingBase(int l) : degree(l) {
        if (l < 2) throw std::invalid_argument("ExpandingBase: degree must be >= 2");
    }
};

inline double forward(const ExpandingBase& base, double x) {
    double y = base.degree * x;
    return y - std::floor(y);
}

inline Rational forward(const ExpandingBase& base, const Rational& x) {
    return (Rational(base.degree) * x).mod1();
}

// Inverse branch tau_i(x) = (x + i)/l on the circle.
inline double inverse_branch(const ExpandingBase& base, int digit, double x) {
    return (x + digit) / base.degree;
}

inline Rational inverse_branch(const ExpandingBase& base, int digit, const Rational& x) {
    return (x + Rational(digit)) / Rational(base.degree);
}

// (tau_{i,1}(x), ..., tau_{i,n}(x)) with tau_{i,k} = tau_{i_k} o ... o tau_{i_1}:
// the depth-n backward orbit of x selected digit by digit.
inline std::vector<double> backward_orbit(const ExpandingBase& base, double x,
                                          const Itinerary& it, int n) {
    if (it.degree() != base.degree)
        throw DegreeMismatch("backward_orbit: itinerary degree mismatch");
    if (n < 1) throw std::invalid_argument("backward_orbit: depth must be >= 1");
    std::vector<double> orbit(static_cast<std::size_t>(n));
    double p = x;
    for (int k = 1; k <= n; ++k) {
        p = inverse_branch(base, it.digit(static_cast<std::size_t>(k)), p);
        orbit[static_cast<std::size_t>(k - 1)] = p;
    }
    return orbit;
}

inline std::vector<Rational> backward_orbit(const ExpandingBase& base, const Rational& x,
                                            const Itinerary& it, int n) {
    if (it.degree() != base.degree)
        throw DegreeMismatch("backward_orbit: itinerary degree mismatch");
    if (n < 1) throw std::invalid_argument("backward_orbit: depth must be >= 1");
    std::vector<Rational> orbit(static_cast<std::size_t>(n));
    Rational p = x;
    for (int k = 1; k <= n; ++k) {
        p = inverse_branch(base, it.digit(static_cast<std::size_t>(k)), p);
        orbit[static_cast<std::size_t>(k - 1)] = p;
    }
    return orbit;
}

struct PeriodicOrbit {
    int minimal_period = 0;
    std::vector<Rational> points;  // orbit in forward order, smallest point first
};

inline constexpr std::int64_t kDefaultEnumerationBudget = 4'000'000;

// All periodic orbits of minimal period exactly n. Fixed points of T^n are
// k/(l^n - 1); cycles of the index map k -> l k (mod l^n - 1) of length < n
// belong to shorter periods and are skipped.
inline std::vector<PeriodicOrbit> periodic_orbits_of_period(
    const ExpandingBase& base, int n,
    std::int64_t budget = kDefaultEnumerationBudget) {
    if (n < 1) throw std::invalid_argument("periodic_orbits_of_period: n >= 1 required");
    std::int64_t modulus;
    try {
        modulus = ipow_checked(base.degree, n) - 1;
    } catch (const std::overflow_error&) {
        throw OverflowBudget("periodic_orbits_of_period: l^n - 1 overflows");
    }
    if (modulus > budget)
        throw OverflowBudget("periodic_orbits_of_period: l^n - 1 exceeds enumeration budget");

    std::vector<PeriodicOrbit> orbits;
    std::vector<bool> visited(static_cast<std::size_t>(modulus), false);
    std::vector<std::int64_t> cycle;
    for (std::int64_t k = 0; k < modulus; ++k) {
        if (visited[static_cast<std::size_t>(k)]) continue;
        cycle.clear();
        std::int64_t j = k;
        do {
            visited[static_cast<std::size_t>(j)] = true;
            cycle.push_back(j);
            j = (static_cast<__int128>(j) * base.degree) % modulus;
        } while (j != k);
        if (static_cast<int>(cycle.size()) != n) continue;  // minimal period < n
        PeriodicOrbit orb;
        orb.minimal_period = n;
        for (std::int64_t m : cycle) orb.points.emplace_back(m, modulus);
        orbits.push_back(std::move(orb));
    }
    return orbits;
}

// Fixed set of T^n grouped into orbits, labeled with exact minimal periods.
inline std::vector<PeriodicOrbit> periodic_points(
    const ExpandingBase& base, int n,
    std::int64_t budget = kDefaultEnumerationBudget) {
    std::vector<PeriodicOrbit> all;
    for (int d = 1; d <= n; ++d) {
        if (n % d != 0) continue;
        auto orbits = periodic_orbits_of_period(base, d, budget);
        all.insert(all.end(), orbits.begin(), orbits.end());
    }
    return all;
}

// Every orbit of minimal period <= n_max, each exactly once.
inline std::vector<PeriodicOrbit> periodic_orbits_up_to(
    const ExpandingBase& base, int n_max,
    std::int64_t budget = kDefaultEnumerationBudget) {
    std::int64_t total = 0;
    for (int d = 1; d <= n_max; ++d) {
        std::int64_t m;
        try {
            m = ipow_checked(base.degree, d) - 1;
        } catch (const std::overflow_error&) {
            throw OverflowBudget("periodic_orbits_up_to: l^n - 1 overflows");
        }
        total += m;
        if (total > budget)
            throw OverflowBudget("periodic_orbits_up_to: enumeration budget exceeded");
    }
    std::vector<PeriodicOrbit> all;
    for (int d = 1; d <= n_max; ++d) {
        auto orbits = periodic_orbits_of_period(base, d, budget);
        all.insert(all.end(), orbits.begin(), orbits.end());
    }
    return all;
}

}  // namespace skewlab

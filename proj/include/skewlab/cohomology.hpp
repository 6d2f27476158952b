#pragma once

// The dichotomy classifier: decides whether phi is a coboundary plus a
// constant over T(x) = l x (mod 1), i.e. whether
//     phi(x) = u(l x) - u(x) + C
// has a solution, and produces obstruction witnesses when it does not.
//
// Three independent criteria are computed and cross-checked:
//
//   1. Chain sums. In Fourier space the coboundary equation reads
//      phi_hat(m) = u_hat(m/l)[l|m] - u_hat(m), which forces along each
//      l-adic frequency chain (m0, l m0, l^2 m0, ...) with l !| m0:
//          u_hat(l^j m0) = - sum_{i<=j} phi_hat(l^i m0).
//      For a trigonometric polynomial the stabilized value is the finite
//      chain sum S(m0) = sum_{i>=0} phi_hat(l^i m0); phi is a coboundary
//      plus constant iff every S(m0) vanishes.
//
//   2. Twisted chains on the derivative. phi' = l theta(T x) - theta(x)
//      gives theta_hat(l^j m0) = -l^j sum_{i<=j} l^{-i} psi_hat(l^i m0),
//      solvable iff every weighted sum T(m0) = sum l^{-i} psi_hat(l^i m0)
//      vanishes. For psi = phi' the identity T(m0) = 2 pi i m0 S(m0) ties
//      the two criteria together.
//
//   3. Livsic periodic-orbit sums. A coboundary's Birkhoff average over
//      every T-periodic orbit telescopes to the constant; orbits are
//      enumerated exactly (fixed points of T^n are k/(l^n - 1)) so any
//      deviation beyond rounding certifies an obstruction.
//
// Disagreement among the criteria is surfaced as InconsistentEvidence and
// never silently resolved.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <vector>

#include "skewlab/circle_maps.hpp"
#include "skewlab/fourier.hpp"

namespace skewlab {

class BadRoot : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ChainEntry {
    int root = 0;           // m0 with l !| m0
    double magnitude = 0;   // |S(m0)| (or |T(m0)| for the twisted equation)
    std::complex<double> sum{0.0, 0.0};
};

struct CohomologyConfig {
    double tol_obstruction = 1e-9;
    double tol_residual = 1e-9;
    int residual_grid = 4096;
};

// Chain roots intersecting the support of f: every k in supp(f_hat), k != 0,
// stripped of its factors of l.
inline std::vector<int> chain_roots(const CircleFunction& f, int l) {
    std::vector<int> roots;
    for (const auto& [k, c] : f.coeffs()) {
        if (k == 0) continue;
        int m = k;
        while (m % l == 0) m /= l;
        if (std::find(roots.begin(), roots.end(), m) == roots.end()) roots.push_back(m);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// S(m0) = sum_{i>=0} phi_hat(l^i m0); finite for trigonometric polynomials.
inline std::complex<double> chain_sum(const CircleFunction& phi, int l, int m0) {
    if (m0 == 0 || m0 % l == 0)
        throw BadRoot("chain_sum: root must be nonzero and not divisible by l");
    std::complex<double> s = 0.0;
    const int kmax = phi.max_frequency();
    for (std::int64_t m = m0; std::llabs(m) <= kmax; m *= l) s += phi.coeff(static_cast<int>(m));
    return s;
}

struct CoboundaryResult {
    bool special = false;
    double C = 0.0;                       // phi_hat(0)
    CircleFunction u;                     // mean-zero transfer solution (special branch)
    double residual = 0.0;                // max_grid |u(Tx) - u(x) + C - phi(x)|
    std::vector<ChainEntry> chains;       // every chain root with its |S|
    std::vector<ChainEntry> violations;   // chains with |S| > tol
    double tol = 0.0;
};

inline CoboundaryResult solve_coboundary(const CircleFunction& phi, int l,
                                         const CohomologyConfig& cfg = {}) {
    if (l < 2) throw std::invalid_argument("solve_coboundary: degree must be >= 2");
    CoboundaryResult res;
    res.C = phi.mean();
    res.tol = cfg.tol_obstruction;

    const int kmax = phi.max_frequency();
    CircleFunction::CoeffMap u_coeffs;
    for (int m0 : chain_roots(phi, l)) {
        std::complex<double> running = 0.0;
        for (std::int64_t m = m0; std::llabs(m) <= kmax; m *= l) {
            running += phi.coeff(static_cast<int>(m));
            u_coeffs[static_cast<int>(m)] = -running;
        }
        res.chains.push_back({m0, std::abs(running), running});
        if (std::abs(running) > cfg.tol_obstruction)
            res.violations.push_back(res.chains.back());
    }

    res.special = res.violations.empty();
    if (res.special) {
        res.u = CircleFunction(std::move(u_coeffs), phi.is_real());
        for (int i = 0; i < cfg.residual_grid; ++i) {
            const double x = static_cast<double>(i) / cfg.residual_grid;
            const double err = std::abs(res.u.evaluate(l * x) - res.u.evaluate(x) +
                                        res.C - phi.evaluate(x));
            res.residual = std::max(res.residual, err);
        }
    }
    return res;
}

struct TwistedResult {
    bool solvable = false;
    double constant = 0.0;        // psi_hat(0); vanishes for derivative inputs
    bool mean_warning = false;    // set when |psi_hat(0)| > tol (non-derivative input)
    CircleFunction theta;         // mean-zero solution of psi = l theta(Tx) - theta + const
    double residual = 0.0;
    std::vector<ChainEntry> chains;
    std::vector<ChainEntry> violations;
    double tol = 0.0;
};

// Solves psi = l * theta(T x) - theta(x) + constant along l-adic chains.
// Intended input is psi = phi'; a nonzero mean is flagged, not fatal.
inline TwistedResult solve_twisted(const CircleFunction& psi, int l,
                                   const CohomologyConfig& cfg = {}) {
    if (l < 2) throw std::invalid_argument("solve_twisted: degree must be >= 2");
    TwistedResult res;
    res.constant = psi.mean();
    res.mean_warning = std::abs(res.constant) > cfg.tol_obstruction;
    res.tol = cfg.tol_obstruction;

    const int kmax = psi.max_frequency();
    CircleFunction::CoeffMap theta_coeffs;
    for (int m0 : chain_roots(psi, l)) {
        std::complex<double> weighted = 0.0;  // sum_{i<=j} l^{-i} psi_hat(l^i m0)
        double lj = 1.0;
        for (std::int64_t m = m0; std::llabs(m) <= kmax; m *= l) {
            weighted += psi.coeff(static_cast<int>(m)) / lj;
            theta_coeffs[static_cast<int>(m)] = -lj * weighted;
            lj *= l;
        }
        res.chains.push_back({m0, std::abs(weighted), weighted});
        if (std::abs(weighted) > cfg.tol_obstruction)
            res.violations.push_back(res.chains.back());
    }

    res.solvable = res.violations.empty();
    if (res.solvable) {
        res.theta = CircleFunction(std::move(theta_coeffs), psi.is_real());
        for (int i = 0; i < cfg.residual_grid; ++i) {
            const double x = static_cast<double>(i) / cfg.residual_grid;
            const double err = std::abs(l * res.theta.evaluate(l * x) - res.theta.evaluate(x) +
                                        res.constant - psi.evaluate(x));
            res.residual = std::max(res.residual, err);
        }
    }
    return res;
}

struct LivsicConfig {
    int n_max = 8;
    std::int64_t budget = kDefaultEnumerationBudget;
};

struct PeriodDeviation {
    int period = 0;
    double max_deviation = 0.0;
};

struct LivsicResult {
    double max_deviation = 0.0;
    int witness_period = 0;
    std::vector<Rational> witness_orbit;
    std::vector<PeriodDeviation> per_period;  // indexed by minimal period 1..n_max
    int n_max = 0;
};

// max over periodic orbits of period <= n_max of
//   |(1/n) sum_i phi(T^i p) - phi_hat(0)|,
// with orbit points exact rationals. Zero (up to rounding) is consistent
// with the coboundary branch; a large value certifies obstruction.
inline LivsicResult livsic_obstruction(const CircleFunction& phi, int l,
                                       const LivsicConfig& cfg = {}) {
    ExpandingBase base(l);
    LivsicResult res;
    res.n_max = cfg.n_max;
    res.per_period.reserve(static_cast<std::size_t>(cfg.n_max));
    const double mean = phi.mean();
    // Budget check up front so the error fires before any enumeration work.
    {
        std::int64_t total = 0;
        for (int n = 1; n <= cfg.n_max; ++n) {
            std::int64_t m;
            try {
                m = ipow_checked(l, n) - 1;
            } catch (const std::overflow_error&) {
                throw OverflowBudget("livsic_obstruction: l^n - 1 overflows");
            }
            total += m;
            if (total > cfg.budget)
                throw OverflowBudget("livsic_obstruction: enumeration budget exceeded");
        }
    }
    for (int n = 1; n <= cfg.n_max; ++n) {
        PeriodDeviation pd{n, 0.0};
        for (const auto& orbit : periodic_orbits_of_period(base, n, cfg.budget)) {
            double sum = 0.0;
            for (const auto& p : orbit.points) sum += phi.evaluate(p.to_double());
            const double dev = std::abs(sum / n - mean);
            if (dev > pd.max_deviation) pd.max_deviation = dev;
            if (dev > res.max_deviation) {
                res.max_deviation = dev;
                res.witness_period = n;
                res.witness_orbit = orbit.points;
            }
        }
        res.per_period.push_back(pd);
    }
    return res;
}

enum class DichotomyVerdict { Special, StablyErgodic, InconsistentEvidence };

inline const char* to_string(DichotomyVerdict v) {
    switch (v) {
        case DichotomyVerdict::Special: return "Special";
        case DichotomyVerdict::StablyErgodic: return "StablyErgodic";
        default: return "InconsistentEvidence";
    }
}

struct ClassifyConfig {
    CohomologyConfig cohomology;
    LivsicConfig livsic;
};

struct DichotomyReport {
    DichotomyVerdict verdict = DichotomyVerdict::InconsistentEvidence;
    CoboundaryResult coboundary;
    TwistedResult twisted;
    LivsicResult livsic;
    bool chains_obstructed = false;
    bool twisted_obstructed = false;
    bool livsic_obstructed = false;
    ClassifyConfig config;
};

// Runs all three criteria. They are mathematically equivalent, so any
// disagreement beyond tolerance is reported as InconsistentEvidence.
inline DichotomyReport classify(const CircleFunction& phi, int l,
                                const ClassifyConfig& cfg = {}) {
    DichotomyReport rep;
    rep.config = cfg;
    rep.coboundary = solve_coboundary(phi, l, cfg.cohomology);
    rep.twisted = solve_twisted(phi.derivative(), l, cfg.cohomology);
    rep.livsic = livsic_obstruction(phi, l, cfg.livsic);

    rep.chains_obstructed = !rep.coboundary.special;
    rep.twisted_obstructed = !rep.twisted.solvable;
    rep.livsic_obstructed = rep.livsic.max_deviation > cfg.cohomology.tol_obstruction;

    if (rep.chains_obstructed == rep.twisted_obstructed &&
        rep.chains_obstructed == rep.livsic_obstructed) {
        rep.verdict = rep.chains_obstructed ? DichotomyVerdict::StablyErgodic
                                            : DichotomyVerdict::Special;
    } else {
        rep.verdict = DichotomyVerdict::InconsistentEvidence;
    }
    return rep;
}

}  // namespace skewlab

#pragma once

// Universal-cover combinatorics for the skew product f_phi. The lift is
// F(x, y) = (l x, y + phi(x)) with linearization A = diag(l, 1); the l
// integer translations n_i = (i, 0), 0 <= i < l, are exactly
// A([0,1)^2) intersected with Z^2 and define the inverse branches
//     F_i^{-1}(p) = F^{-1}(p + n_i) = ( (p_x + i)/l , p_y - phi((p_x+i)/l) ).
//
// Re-indexing: the backward a-orbit of x = x_# + m0 projects to the same
// torus orbit as the backward b-orbit of x_# for a unique digit sequence b
// and integer translations M_k = (b-chain) - (a-chain). The first
// coordinate satisfies the exact integer recursion
//     b_k = (a_k - M_{k-1,x}) mod l,   M_{k,x} = (M_{k-1,x} + b_k - a_k)/l,
// with M_0 = -m0, so digits are computed from the defining projection
// identity and the translation recursion is derived as output.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skewlab/circle_maps.hpp"
#include "skewlab/fourier.hpp"
#include "skewlab/itinerary.hpp"
#include "skewlab/mc.hpp"
#include "skewlab/rational.hpp"

namespace skewlab {

using IVec2 = std::array<std::int64_t, 2>;

struct LinearModel {
    int l;

    explicit LinearModel(int degree) : l(degree) {
        if (l < 2) throw std::invalid_argument("LinearModel: degree must be >= 2");
    }

    // A = diag(l, 1), row-major.
    std::array<std::int64_t, 4> A() const { return {l, 0, 0, 1}; }

    IVec2 translation(int i) const {
        if (i < 0 || i >= l) throw std::invalid_argument("LinearModel: branch index");
        return {i, 0};
    }

    // A([0,1)^2) intersected with Z^2, by enumeration: |det A| = l points.
    std::vector<IVec2> lattice_translations() const {
        std::vector<IVec2> out;
        for (std::int64_t ix = 0; ix < l; ++ix)
            for (std::int64_t iy = 0; iy < 1; ++iy) out.push_back({ix, iy});
        return out;
    }
};

struct LiftPoint {
    Rational x;      // exact: the base dynamics never leaves the rationals
    double y = 0.0;  // fiber coordinate involves phi values, carried in floating point

    double x_double() const { return x.to_double(); }
};

// F_i^{-1} on the cover; the x part is exact.
inline LiftPoint branch_inverse(const LinearModel& model, const CircleFunction& phi,
                                int digit, const LiftPoint& p) {
    LiftPoint q;
    q.x = (p.x + Rational(digit)) / Rational(model.l);
    q.y = p.y - phi.evaluate(q.x.mod1().to_double());
    return q;
}

struct LiftedOrbit {
    LiftPoint base;
    std::vector<int> digits;
    std::vector<LiftPoint> points;  // depth k entry is F^{-1}_{a_k} o ... o F^{-1}_{a_1}(base)
};

// Depth-n backward orbit of a torus point (lifted to the fundamental
// domain) along the itinerary. Branch inverses of a fundamental-domain
// point keep x in [0,1), so the x coordinates are the circle backward
// orbit of the base point.
inline LiftedOrbit itinerary_orbit(const LinearModel& model, const CircleFunction& phi,
                                   const Rational& x0, double y0, const Itinerary& a,
                                   int n) {
    if (a.degree() != model.l) throw DegreeMismatch("itinerary_orbit: degree mismatch");
    LiftedOrbit orbit;
    orbit.base = {x0.mod1(), y0};
    LiftPoint p = orbit.base;
    for (int k = 1; k <= n; ++k) {
        const int d = a.digit(static_cast<std::size_t>(k));
        p = branch_inverse(model, phi, d, p);
        orbit.digits.push_back(d);
        orbit.points.push_back(p);
    }
    return orbit;
}

struct ReindexResult {
    std::vector<int> digits;            // b_1..b_n
    std::vector<IVec2> translations;    // M_1..M_n, oriented b-chain minus a-chain
    IVec2 m0{0, 0};
    bool projection_verified = false;  // P_k == Q_k (mod Z^2), exactly, every step
    // Two sign conventions for the translation recursion. The incoming
    // offset m_0 is defined by x = x_# + m0 (a-chain minus b-chain) while
    // the M_k are b-chain minus a-chain, so the plus-prev form
    //     n_{b_k} = m_{k-1} + n_{a_k} + A m_k
    // holds at k = 1 with m_0 as given but not beyond; the uniform
    // orientation satisfies the minus-prev form at every step.
    bool plus_prev_rule_step1 = false;  // n_{b_1} = m_0 + n_{a_1} + A M_1
    bool plus_prev_rule_all = false;    // same shape for all k (fails in general)
    bool minus_prev_rule_all = false;   // n_{b_k} = -M_{k-1} + n_{a_k} + A M_k
};

// Digits come from the projection identity
//   pi o F^{-1}_{b_k} o ... o F^{-1}_{b_1}(x_#) = pi o F^{-1}_{a_k} o ... o F^{-1}_{a_1}(x),
// verified here in exact rational arithmetic at every step; the sign-rule
// booleans are derived as output, never used as the algorithm. The y
// component of every translation is -m0_y: matching x coordinates mod 1
// makes the phi contributions cancel exactly, so the fiber offset never
// changes.
inline ReindexResult reindex_itinerary(const LinearModel& model, const Itinerary& a,
                                       const IVec2& m0, int n,
                                       const Rational& x0 = Rational(0)) {
    if (a.degree() != model.l) throw DegreeMismatch("reindex_itinerary: degree mismatch");
    const std::int64_t l = model.l;

    ReindexResult res;
    res.m0 = m0;
    res.projection_verified = true;
    res.plus_prev_rule_step1 = true;
    res.plus_prev_rule_all = true;
    res.minus_prev_rule_all = true;

    // Exact chain x coordinates: P for the b-chain from x_#, Q for the
    // a-chain from x = x_# + m0.
    Rational P = x0.mod1();
    Rational Q = P + Rational(m0[0]);
    std::int64_t M_prev = -m0[0];
    for (int k = 1; k <= n; ++k) {
        const std::int64_t ak = a.digit(static_cast<std::size_t>(k));
        std::int64_t bk = (ak - M_prev) % l;
        if (bk < 0) bk += l;
        const std::int64_t M = (M_prev + bk - ak) / l;

        P = (P + Rational(bk)) / Rational(l);
        Q = (Q + Rational(ak)) / Rational(l);
        if (P - Q != Rational(M) || P.mod1() != Q.mod1()) res.projection_verified = false;

        // first coordinates only; second coordinates are constant and cancel
        if (bk != -M_prev + ak + l * M) res.minus_prev_rule_all = false;
        const bool plus_prev = (bk == M_prev + ak + l * M);
        if (k == 1) {
            // at k = 1 the offset enters with its defining orientation m_0
            res.plus_prev_rule_step1 = (bk == m0[0] + ak + l * M);
        } else if (!plus_prev) {
            res.plus_prev_rule_all = false;
        }
        res.digits.push_back(static_cast<int>(bk));
        res.translations.push_back({M, -m0[1]});
        M_prev = M;
    }
    if (!res.plus_prev_rule_step1) res.plus_prev_rule_all = false;
    return res;
}

struct Box {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    bool contains(double x, double y) const {
        return x >= x0 && x < x1 && y >= y0 && y < y1;
    }
};

struct MCEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t hits = 0;
    std::int64_t samples = 0;
};

// Monte-Carlo estimate of mu([A_0, ..., A_n]) = m( intersect_i f^{-i}(A_i) )
// by forward-iteration membership tests on uniform samples.
template <typename MapFn>
MCEstimate cylinder_measure_estimate(MapFn&& f, const std::vector<Box>& boxes,
                                     const SamplerConfig& cfg = {}) {
    if (boxes.empty()) throw std::invalid_argument("cylinder_measure_estimate: no boxes");
    const std::int64_t n_shards = (cfg.samples + cfg.shard_size - 1) / cfg.shard_size;
    auto partials = run_shards<std::int64_t>(n_shards, cfg.threads, [&](std::int64_t shard) {
        auto rng = substream(cfg.seed, static_cast<std::uint64_t>(shard));
        const std::int64_t lo = shard * cfg.shard_size;
        const std::int64_t hi = std::min(cfg.samples, lo + cfg.shard_size);
        std::int64_t hits = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            double x = uniform01(rng), y = uniform01(rng);
            bool in = boxes[0].contains(x, y);
            for (std::size_t k = 1; in && k < boxes.size(); ++k) {
                const auto [nx, ny] = f(x, y);
                x = nx;
                y = ny;
                in = boxes[k].contains(x, y);
            }
            if (in) ++hits;
        }
        return hits;
    });
    MCEstimate est;
    est.samples = cfg.samples;
    for (std::int64_t h : partials) est.hits += h;
    est.estimate = static_cast<double>(est.hits) / static_cast<double>(est.samples);
    est.std_error =
        std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(est.samples));
    return est;
}

}  // namespace skewlab

#pragma once

// Unstable-direction geometry over the inverse limit. The unstable bundle
// of f_phi(x,y) = (l x, y + phi(x)) at a point with chosen past (x_{-j}) is
// spanned by (1, eta) with
//     eta = sum_{j>=1} phi'(x_{-j}) / l^j,
// so the direction depends on the itinerary selecting the past. The h
// functions compare pasts of x against pasts of 0:
//     h_i(x) = sum_{n>=1} l^{-n} ( psi(tau_{i,n}(x)) - psi(tau_{i,n}(0)) ).
// A certified positive gap between eta values at one point for two pasts is
// a u-accessibility witness; local unstable leaves are realized by pushing
// a horizontal seed segment at a depth-n preimage forward n times.
//
// All truncations carry rigorous error bounds: a geometric truncation tail
// plus a floating-point evaluation term, so certified gaps can never be
// manufactured by rounding noise.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "skewlab/circle_maps.hpp"
#include "skewlab/fourier.hpp"

namespace skewlab {

struct CertifiedValue {
    double value = 0.0;
    double error_bound = 0.0;  // >= 0; comparisons must use value +/- error_bound

    double lower() const { return value - error_bound; }
    double upper() const { return value + error_bound; }
};

namespace detail {

// Per-evaluation floating-point error bound for CircleFunction::evaluate:
// Horner over M coefficients on the unit circle plus argument rounding in
// the backward orbit (the inverse branches contract, so orbit error stays
// at a few ulps).
inline double eval_round_bound(const CircleFunction& f) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double m = static_cast<double>(f.coeffs().size());
    return eps * (f.l1_norm() * (2.0 * m + 8.0) + 4.0 * f.lipschitz_bound());
}

}  // namespace detail

// Truncation of eta = sum_{j>=1} phi'(x_{-j}) / l^j at depth N, with
// certified tail bound  sup|phi'| * l^{-N} / (l - 1)  plus rounding.
inline CertifiedValue eta_estimate(const CircleFunction& phi, double x,
                                   const Itinerary& it, int N) {
    if (N < 1) throw std::invalid_argument("eta_estimate: depth must be >= 1");
    const int l = it.degree();
    const ExpandingBase base(l);
    const CircleFunction dphi = phi.derivative();

    CertifiedValue out;
    double weight = 1.0;
    double p = x;
    for (int j = 1; j <= N; ++j) {
        p = inverse_branch(base, it.digit(static_cast<std::size_t>(j)), p);
        weight /= l;
        out.value += dphi.evaluate(p) * weight;
    }
    const double tail = dphi.l1_norm() * std::pow(static_cast<double>(l), -N) / (l - 1);
    const double round = detail::eval_round_bound(dphi) / (l - 1);
    out.error_bound = tail + round;
    return out;
}

// Truncation of h_i(x) = sum_n l^{-n}(psi(tau_{i,n}(x)) - psi(tau_{i,n}(0)))
// at depth N. Since |tau_{i,n}(x) - tau_{i,n}(0)| = |x| l^{-n}, the tail is
// bounded by Lip(psi) |x| l^{-2N} l^2/(l^2-1); intended input is psi = phi'.
inline CertifiedValue h_value(const CircleFunction& psi, const Itinerary& it,
                              double x, int N) {
    if (N < 1) throw std::invalid_argument("h_value: depth must be >= 1");
    const int l = it.degree();
    const double lip = psi.lipschitz_bound();
    if (lip == 0.0) return {0.0, 0.0};  // constant psi: every term is exactly zero

    CertifiedValue out;
    double weight = 1.0;
    double px = x, p0 = 0.0;
    for (int n = 1; n <= N; ++n) {
        const int digit = it.digit(static_cast<std::size_t>(n));
        px = (px + digit) / l;  // branch maps act on the real lift
        p0 = (p0 + digit) / l;
        weight /= l;
        out.value += weight * (psi.evaluate(px) - psi.evaluate(p0));
    }
    const double l2 = static_cast<double>(l) * l;
    const double tail =
        lip * std::abs(x) * std::pow(static_cast<double>(l), -2 * N) * l2 / (l2 - 1.0);
    const double round = 2.0 * detail::eval_round_bound(psi) / (l - 1);
    out.error_bound = tail + round;
    return out;
}

struct AccessibilityWitness {
    double x = 0.0;                       // base circle point of the witness
    Itinerary itinerary_a;                // past with deviating direction
    Itinerary itinerary_b;                // reference past (all zeros)
    CertifiedValue gap;                   // |eta_a - eta_b| with certified bound
    double angle = 0.0;                   // |atan(eta_a) - atan(eta_b)|
    double eta_a = 0.0;
    double eta_b = 0.0;
};

struct WitnessSearchConfig {
    int grid_size = 256;    // x values i/grid_size
    int max_prefix_len = 8; // itinerary prefixes up to this length, all-zero tails
    int depth = 40;         // series truncation depth
};

struct WitnessSearchResult {
    std::optional<AccessibilityWitness> witness;
    double max_observed_gap = 0.0;   // largest non-certified gap seen
    double error_floor_at_max = 0.0; // certified error bound at that candidate
    long candidates_checked = 0;
};

// Deterministic search: prefixes shortest first, lexicographic within a
// length, x grid ascending within a prefix; the first certified gap wins.
inline WitnessSearchResult accessibility_witness(const CircleFunction& phi, int l,
                                                 const WitnessSearchConfig& cfg = {}) {
    WitnessSearchResult res;
    const Itinerary ref = Itinerary::zeros(l);

    // eta along the reference past, cached per grid point.
    std::vector<CertifiedValue> eta_ref(static_cast<std::size_t>(cfg.grid_size));
    for (int i = 0; i < cfg.grid_size; ++i)
        eta_ref[static_cast<std::size_t>(i)] =
            eta_estimate(phi, static_cast<double>(i) / cfg.grid_size, ref, cfg.depth);

    std::vector<int> prefix;
    for (int len = 1; len <= cfg.max_prefix_len; ++len) {
        prefix.assign(static_cast<std::size_t>(len), 0);
        while (true) {
            const Itinerary cand(l, prefix);
            if (!(cand == ref)) {
                for (int i = 0; i < cfg.grid_size; ++i) {
                    const double x = static_cast<double>(i) / cfg.grid_size;
                    const CertifiedValue ea = eta_estimate(phi, x, cand, cfg.depth);
                    const CertifiedValue& eb = eta_ref[static_cast<std::size_t>(i)];
                    const double gap = std::abs(ea.value - eb.value);
                    const double err = ea.error_bound + eb.error_bound;
                    ++res.candidates_checked;
                    if (gap > res.max_observed_gap) {
                        res.max_observed_gap = gap;
                        res.error_floor_at_max = err;
                    }
                    if (gap - err > 0.0) {
                        AccessibilityWitness w{x, cand, ref, {gap, err},
                                               std::abs(std::atan(ea.value) - std::atan(eb.value)),
                                               ea.value, eb.value};
                        res.witness = std::move(w);
                        return res;
                    }
                }
            }
            // next prefix in lexicographic order
            int pos = len - 1;
            while (pos >= 0 && prefix[static_cast<std::size_t>(pos)] == l - 1) {
                prefix[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
            ++prefix[static_cast<std::size_t>(pos)];
        }
    }
    return res;
}

struct LeafPoint {
    double x = 0.0;  // torus coordinates
    double y = 0.0;
    double arclength = 0.0;  // along the lifted curve from the first sample
};

struct LeafCurve {
    std::vector<LeafPoint> points;
    double slope_at_center = 0.0;       // finite-difference slope at z
    CertifiedValue eta;                  // certified series value at (z, itinerary)
    double discretization_error = 0.0;  // bound for |slope_at_center - tangent slope|
    double center_x = 0.0, center_y = 0.0;
};

struct LeafConfig {
    int samples = 1024;  // seed sampling resolution (one extra sample centers the seed)
};

// Local unstable leaf through z for the chosen past: the forward image of a
// horizontal segment of the given half-width at the depth-n preimage. The
// x-dynamics of the push is affine, x_k(s) = x_{k-n} + s l^k with the exact
// backward orbit as offsets, which avoids the l^n amplification of rounding
// a naive forward iteration would suffer.
inline LeafCurve grow_unstable_leaf(const CircleFunction& phi, int l, double zx, double zy,
                                    const Itinerary& it, int n, double half_width,
                                    const LeafConfig& cfg = {}) {
    if (n < 1) throw std::invalid_argument("grow_unstable_leaf: depth must be >= 1");
    if (half_width <= 0.0 || half_width >= 0.5)
        throw std::invalid_argument("grow_unstable_leaf: seed must fit one fundamental domain");
    const ExpandingBase base(l);

    // Backward orbit x_{-1}, ..., x_{-n} and the matching fiber coordinates.
    const std::vector<double> bx = backward_orbit(base, zx, it, n);
    std::vector<double> by(static_cast<std::size_t>(n));
    double y = zy;
    for (int j = 1; j <= n; ++j) {
        y -= phi.evaluate(bx[static_cast<std::size_t>(j - 1)]);
        by[static_cast<std::size_t>(j - 1)] = y;
    }

    const int half_samples = cfg.samples / 2;
    const double ds = half_width / half_samples;
    const double ln = std::pow(static_cast<double>(l), n);

    // Powers of l for the affine x-offsets at each push depth.
    std::vector<double> lpow(static_cast<std::size_t>(n));
    double lp = 1.0;
    for (int k = 0; k < n; ++k) {
        lpow[static_cast<std::size_t>(k)] = lp;
        lp *= l;
    }

    LeafCurve leaf;
    leaf.points.reserve(static_cast<std::size_t>(2 * half_samples + 1));
    double prev_lx = 0.0, prev_ly = 0.0, arc = 0.0;
    for (int s = -half_samples; s <= half_samples; ++s) {
        const double ss = s * ds;
        // A_k(ss) = x_{-n+k} + ss l^k; Y accumulates phi along the push.
        double yy = by[static_cast<std::size_t>(n - 1)];
        for (int k = 0; k < n; ++k) {
            const double xk = bx[static_cast<std::size_t>(n - 1 - k)] +
                              ss * lpow[static_cast<std::size_t>(k)];
            yy += phi.evaluate(xk);
        }
        const double lx = zx + ss * ln;  // lift x after n pushes
        if (s > -half_samples)
            arc += std::hypot(lx - prev_lx, yy - prev_ly);
        prev_lx = lx;
        prev_ly = yy;
        LeafPoint pt;
        pt.x = lx - std::floor(lx);
        pt.y = yy - std::floor(yy);
        pt.arclength = arc;
        leaf.points.push_back(pt);
        if (s == 0) {
            leaf.center_x = pt.x;
            leaf.center_y = pt.y;
        }
    }

    // Central-difference slope at the center sample.
    {
        const std::size_t c = static_cast<std::size_t>(half_samples);
        double y_minus = 0.0, y_plus = 0.0;
        const double h = ds * ln;
        for (int k = 0; k < n; ++k) {
            const double base_x = bx[static_cast<std::size_t>(n - 1 - k)];
            const double off = ds * lpow[static_cast<std::size_t>(k)];
            y_minus += phi.evaluate(base_x - off);
            y_plus += phi.evaluate(base_x + off);
        }
        leaf.slope_at_center = (y_plus - y_minus) / (2.0 * h);
        (void)c;
        // |FD - tangent| <= h^2/6 * sup|Y'''| with Y''' <= l1(phi''')/(l^3-1).
        const double c3 = phi.derivative().derivative().derivative().l1_norm();
        const double l3 = std::pow(static_cast<double>(l), 3);
        leaf.discretization_error = h * h / 6.0 * (c3 / (l3 - 1.0)) +
                                    8.0 * detail::eval_round_bound(phi) * n / h;
    }
    leaf.eta = eta_estimate(phi, zx, it, n);
    return leaf;
}

}  // namespace skewlab

#pragma once

// Experimental layer: iterate f_phi(x,y) = (l x, y + phi(x)) and its
// volume-preserving perturbations, measure Birkhoff-average dispersion,
// correlation decay, and evaluate the explicit invariant observable of the
// non-ergodic linear models.
//
// Perturbations are compositions of two unit-Jacobian shears,
//     g = S2 o S1 o f_phi,  S1(x,y) = (x, y + eps q(x)),  S2(x,y) = (x + eps r(y), y),
// so volume preservation holds by construction; the Jacobian and a strict
// cone condition are still verified on a grid as construction bug traps.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skewlab/fourier.hpp"
#include "skewlab/mc.hpp"

namespace skewlab {

class ConeViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class JacobianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonRational : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double wrap01(double t) { return t - std::floor(t); }

struct Perturbation {
    CircleFunction q;  // vertical shear profile
    CircleFunction r;  // horizontal shear profile
    double eps = 0.0;
};

struct SkewSystem {
    int l = 2;
    CircleFunction phi;
    std::optional<Perturbation> perturbation;
    double cone_slope = 0.0;       // K of the invariant horizontal cone {|slope| <= K}
    double cone_margin = 0.0;      // min over the check grid of K - |image slope|
    double expansion_margin = 0.0; // min |horizontal expansion| - (l+1)/2
    bool cone_ok = true;           // certificate outcome (false only under ConePolicy::Warn)

    // Derivatives cached for the differential.
    CircleFunction dphi, dq, dr;

    Point2 apply(Point2 z) const {
        double x1 = wrap01(static_cast<double>(l) * z.x);
        double y1 = wrap01(z.y + phi.evaluate(z.x));
        if (perturbation) {
            y1 = wrap01(y1 + perturbation->eps * perturbation->q.evaluate(x1));
            x1 = wrap01(x1 + perturbation->eps * perturbation->r.evaluate(y1));
        }
        return {x1, y1};
    }

    // Dg at z, row-major [a b; c d].
    std::array<double, 4> differential(Point2 z) const {
        const double dl = static_cast<double>(l);
        // Df
        double a = dl, b = 0.0;
        double c = dphi.evaluate(z.x), d = 1.0;
        if (perturbation) {
            const double eps = perturbation->eps;
            const double x1 = wrap01(dl * z.x);
            const double y1 = wrap01(z.y + phi.evaluate(z.x));
            // S1 at (x1, y1): [[1,0],[eps q'(x1),1]]
            const double qd = eps * dq.evaluate(x1);
            double c2 = qd * a + c, d2 = qd * b + d;
            // S2 at (x1, y2): [[1, eps r'(y2)],[0,1]]
            const double y2 = wrap01(y1 + eps * perturbation->q.evaluate(x1));
            const double rd = eps * dr.evaluate(y2);
            const double a3 = a + rd * c2, b3 = b + rd * d2;
            return {a3, b3, c2, d2};
        }
        return {a, b, c, d};
    }
};

// A failed cone certificate refuses the system under Enforce; Warn
// constructs it anyway with cone_ok=false and the margins recorded (some
// shear sizes genuinely destroy every constant invariant cone while leaving
// the volume-preserving dynamics intact).
enum class ConePolicy { Enforce, Warn };

struct BuildConfig {
    int check_grid = 64;       // cone/Jacobian verification grid per axis
    double jacobian_tol = 1e-9;
    ConePolicy cone_policy = ConePolicy::Enforce;
};

// Constructs the system and runs the Jacobian and cone certificates;
// systems violating either are refused (Jacobian always; cone per policy).
inline SkewSystem build_system(int l, CircleFunction phi,
                               std::optional<Perturbation> pert = std::nullopt,
                               const BuildConfig& cfg = {}) {
    if (l < 2) throw std::invalid_argument("build_system: degree must be >= 2");
    if (pert && pert->eps < 0.0)
        throw std::invalid_argument("build_system: eps must be >= 0");
    SkewSystem sys;
    sys.l = l;
    sys.phi = std::move(phi);
    sys.perturbation = std::move(pert);
    sys.dphi = sys.phi.derivative();
    if (sys.perturbation) {
        sys.dq = sys.perturbation->q.derivative();
        sys.dr = sys.perturbation->r.derivative();
    }

    // Horizontal cone {|slope| <= K} with K = sup|phi'|/(l-1) + 1.
    const double K = sys.dphi.l1_norm() / (l - 1) + 1.0;
    sys.cone_slope = K;
    sys.cone_margin = K;
    sys.expansion_margin = l;

    const int G = cfg.check_grid;
    for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
            const Point2 z{static_cast<double>(i) / G, static_cast<double>(j) / G};
            const auto D = sys.differential(z);
            const double det = D[0] * D[3] - D[1] * D[2];
            if (std::abs(det - l) > cfg.jacobian_tol * l)
                throw JacobianError("build_system: Jacobian determinant differs from l");
            for (const double s : {K, -K}) {
                const double wx = D[0] + D[1] * s;
                const double wy = D[2] + D[3] * s;
                const double expansion = std::abs(wx) - 0.5 * (l + 1);
                if (expansion < sys.expansion_margin) sys.expansion_margin = expansion;
                if (expansion <= 0.0) {
                    sys.cone_ok = false;
                    if (cfg.cone_policy == ConePolicy::Enforce)
                        throw ConeViolation(
                            "build_system: horizontal expansion fell below (l+1)/2");
                }
                const double margin =
                    wx != 0.0 ? K - std::abs(wy / wx)
                              : -std::numeric_limits<double>::infinity();
                if (margin < sys.cone_margin) sys.cone_margin = margin;
                if (margin <= 0.0) {
                    sys.cone_ok = false;
                    if (cfg.cone_policy == ConePolicy::Enforce)
                        throw ConeViolation("build_system: cone is not mapped into itself");
                }
            }
        }
    }
    return sys;
}

// Observable in sum-of-products normal form: sum_t w_t f_t(x) g_t(y). The
// space average is exact from coefficients: sum_t w_t f_t_hat(0) g_t_hat(0).
class Observable {
public:
    struct Term {
        double w = 1.0;
        CircleFunction fx, fy;
    };

    Observable() = default;
    Observable(std::string name, std::vector<Term> terms)
        : name_(std::move(name)), terms_(std::move(terms)) {}

    static Observable product(std::string name, CircleFunction fx, CircleFunction fy) {
        return Observable(std::move(name), {{1.0, std::move(fx), std::move(fy)}});
    }

    static Observable constant(double c) {
        return product("constant", CircleFunction::constant(c), CircleFunction::constant(1.0));
    }

    // cos 2 pi (j x + k y) or sin 2 pi (j x + k y) via the addition formulas.
    static Observable character(int j, int k, bool sine_part) {
        auto cosf = [](int n) {
            return n == 0 ? CircleFunction::constant(1.0) : CircleFunction::cosine(n);
        };
        auto sinf = [](int n) {
            return n == 0 ? CircleFunction::zero() : CircleFunction::sine(n);
        };
        std::vector<Term> terms;
        if (!sine_part) {
            terms.push_back({1.0, cosf(j), cosf(k)});
            terms.push_back({-1.0, sinf(j), sinf(k)});
        } else {
            terms.push_back({1.0, sinf(j), cosf(k)});
            terms.push_back({1.0, cosf(j), sinf(k)});
        }
        std::string name = (sine_part ? std::string("sin2pi(") : std::string("cos2pi(")) +
                           std::to_string(j) + "x" + (k >= 0 ? "+" : "") + std::to_string(k) +
                           "y)";
        return Observable(std::move(name), std::move(terms));
    }

    double eval(Point2 z) const {
        double v = 0.0;
        for (const auto& t : terms_) {
            if (t.fx.is_zero() || t.fy.is_zero()) continue;
            v += t.w * t.fx.evaluate(z.x) * t.fy.evaluate(z.y);
        }
        return v;
    }

    double space_average() const {
        double v = 0.0;
        for (const auto& t : terms_) v += t.w * t.fx.mean() * t.fy.mean();
        return v;
    }

    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::vector<Term> terms_;
};

// The low-degree character set used by the ergodicity experiments.
inline std::vector<Observable> standard_observables() {
    return {Observable::character(1, 0, false), Observable::character(0, 1, true),
            Observable::character(1, 1, false), Observable::character(2, -1, true),
            Observable::character(1, -2, false)};
}

// Exact sliding-window representation of a generic point's base orbit.
//
// Iterating T(x) = l x (mod 1) directly on doubles collapses every start
// onto the dyadic fixed point within ~53/log2(l) steps (the mantissa is a
// finite digit string and T is the digit shift), which silently freezes
// long experiments. A generic point has an infinite digit stream; this
// class keeps the next W base-l digits as one integer, shifts exactly, and
// draws fresh digits lazily, so x_n is correct to l^-W at every depth.
class GenericBasePoint {
public:
    GenericBasePoint(int l, std::uint64_t digit_seed) : l_(l), digits_{digit_seed} {
        if (l < 2) throw std::invalid_argument("GenericBasePoint: degree must be >= 2");
        window_ = 1;
        std::int64_t s = l;
        while (s <= (std::int64_t{1} << 62) / l) {
            s *= l;
            ++window_;
        }
        scale_ = s;
        mod_ = s / l;
        state_ = 0;
        for (int i = 0; i < window_; ++i) state_ = state_ * l + next_digit_();
    }

    // Starts at the given double's leading digits and continues with the
    // seeded stream once they are exhausted.
    static GenericBasePoint from_double(int l, double x0, std::uint64_t continuation_seed) {
        GenericBasePoint p(l, continuation_seed);
        double t = x0 - std::floor(x0);
        std::int64_t s = 0;
        for (int i = 0; i < p.window_; ++i) {
            t *= l;
            int d = static_cast<int>(t);
            d = std::min(d, l - 1);
            t -= d;
            s = s * l + d;
        }
        p.state_ = s;
        return p;
    }

    double value() const { return static_cast<double>(state_) / static_cast<double>(scale_); }

    void advance() { state_ = (state_ % mod_) * l_ + next_digit_(); }

private:
    std::int64_t next_digit_() { return static_cast<std::int64_t>(digits_() % l_); }

    int l_;
    int window_ = 0;
    std::int64_t scale_ = 0, mod_ = 0, state_ = 0;
    SplitMix64 digits_;
};

inline std::vector<Point2> iterate(const SkewSystem& sys, Point2 z, int n, int stride = 1) {
    if (n < 1) throw std::invalid_argument("iterate: n must be >= 1");
    if (stride < 1) throw std::invalid_argument("iterate: stride must be >= 1");
    std::vector<Point2> orbit;
    orbit.reserve(static_cast<std::size_t>(n / stride) + 1);
    for (int i = 0; i < n; ++i) {
        if (i % stride == 0) orbit.push_back(z);
        z = sys.apply(z);
    }
    return orbit;
}

// How the base coordinate of a long orbit is represented. Literal iterates
// the given double (exact for short demonstration orbits, but dyadic starts
// collapse after ~53/log2(l) steps); Generic extends the start's digits
// with a seeded stream, modeling a generic point. Perturbed systems never
// collapse (the shear reinjects low-order bits), so Generic applies to the
// unperturbed skew product only.
enum class BaseLift { Literal, Generic };

inline double birkhoff_average(const SkewSystem& sys, const Observable& obs, Point2 z0,
                               std::int64_t n, BaseLift lift = BaseLift::Literal,
                               std::uint64_t lift_seed = 0x5eed) {
    if (n < 1) throw std::invalid_argument("birkhoff_average: n must be >= 1");
    double sum = 0.0;
    if (lift == BaseLift::Generic) {
        if (sys.perturbation)
            throw std::invalid_argument(
                "birkhoff_average: the generic base lift applies to unperturbed systems");
        auto base = GenericBasePoint::from_double(sys.l, z0.x, lift_seed);
        double y = z0.y;
        for (std::int64_t i = 0; i < n; ++i) {
            const double x = base.value();
            sum += obs.eval({x, y});
            y = wrap01(y + sys.phi.evaluate(x));
            base.advance();
        }
        return sum / static_cast<double>(n);
    }
    Point2 z = z0;
    for (std::int64_t i = 0; i < n; ++i) {
        sum += obs.eval(z);
        z = sys.apply(z);
    }
    return sum / static_cast<double>(n);
}

struct ErgodicityReport {
    std::vector<std::string> observable_names;
    std::vector<double> space_averages;
    std::vector<Point2> starts;
    // time_averages[o][m]: observable o, start m
    std::vector<std::vector<double>> time_averages;
    double max_deviation = 0.0;
    std::vector<double> dispersion;  // per-observable std of time averages across starts
    std::int64_t n = 0;
    std::uint64_t seed = 0;
};

// M seeded uniform starts, n-step Birkhoff averages for every observable.
// deviation = max |time average - space average|; dispersion = per-observable
// standard deviation across starts (the non-ergodicity indicator).
// Unperturbed systems run on the generic digit stream so long orbits do not
// collapse onto the dyadic fixed point; perturbed systems iterate literally
// (the shear keeps the base coordinate generic).
inline ErgodicityReport ergodicity_score(const SkewSystem& sys,
                                         const std::vector<Observable>& observables,
                                         int M, std::int64_t n, std::uint64_t seed,
                                         int threads = 1) {
    if (M < 2) throw std::invalid_argument("ergodicity_score: need at least 2 starts");
    ErgodicityReport rep;
    rep.n = n;
    rep.seed = seed;
    for (const auto& o : observables) {
        rep.observable_names.push_back(o.name());
        rep.space_averages.push_back(o.space_average());
    }
    rep.starts.resize(static_cast<std::size_t>(M));
    rep.time_averages.assign(observables.size(), std::vector<double>(static_cast<std::size_t>(M)));

    auto rows = run_shards<std::vector<double>>(M, threads, [&](std::int64_t m) {
        auto rng = substream(seed, static_cast<std::uint64_t>(m));
        const double y0 = uniform01(rng);
        std::vector<double> sums(observables.size(), 0.0);
        double x0;
        if (!sys.perturbation) {
            GenericBasePoint base(sys.l, rng());
            x0 = base.value();
            double y = y0;
            for (std::int64_t i = 0; i < n; ++i) {
                const Point2 w{base.value(), y};
                for (std::size_t o = 0; o < observables.size(); ++o)
                    sums[o] += observables[o].eval(w);
                y = wrap01(y + sys.phi.evaluate(w.x));
                base.advance();
            }
        } else {
            Point2 z{uniform01(rng), y0};
            x0 = z.x;
            Point2 w = z;
            for (std::int64_t i = 0; i < n; ++i) {
                for (std::size_t o = 0; o < observables.size(); ++o)
                    sums[o] += observables[o].eval(w);
                w = sys.apply(w);
            }
        }
        std::vector<double> out;
        out.reserve(observables.size() + 2);
        out.push_back(x0);
        out.push_back(y0);
        for (double s : sums) out.push_back(s / static_cast<double>(n));
        return out;
    });

    for (int m = 0; m < M; ++m) {
        const auto& row = rows[static_cast<std::size_t>(m)];
        rep.starts[static_cast<std::size_t>(m)] = {row[0], row[1]};
        for (std::size_t o = 0; o < observables.size(); ++o) {
            const double ta = row[o + 2];
            rep.time_averages[o][static_cast<std::size_t>(m)] = ta;
            rep.max_deviation =
                std::max(rep.max_deviation, std::abs(ta - rep.space_averages[o]));
        }
    }
    for (std::size_t o = 0; o < observables.size(); ++o) {
        double mean = 0.0;
        for (double v : rep.time_averages[o]) mean += v;
        mean /= M;
        double ss = 0.0;
        for (double v : rep.time_averages[o]) ss += (v - mean) * (v - mean);
        rep.dispersion.push_back(std::sqrt(ss / (M - 1)));
    }
    return rep;
}

struct MixingReport {
    std::vector<double> correlation;  // C_1..C_{n_max}
    std::vector<double> std_error;
    std::optional<double> rate;  // slope of linear fit to log|C_n| on usable points
    int usable_points = 0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

// C_n = < psi * (chi o f^n) > - <psi><chi> by Monte Carlo, estimated in the
// centered form <(psi - psi_bar)(chi o f^n - chi_bar)> with the exact space
// averages from coefficients (a constant factor then gives exactly zero).
// The fitted exponential rate uses only points with |C_n| > 3 standard
// errors; fewer than 3 such points leaves the rate unavailable.
inline MixingReport correlation_sequence(const SkewSystem& sys, const Observable& psi,
                                         const Observable& chi, int n_max,
                                         const SamplerConfig& cfg = {}) {
    if (n_max < 1) throw std::invalid_argument("correlation_sequence: n_max must be >= 1");
    const std::int64_t n_shards = (cfg.samples + cfg.shard_size - 1) / cfg.shard_size;
    const double psi_bar = psi.space_average();
    const double chi_bar = chi.space_average();
    struct Acc {
        std::vector<double> sum, sumsq;
    };
    auto partials = run_shards<Acc>(n_shards, cfg.threads, [&](std::int64_t shard) {
        auto rng = substream(cfg.seed, static_cast<std::uint64_t>(shard));
        const std::int64_t lo = shard * cfg.shard_size;
        const std::int64_t hi = std::min(cfg.samples, lo + cfg.shard_size);
        Acc acc{std::vector<double>(static_cast<std::size_t>(n_max), 0.0),
                std::vector<double>(static_cast<std::size_t>(n_max), 0.0)};
        for (std::int64_t i = lo; i < hi; ++i) {
            Point2 z{uniform01(rng), uniform01(rng)};
            const double a = psi.eval(z) - psi_bar;
            Point2 w = z;
            for (int n = 1; n <= n_max; ++n) {
                w = sys.apply(w);
                const double p = a * (chi.eval(w) - chi_bar);
                acc.sum[static_cast<std::size_t>(n - 1)] += p;
                acc.sumsq[static_cast<std::size_t>(n - 1)] += p * p;
            }
        }
        return acc;
    });

    MixingReport rep;
    rep.samples = cfg.samples;
    rep.seed = cfg.seed;
    const double N = static_cast<double>(cfg.samples);
    rep.correlation.resize(static_cast<std::size_t>(n_max));
    rep.std_error.resize(static_cast<std::size_t>(n_max));
    for (int n = 0; n < n_max; ++n) {
        double s = 0.0, s2 = 0.0;
        for (const auto& acc : partials) {
            s += acc.sum[static_cast<std::size_t>(n)];
            s2 += acc.sumsq[static_cast<std::size_t>(n)];
        }
        const double mean = s / N;
        const double var = std::max(0.0, s2 / N - mean * mean);
        rep.correlation[static_cast<std::size_t>(n)] = mean;
        rep.std_error[static_cast<std::size_t>(n)] = std::sqrt(var / N);
    }

    // Least-squares fit of log|C_n| over n where the signal clears 3 sigma.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int n = 1; n <= n_max; ++n) {
        const double c = rep.correlation[static_cast<std::size_t>(n - 1)];
        const double se = rep.std_error[static_cast<std::size_t>(n - 1)];
        if (std::abs(c) > 3.0 * se && c != 0.0) {
            const double lx = static_cast<double>(n), ly = std::log(std::abs(c));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++m;
        }
    }
    rep.usable_points = m;
    if (m >= 3) {
        const double denom = m * sxx - sx * sx;
        if (denom > 0) rep.rate = (m * sxy - sx * sy) / denom;
    }
    return rep;
}

struct InvariantWitness {
    double value = 0.0;            // psi(x, y) = (c x - d y) mod 1
    double invariance_error = 0.0; // torus distance |psi(f_tau z) - psi(z)|
    std::int64_t c = 0, d = 0;
};

// The explicit non-ergodicity witness for the linear model
// f_tau(x,y) = (l x, y + a x + b) with b = m/n rational:
//     psi(x,y) = (c x - d y) mod 1, c = a n, d = (l-1) n,
// is f_tau-invariant exactly.
inline InvariantWitness invariant_witness_value(int l, std::int64_t a, std::int64_t b_num,
                                                std::int64_t b_den, Point2 z) {
    if (b_den <= 0) throw NonRational("invariant_witness_value: denominator must be positive");
    InvariantWitness w;
    w.c = a * b_den;
    w.d = static_cast<std::int64_t>(l - 1) * b_den;
    auto psi = [&](Point2 p) {
        return wrap01(static_cast<double>(w.c) * p.x - static_cast<double>(w.d) * p.y);
    };
    w.value = psi(z);
    const double b = static_cast<double>(b_num) / static_cast<double>(b_den);
    const Point2 fz{wrap01(l * z.x), wrap01(z.y + a * z.x + b)};
    const double diff = std::abs(psi(fz) - w.value);
    w.invariance_error = std::min(diff, 1.0 - diff);
    return w;
}

}  // namespace skewlab

#pragma once

// Finite Fourier series on the circle: the function algebra carrying phi,
// its derivative, the transfer solutions u and theta, and experiment
// observables.
//
// Coefficient convention (fixed; every solver equation depends on it):
//     c(k) = integral_0^1 f(x) e^{-2 pi i k x} dx,
// so  f(x) = sum_k c(k) e^{2 pi i k x}.
// Real functions satisfy c(-k) = conj(c(k)).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace skewlab {

class InsufficientSamples : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class CircleFunction {
public:
    using CoeffMap = std::map<int, std::complex<double>>;

    CircleFunction() { rebuild_(); }

    // realness=true enforces conjugate symmetry (and a real mean) at
    // construction; violations beyond `symmetry_tol` are rejected.
    explicit CircleFunction(CoeffMap coeffs, bool realness = true,
                            double symmetry_tol = 1e-12)
        : coeffs_(std::move(coeffs)), real_(realness) {
        prune_exact_zeros_();
        if (real_) enforce_realness_(symmetry_tol);
        rebuild_();
    }

    static CircleFunction zero() { return CircleFunction(); }

    static CircleFunction constant(double c) {
        CoeffMap m;
        if (c != 0.0) m[0] = c;
        return CircleFunction(std::move(m));
    }

    // amp * cos(2 pi n x)
    static CircleFunction cosine(int n, double amp = 1.0) {
        CoeffMap m;
        if (amp != 0.0 && n != 0) {
            m[n] = amp / 2.0;
            m[-n] = amp / 2.0;
        } else if (amp != 0.0) {
            m[0] = amp;
        }
        return CircleFunction(std::move(m));
    }

    // amp * sin(2 pi n x)
    static CircleFunction sine(int n, double amp = 1.0) {
        CoeffMap m;
        if (amp != 0.0 && n != 0) {
            m[n] = std::complex<double>(0.0, -amp / 2.0);
            m[-n] = std::complex<double>(0.0, amp / 2.0);
        }
        return CircleFunction(std::move(m));
    }

    const CoeffMap& coeffs() const { return coeffs_; }
    bool is_real() const { return real_; }
    bool is_zero() const { return coeffs_.empty(); }

    std::complex<double> coeff(int k) const {
        auto it = coeffs_.find(k);
        return it == coeffs_.end() ? std::complex<double>(0.0) : it->second;
    }

    // Largest |k| in the support.
    int max_frequency() const {
        int m = 0;
        for (const auto& [k, c] : coeffs_) m = std::max(m, std::abs(k));
        return m;
    }

    double mean() const { return coeff(0).real(); }

    std::complex<double> evaluate_complex(double x) const {
        if (dense_.empty()) return 0.0;
        const std::complex<double> z = std::polar(1.0, kTwoPi * x);
        // Nonnegative frequencies by Horner in z, negative in conj(z).
        std::complex<double> pos = 0.0;
        for (int k = kmax_; k >= 0; --k) pos = pos * z + dense_at_(k);
        std::complex<double> neg = 0.0;
        const std::complex<double> w = std::conj(z);
        for (int k = kmin_; k <= -1; ++k) neg = neg * w + dense_at_(k);
        if (kmin_ <= -1) neg *= w;
        return pos + neg;
    }

    double evaluate(double x) const { return evaluate_complex(x).real(); }

    CircleFunction derivative() const {
        CoeffMap m;
        for (const auto& [k, c] : coeffs_)
            if (k != 0) m[k] = std::complex<double>(0.0, kTwoPi * k) * c;
        return CircleFunction(std::move(m), real_);
    }

    // Antiderivative with zero mean (defined on nonzero frequencies only;
    // requires mean() == 0 for an actual primitive).
    CircleFunction antiderivative_zero_mean() const {
        CoeffMap m;
        for (const auto& [k, c] : coeffs_)
            if (k != 0) m[k] = c / std::complex<double>(0.0, kTwoPi * k);
        return CircleFunction(std::move(m), real_);
    }

    // f(l x): frequency k moves to l k.
    CircleFunction compose_with_scaling(int l) const {
        CoeffMap m;
        for (const auto& [k, c] : coeffs_) m[k * l] = c;
        return CircleFunction(std::move(m), real_);
    }

    friend CircleFunction operator+(const CircleFunction& a, const CircleFunction& b) {
        CoeffMap m = a.coeffs_;
        for (const auto& [k, c] : b.coeffs_) m[k] += c;
        return CircleFunction(std::move(m), a.real_ && b.real_);
    }
    friend CircleFunction operator-(const CircleFunction& a, const CircleFunction& b) {
        CoeffMap m = a.coeffs_;
        for (const auto& [k, c] : b.coeffs_) m[k] -= c;
        return CircleFunction(std::move(m), a.real_ && b.real_);
    }
    friend CircleFunction operator*(double s, const CircleFunction& f) {
        CoeffMap m;
        for (const auto& [k, c] : f.coeffs_) m[k] = s * c;
        return CircleFunction(std::move(m), f.real_);
    }

    // Coefficient l^1 norm: a certified upper bound for sup |f|.
    double l1_norm() const {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) s += std::abs(c);
        return s;
    }

    // Certified Lipschitz upper bound: l^1 norm of the derivative.
    double lipschitz_bound() const {
        double s = 0.0;
        for (const auto& [k, c] : coeffs_) s += kTwoPi * std::abs(k) * std::abs(c);
        return s;
    }

private:
    std::complex<double> dense_at_(int k) const {
        return dense_[static_cast<std::size_t>(k - kmin_)];
    }

    void prune_exact_zeros_() {
        for (auto it = coeffs_.begin(); it != coeffs_.end();)
            it = (it->second == std::complex<double>(0.0)) ? coeffs_.erase(it)
                                                           : std::next(it);
    }

    void enforce_realness_(double tol) {
        for (const auto& [k, c] : coeffs_) {
            const std::complex<double> mirror = coeff(-k);
            if (std::abs(mirror - std::conj(c)) > tol)
                throw std::invalid_argument(
                    "CircleFunction: realness flag set but coefficients are not "
                    "conjugate-symmetric");
        }
        // Make the symmetry exact: average each (k, -k) pair.
        CoeffMap sym;
        for (const auto& [k, c] : coeffs_) {
            const int a = std::abs(k);
            if (sym.count(a) || sym.count(-a)) continue;
            if (a == 0) {
                if (c.real() != 0.0) sym[0] = c.real();
                continue;
            }
            const std::complex<double> cpos = (k > 0) ? c : coeff(a);
            const std::complex<double> cneg = (k > 0) ? coeff(-a) : c;
            const std::complex<double> v = 0.5 * (cpos + std::conj(cneg));
            if (v != std::complex<double>(0.0)) {
                sym[a] = v;
                sym[-a] = std::conj(v);
            }
        }
        coeffs_ = std::move(sym);
    }

    void rebuild_() {
        kmin_ = 0;
        kmax_ = 0;
        for (const auto& [k, c] : coeffs_) {
            kmin_ = std::min(kmin_, k);
            kmax_ = std::max(kmax_, k);
        }
        dense_.assign(static_cast<std::size_t>(kmax_ - kmin_ + 1), 0.0);
        for (const auto& [k, c] : coeffs_)
            dense_[static_cast<std::size_t>(k - kmin_)] = c;
        if (coeffs_.empty()) dense_.clear();
    }

    CoeffMap coeffs_;
    bool real_ = true;
    int kmin_ = 0, kmax_ = 0;
    std::vector<std::complex<double>> dense_;  // evaluation cache
};

struct SupNormBound {
    double upper = 0.0;     // certified: sup|f| <= upper (coefficient l^1 bound)
    double grid_max = 0.0;  // dense-sampling lower estimate, for reporting
};

inline SupNormBound sup_norm(const CircleFunction& f, int grid = 4096) {
    SupNormBound b;
    b.upper = f.l1_norm();
    for (int i = 0; i < grid; ++i)
        b.grid_max = std::max(b.grid_max, std::abs(f.evaluate(static_cast<double>(i) / grid)));
    return b;
}

struct FitResult {
    CircleFunction f;
    double aliasing_residual = 0.0;  // max mismatch against the input samples
};

// Degree-K trigonometric interpolant of N equispaced samples f(j/N) via the
// discrete Fourier transform. Frequencies above K are not representable and
// surface as a nonzero aliasing residual rather than vanishing silently.
inline FitResult fit_from_samples(const std::vector<double>& samples, int K,
                                  int max_degree_cap = 0) {
    const int N = static_cast<int>(samples.size());
    if (K < 0) throw std::invalid_argument("fit_from_samples: K must be >= 0");
    if (N < 2 * K + 1)
        throw InsufficientSamples("fit_from_samples: need N >= 2K+1 samples");
    if (max_degree_cap > 0 && K > max_degree_cap)
        throw std::invalid_argument("fit_from_samples: K exceeds configured max degree");

    // Exact twiddle indexing: e^{-2 pi i m / N} from a single table.
    std::vector<std::complex<double>> root(static_cast<std::size_t>(N));
    for (int m = 0; m < N; ++m)
        root[static_cast<std::size_t>(m)] = std::polar(1.0, -kTwoPi * m / N);

    // DFT rounding leaves O(N eps max|f|) garbage on absent frequencies;
    // coefficients below that backward-error floor are dropped.
    double scale = 0.0;
    for (double s : samples) scale = std::max(scale, std::abs(s));
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * scale;

    CircleFunction::CoeffMap coeffs;
    for (int k = 0; k <= K; ++k) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < N; ++j)
            acc += samples[static_cast<std::size_t>(j)] *
                   root[static_cast<std::size_t>((static_cast<long long>(k) * j) % N)];
        acc /= static_cast<double>(N);
        if (std::abs(acc) <= floor) continue;
        if (k == 0) {
            coeffs[0] = std::complex<double>(acc.real(), 0.0);
        } else {
            coeffs[k] = acc;
            coeffs[-k] = std::conj(acc);
        }
    }
    FitResult r{CircleFunction(std::move(coeffs)), 0.0};
    for (int j = 0; j < N; ++j) {
        const double err =
            std::abs(r.f.evaluate(static_cast<double>(j) / N) - samples[static_cast<std::size_t>(j)]);
        r.aliasing_residual = std::max(r.aliasing_residual, err);
    }
    return r;
}

}  // namespace skewlab

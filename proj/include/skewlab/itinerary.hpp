#pragma once

// Symbolic space Sigma_l = {0,...,l-1}^N of inverse-branch itineraries,
// represented as a finite prefix followed by a periodic tail (all-zeros by
// default). Every construction used numerically depends on a finite prefix
// plus a tail bound, so eventually-periodic sequences suffice.
//
// The metric is d(a,b) = sum_{i>=1} |a_i - b_i| / l^i, computed exactly on
// the prefix + periodic-tail representation.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "skewlab/rational.hpp"

namespace skewlab {

class DegreeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Itinerary {
public:
    // Prefix digits followed by an infinitely repeated tail block.
    Itinerary(int l, std::vector<int> prefix, std::vector<int> tail = {0})
        : l_(l), prefix_(std::move(prefix)), tail_(std::move(tail)) {
        if (l_ < 2) throw std::invalid_argument("Itinerary: degree must be >= 2");
        if (tail_.empty()) tail_ = {0};
        check_digits_(prefix_);
        check_digits_(tail_);
        normalize_();
    }

    static Itinerary zeros(int l) { return Itinerary(l, {}, {0}); }
    static Itinerary ones(int l) { return Itinerary(l, {}, {1}); }
    static Itinerary constant(int l, int digit) { return Itinerary(l, {}, {digit}); }

    // Uniform i.i.d. digits (the Bernoulli measure on Sigma_l), frozen to a
    // finite prefix of the given length with an all-zeros tail.
    template <typename Rng>
    static Itinerary random(int l, std::size_t prefix_len, Rng& rng) {
        std::uniform_int_distribution<int> d(0, l - 1);
        std::vector<int> p(prefix_len);
        for (auto& x : p) x = d(rng);
        return Itinerary(l, std::move(p));
    }

    int degree() const { return l_; }
    const std::vector<int>& prefix() const { return prefix_; }
    const std::vector<int>& tail() const { return tail_; }

    // 1-based digit access, matching the index convention a = (a_1, a_2, ...).
    int digit(std::size_t i) const {
        if (i == 0) throw std::out_of_range("Itinerary::digit: indices start at 1");
        std::size_t k = i - 1;
        if (k < prefix_.size()) return prefix_[k];
        return tail_[(k - prefix_.size()) % tail_.size()];
    }

    // Equality of digit streams; representations are canonical after
    // construction, so structural comparison suffices.
    friend bool operator==(const Itinerary& a, const Itinerary& b) {
        return a.l_ == b.l_ && a.prefix_ == b.prefix_ && a.tail_ == b.tail_;
    }
    friend bool operator!=(const Itinerary& a, const Itinerary& b) { return !(a == b); }

    std::string str() const {
        std::string s;
        for (int d : prefix_) s += std::to_string(d);
        s += ":";
        for (int d : tail_) s += std::to_string(d);
        return s;
    }

private:
    void check_digits_(const std::vector<int>& v) const {
        for (int d : v)
            if (d < 0 || d >= l_)
                throw std::invalid_argument("Itinerary: digit out of {0,...,l-1}");
    }

    // Canonical form: primitive tail period, then absorb prefix digits that
    // merely repeat the tail.
    void normalize_() {
        for (std::size_t p = 1; p < tail_.size(); ++p) {
            if (tail_.size() % p != 0) continue;
            bool periodic = true;
            for (std::size_t i = p; i < tail_.size() && periodic; ++i)
                periodic = (tail_[i] == tail_[i % p]);
            if (periodic) {
                tail_.resize(p);
                break;
            }
        }
        while (!prefix_.empty() && prefix_.back() == tail_.back()) {
            prefix_.pop_back();
            std::rotate(tail_.rbegin(), tail_.rbegin() + 1, tail_.rend());
        }
    }

    int l_;
    std::vector<int> prefix_;
    std::vector<int> tail_;
};

// d(a,b) = sum_{i>=1} |a_i - b_i| / l^i, exact. The digit difference stream
// is eventually periodic, so the sum splits into a finite part plus a
// geometric tail with denominator l^P - 1.
inline Rational itinerary_distance(const Itinerary& a, const Itinerary& b) {
    if (a.degree() != b.degree())
        throw DegreeMismatch("itinerary_distance: degrees differ");
    const std::int64_t l = a.degree();

    const std::size_t la = a.prefix().size(), lb = b.prefix().size();
    const std::size_t L = std::max(la, lb);
    const std::size_t Pa = a.tail().size(), Pb = b.tail().size();
    const std::size_t P = std::lcm(Pa, Pb);

    Rational sum(0);
    Rational weight(1, l);  // 1/l^i
    for (std::size_t i = 1; i <= L; ++i) {
        int d = std::abs(a.digit(i) - b.digit(i));
        if (d != 0) sum += Rational(d) * weight;
        weight = weight * Rational(1, l);
    }
    // Tail block starting at index L+1, repeating with period P:
    // sum_{m>=0} block / l^{mP} = block * l^P / (l^P - 1).
    Rational block(0);
    Rational w = weight;
    for (std::size_t j = 1; j <= P; ++j) {
        int d = std::abs(a.digit(L + j) - b.digit(L + j));
        if (d != 0) block += Rational(d) * w;
        w = w * Rational(1, l);
    }
    if (block != Rational(0)) {
        const std::int64_t lP = ipow_checked(l, static_cast<int>(P));
        sum += block * Rational(lP, lP - 1);
    }
    return sum;
}

}  // namespace skewlab

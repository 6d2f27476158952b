#pragma once

// Ingestion formats:
//   - JSON function spec: { "l": int, "fourier": [[k, re, im], ...] },
//     conjugate symmetry enforced (rejected otherwise), support capped by a
//     configurable max degree.
//   - Shorthand: "0.5*sin", "cos2 - cos1" (cos 4 pi x - cos 2 pi x),
//     "constant:c"; sinN/cosN mean sin/cos of 2 pi N x.
//   - Itineraries: digit string "110", optional periodic tail "11:01",
//     aliases "zeros" / "ones".
//   - Observables: "cos:j,k" / "sin:j,k" for cos/sin 2 pi (j x + k y),
//     or "standard" for the standard five-character set.

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewlab/ergodicity.hpp"
#include "skewlab/fourier.hpp"
#include "skewlab/itinerary.hpp"

namespace skewlab {

class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kDefaultMaxDegree = 64;

struct FunctionSpec {
    int l = 2;
    CircleFunction f;
};

inline FunctionSpec function_from_json(const nlohmann::json& j,
                                       int max_degree = kDefaultMaxDegree) {
    if (!j.contains("l") || !j["l"].is_number_integer())
        throw SpecError("function spec: missing integer field 'l'");
    if (!j.contains("fourier") || !j["fourier"].is_array())
        throw SpecError("function spec: missing array field 'fourier'");
    FunctionSpec spec;
    spec.l = j["l"].get<int>();
    if (spec.l < 2) throw SpecError("function spec: l must be >= 2");
    CircleFunction::CoeffMap coeffs;
    for (const auto& row : j["fourier"]) {
        if (!row.is_array() || row.size() != 3)
            throw SpecError("function spec: fourier rows must be [k, re, im]");
        const int k = row[0].get<int>();
        if (std::abs(k) > max_degree)
            throw SpecError("function spec: frequency exceeds configured max degree");
        coeffs[k] += std::complex<double>(row[1].get<double>(), row[2].get<double>());
    }
    try {
        spec.f = CircleFunction(std::move(coeffs), true);
    } catch (const std::invalid_argument& e) {
        throw SpecError(std::string("function spec: ") + e.what());
    }
    return spec;
}

inline nlohmann::json function_to_json(const CircleFunction& f, int l) {
    nlohmann::json j;
    j["l"] = l;
    auto rows = nlohmann::json::array();
    for (const auto& [k, c] : f.coeffs())
        rows.push_back(nlohmann::json::array({k, c.real(), c.imag()}));
    j["fourier"] = rows;
    return j;
}

inline FunctionSpec load_function_spec(const std::string& path,
                                       int max_degree = kDefaultMaxDegree) {
    std::ifstream in(path);
    if (!in) throw SpecError("function spec: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("function spec: bad JSON: ") + e.what());
    }
    return function_from_json(j, max_degree);
}

namespace detail {

// term := [number '*'] (sin|cos)[N]  |  number
inline CircleFunction parse_phi_term(const std::string& term, int max_degree) {
    std::string s;
    for (char ch : term)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw SpecError("phi spec: empty term");

    double coef = 1.0;
    std::size_t pos = s.find('*');
    std::string fn = s;
    if (pos != std::string::npos) {
        try {
            std::size_t used = 0;
            coef = std::stod(s.substr(0, pos), &used);
            if (used != pos) throw SpecError("phi spec: bad coefficient in '" + term + "'");
        } catch (const std::exception&) {
            throw SpecError("phi spec: bad coefficient in '" + term + "'");
        }
        fn = s.substr(pos + 1);
    }
    if (fn.rfind("sin", 0) == 0 || fn.rfind("cos", 0) == 0) {
        const bool is_sin = fn[0] == 's';
        int n = 1;
        if (fn.size() > 3) {
            try {
                std::size_t used = 0;
                n = std::stoi(fn.substr(3), &used);
                if (used != fn.size() - 3) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw SpecError("phi spec: bad harmonic in '" + term + "'");
            }
        }
        if (n < 1 || n > max_degree)
            throw SpecError("phi spec: harmonic out of range in '" + term + "'");
        return is_sin ? CircleFunction::sine(n, coef) : CircleFunction::cosine(n, coef);
    }
    // bare number: a constant term
    try {
        std::size_t used = 0;
        const double v = std::stod(fn, &used);
        if (used != fn.size()) throw std::invalid_argument("");
        return CircleFunction::constant(coef * v);
    } catch (const std::exception&) {
        throw SpecError("phi spec: cannot parse term '" + term + "'");
    }
}

}  // namespace detail

// Shorthand parser; "@path" defers to the JSON function-spec file (the
// caller checks the file's declared l).
inline CircleFunction parse_phi(const std::string& spec,
                                int max_degree = kDefaultMaxDegree) {
    if (spec.rfind("constant:", 0) == 0) {
        try {
            return CircleFunction::constant(std::stod(spec.substr(9)));
        } catch (const std::exception&) {
            throw SpecError("phi spec: bad constant in '" + spec + "'");
        }
    }
    CircleFunction f = CircleFunction::zero();
    std::string term;
    double sign = 1.0;
    bool expecting_term_start = true;
    for (std::size_t i = 0; i <= spec.size(); ++i) {
        const char ch = i < spec.size() ? spec[i] : '\0';
        const bool is_op = (ch == '+' || ch == '-') && !expecting_term_start;
        if (ch == '\0' || is_op) {
            if (term.find_first_not_of(" \t") == std::string::npos)
                throw SpecError("phi spec: empty term in '" + spec + "'");
            f = f + sign * detail::parse_phi_term(term, max_degree);
            term.clear();
            sign = (ch == '-') ? -1.0 : 1.0;
            expecting_term_start = true;
        } else {
            term += ch;
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                // a leading +/- is part of the term (e.g. "-0.5*sin")
                expecting_term_start = (ch == '+' || ch == '-') && expecting_term_start;
            }
        }
    }
    return f;
}

inline Itinerary parse_itinerary(const std::string& spec, int l) {
    if (spec == "zeros") return Itinerary::zeros(l);
    if (spec == "ones") {
        if (l < 2) throw SpecError("itinerary: degree too small for 'ones'");
        return Itinerary::ones(l);
    }
    std::vector<int> prefix, tail;
    bool in_tail = false;
    for (char ch : spec) {
        if (ch == ':') {
            if (in_tail) throw SpecError("itinerary: more than one ':' in '" + spec + "'");
            in_tail = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw SpecError("itinerary: bad digit in '" + spec + "'");
        const int d = ch - '0';
        if (d >= l) throw SpecError("itinerary: digit out of range in '" + spec + "'");
        (in_tail ? tail : prefix).push_back(d);
    }
    if (tail.empty()) tail = {0};
    return Itinerary(l, std::move(prefix), std::move(tail));
}

inline Observable parse_observable(const std::string& spec) {
    const bool is_cos = spec.rfind("cos:", 0) == 0;
    const bool is_sin = spec.rfind("sin:", 0) == 0;
    if (!is_cos && !is_sin)
        throw SpecError("observable: expected 'cos:j,k' or 'sin:j,k', got '" + spec + "'");
    const std::string body = spec.substr(4);
    const std::size_t comma = body.find(',');
    if (comma == std::string::npos)
        throw SpecError("observable: expected 'j,k' in '" + spec + "'");
    try {
        std::size_t u1 = 0, u2 = 0;
        const int j = std::stoi(body.substr(0, comma), &u1);
        const int k = std::stoi(body.substr(comma + 1), &u2);
        if (u1 != comma || u2 != body.size() - comma - 1) throw std::invalid_argument("");
        return Observable::character(j, k, is_sin);
    } catch (const std::exception&) {
        throw SpecError("observable: bad frequencies in '" + spec + "'");
    }
}

inline std::vector<Observable> parse_observable_set(const std::string& spec) {
    if (spec == "standard") return standard_observables();
    std::vector<Observable> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';'))
        if (!item.empty()) out.push_back(parse_observable(item));
    if (out.empty()) throw SpecError("observable: empty set '" + spec + "'");
    return out;
}

// "m/n" or an integer.
inline std::pair<std::int64_t, std::int64_t> parse_rational(const std::string& s) {
    try {
        const std::size_t slash = s.find('/');
        if (slash == std::string::npos) {
            std::size_t used = 0;
            const std::int64_t v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument("");
            return {v, 1};
        }
        std::size_t u1 = 0, u2 = 0;
        const std::int64_t num = std::stoll(s.substr(0, slash), &u1);
        const std::int64_t den = std::stoll(s.substr(slash + 1), &u2);
        if (u1 != slash || u2 != s.size() - slash - 1 || den <= 0)
            throw std::invalid_argument("");
        return {num, den};
    } catch (const std::exception&) {
        throw NonRational("expected a rational 'm/n', got '" + s + "'");
    }
}

}  // namespace skewlab

// skewlab command-line front end.
//
// Subcommands: classify, coboundary, livsic, eta, hvalue, witness, leaf,
// reindex, cylinder, birkhoff, ergodicity, mixing, invariant-witness.
// Every command prints a one-line verdict and can emit a JSON summary and
// CSV data tables. Exit codes: 0 success, 2 validation error, 3 budget
// exhausted / witness not found, 4 internal inconsistency.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "skewlab/cohomology.hpp"
#include "skewlab/function_spec.hpp"
#include "skewlab/inverse_limit.hpp"
#include "skewlab/report.hpp"
#include "skewlab/unstable.hpp"

using nlohmann::json;
using namespace skewlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;
constexpr int kExitInconsistent = 4;

struct CommonOpts {
    int l = 2;
    std::string phi_spec = "constant:0";
    std::string json_path;
    std::string csv_path;
    std::uint64_t seed = 12345;
    int threads = 0;  // resolved against SKEWLAB_THREADS / 1
    std::string config_path;
    json config;  // loaded from --config, merged under explicit flags
};

int default_threads() {
    if (const char* env = std::getenv("SKEWLAB_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_phi = true) {
    cmd->add_option("--l", o.l, "base map degree l >= 2");
    if (with_phi)
        cmd->add_option("--phi", o.phi_spec,
                        "fiber function: shorthand ('0.5*sin', 'cos2 - cos1', "
                        "'constant:c') or '@file.json'");
    cmd->add_option("--json", o.json_path, "write the JSON summary here");
    cmd->add_option("--csv", o.csv_path, "write the CSV data table here");
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--threads", o.threads,
                    "worker threads (default: SKEWLAB_THREADS or 1)");
    cmd->add_option("--config", o.config_path, "JSON config file; flags override");
}

// Fills defaults from --config for options the user did not pass.
template <typename T>
void merge_cfg(const CLI::App* cmd, const json& cfg, const char* flag, const char* key,
               T& value) {
    if (cmd->count(flag) > 0) return;
    if (cfg.contains(key)) value = cfg[key].get<T>();
}

void finish_common(const CLI::App* cmd, CommonOpts& o) {
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw SpecError("cannot open config file " + o.config_path);
        try {
            in >> o.config;
        } catch (const json::exception& e) {
            throw SpecError(std::string("bad config JSON: ") + e.what());
        }
        merge_cfg(cmd, o.config, "--l", "l", o.l);
        merge_cfg(cmd, o.config, "--phi", "phi", o.phi_spec);
        merge_cfg(cmd, o.config, "--seed", "seed", o.seed);
        merge_cfg(cmd, o.config, "--threads", "threads", o.threads);
    }
    if (o.threads <= 0) o.threads = default_threads();
}

CircleFunction resolve_phi(const CommonOpts& o) {
    if (!o.phi_spec.empty() && o.phi_spec[0] == '@') {
        const FunctionSpec spec = load_function_spec(o.phi_spec.substr(1));
        if (spec.l != o.l)
            throw SpecError("function spec file declares l=" + std::to_string(spec.l) +
                            " but --l is " + std::to_string(o.l));
        return spec.f;
    }
    return parse_phi(o.phi_spec);
}

json base_config(const CommonOpts& o, bool with_phi = true) {
    json c;
    c["l"] = o.l;
    if (with_phi) c["phi"] = o.phi_spec;
    c["seed"] = o.seed;
    c["threads"] = o.threads;
    return c;
}

void emit_json(const CommonOpts& o, json& report,
               std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    report["timings_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(dt).count();
    if (!o.json_path.empty()) write_json_report(o.json_path, report);
}

json chains_to_json(const std::vector<ChainEntry>& chains) {
    json arr = json::array();
    for (const auto& c : chains) {
        arr.push_back({{"root", c.root},
                       {"magnitude", c.magnitude},
                       {"sum_re", c.sum.real()},
                       {"sum_im", c.sum.imag()}});
    }
    return arr;
}

json livsic_to_json(const LivsicResult& lv) {
    json j;
    j["max_deviation"] = lv.max_deviation;
    j["witness_period"] = lv.witness_period;
    json orbit = json::array();
    for (const auto& p : lv.witness_orbit) orbit.push_back(p.str());
    j["witness_orbit"] = orbit;
    json per = json::array();
    for (const auto& pd : lv.per_period)
        per.push_back({{"period", pd.period}, {"max_deviation", pd.max_deviation}});
    j["per_period"] = per;
    j["n_max"] = lv.n_max;
    return j;
}

// Least-squares exponent s in |c(k)| ~ |k|^-s over the nonzero support;
// reported as a smoothness proxy for recovered transfer functions.
std::optional<double> coefficient_decay_exponent(const CircleFunction& f) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& [k, c] : f.coeffs()) {
        if (k <= 0 || std::abs(c) == 0.0) continue;
        const double lx = std::log(static_cast<double>(k)), ly = std::log(std::abs(c));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 3) return std::nullopt;
    const double denom = m * sxx - sx * sx;
    if (denom <= 0) return std::nullopt;
    return -(m * sxy - sx * sy) / denom;
}

json coboundary_to_json(const CoboundaryResult& cb, int l) {
    json j;
    j["branch"] = cb.special ? "Special" : "Obstructed";
    j["C"] = cb.C;
    j["residual"] = cb.residual;
    j["chains"] = chains_to_json(cb.chains);
    j["violations"] = chains_to_json(cb.violations);
    j["tol"] = cb.tol;
    if (cb.special) {
        j["u"] = function_to_json(cb.u, l);
        if (const auto s = coefficient_decay_exponent(cb.u)) j["u_coefficient_decay"] = *s;
    }
    return j;
}

json twisted_to_json(const TwistedResult& tw, int l) {
    json j;
    j["branch"] = tw.solvable ? "Solvable" : "Obstructed";
    j["constant"] = tw.constant;
    j["mean_warning"] = tw.mean_warning;
    j["residual"] = tw.residual;
    j["chains"] = chains_to_json(tw.chains);
    j["violations"] = chains_to_json(tw.violations);
    j["tol"] = tw.tol;
    if (tw.solvable) j["theta"] = function_to_json(tw.theta, l);
    return j;
}

// ---------------------------------------------------------------- classify

int cmd_classify(const CLI::App* cmd, CommonOpts& o, double tol_obstruction,
                 double tol_residual, int livsic_nmax, std::int64_t budget) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    merge_cfg(cmd, o.config, "--tol-obstruction", "tol_obstruction", tol_obstruction);
    merge_cfg(cmd, o.config, "--tol-residual", "tol_residual", tol_residual);
    merge_cfg(cmd, o.config, "--livsic-nmax", "livsic_nmax", livsic_nmax);
    merge_cfg(cmd, o.config, "--budget", "budget", budget);
    const CircleFunction phi = resolve_phi(o);

    ClassifyConfig cfg;
    cfg.cohomology.tol_obstruction = tol_obstruction;
    cfg.cohomology.tol_residual = tol_residual;
    cfg.livsic.n_max = livsic_nmax;
    cfg.livsic.budget = budget;
    const DichotomyReport rep = classify(phi, o.l, cfg);

    json config = base_config(o);
    config["tol_obstruction"] = tol_obstruction;
    config["tol_residual"] = tol_residual;
    config["livsic_nmax"] = livsic_nmax;
    config["budget"] = budget;
    json out = report_envelope("classify", config);
    out["verdict"] = to_string(rep.verdict);
    out["coboundary"] = coboundary_to_json(rep.coboundary, o.l);
    out["twisted"] = twisted_to_json(rep.twisted, o.l);
    out["livsic"] = livsic_to_json(rep.livsic);
    emit_json(o, out, t0);

    double max_chain = 0.0;
    for (const auto& c : rep.coboundary.chains) max_chain = std::max(max_chain, c.magnitude);
    std::cout << to_string(rep.verdict) << "  max|S|=" << format_double(max_chain)
              << "  livsic=" << format_double(rep.livsic.max_deviation) << "\n";
    return rep.verdict == DichotomyVerdict::InconsistentEvidence ? kExitInconsistent
                                                                 : kExitOk;
}

// -------------------------------------------------------------- coboundary

int cmd_coboundary(const CLI::App* cmd, CommonOpts& o, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction phi = resolve_phi(o);
    CohomologyConfig cfg;
    cfg.tol_obstruction = tol;
    const CoboundaryResult res = solve_coboundary(phi, o.l, cfg);

    json config = base_config(o);
    config["tol_obstruction"] = tol;
    json out = report_envelope("coboundary", config);
    out["result"] = coboundary_to_json(res, o.l);
    emit_json(o, out, t0);

    if (res.special)
        std::cout << "Special  C=" << format_double(res.C)
                  << "  residual=" << format_double(res.residual) << "\n";
    else
        std::cout << "Obstructed  violations=" << res.violations.size()
                  << "  max|S|=" << format_double(res.violations.front().magnitude) << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ livsic

int cmd_livsic(const CLI::App* cmd, CommonOpts& o, int nmax, std::int64_t budget) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    merge_cfg(cmd, o.config, "--nmax", "nmax", nmax);
    merge_cfg(cmd, o.config, "--budget", "budget", budget);
    const CircleFunction phi = resolve_phi(o);
    LivsicConfig cfg{nmax, budget};
    const LivsicResult res = livsic_obstruction(phi, o.l, cfg);

    json config = base_config(o);
    config["nmax"] = nmax;
    config["budget"] = budget;
    json out = report_envelope("livsic", config);
    out["result"] = livsic_to_json(res);
    emit_json(o, out, t0);

    if (!o.csv_path.empty()) {
        CsvTable csv({"period", "max_deviation"});
        for (const auto& pd : res.per_period)
            csv.add_row({std::to_string(pd.period), format_double(pd.max_deviation)});
        csv.write(o.csv_path);
    }
    std::cout << "deviation=" << format_double(res.max_deviation)
              << "  witness_period=" << res.witness_period << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- eta / h

int cmd_eta(const CLI::App* cmd, CommonOpts& o, double x, std::string it_spec, int depth) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction phi = resolve_phi(o);
    const Itinerary it = parse_itinerary(it_spec, o.l);
    const CertifiedValue v = eta_estimate(phi, x, it, depth);

    json config = base_config(o);
    config["x"] = x;
    config["itinerary"] = it_spec;
    config["depth"] = depth;
    json out = report_envelope("eta", config);
    out["value"] = v.value;
    out["error_bound"] = v.error_bound;
    emit_json(o, out, t0);
    std::cout << "eta=" << format_double(v.value) << " +/- " << format_double(v.error_bound)
              << "\n";
    return kExitOk;
}

int cmd_hvalue(const CLI::App* cmd, CommonOpts& o, double x, std::string it_spec,
               int depth) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction psi = resolve_phi(o);
    const Itinerary it = parse_itinerary(it_spec, o.l);
    const CertifiedValue v = h_value(psi, it, x, depth);

    json config = base_config(o);
    config["x"] = x;
    config["itinerary"] = it_spec;
    config["depth"] = depth;
    json out = report_envelope("hvalue", config);
    out["value"] = v.value;
    out["error_bound"] = v.error_bound;
    emit_json(o, out, t0);
    std::cout << "h=" << format_double(v.value) << " +/- " << format_double(v.error_bound)
              << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- witness

int cmd_witness(const CLI::App* cmd, CommonOpts& o, int grid, int max_prefix, int depth) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction phi = resolve_phi(o);
    WitnessSearchConfig cfg{grid, max_prefix, depth};
    const WitnessSearchResult res = accessibility_witness(phi, o.l, cfg);

    json config = base_config(o);
    config["grid"] = grid;
    config["max_prefix"] = max_prefix;
    config["depth"] = depth;
    json out = report_envelope("witness", config);
    out["found"] = res.witness.has_value();
    out["candidates_checked"] = res.candidates_checked;
    out["max_observed_gap"] = res.max_observed_gap;
    out["error_floor_at_max"] = res.error_floor_at_max;
    if (res.witness) {
        const auto& w = *res.witness;
        out["witness"] = {{"x", w.x},
                          {"itinerary_a", w.itinerary_a.str()},
                          {"itinerary_b", w.itinerary_b.str()},
                          {"gap", w.gap.value},
                          {"gap_error_bound", w.gap.error_bound},
                          {"angle", w.angle},
                          {"eta_a", w.eta_a},
                          {"eta_b", w.eta_b}};
    }
    emit_json(o, out, t0);

    if (res.witness) {
        const auto& w = *res.witness;
        std::cout << "witness x=" << format_double(w.x) << " itinerary=" << w.itinerary_a.str()
                  << " gap=" << format_double(w.gap.value) << " +/- "
                  << format_double(w.gap.error_bound) << " angle=" << format_double(w.angle)
                  << "\n";
        return kExitOk;
    }
    std::cout << "not found  max_gap=" << format_double(res.max_observed_gap)
              << "  error_floor=" << format_double(res.error_floor_at_max)
              << "  candidates=" << res.candidates_checked << "\n";
    return kExitBudget;
}

// -------------------------------------------------------------------- leaf

int cmd_leaf(const CLI::App* cmd, CommonOpts& o, double zx, double zy,
             std::string it_spec, int depth, double half_width, int samples) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction phi = resolve_phi(o);
    const Itinerary it = parse_itinerary(it_spec, o.l);
    LeafConfig cfg;
    cfg.samples = samples;
    const LeafCurve leaf = grow_unstable_leaf(phi, o.l, zx, zy, it, depth, half_width, cfg);

    json config = base_config(o);
    config["x"] = zx;
    config["y"] = zy;
    config["itinerary"] = it_spec;
    config["depth"] = depth;
    config["half_width"] = half_width;
    config["samples"] = samples;
    json out = report_envelope("leaf", config);
    out["slope_at_center"] = leaf.slope_at_center;
    out["eta"] = leaf.eta.value;
    out["eta_error_bound"] = leaf.eta.error_bound;
    out["discretization_error"] = leaf.discretization_error;
    out["points"] = leaf.points.size();
    emit_json(o, out, t0);

    if (!o.csv_path.empty()) {
        CsvTable csv({"x", "y", "arclength"});
        for (const auto& p : leaf.points)
            csv.add_row({format_double(p.x), format_double(p.y), format_double(p.arclength)});
        csv.write(o.csv_path);
    }
    std::cout << "leaf points=" << leaf.points.size()
              << " slope=" << format_double(leaf.slope_at_center)
              << " eta=" << format_double(leaf.eta.value) << " +/- "
              << format_double(leaf.eta.error_bound) << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- reindex

int cmd_reindex(const CLI::App* cmd, CommonOpts& o, std::string it_spec, std::int64_t m0x,
                std::int64_t m0y, int depth) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const Itinerary a = parse_itinerary(it_spec, o.l);
    const LinearModel model(o.l);
    const ReindexResult res = reindex_itinerary(model, a, {m0x, m0y}, depth);

    json config = base_config(o, /*with_phi=*/false);
    config["itinerary"] = it_spec;
    config["m0"] = {m0x, m0y};
    config["depth"] = depth;
    json out = report_envelope("reindex", config);
    std::string digits;
    for (int d : res.digits) digits += std::to_string(d);
    out["digits"] = digits;
    json tr = json::array();
    for (const auto& m : res.translations) tr.push_back({m[0], m[1]});
    out["translations"] = tr;
    out["projection_verified"] = res.projection_verified;
    out["plus_prev_rule_step1"] = res.plus_prev_rule_step1;
    out["plus_prev_rule_all"] = res.plus_prev_rule_all;
    out["minus_prev_rule_all"] = res.minus_prev_rule_all;
    emit_json(o, out, t0);
    std::cout << "b=" << digits
              << (res.projection_verified ? "  projection=exact" : "  projection=FAILED")
              << "\n";
    return res.projection_verified ? kExitOk : kExitInconsistent;
}

// ---------------------------------------------------------------- cylinder

int cmd_cylinder(const CLI::App* cmd, CommonOpts& o, std::string boxes_spec,
                 std::int64_t samples) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    merge_cfg(cmd, o.config, "--samples", "samples", samples);
    const CircleFunction phi = resolve_phi(o);
    const SkewSystem sys = build_system(o.l, phi);

    // boxes come from the flag (JSON text) or the config file (native array)
    json jboxes;
    if (cmd->count("--boxes") == 0 && o.config.contains("boxes") &&
        o.config["boxes"].is_array()) {
        jboxes = o.config["boxes"];
    } else {
        try {
            jboxes = json::parse(boxes_spec);
        } catch (const json::exception& e) {
            throw SpecError(std::string("bad --boxes JSON: ") + e.what());
        }
    }
    std::vector<Box> boxes;
    for (const auto& b : jboxes) {
        if (!b.is_array() || b.size() != 4)
            throw SpecError("each box must be [x0, x1, y0, y1]");
        boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                         b[3].get<double>()});
    }
    if (boxes.empty()) throw SpecError("need at least one box");

    SamplerConfig cfg;
    cfg.seed = o.seed;
    cfg.samples = samples;
    cfg.threads = o.threads;
    const MCEstimate est = cylinder_measure_estimate(
        [&](double x, double y) {
            const Point2 w = sys.apply({x, y});
            return std::pair<double, double>(w.x, w.y);
        },
        boxes, cfg);

    json config = base_config(o);
    config["boxes"] = jboxes;
    config["samples"] = samples;
    config["shard_size"] = cfg.shard_size;
    json out = report_envelope("cylinder", config);
    out["estimate"] = est.estimate;
    out["std_error"] = est.std_error;
    out["hits"] = est.hits;
    out["samples"] = est.samples;
    emit_json(o, out, t0);
    std::cout << "estimate=" << format_double(est.estimate) << " +/- "
              << format_double(est.std_error) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- birkhoff

std::optional<Perturbation> make_perturbation(const std::string& q_spec,
                                              const std::string& r_spec, double eps) {
    if (eps == 0.0) return std::nullopt;
    return Perturbation{parse_phi(q_spec), parse_phi(r_spec), eps};
}

BuildConfig build_config(const std::string& cone_policy) {
    BuildConfig cfg;
    if (cone_policy == "warn")
        cfg.cone_policy = ConePolicy::Warn;
    else if (cone_policy != "enforce")
        throw SpecError("--cone-policy must be 'enforce' or 'warn'");
    return cfg;
}

void embed_cone_report(json& out, const SkewSystem& sys) {
    out["cone_ok"] = sys.cone_ok;
    out["cone_slope"] = sys.cone_slope;
    out["cone_margin"] = sys.cone_margin;
    out["expansion_margin"] = sys.expansion_margin;
}

int cmd_birkhoff(const CLI::App* cmd, CommonOpts& o, std::string obs_spec, double x,
                 double y, std::int64_t n, std::string q_spec, std::string r_spec,
                 double eps, const std::string& cone_policy, const std::string& lift) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const CircleFunction phi = resolve_phi(o);
    const SkewSystem sys = build_system(o.l, phi, make_perturbation(q_spec, r_spec, eps),
                                        build_config(cone_policy));
    const Observable obs = parse_observable(obs_spec);
    BaseLift base_lift;
    if (lift == "literal")
        base_lift = BaseLift::Literal;
    else if (lift == "generic")
        base_lift = BaseLift::Generic;
    else
        throw SpecError("--lift must be 'literal' or 'generic'");
    const double avg = birkhoff_average(sys, obs, {x, y}, n, base_lift, o.seed);

    json config = base_config(o);
    config["obs"] = obs_spec;
    config["x"] = x;
    config["y"] = y;
    config["n"] = n;
    config["eps"] = eps;
    config["lift"] = lift;
    json out = report_envelope("birkhoff", config);
    embed_cone_report(out, sys);
    out["time_average"] = avg;
    out["space_average"] = obs.space_average();
    emit_json(o, out, t0);
    std::cout << "average=" << format_double(avg)
              << "  space=" << format_double(obs.space_average()) << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- ergodicity

int cmd_ergodicity(const CLI::App* cmd, CommonOpts& o, std::string obs_spec, int starts,
                   std::int64_t n, std::string q_spec, std::string r_spec, double eps,
                   const std::string& cone_policy) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    merge_cfg(cmd, o.config, "--starts", "starts", starts);
    merge_cfg(cmd, o.config, "--n", "n", n);
    merge_cfg(cmd, o.config, "--obs", "obs", obs_spec);
    merge_cfg(cmd, o.config, "--eps", "eps", eps);
    const CircleFunction phi = resolve_phi(o);
    const SkewSystem sys = build_system(o.l, phi, make_perturbation(q_spec, r_spec, eps),
                                        build_config(cone_policy));
    const auto observables = parse_observable_set(obs_spec);
    const ErgodicityReport rep = ergodicity_score(sys, observables, starts, n, o.seed, o.threads);

    double max_dispersion = 0.0;
    for (double d : rep.dispersion) max_dispersion = std::max(max_dispersion, d);

    json config = base_config(o);
    config["obs"] = obs_spec;
    config["starts"] = starts;
    config["n"] = n;
    config["eps"] = eps;
    config["q"] = q_spec;
    config["r"] = r_spec;
    config["shard_layout"] = "one shard per start";
    json out = report_envelope("ergodicity", config);
    embed_cone_report(out, sys);
    out["max_deviation"] = rep.max_deviation;
    json disp = json::object();
    for (std::size_t i = 0; i < rep.dispersion.size(); ++i)
        disp[rep.observable_names[i]] = rep.dispersion[i];
    out["dispersion"] = disp;
    emit_json(o, out, t0);

    if (!o.csv_path.empty()) {
        CsvTable csv({"observable", "start", "x0", "y0", "time_average", "space_average",
                      "deviation"});
        for (std::size_t oi = 0; oi < rep.observable_names.size(); ++oi) {
            for (std::size_t m = 0; m < rep.starts.size(); ++m) {
                const double ta = rep.time_averages[oi][m];
                csv.add_row({rep.observable_names[oi], std::to_string(m),
                             format_double(rep.starts[m].x), format_double(rep.starts[m].y),
                             format_double(ta), format_double(rep.space_averages[oi]),
                             format_double(std::abs(ta - rep.space_averages[oi]))});
            }
        }
        csv.write(o.csv_path);
    }
    std::cout << "max_deviation=" << format_double(rep.max_deviation)
              << "  max_dispersion=" << format_double(max_dispersion) << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ mixing

int cmd_mixing(const CLI::App* cmd, CommonOpts& o, std::string psi_spec,
               std::string chi_spec, int nmax, std::int64_t samples, std::string q_spec,
               std::string r_spec, double eps, const std::string& cone_policy) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    merge_cfg(cmd, o.config, "--samples", "samples", samples);
    merge_cfg(cmd, o.config, "--nmax", "nmax", nmax);
    const CircleFunction phi = resolve_phi(o);
    const SkewSystem sys = build_system(o.l, phi, make_perturbation(q_spec, r_spec, eps),
                                        build_config(cone_policy));
    const Observable psi = parse_observable(psi_spec);
    const Observable chi = parse_observable(chi_spec);

    SamplerConfig cfg;
    cfg.seed = o.seed;
    cfg.samples = samples;
    cfg.threads = o.threads;
    const MixingReport rep = correlation_sequence(sys, psi, chi, nmax, cfg);

    json config = base_config(o);
    config["psi"] = psi_spec;
    config["chi"] = chi_spec;
    config["nmax"] = nmax;
    config["samples"] = samples;
    config["shard_size"] = cfg.shard_size;
    config["eps"] = eps;
    json out = report_envelope("mixing", config);
    embed_cone_report(out, sys);
    json cn = json::array();
    for (std::size_t i = 0; i < rep.correlation.size(); ++i)
        cn.push_back({{"n", i + 1},
                      {"C", rep.correlation[i]},
                      {"std_error", rep.std_error[i]}});
    out["correlation"] = cn;
    out["usable_points"] = rep.usable_points;
    if (rep.rate)
        out["rate"] = *rep.rate;
    else
        out["rate_unavailable"] = true;
    emit_json(o, out, t0);

    if (!o.csv_path.empty()) {
        CsvTable csv({"n", "C_n", "std_error"});
        for (std::size_t i = 0; i < rep.correlation.size(); ++i)
            csv.add_row({std::to_string(i + 1), format_double(rep.correlation[i]),
                         format_double(rep.std_error[i])});
        csv.write(o.csv_path);
    }
    std::cout << "C_" << nmax << "=" << format_double(rep.correlation.back());
    if (rep.rate)
        std::cout << "  rate=" << format_double(*rep.rate) << "\n";
    else
        std::cout << "  rate=unavailable (" << rep.usable_points << " usable points)\n";
    return kExitOk;
}

// ------------------------------------------------------ invariant-witness

int cmd_invariant_witness(const CLI::App* cmd, CommonOpts& o, std::int64_t a,
                          std::string b_spec, double x, double y) {
    const auto t0 = std::chrono::steady_clock::now();
    finish_common(cmd, o);
    const auto [b_num, b_den] = parse_rational(b_spec);
    const InvariantWitness w = invariant_witness_value(o.l, a, b_num, b_den, {x, y});

    json config = base_config(o, /*with_phi=*/false);
    config["a"] = a;
    config["b"] = b_spec;
    config["x"] = x;
    config["y"] = y;
    json out = report_envelope("invariant-witness", config);
    out["value"] = w.value;
    out["invariance_error"] = w.invariance_error;
    out["c"] = w.c;
    out["d"] = w.d;
    emit_json(o, out, t0);
    std::cout << "value=" << format_double(w.value)
              << "  invariance_error=" << format_double(w.invariance_error) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skewlab: numerical laboratory for skew-product endomorphisms "
                 "f(x,y) = (l x, y + phi(x)) on the 2-torus"};
    app.require_subcommand(1);

    // classify
    CommonOpts co_classify;
    double tol_obstruction = 1e-9, tol_residual = 1e-9;
    int livsic_nmax = 8;
    std::int64_t budget = kDefaultEnumerationBudget;
    auto* classify_cmd = app.add_subcommand("classify", "dichotomy verdict for phi");
    add_common(classify_cmd, co_classify);
    classify_cmd->add_option("--tol-obstruction", tol_obstruction, "chain/Livsic tolerance");
    classify_cmd->add_option("--tol-residual", tol_residual, "residual tolerance");
    classify_cmd->add_option("--livsic-nmax", livsic_nmax, "Livsic period cap");
    classify_cmd->add_option("--budget", budget, "periodic-orbit enumeration budget");

    // coboundary
    CommonOpts co_cob;
    double cob_tol = 1e-9;
    auto* cob_cmd = app.add_subcommand("coboundary", "solve phi = u o T - u + C");
    add_common(cob_cmd, co_cob);
    cob_cmd->add_option("--tol", cob_tol, "obstruction tolerance");

    // livsic
    CommonOpts co_livsic;
    int livsic_cmd_nmax = 8;
    std::int64_t livsic_budget = kDefaultEnumerationBudget;
    auto* livsic_cmd = app.add_subcommand("livsic", "periodic-orbit obstruction test");
    add_common(livsic_cmd, co_livsic);
    livsic_cmd->add_option("--nmax", livsic_cmd_nmax, "max period");
    livsic_cmd->add_option("--budget", livsic_budget, "enumeration budget");

    // eta
    CommonOpts co_eta;
    double eta_x = 0.0;
    std::string eta_it = "zeros";
    int eta_depth = 40;
    auto* eta_cmd = app.add_subcommand("eta", "certified unstable-slope series");
    add_common(eta_cmd, co_eta);
    eta_cmd->add_option("--x", eta_x, "circle point");
    eta_cmd->add_option("--itinerary", eta_it, "past selection (e.g. 'zeros', '1:0', '011')");
    eta_cmd->add_option("--depth", eta_depth, "series truncation depth");

    // hvalue
    CommonOpts co_h;
    double h_x = 1.0;
    std::string h_it = "zeros";
    int h_depth = 40;
    auto* h_cmd = app.add_subcommand("hvalue", "certified h_i(x) series (input is psi)");
    add_common(h_cmd, co_h);
    h_cmd->add_option("--x", h_x, "real lift argument");
    h_cmd->add_option("--itinerary", h_it, "branch itinerary");
    h_cmd->add_option("--depth", h_depth, "series truncation depth");

    // witness
    CommonOpts co_wit;
    int wit_grid = 256, wit_prefix = 8, wit_depth = 40;
    auto* wit_cmd = app.add_subcommand("witness", "search for a u-accessibility witness");
    add_common(wit_cmd, co_wit);
    wit_cmd->add_option("--grid", wit_grid, "x grid size");
    wit_cmd->add_option("--max-prefix", wit_prefix, "max itinerary prefix length");
    wit_cmd->add_option("--depth", wit_depth, "eta truncation depth");

    // leaf
    CommonOpts co_leaf;
    double leaf_x = 0.0, leaf_y = 0.0, leaf_hw = 1e-4;
    std::string leaf_it = "zeros";
    int leaf_depth = 20, leaf_samples = 1024;
    auto* leaf_cmd = app.add_subcommand("leaf", "grow a local unstable leaf");
    add_common(leaf_cmd, co_leaf);
    leaf_cmd->add_option("--x", leaf_x, "torus x");
    leaf_cmd->add_option("--y", leaf_y, "torus y");
    leaf_cmd->add_option("--itinerary", leaf_it, "past selection");
    leaf_cmd->add_option("--depth", leaf_depth, "preimage depth n");
    leaf_cmd->add_option("--half-width", leaf_hw, "seed segment half-width");
    leaf_cmd->add_option("--samples", leaf_samples, "seed sampling resolution");

    // reindex
    CommonOpts co_re;
    std::string re_it = "zeros";
    std::int64_t re_m0x = 1, re_m0y = 0;
    int re_depth = 8;
    auto* re_cmd = app.add_subcommand("reindex", "itinerary re-indexing under translation");
    add_common(re_cmd, co_re, /*with_phi=*/false);
    re_cmd->add_option("--itinerary", re_it, "itinerary a");
    re_cmd->add_option("--m0x", re_m0x, "translation x component");
    re_cmd->add_option("--m0y", re_m0y, "translation y component");
    re_cmd->add_option("--depth", re_depth, "digits to compute");

    // cylinder
    CommonOpts co_cyl;
    std::string cyl_boxes = "[[0,0.5,0,1],[0,0.5,0,1]]";
    std::int64_t cyl_samples = 1'000'000;
    auto* cyl_cmd = app.add_subcommand("cylinder", "cylinder measure estimate");
    add_common(cyl_cmd, co_cyl);
    cyl_cmd->add_option("--boxes", cyl_boxes, "JSON array of [x0,x1,y0,y1] boxes");
    cyl_cmd->add_option("--samples", cyl_samples, "Monte Carlo samples");

    // birkhoff
    CommonOpts co_birk;
    std::string birk_obs = "cos:1,1", birk_q = "sin", birk_r = "sin";
    double birk_x = 0.1, birk_y = 0.2, birk_eps = 0.0;
    std::int64_t birk_n = 100000;
    auto* birk_cmd = app.add_subcommand("birkhoff", "single Birkhoff average");
    add_common(birk_cmd, co_birk);
    birk_cmd->add_option("--obs", birk_obs, "observable");
    birk_cmd->add_option("--x", birk_x, "start x");
    birk_cmd->add_option("--y", birk_y, "start y");
    birk_cmd->add_option("--n", birk_n, "orbit length");
    birk_cmd->add_option("--q", birk_q, "vertical shear profile");
    birk_cmd->add_option("--r", birk_r, "horizontal shear profile");
    birk_cmd->add_option("--eps", birk_eps, "shear size (0 = unperturbed)");
    std::string birk_cone = "enforce";
    birk_cmd->add_option("--cone-policy", birk_cone, "cone certificate policy: enforce|warn");
    std::string birk_lift = "literal";
    birk_cmd->add_option("--lift", birk_lift,
                         "base orbit: literal doubles or generic digit stream");

    // ergodicity
    CommonOpts co_erg;
    std::string erg_obs = "standard", erg_q = "sin", erg_r = "sin";
    int erg_starts = 200;
    std::int64_t erg_n = 100000;
    double erg_eps = 0.0;
    auto* erg_cmd = app.add_subcommand("ergodicity", "Birkhoff dispersion experiment");
    add_common(erg_cmd, co_erg);
    erg_cmd->add_option("--obs", erg_obs, "observable set ('standard' or 'cos:1,0;sin:0,1')");
    erg_cmd->add_option("--starts", erg_starts, "number of seeded starts");
    erg_cmd->add_option("--n", erg_n, "orbit length");
    erg_cmd->add_option("--q", erg_q, "vertical shear profile");
    erg_cmd->add_option("--r", erg_r, "horizontal shear profile");
    erg_cmd->add_option("--eps", erg_eps, "shear size (0 = unperturbed)");
    std::string erg_cone = "enforce";
    erg_cmd->add_option("--cone-policy", erg_cone, "cone certificate policy: enforce|warn");

    // mixing
    CommonOpts co_mix;
    std::string mix_psi = "cos:1,1", mix_chi = "cos:1,1", mix_q = "sin", mix_r = "sin";
    int mix_nmax = 20;
    std::int64_t mix_samples = 200000;
    double mix_eps = 0.0;
    auto* mix_cmd = app.add_subcommand("mixing", "correlation decay experiment");
    add_common(mix_cmd, co_mix);
    mix_cmd->add_option("--psi", mix_psi, "first observable");
    mix_cmd->add_option("--chi", mix_chi, "second observable");
    mix_cmd->add_option("--nmax", mix_nmax, "max correlation lag");
    mix_cmd->add_option("--samples", mix_samples, "Monte Carlo samples");
    mix_cmd->add_option("--q", mix_q, "vertical shear profile");
    mix_cmd->add_option("--r", mix_r, "horizontal shear profile");
    mix_cmd->add_option("--eps", mix_eps, "shear size (0 = unperturbed)");
    std::string mix_cone = "enforce";
    mix_cmd->add_option("--cone-policy", mix_cone, "cone certificate policy: enforce|warn");

    // invariant-witness
    CommonOpts co_inv;
    std::int64_t inv_a = 0;
    std::string inv_b = "0";
    double inv_x = 0.3, inv_y = 0.7;
    auto* inv_cmd =
        app.add_subcommand("invariant-witness", "invariant observable of the linear model");
    add_common(inv_cmd, co_inv, /*with_phi=*/false);
    inv_cmd->add_option("--a", inv_a, "integer slope of tau(x) = a x + b");
    inv_cmd->add_option("--b", inv_b, "rational offset m/n");
    inv_cmd->add_option("--x", inv_x, "point x");
    inv_cmd->add_option("--y", inv_y, "point y");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (classify_cmd->parsed())
            return cmd_classify(classify_cmd, co_classify, tol_obstruction, tol_residual,
                                livsic_nmax, budget);
        if (cob_cmd->parsed()) return cmd_coboundary(cob_cmd, co_cob, cob_tol);
        if (livsic_cmd->parsed())
            return cmd_livsic(livsic_cmd, co_livsic, livsic_cmd_nmax, livsic_budget);
        if (eta_cmd->parsed()) return cmd_eta(eta_cmd, co_eta, eta_x, eta_it, eta_depth);
        if (h_cmd->parsed()) return cmd_hvalue(h_cmd, co_h, h_x, h_it, h_depth);
        if (wit_cmd->parsed())
            return cmd_witness(wit_cmd, co_wit, wit_grid, wit_prefix, wit_depth);
        if (leaf_cmd->parsed())
            return cmd_leaf(leaf_cmd, co_leaf, leaf_x, leaf_y, leaf_it, leaf_depth, leaf_hw,
                            leaf_samples);
        if (re_cmd->parsed())
            return cmd_reindex(re_cmd, co_re, re_it, re_m0x, re_m0y, re_depth);
        if (cyl_cmd->parsed()) return cmd_cylinder(cyl_cmd, co_cyl, cyl_boxes, cyl_samples);
        if (birk_cmd->parsed())
            return cmd_birkhoff(birk_cmd, co_birk, birk_obs, birk_x, birk_y, birk_n, birk_q,
                                birk_r, birk_eps, birk_cone, birk_lift);
        if (erg_cmd->parsed())
            return cmd_ergodicity(erg_cmd, co_erg, erg_obs, erg_starts, erg_n, erg_q, erg_r,
                                  erg_eps, erg_cone);
        if (mix_cmd->parsed())
            return cmd_mixing(mix_cmd, co_mix, mix_psi, mix_chi, mix_nmax, mix_samples, mix_q,
                              mix_r, mix_eps, mix_cone);
        if (inv_cmd->parsed())
            return cmd_invariant_witness(inv_cmd, co_inv, inv_a, inv_b, inv_x, inv_y);
    } catch (const OverflowBudget& e) {
        std::cerr << "budget exhausted: " << e.what() << "\n";
        return kExitBudget;
    } catch (const SpecError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NonRational& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ConeViolation& e) {
        std::cerr << "cone violation: " << e.what() << "\n";
        return kExitValidation;
    } catch (const JacobianError& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return kExitInconsistent;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

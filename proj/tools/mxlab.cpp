// mxlab: command-line front end for the measure, maximal-operator, counterexample, certificate and scan modules.
// Exit codes: 0 success, 1 a check failed, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mxlab/counterexamples.hpp"
#include "mxlab/cover.hpp"
#include "mxlab/experiments.hpp"
#include "mxlab/grid.hpp"
#include "mxlab/maximal.hpp"
#include "mxlab/measure.hpp"
#include "mxlab/oracle.hpp"
#include "mxlab/slicing.hpp"
#include "mxlab/sweeps.hpp"

using namespace mxlab;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 0x5eed;
    std::string out;
    std::string format = "json";
    int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "random seed")->capture_default_str();
    app->add_option("--out", c.out, "output file (default: stdout)");
    app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

json common_json(const Common& c) { return {{"seed", c.seed}, {"format", c.format}}; }

void emit(const Common& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw UsageError("cannot open output file " + c.out);
    f << text;
}

std::string csv_with_spec(const json& spec, const std::string& csv) { return "# " + spec.dump() + "\n" + csv; }

/// Adds a log-domain value and, when moderate, its linear value.
void put_log(json& j, const std::string& key, double logv) {
    j["log_" + key] = logv;
    if (std::abs(logv) < 30) j[key] = std::exp(logv);
}

// ---------------------------------------------------------------------------

struct MeasureArgs {
    std::string kind = "cube", method = "best", proposal = "slab";
    std::vector<double> center, alpha;
    double radius = 1.0, tol = 1e-8;
    long long samples = 1000000;
};

int run_measure(const MeasureArgs& a, const Common& c) {
    if (a.center.empty()) throw UsageError("--center is required");
    const NormKind kind = parse_norm_kind(a.kind);
    Ball b(kind, vec(a.center), a.radius);
    LaguerreParams lp(a.alpha);
    if (!a.alpha.empty() && static_cast<int>(a.alpha.size()) != b.dim())
        throw UsageError("--alpha needs one exponent per coordinate");
    const auto prop = a.proposal == "box" ? measure::Proposal::Box : measure::Proposal::Slab;
    MeasureEstimate est;
    if (a.method == "exact") {
        if (kind != NormKind::Linf) throw UsageError("exact measures are available for cubes only");
        est = lp.trivial() ? measure::mu_cube_exact(b.center, b.radius)
                           : measure::mu_cube_laguerre(b.center, b.radius, lp);
    } else if (a.method == "quadrature") {
        if (!lp.trivial()) throw UsageError("quadrature supports the exponential measure only");
        est = measure::mu_quadrature(b, a.tol);
    } else if (a.method == "montecarlo") {
        est = measure::mu_montecarlo(b, lp, a.samples, c.seed, prop);
    } else {
        est = lp.trivial() ? measure::mu_best(b, a.samples, c.seed) : measure::mu_montecarlo(b, lp, a.samples, c.seed, prop);
    }
    json spec = common_json(c);
    spec.update({{"command", "measure"},
                 {"kind", to_string(kind)},
                 {"center", a.center},
                 {"radius", a.radius},
                 {"method", a.method},
                 {"alpha", a.alpha},
                 {"samples", a.samples},
                 {"proposal", a.proposal},
                 {"tol", a.tol}});
    json r{{"spec", spec},
           {"log_value", est.log_value},
           {"method_used", to_string(est.method)},
           {"rel_stderr", est.rel_stderr},
           {"samples", est.samples},
           {"zero_hits", est.zero_hits}};
    if (std::abs(est.log_value) < 30) r["value"] = est.value();
    if (c.format == "csv") {
        std::ostringstream os;
        os << "kind,radius,method,log_value,rel_stderr,samples\n"
           << to_string(kind) << ',' << fmt_double(a.radius) << ',' << to_string(est.method) << ','
           << fmt_double(est.log_value) << ',' << fmt_double(est.rel_stderr) << ',' << est.samples << '\n';
        emit(c, csv_with_spec(spec, os.str()));
    } else {
        emit(c, r.dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct MaxopArgs {
    std::string input, write, kind = "cube", engine = "auto";
    bool centered = false;
    double side = 16.0, spacing = 0.125, p = 2.0, rho = 0.0, r_min = 0.0, r_max = 0.0;
    int stride = 1;
};

maximal::Engine parse_engine(const std::string& s) {
    using maximal::Engine;
    for (Engine e : {Engine::Auto, Engine::Brute, Engine::Rows, Engine::Rotated, Engine::Separable})
        if (maximal::to_string(e) == s) return e;
    throw UsageError("unknown engine " + s);
}

int run_maxop(const MaxopArgs& a, const Common& c) {
    const NormKind kind = parse_norm_kind(a.kind);
    GridFunction f;
    if (!a.input.empty()) {
        f = load_grid(a.input);
    } else {
        experiments::SweepSpec s;
        s.spacing = a.spacing;
        f = experiments::detail::half_cube_indicator(s, a.side);
    }
    auto pol = maximal::default_policy(f, kind);
    pol.stride = a.stride;
    if (a.rho > 0) pol.set_rho(a.rho);
    if (a.r_min > 0) pol.r_min = a.r_min;
    if (a.r_max > 0) pol.r_max = a.r_max;
    const auto engine = parse_engine(a.engine);
    GridFunction M = a.centered ? maximal::centered_max_op_grid(f, kind, pol, engine)
                                : maximal::max_op_grid(f, kind, pol, engine);
    if (!a.write.empty()) save_grid(M, a.write);
    auto rep = maximal::norms_and_weak(f, M, a.p);
    json spec = common_json(c);
    spec.update({{"command", "maxop"},
                  {"input", a.input.empty() ? json("half-cube") : json(a.input)},
                  {"side", a.side},
                  {"kind", to_string(kind)},
                  {"centered", a.centered},
                  {"engine", a.engine},
                  {"policy", pol.describe()},
                  {"grid", grid_header(f)},
                  {"p", a.p}});
    if (c.format == "csv") {
        emit(c, csv_with_spec(spec, grid_csv(M)));
        return 0;
    }
    double mx = 0.0;
    for (double v : M.values) mx = std::max(mx, v);
    json r{{"spec", spec}, {"cells", M.size()}, {"max", mx}, {"lp_ratio", rep.lp_ratio},
           {"log_lp_ratio", rep.log_lp_ratio}};
    put_log(r, "weak_functional", rep.weak.functional);
    emit(c, r.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct CounterArgs {
    int dim = 2;
    std::vector<double> sizes;
    std::string method = "quadrature";
    long long samples = 1000000;
    double level = 1.0;
    double min_growth = 0.0;
};

int run_counterexample(const std::string& family, const CounterArgs& a, const Common& c) {
    json spec = common_json(c);
    spec.update({{"command", "counterexample"}, {"family", family}, {"dim", a.dim}, {"sizes", a.sizes},
                 {"method", a.method}, {"samples", a.samples}, {"level", a.level}, {"min_growth", a.min_growth}});
    std::vector<double> logs;
    json rows = json::array();
    std::ostringstream csv;
    if (family == "diamond") {
        csv << "family,N,d,log_value,s_min,s_full\n";
        for (double N : a.sizes) {
            auto w = counterexamples::diamond_witness(N, a.dim);
            auto F = counterexamples::diamond_weak_functional(w, a.level);
            logs.push_back(F.log_value);
            csv << "diamond," << fmt_double(N) << ',' << a.dim << ',' << fmt_double(F.log_value) << ','
                << fmt_double(F.s_min) << ',' << fmt_double(F.s_full) << '\n';
            json j{{"N", N}, {"d", a.dim}, {"s_min", F.s_min}, {"s_full", F.s_full}};
            put_log(j, "value", F.log_value);
            rows.push_back(j);
        }
    } else {
        const Method m = a.method == "montecarlo" ? Method::MonteCarlo : Method::Quadrature;
        csv << "family,s,d,log_base,log_union,log_ratio,analytic_prediction_log,method,samples,rel_stderr\n";
        for (std::size_t i = 0; i < a.sizes.size(); ++i) {
            const double s = a.sizes[i];
            auto F = family == "cube" ? counterexamples::build_cube_family(s, a.dim)
                                      : counterexamples::build_ball_family(s, a.dim);
            auto row = counterexamples::counterexample_ratio(F, m, a.samples, numeric::derive_seed(c.seed, i), c.threads);
            logs.push_back(row.log_ratio);
            csv << row.family << ',' << fmt_double(s) << ',' << a.dim << ',' << fmt_double(row.log_base) << ','
                << fmt_double(row.log_union) << ',' << fmt_double(row.log_ratio) << ','
                << fmt_double(row.analytic_prediction_log) << ',' << to_string(row.method) << ',' << row.n_samples
                << ',' << fmt_double(row.rel_stderr) << '\n';
            json j{{"s", s}, {"d", a.dim}, {"log_base", row.log_base}, {"log_union", row.log_union},
                   {"analytic_prediction_log", row.analytic_prediction_log}, {"method", to_string(row.method)},
                   {"samples", row.n_samples}, {"rel_stderr", row.rel_stderr}};
            put_log(j, "ratio", row.log_ratio);
            rows.push_back(j);
        }
    }
    bool ok = true;
    json growth = json::array();
    for (std::size_t i = 1; i < logs.size(); ++i) {
        double g = std::exp(logs[i] - logs[i - 1]);
        growth.push_back(g);
        if (a.min_growth > 0 && !(g >= a.min_growth)) ok = false;
    }
    if (c.format == "csv") emit(c, csv_with_spec(spec, csv.str()));
    else emit(c, json{{"spec", spec}, {"rows", rows}, {"growth", growth}, {"pass", ok}}.dump(2) + "\n");
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    int configs = 100, dim = 0;
    long long samples = 100000;
    std::string bcase = "all", formula = "all", kind = "L2";
    double c0 = 1.0 / 64.0;
    // slicing
    double p = 2.0, min_delta = 0.2;
    int i = 7, kmax = 6, functions = 20;
};

int emit_sweeps(const std::vector<SweepSummary>& sweeps, const json& spec, const Common& c) {
    std::ostringstream os;
    bool ok = true;
    if (c.format == "csv") {
        os << "# " << spec.dump() << "\n";
        os << "lemma,index,pass,violations,residual_max,ratio_min,ratio_max,samples\n";
    }
    for (const auto& s : sweeps) {
        ok = ok && s.pass();
        for (std::size_t k = 0; k < s.instances.size(); ++k) {
            const auto& r = s.instances[k];
            if (c.format == "csv") {
                os << r.lemma << ',' << k << ',' << (r.pass() ? "pass" : "fail") << ',' << r.violations << ','
                   << fmt_double(r.residual_max) << ',' << (r.has_ratios() ? fmt_double(r.ratio_min) : "") << ','
                   << (r.has_ratios() ? fmt_double(r.ratio_max) : "") << ',' << r.samples << '\n';
            } else {
                json j = r.to_json();
                j["index"] = k;
                os << j.dump() << '\n';
            }
        }
    }
    if (c.format == "json") {
        json sum = json::array();
        for (const auto& s : sweeps) sum.push_back(s.to_json());
        os << json{{"summary", sum}, {"spec", spec}, {"pass", ok}}.dump() << '\n';
    }
    emit(c, os.str());
    return ok ? 0 : 1;
}

std::vector<BoundaryCase> cases_for(int d, const std::string& which) {
    std::vector<BoundaryCase> all{BoundaryCase::Vertex, BoundaryCase::Face};
    if (d == 4) all.push_back(BoundaryCase::Edge);
    if (which == "all") return all;
    BoundaryCase bc = parse_boundary_case(which);
    if (d == 3 && bc == BoundaryCase::Edge) throw UsageError("d = 3 has vertex and face cases only");
    return {bc};
}

int run_verify(const std::string& what, const VerifyArgs& a, const Common& c) {
    if (a.configs < 1) throw UsageError("--configs must be positive");
    json spec = common_json(c);
    spec.update({{"command", "verify"}, {"lemma", what}, {"configs", a.configs}, {"samples", a.samples}});
    std::vector<SweepSummary> sweeps;
    if (what == "rectangle-lemma") {
        sweeps.push_back(rectangle_sweep(a.configs, c.seed, 20000, c.threads));
    } else if (what == "roots") {
        EnvelopeOptions opt;
        opt.c0 = a.c0;
        spec["formula"] = a.formula;
        spec["c0"] = a.c0;
        for (auto f : all_root_formulas())
            if (a.formula == "all" || a.formula == to_string(f)) sweeps.push_back(roots_sweep(f, a.configs, c.seed, c.threads, opt));
        if (sweeps.empty()) throw UsageError("unknown formula " + a.formula);
    } else if (what == "sophi") {
        const int d = a.dim ? a.dim : 2;
        if (d < 2 || d > 4) throw UsageError("--dim must lie in 2..4");
        spec["dim"] = d;
        sweeps.push_back(sophi_sweep(d, a.configs, c.seed, a.samples, c.threads));
    } else if (what == "fcl-cover" || what == "parallelep-cover") {
        const int d = what == "fcl-cover" ? 3 : 4;
        CoverOptions opt;
        opt.samples = a.samples;
        opt.c0 = a.c0;
        spec.update({{"dim", d}, {"case", a.bcase}, {"c0", a.c0}});
        for (auto bc : cases_for(d, a.bcase)) sweeps.push_back(cover_sweep(d, bc, a.configs, c.seed, opt, c.threads));
    } else if (what == "slicing") {
        SlicingOptions opt;
        opt.threads = c.threads;
        const NormKind kind = parse_norm_kind(a.kind);
        auto fit = fit_decay(a.p, kind, a.i, a.kmax, a.functions, c.seed, opt);
        spec.update({{"p", a.p}, {"kind", to_string(kind)}, {"i", a.i}, {"kmax", a.kmax}, {"functions", a.functions},
                     {"min_delta", a.min_delta}});
        const bool ok = fit.delta >= a.min_delta && fit.decreasing;
        if (c.format == "csv") {
            std::ostringstream os;
            os << "distance,log_ratio\n";
            for (std::size_t k = 0; k < fit.distances.size(); ++k)
                os << fit.distances[k] << ',' << fmt_double(fit.log_ratio[k]) << '\n';
            emit(c, csv_with_spec(spec, os.str()));
        } else {
            emit(c, json{{"spec", spec}, {"fit", fit.to_json()}, {"pass", ok}}.dump(2) + "\n");
        }
        return ok ? 0 : 1;
    } else {
        throw UsageError("unknown lemma " + what);
    }
    return emit_sweeps(sweeps, spec, c);
}

// ---------------------------------------------------------------------------

struct ScanArgs {
    std::string kind = "cube", family = "grid";
    double p = 2.0, spacing = 0.125, rho = 0.0, min_growth = 0.0, max_growth = 0.0;
    std::vector<double> ladder{8, 16, 32};
    int dim = 2, stride = 1, bumps = 10;
};

int run_scan(const std::string& what, const ScanArgs& a, const Common& c) {
    experiments::SweepSpec s;
    s.kind = parse_norm_kind(a.kind);
    s.p = a.p;
    s.ladder = a.ladder;
    s.family = a.family;
    s.dim = a.dim;
    s.spacing = a.spacing;
    s.stride = a.stride;
    if (a.rho > 0) s.log_rho = std::log(a.rho);
    s.bumps = a.bumps;
    s.seed = c.seed;
    s.threads = c.threads;
    json spec = common_json(c);
    spec.update({{"command", "scan"}, {"scan", what}, {"sweep", s.to_json()}, {"min_growth", a.min_growth},
                 {"max_growth", a.max_growth}});
    auto within = [&](const experiments::SweepTable& t) {
        if (t.growths().empty()) return true;
        if (a.min_growth > 0 && !(t.min_growth() >= a.min_growth)) return false;
        if (a.max_growth > 0 && !(t.max_growth() < a.max_growth)) return false;
        return true;
    };
    if (what == "contrast") {
        auto t = experiments::centered_contrast(s);
        // thresholds apply to the non-centered operator; the centered one must stay below max_growth
        bool ok = t.pointwise_failures == 0;
        if (a.min_growth > 0 && !(t.noncentered.min_growth() >= a.min_growth)) ok = false;
        if (a.max_growth > 0 && !(t.centered.max_growth() < a.max_growth)) ok = false;
        if (c.format == "csv") emit(c, csv_with_spec(spec, t.to_csv()));
        else {
            json j = t.to_json();
            j["spec"] = spec;
            j["pass"] = ok;
            emit(c, j.dump(2) + "\n");
        }
        return ok ? 0 : 1;
    }
    if (what == "weak11") s.p = 1.0;
    auto t = what == "weak11" ? experiments::weak11_scan(s) : experiments::lp_scan(s);
    const bool ok = within(t);
    if (c.format == "csv") emit(c, csv_with_spec(spec, t.to_csv()));
    else {
        json j = t.to_json();
        j["spec"] = spec;
        j["pass"] = ok;
        emit(c, j.dump(2) + "\n");
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mxlab: maximal operators for the exponential measure"};
    app.require_subcommand(1);
    Common common;

    MeasureArgs ma;
    auto* measure = app.add_subcommand("measure", "mu of a cube, ball or diamond");
    measure->add_option("--kind", ma.kind, "cube | ball | diamond")->capture_default_str();
    measure->add_option("--center", ma.center, "center coordinates")->delimiter(',')->required();
    measure->add_option("--radius", ma.radius, "radius")->required();
    measure->add_option("--method", ma.method)->check(CLI::IsMember({"exact", "quadrature", "montecarlo", "best"}))->capture_default_str();
    measure->add_option("--samples", ma.samples, "Monte Carlo samples")->capture_default_str();
    measure->add_option("--alpha", ma.alpha, "Laguerre exponents")->delimiter(',');
    measure->add_option("--proposal", ma.proposal)->check(CLI::IsMember({"box", "slab"}))->capture_default_str();
    measure->add_option("--tol", ma.tol, "quadrature tolerance")->capture_default_str();
    add_common(measure, common);

    MaxopArgs xa;
    auto* maxop = app.add_subcommand("maxop", "grid maximal function");
    maxop->add_option("--input", xa.input, "grid base path (<base>.json + <base>.csv); default: half-cube indicator");
    maxop->add_option("--side", xa.side, "box side of the default input")->capture_default_str();
    maxop->add_option("--spacing", xa.spacing, "cell size of the default input")->capture_default_str();
    maxop->add_option("--kind", xa.kind)->capture_default_str();
    maxop->add_option("--engine", xa.engine)->capture_default_str();
    maxop->add_flag("--centered", xa.centered);
    maxop->add_option("--stride", xa.stride)->capture_default_str();
    maxop->add_option("--rho", xa.rho, "radius ladder ratio in (1, 2]");
    maxop->add_option("--r-min", xa.r_min);
    maxop->add_option("--r-max", xa.r_max);
    maxop->add_option("--p", xa.p, "exponent of the reported L^p ratio")->capture_default_str();
    maxop->add_option("--write", xa.write, "write Mf as a grid to this base path");
    add_common(maxop, common);

    CounterArgs ca;
    auto* counter = app.add_subcommand("counterexample", "weak-type counterexample families");
    counter->require_subcommand(1);
    std::string family;
    for (const char* fam : {"cube", "ball", "diamond"}) {
        auto* sub = counter->add_subcommand(fam, std::string(fam) + " family");
        sub->add_option("--dim", ca.dim)->capture_default_str();
        if (std::string(fam) == "diamond") sub->add_option("--N", ca.sizes, "sizes N")->delimiter(',')->required();
        else sub->add_option("--s", ca.sizes, "sizes s")->delimiter(',')->required();
        if (std::string(fam) != "diamond") {
            sub->add_option("--method", ca.method)->check(CLI::IsMember({"quadrature", "montecarlo"}))->capture_default_str();
            sub->add_option("--samples", ca.samples)->capture_default_str();
        } else {
            sub->add_option("--level", ca.level, "level constant c in (0, 1]")->capture_default_str();
        }
        sub->add_option("--min-growth", ca.min_growth, "fail unless every growth factor reaches this");
        add_common(sub, common);
        sub->callback([&family, fam] { family = fam; });
    }

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "geometric certificates");
    verify->require_subcommand(1);
    std::string lemma;
    for (const char* name : {"sophi", "fcl-cover", "parallelep-cover", "rectangle-lemma", "roots", "slicing"}) {
        auto* sub = verify->add_subcommand(name);
        const std::string n = name;
        if (n != "slicing") sub->add_option("--configs", va.configs)->capture_default_str();
        if (n == "sophi") sub->add_option("--dim", va.dim, "dimension (2..4)");
        if (n == "sophi" || n == "fcl-cover" || n == "parallelep-cover") sub->add_option("--samples", va.samples)->capture_default_str();
        if (n == "fcl-cover" || n == "parallelep-cover") sub->add_option("--case", va.bcase, "vertex | face | edge | all")->capture_default_str();
        if (n == "parallelep-cover" || n == "roots") sub->add_option("--c0", va.c0)->capture_default_str();
        if (n == "roots") sub->add_option("--formula", va.formula, "xi | p_h | q_h | p_h^i | v_i | all")->capture_default_str();
        if (n == "slicing") {
            sub->add_option("--p", va.p)->capture_default_str();
            sub->add_option("--kind", va.kind)->capture_default_str();
            sub->add_option("--i", va.i)->capture_default_str();
            sub->add_option("--kmax", va.kmax)->capture_default_str();
            sub->add_option("--functions", va.functions)->capture_default_str();
            sub->add_option("--min-delta", va.min_delta)->capture_default_str();
        }
        add_common(sub, common);
        sub->callback([&lemma, n] { lemma = n; });
    }

    ScanArgs sa;
    auto* scan = app.add_subcommand("scan", "growth sweeps");
    scan->require_subcommand(1);
    std::string scan_kind;
    for (const char* name : {"weak11", "lp", "contrast"}) {
        auto* sub = scan->add_subcommand(name);
        sub->add_option("--kind", sa.kind)->capture_default_str();
        if (std::string(name) == "lp") sub->add_option("--p", sa.p)->capture_default_str();
        sub->add_option("--ladder", sa.ladder)->delimiter(',')->capture_default_str();
        sub->add_option("--family", sa.family)->capture_default_str();
        sub->add_option("--dim", sa.dim)->capture_default_str();
        sub->add_option("--spacing", sa.spacing)->capture_default_str();
        sub->add_option("--stride", sa.stride)->capture_default_str();
        sub->add_option("--rho", sa.rho);
        sub->add_option("--bumps", sa.bumps)->capture_default_str();
        sub->add_option("--min-growth", sa.min_growth);
        sub->add_option("--max-growth", sa.max_growth);
        add_common(sub, common);
        const std::string n = name;
        sub->callback([&scan_kind, n] { scan_kind = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (measure->parsed()) return run_measure(ma, common);
        if (maxop->parsed()) return run_maxop(xa, common);
        if (counter->parsed()) return run_counterexample(family, ca, common);
        if (verify->parsed()) return run_verify(lemma, va, common);
        if (scan->parsed()) return run_scan(scan_kind, sa, common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "out of domain: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

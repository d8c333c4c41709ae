#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cover.hpp"
#include "numerics.hpp"
#include "oracle.hpp"

namespace mxlab {

/// Instance reports of one certificate sweep and their merged summary.
struct SweepSummary {
    std::string lemma;
    std::vector<OracleReport> instances;
    OracleReport total;

    bool pass() const {
        for (const auto& r : instances)
            if (!r.pass()) return false;
        return !instances.empty();
    }
    int failures() const {
        int n = 0;
        for (const auto& r : instances) n += !r.pass();
        return n;
    }
    nlohmann::json to_json() const {
        nlohmann::json j = total.to_json();
        j["instances"] = instances.size();
        j["failures"] = failures();
        j["pass"] = pass();
        j["spread"] = total.spread();
        return j;
    }
};

namespace sweep_detail {

inline SweepSummary run(const std::string& lemma, int n, int threads,
                        const std::function<OracleReport(int)>& one) {
    if (n < 1) throw std::invalid_argument("a sweep needs at least one configuration");
    SweepSummary s;
    s.lemma = lemma;
    s.instances.resize(n);
    numeric::parallel_for(n, threads, [&](std::size_t i) { s.instances[i] = one(static_cast<int>(i)); });
    s.total.lemma = lemma;
    s.total.config = {{"configs", n}};
    for (const auto& r : s.instances) s.total.merge(r);
    return s;
}

/// log-uniform in (lo, hi]
inline double log_uniform(numeric::Rng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

}  // namespace sweep_detail

/// xi(h) closed form against the vertical ray-circle intersection and against its envelope.
inline OracleReport xi_check(const BallConeConfig& c, double h) {
    OracleReport rep;
    rep.lemma = "root:xi";
    rep.config = c.to_json();
    rep.config["h"] = h;
    const XiValue v = xi_of_h(c, h);
    rep.add_residual(v.residual);
    rep.add_residual(std::abs(v.exact - v.direct));
    rep.add_ratio(v.exact / v.envelope);
    rep.samples = 1;
    rep.details = {{"xi", v.exact}, {"envelope", v.envelope}, {"direct", v.direct}};
    return rep;
}

enum class RootFormula { Xi, P, Q, PI, V };

inline std::string to_string(RootFormula f) {
    switch (f) {
        case RootFormula::Xi: return "xi";
        case RootFormula::P: return "p_h";
        case RootFormula::Q: return "q_h";
        case RootFormula::PI: return "p_h^i";
        case RootFormula::V: return "v_i";
    }
    return "?";
}

inline const std::vector<RootFormula>& all_root_formulas() {
    static const std::vector<RootFormula> all{RootFormula::Xi, RootFormula::P, RootFormula::Q, RootFormula::PI,
                                              RootFormula::V};
    return all;
}

/// Random configurations in the vertex case with h spread log-uniformly over the formula's range.
inline SweepSummary roots_sweep(RootFormula f, int n, std::uint64_t seed, int threads = 1,
                                const EnvelopeOptions& opt = {}) {
    return sweep_detail::run("root:" + to_string(f), n, threads, [&](int i) {
        numeric::Rng rng(numeric::derive_seed(seed, static_cast<std::uint64_t>(i)));
        const int d = f == RootFormula::Xi ? 2 : (f == RootFormula::P || f == RootFormula::Q) ? 3 : 4;
        BallConeConfig c = random_ball_cone(d, BoundaryCase::Vertex, rng);
        switch (f) {
            case RootFormula::Xi:
                return xi_check(c, sweep_detail::log_uniform(rng, 1e-4 * c.r, c.r / std::sqrt(2.0)));
            case RootFormula::P:
            case RootFormula::Q:
                return envelope_check(f == RootFormula::P ? EnvelopeKind::P : EnvelopeKind::Q, c,
                                      sweep_detail::log_uniform(rng, 1e-4 * c.r, c.r / std::sqrt(3.0)), opt);
            case RootFormula::PI:
                return envelope_check(EnvelopeKind::PI, c, sweep_detail::log_uniform(rng, 1e-4 * c.r, 0.4999 * c.r),
                                      opt);
            case RootFormula::V:
                return envelope_check(EnvelopeKind::V, c,
                                      sweep_detail::log_uniform(rng, 1e-4 * opt.c0 * c.R(), 0.999 * opt.c0 * c.R()),
                                      opt);
        }
        throw std::logic_error("unreachable");
    });
}

/// Random diamond configurations with t uniform over (b, b + 2r).
inline SweepSummary sophi_sweep(int d, int n, std::uint64_t seed, long long samples = 100000, int threads = 1) {
    return sweep_detail::run("sophi", n, threads, [&](int i) {
        const std::uint64_t s = numeric::derive_seed(seed, static_cast<std::uint64_t>(i));
        numeric::Rng rng(s);
        DiamondConfig c = random_diamond_config(d, rng);
        const double t = c.b() + rng.uniform_open() * 2.0 * c.r;
        SophiOptions opt;
        opt.samples = samples;
        return sophi_check(c, t, s, opt);
    });
}

/// Random configurations of one boundary case with h log-uniform over the proposition's range.
inline SweepSummary cover_sweep(int d, BoundaryCase bc, int n, std::uint64_t seed, const CoverOptions& opt = {},
                                int threads = 1) {
    const std::string lemma = d == 3 ? "fcl-cover" : "parallelep-cover";
    return sweep_detail::run(lemma + ":" + to_string(bc), n, threads, [&](int i) {
        const std::uint64_t s = numeric::derive_seed(seed, static_cast<std::uint64_t>(i));
        numeric::Rng rng(s);
        BallConeConfig c = random_ball_cone(d, bc, rng);
        const double top = d == 3 ? (c.r + c.delta()) * (1 - 1e-9) : c.r / 2.0;
        return cover_check(c, sweep_detail::log_uniform(rng, 1e-4 * top, top), s, opt);
    });
}

/// Random side lengths and caps, m in {2, 3} alternating.
inline SweepSummary rectangle_sweep(int n, std::uint64_t seed, long long mc_samples = 20000, int threads = 1) {
    return sweep_detail::run("rectangle-lemma", n, threads, [&](int i) {
        const std::uint64_t s = numeric::derive_seed(seed, static_cast<std::uint64_t>(i));
        numeric::Rng rng(s);
        const int m = 2 + i % 2;
        std::vector<double> a(m);
        double sum = 0.0;
        for (double& v : a) sum += v = rng.uniform(0.1, 5.0);
        return rectangle_lemma_check(a, rng.uniform(0.05, 1.2 * sum), s, mc_samples);
    });
}

}  // namespace mxlab

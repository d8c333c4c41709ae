#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "counterexamples.hpp"
#include "grid.hpp"
#include "maximal.hpp"
#include "numerics.hpp"

namespace mxlab::experiments {

// Test-function families:
//   cube, ball      analytic union/base ratio of the cube or ball counterexample at size s
//   diamond         diamond witness functional at size N
//   grid            grid evaluation on (0, L)^d of the indicator of the counterexample half cube at s = L/2
//   grid+bumps      the grid family plus exponential bumps e^{-|x - x0|_1} at seeded centers (L^p scans)

struct SweepSpec {
    NormKind kind = NormKind::Linf;
    double p = 1.0;
    std::vector<double> ladder{8, 16, 32};
    std::string family = "grid";
    int dim = 2;
    double spacing = 0.125;  // grid resolution, identical for every ladder entry
    int stride = 1;
    double log_rho = 0.25 * std::log(2.0);
    int bumps = 10;
    std::uint64_t seed = 0x5eed;
    int threads = 1;

    void validate() const {
        if (ladder.empty()) throw std::invalid_argument("ladder is empty");
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            if (!(ladder[i] > 0.0) || !std::isfinite(ladder[i])) throw std::invalid_argument("ladder entries must be positive");
            if (i && !(ladder[i] > ladder[i - 1])) throw std::invalid_argument("ladder must be strictly increasing");
        }
        if (family != "cube" && family != "ball" && family != "diamond" && family != "grid" && family != "grid+bumps")
            throw std::invalid_argument("unknown test-function family: " + family);
        if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must lie in 1..3");
        if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
        if (stride < 1) throw std::invalid_argument("stride must be >= 1");
        if (bumps < 0) throw std::invalid_argument("bump count must be >= 0");
    }

    /// Resolution and candidate rule shared by the whole ladder.
    std::string policy_string() const {
        std::ostringstream os;
        os << "kind=" << to_string(kind) << ";family=" << family << ";dim=" << dim << ";spacing=" << fmt_double(spacing)
           << ";stride=" << stride << ";log_rho=" << fmt_double(log_rho) << ";r_min=spacing;r_max=diameter"
           << ";bumps=" << bumps;
        return os.str();
    }
    std::string policy_hash() const { return numeric::hex64(numeric::fnv1a(policy_string())); }

    nlohmann::json to_json() const {
        return {{"kind", to_string(kind)}, {"p", p},           {"ladder", ladder},   {"family", family},
                {"dim", dim},              {"spacing", spacing}, {"stride", stride}, {"log_rho", log_rho},
                {"bumps", bumps},          {"seed", seed},     {"policy_hash", policy_hash()}};
    }
};

struct SweepRow {
    double size = 0.0;
    double log_value = 0.0;
    double growth = std::numeric_limits<double>::quiet_NaN();  // value / previous value
    std::uint64_t seed = 0;
    std::string policy_hash;
    nlohmann::json extra = nlohmann::json::object();
};

struct SweepTable {
    std::string name;
    SweepSpec spec;
    std::vector<SweepRow> rows;

    std::vector<double> growths() const {
        std::vector<double> g;
        for (const auto& r : rows)
            if (!std::isnan(r.growth)) g.push_back(r.growth);
        return g;
    }
    double min_growth() const {
        double m = std::numeric_limits<double>::infinity();
        for (double g : growths()) m = std::min(m, g);
        return m;
    }
    double max_growth() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double g : growths()) m = std::max(m, g);
        return m;
    }

    std::string to_csv() const {
        std::ostringstream os;
        os << "table,size,log_value,value,growth,seed,policy_hash\n";
        for (const auto& r : rows) {
            os << name << ',' << fmt_double(r.size) << ',' << fmt_double(r.log_value) << ',';
            if (std::abs(r.log_value) < 30) os << fmt_double(std::exp(r.log_value));
            os << ',';
            if (!std::isnan(r.growth)) os << fmt_double(r.growth);
            os << ',' << r.seed << ',' << r.policy_hash << '\n';
        }
        return os.str();
    }
    nlohmann::json to_json() const {
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json j{{"size", r.size},
                             {"log_value", r.log_value},
                             {"seed", r.seed},
                             {"policy_hash", r.policy_hash},
                             {"growth", std::isnan(r.growth) ? nlohmann::json(nullptr) : nlohmann::json(r.growth)}};
            if (std::abs(r.log_value) < 30) j["value"] = std::exp(r.log_value);
            if (!r.extra.empty()) j["extra"] = r.extra;
            rs.push_back(j);
        }
        return {{"table", name}, {"spec", spec.to_json()}, {"rows", rs}};
    }
};

namespace detail {

inline void fill_growth(SweepTable& t) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) t.rows[i].growth = std::exp(t.rows[i].log_value - t.rows[i - 1].log_value);
}

inline GridFunction box_grid(const SweepSpec& s, double L) {
    const int n = static_cast<int>(std::lround(L / s.spacing));
    if (n < 2) throw std::invalid_argument("box side must span at least two cells");
    return GridFunction(std::vector<double>(s.dim, 0.0), s.spacing, std::vector<int>(s.dim, n));
}

inline maximal::CandidatePolicy policy_for(const SweepSpec& s, const GridFunction& g) {
    auto pol = maximal::default_policy(g, s.kind);
    pol.stride = s.stride;
    pol.log_rho = s.log_rho;
    return pol;
}

/// Indicator of the half cube {|x - s 1|_inf < s/4}, s = L/2, of the counterexample family.
inline GridFunction half_cube_indicator(const SweepSpec& s, double L) {
    GridFunction f = box_grid(s, L);
    const double c = 0.5 * L;
    for (std::size_t k = 0; k < f.size(); ++k) {
        Vec x = f.center(k);
        f.values[k] = (x.array() - c).abs().maxCoeff() < 0.25 * c ? 1.0 : 0.0;
    }
    return f;
}

/// Indicator of the base ball of the counterexample family in the sweep's norm.
inline GridFunction base_ball_indicator(const SweepSpec& s, double L) {
    GridFunction f = box_grid(s, L);
    const double c = 0.5 * L;
    Ball B(s.kind, ones(s.dim) * c, 0.5 * c);
    for (std::size_t k = 0; k < f.size(); ++k) f.values[k] = ball_contains(B, f.center(k)) ? 1.0 : 0.0;
    return f;
}

inline std::vector<GridFunction> bump_family(const SweepSpec& s, double L, std::uint64_t seed) {
    std::vector<GridFunction> out;
    numeric::Rng rng(seed);
    for (int b = 0; b < s.bumps; ++b) {
        Vec x0(s.dim);
        for (int a = 0; a < s.dim; ++a) x0[a] = rng.uniform(0.0, L);
        GridFunction f = box_grid(s, L);
        for (std::size_t k = 0; k < f.size(); ++k) f.values[k] = std::exp(-(f.center(k) - x0).lpNorm<1>());
        out.push_back(std::move(f));
    }
    return out;
}

inline GridFunction apply(const GridFunction& f, const SweepSpec& s, bool centered) {
    auto pol = policy_for(s, f);
    return centered ? maximal::centered_max_op_grid(f, s.kind, pol) : maximal::max_op_grid(f, s.kind, pol);
}

template <class RowFn>
SweepTable run_ladder(const std::string& name, const SweepSpec& spec, const RowFn& row_fn) {
    spec.validate();
    SweepTable t{name, spec, std::vector<SweepRow>(spec.ladder.size())};
    numeric::parallel_for(spec.ladder.size(), spec.threads, [&](std::size_t i) {
        SweepRow r = row_fn(spec.ladder[i], numeric::derive_seed(spec.seed, i));
        r.size = spec.ladder[i];
        r.seed = spec.seed;
        r.policy_hash = spec.policy_hash();
        t.rows[i] = std::move(r);
    });
    fill_growth(t);
    return t;
}

}  // namespace detail

/// Weak-type functional along the ladder: analytic counterexample ratios, the diamond witness,
/// or sup_lambda lambda mu{Mf > lambda} / |f|_1 on the grid for the half-cube indicator.
inline SweepTable weak11_scan(const SweepSpec& spec) {
    return detail::run_ladder("weak11", spec, [&](double size, std::uint64_t) {
        SweepRow r;
        if (spec.family == "cube" || spec.family == "ball") {
            auto F = spec.family == "cube" ? counterexamples::build_cube_family(size, spec.dim)
                                           : counterexamples::build_ball_family(size, spec.dim);
            auto row = counterexamples::counterexample_ratio(F);
            r.log_value = row.log_ratio;
            r.extra = {{"log_base", row.log_base}, {"log_union", row.log_union},
                       {"analytic_prediction_log", row.analytic_prediction_log}};
        } else if (spec.family == "diamond") {
            auto w = counterexamples::diamond_witness(size, spec.dim);
            auto F = counterexamples::diamond_weak_functional(w, 1.0);
            r.log_value = F.log_value;
            r.extra = {{"s_min", F.s_min}, {"s_full", F.s_full}};
        } else {
            auto f = detail::half_cube_indicator(spec, size);
            auto M = detail::apply(f, spec, false);
            auto rep = maximal::norms_and_weak(f, M, 1.0);
            r.log_value = rep.weak.functional;
            r.extra = {{"argmax_lambda", rep.weak.argmax_lambda}, {"cells", f.size()}};
        }
        return r;
    });
}

/// |Mf|_p / |f|_p on (0, L)^d maximized over the counterexample indicators and, for grid+bumps,
/// the exponential bumps.
inline SweepTable lp_scan(const SweepSpec& spec) {
    if (!(spec.p > 1.0)) throw std::domain_error("L^p scans need p > 1; use the weak-type scan at p = 1");
    if (spec.family != "grid" && spec.family != "grid+bumps")
        throw std::invalid_argument("L^p scans run on the grid families");
    return detail::run_ladder("lp", spec, [&](double L, std::uint64_t seed) {
        std::vector<GridFunction> fs{detail::half_cube_indicator(spec, L), detail::base_ball_indicator(spec, L)};
        if (spec.family == "grid+bumps")
            for (auto& b : detail::bump_family(spec, L, seed)) fs.push_back(std::move(b));
        SweepRow r;
        r.log_value = -std::numeric_limits<double>::infinity();
        int best = -1;
        for (std::size_t k = 0; k < fs.size(); ++k) {
            auto M = detail::apply(fs[k], spec, false);
            double v = maximal::norms_and_weak(fs[k], M, spec.p).log_lp_ratio;
            if (v > r.log_value) r.log_value = v, best = static_cast<int>(k);
        }
        r.extra = {{"argmax_function", best}, {"functions", fs.size()}};
        return r;
    });
}

struct ContrastTable {
    SweepTable centered, noncentered;
    std::size_t pointwise_failures = 0;  // cells with M^c f > M f
    nlohmann::json to_json() const {
        return {{"centered", centered.to_json()}, {"noncentered", noncentered.to_json()},
                {"pointwise_failures", pointwise_failures}};
    }
    std::string to_csv() const { return centered.to_csv() + noncentered.to_csv().substr(noncentered.to_csv().find('\n') + 1); }
};

/// Weak-type functionals of the centered and non-centered operators on the grid family.
inline ContrastTable centered_contrast(const SweepSpec& spec) {
    spec.validate();
    ContrastTable out;
    out.centered = {"centered", spec, std::vector<SweepRow>(spec.ladder.size())};
    out.noncentered = {"noncentered", spec, std::vector<SweepRow>(spec.ladder.size())};
    std::vector<std::size_t> fails(spec.ladder.size(), 0);
    numeric::parallel_for(spec.ladder.size(), spec.threads, [&](std::size_t i) {
        const double L = spec.ladder[i];
        auto f = detail::half_cube_indicator(spec, L);
        auto Mc = detail::apply(f, spec, true);
        auto M = detail::apply(f, spec, false);
        for (std::size_t k = 0; k < f.size(); ++k)
            if (Mc.values[k] > M.values[k] * (1 + 1e-12)) ++fails[i];
        for (auto [tab, G] : {std::pair{&out.centered, &Mc}, std::pair{&out.noncentered, &M}}) {
            SweepRow& r = tab->rows[i];
            r.size = L;
            r.seed = spec.seed;
            r.policy_hash = spec.policy_hash();
            r.log_value = maximal::norms_and_weak(f, *G, 1.0).weak.functional;
        }
    });
    detail::fill_growth(out.centered);
    detail::fill_growth(out.noncentered);
    for (auto f : fails) out.pointwise_failures += f;
    return out;
}

}  // namespace mxlab::experiments

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "grid.hpp"
#include "maximal.hpp"
#include "numerics.hpp"

namespace mxlab {

// Slices of the planar quadrant: S_i = {i < s(y) <= i+1} with s(y) = y_1 + y_2 for diamonds
// and the axial coordinate (y_1 + y_2)/sqrt 2 of the rotated cone for Euclidean balls.

inline double slice_coordinate(NormKind kind, const Vec& y) {
    const double s = y[0] + y[1];
    return kind == NormKind::L2 ? s / std::sqrt(2.0) : s;
}

/// Index i with y in S_i, or -1 outside the closed quadrant.
inline int slice_index(NormKind kind, const Vec& y) {
    if (y[0] < 0 || y[1] < 0) return -1;
    const double s = slice_coordinate(kind, y);
    return static_cast<int>(std::ceil(s)) - 1;
}

struct SlicingOptions {
    double spacing = 0.25;
    double margin = 2.0;  // grid extends this far below the quadrant so balls may leave it
    double peak = 4.0;    // random f = u^peak on S_i
    int threads = 1;
};

/// Grid reaching slice `top`, with mu weights and slice labels per cell.
struct SlicingGrid {
    NormKind kind;
    GridFunction grid;
    std::vector<double> w;
    std::vector<int> slice;
    maximal::CandidatePolicy policy;

    SlicingGrid(NormKind k, int top, const SlicingOptions& opt) : kind(k) {
        if (kind == NormKind::Linf) throw std::invalid_argument("slicing uses L1 or L2 balls");
        const double scale = kind == NormKind::L2 ? std::sqrt(2.0) : 1.0;
        const double hi = (top + 1) * scale + 1.0;
        const int n = static_cast<int>(std::ceil((hi + opt.margin) / opt.spacing));
        grid = GridFunction({-opt.margin, -opt.margin}, opt.spacing, {n, n});
        w = grid.mu_weights();
        slice.resize(grid.size());
        for (std::size_t c = 0; c < grid.size(); ++c) slice[c] = slice_index(kind, grid.center(c));
        policy = maximal::default_policy(grid, kind);
    }

    /// M(f chi_{S_i}) for values given on the whole grid (entries outside S_i are ignored).
    std::vector<double> maximal_of(const std::vector<double>& f, int i) const {
        std::vector<double> g(grid.size(), 0.0);
        for (std::size_t c = 0; c < g.size(); ++c)
            if (slice[c] == i) g[c] = f[c];
        maximal::Problem pb{grid.dims, g.data(), w.data(), nullptr};
        return maximal::maximal_values(pb, kind, grid.spacing, policy);
    }

    double lp_on_slice(const std::vector<double>& v, double p, int j) const {
        double acc = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c)
            if (slice[c] == j) acc += std::pow(v[c], p) * w[c];
        return acc;
    }

    /// Ratio of integral over S_j of M(f chi_{S_i})^p to integral over S_i of f^p; 0 when f vanishes on S_i.
    std::vector<double> ratios(const std::vector<double>& f, double p, int i, const std::vector<int>& js) const {
        const double den = lp_on_slice(f, p, i);
        std::vector<double> out(js.size(), 0.0);
        if (!(den > 0.0)) return out;
        auto M = maximal_of(f, i);
        for (std::size_t k = 0; k < js.size(); ++k) out[k] = lp_on_slice(M, p, js[k]) / den;
        return out;
    }

    std::vector<double> random_f(int i, std::uint64_t seed, double peak) const {
        numeric::Rng rng(seed);
        std::vector<double> f(grid.size(), 0.0);
        for (std::size_t c = 0; c < f.size(); ++c)
            if (slice[c] == i) f[c] = std::pow(rng.uniform(), peak);
        return f;
    }
};

inline void check_slicing_args(double p, int i, int j) {
    if (!(p > 1.0)) throw std::domain_error("p must exceed 1");
    if (i < 1 || j < 1) throw std::domain_error("slice indices must be >= 1");
}

/// Ratio for a random f supported in S_i, evaluated on S_j.
inline double slicing_decay(double p, NormKind kind, int i, int j, std::uint64_t f_seed,
                            const SlicingOptions& opt = {}) {
    check_slicing_args(p, i, j);
    SlicingGrid g(kind, std::max(i, j), opt);
    return g.ratios(g.random_f(i, f_seed, opt.peak), p, i, {j})[0];
}

/// Same ratio for explicit values of f on the slicing grid reaching max(i, j).
inline double slicing_decay(double p, NormKind kind, int i, int j, const std::vector<double>& f,
                            const SlicingOptions& opt = {}) {
    check_slicing_args(p, i, j);
    SlicingGrid g(kind, std::max(i, j), opt);
    if (f.size() != g.grid.size()) throw std::invalid_argument("f does not match the slicing grid");
    return g.ratios(f, p, i, {j})[0];
}

struct DecayFit {
    double p = 2.0;
    NormKind kind = NormKind::L2;
    int i = 7;
    int functions = 20;
    std::vector<int> distances;
    std::vector<double> log_ratio;  // log of the largest ratio over f and over j = i +- k
    double delta = 0.0;
    double intercept = 0.0;
    bool decreasing = false;

    nlohmann::json to_json() const {
        return {{"p", p},
                {"kind", to_string(kind)},
                {"i", i},
                {"functions", functions},
                {"distances", distances},
                {"log_ratio", log_ratio},
                {"delta", delta},
                {"intercept", intercept},
                {"decreasing", decreasing}};
    }
};

/// Fits log max ratio against |i - j| for |i - j| in 0..kmax; delta is minus the slope.
inline DecayFit fit_decay(double p, NormKind kind, int i, int kmax, int functions, std::uint64_t seed,
                          const SlicingOptions& opt = {}) {
    check_slicing_args(p, i, i);
    if (i - kmax < 1) throw std::domain_error("i - kmax must be >= 1");
    SlicingGrid g(kind, i + kmax, opt);
    std::vector<int> js;
    for (int j = i - kmax; j <= i + kmax; ++j) js.push_back(j);
    std::vector<std::vector<double>> per_f(functions);
    numeric::parallel_for(functions, opt.threads, [&](std::size_t n) {
        per_f[n] = g.ratios(g.random_f(i, numeric::derive_seed(seed, n), opt.peak), p, i, js);
    });
    DecayFit fit;
    fit.p = p;
    fit.kind = kind;
    fit.i = i;
    fit.functions = functions;
    std::vector<double> xs;
    for (int k = 0; k <= kmax; ++k) {
        double best = 0.0;
        for (const auto& r : per_f)
            for (std::size_t q = 0; q < js.size(); ++q)
                if (std::abs(js[q] - i) == k) best = std::max(best, r[q]);
        fit.distances.push_back(k);
        fit.log_ratio.push_back(std::log(best));
        xs.push_back(k);
    }
    auto [slope, icept] = numeric::linear_fit(xs, fit.log_ratio);
    fit.delta = -slope;
    fit.intercept = icept;
    fit.decreasing = true;
    for (std::size_t k = 1; k < fit.log_ratio.size(); ++k)
        if (!(fit.log_ratio[k] < fit.log_ratio[k - 1])) fit.decreasing = false;
    return fit;
}

}  // namespace mxlab

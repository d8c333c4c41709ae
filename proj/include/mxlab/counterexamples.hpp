#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"
#include "maximal.hpp"
#include "measure.hpp"
#include "numerics.hpp"

namespace mxlab::counterexamples {

/// Base ball B = ball(s*1, s/2) in the given norm, the flat piece Delta = {s*1 + y : sum y = 0, |y| <= s/4}
/// (the half ball cut by the hyperplane x_0 = d*s) and the union of the balls ball(c, s/2), c in Delta.
struct CubeBallFamily {
    NormKind kind = NormKind::Linf;
    double s = 4.0;
    int d = 2;

    Vec center() const { return ones(d) * s; }
    double radius() const { return 0.5 * s; }
    Ball base_ball() const { return Ball(kind, center(), radius()); }

    /// Endpoints of Delta for d = 2.
    std::pair<Vec, Vec> segment_endpoints() const {
        if (d != 2) throw CapabilityError("segment endpoints are defined for d = 2");
        double a = kind == NormKind::Linf ? 0.25 * s : 0.25 * s / std::sqrt(2.0);
        return {vec({s + a, s - a}), vec({s - a, s + a})};
    }

    /// Whether c lies on Delta (closed).
    bool in_segment(const Vec& c, double tol = 1e-12) const {
        Vec y = c - center();
        if (std::abs(y.sum()) > tol * s) return false;
        return norm(kind, y) <= 0.25 * s * (1 + tol);
    }

    /// Union membership with the ball radius reduced by `margin` (margin = 0: the union itself).
    bool contains(const Vec& p, double margin = 0.0) const {
        const double rho = radius() - margin;
        if (!(rho > 0.0)) return false;
        Vec q = p - center();
        if (kind == NormKind::Linf) {
            // exists y with |y_i| <= s/4, sum y = 0 and |q_i - y_i| < rho
            double lo_sum = 0.0, hi_sum = 0.0;
            for (int i = 0; i < d; ++i) {
                double lo = std::max(q[i] - rho, -0.25 * s), hi = std::min(q[i] + rho, 0.25 * s);
                if (!(lo < hi)) return false;
                lo_sum += lo;
                hi_sum += hi;
            }
            return lo_sum < 0.0 && hi_sum > 0.0;
        }
        // L2: distance to the flat disc of radius s/4 in the hyperplane through the center
        double par = q.sum() / std::sqrt(static_cast<double>(d));
        Vec perp = q - ones(d) * (q.sum() / d);
        double out = std::max(0.0, perp.norm() - 0.25 * s);
        return par * par + out * out < rho * rho;
    }

    bool base_contains(const Vec& p) const { return ball_contains(base_ball(), p); }

    /// Prism (cubes) or cylinder (balls) under Delta used for the analytic lower bound.
    bool prism_contains(const Vec& p) const {
        Vec q = p - center();
        double mean = q.sum() / d;
        Vec perp = q - ones(d) * mean;
        if (kind == NormKind::Linf)
            return perp.lpNorm<Eigen::Infinity>() <= 0.25 * s && std::abs(mean) < 0.5 * s;
        return perp.norm() <= 0.25 * s && std::abs(mean) * std::sqrt(static_cast<double>(d)) < 0.5 * s;
    }

    /// Cube unions are polytopes: Delta plus an open cube.
    HPolytope union_polytope() const {
        if (kind != NormKind::Linf) throw CapabilityError("only the cube union is a polytope");
        HPolytope P(d);
        for (int i = 0; i < d; ++i) {
            Vec a = Vec::Zero(d);
            a[i] = 1.0;
            P.add(a, s + 0.75 * s);
            P.add(-a, -(s - 0.75 * s));
        }
        for (int mask = 1; mask < (1 << d); ++mask) {
            Vec a = Vec::Zero(d);
            int k = 0;
            for (int i = 0; i < d; ++i)
                if (mask & (1 << i)) {
                    a[i] = 1.0;
                    ++k;
                }
            double bound = k * 0.5 * s + (d - k) * 0.25 * s;
            P.add(a, k * s + bound);
            P.add(-a, -k * s + bound);
        }
        return P;
    }
};

inline void check_family_args(double s, int d) {
    if (!(s >= 2.0) || !std::isfinite(s)) throw std::invalid_argument("family needs s >= 2");
    if (d != 2 && d != 3) throw std::invalid_argument("family needs d in {2, 3}");
}

inline CubeBallFamily build_cube_family(double s, int d) {
    check_family_args(s, d);
    return {NormKind::Linf, s, d};
}

inline CubeBallFamily build_ball_family(double s, int d) {
    check_family_args(s, d);
    return {NormKind::L2, s, d};
}

namespace detail {

// log of int_{-rho}^{rho} e^{-sqrt(d) u} omega_{d-1} (a + sqrt(rho^2 - u^2))^{d-1} du, the mu of
// (flat disc of radius a perpendicular to 1) + ball(0, rho), centered on the level t = 0.
inline double log_capsule(int d, double a, double rho, double tol = 1e-12) {
    const double sd = std::sqrt(static_cast<double>(d));
    const double omega = measure::detail::unit_ball_volume(d - 1);
    // u = rho cos(theta); scale out the largest exponential e^{sd rho}
    auto f = [&](double th) {
        double u = rho * std::cos(th);
        double w = a + rho * std::sin(th);
        return std::exp(-sd * (u + rho)) * omega * std::pow(w, d - 1) * rho * std::sin(th);
    };
    numeric::QuadratureOptions opt;
    opt.rel_tol = tol;
    opt.initial_panels = 64;
    double I = numeric::adaptive_simpson(f, 0.0, std::numbers::pi, opt);
    return sd * rho + std::log(I);
}

// (d-1)-volume of {y : |y|_inf <= a, sum y = 0} projected by dropping the last coordinate.
inline double log_projected_hexagon(int d, double a) {
    HPolytope P(d - 1);
    for (int i = 0; i + 1 < d; ++i) {
        Vec e = Vec::Zero(d - 1);
        e[i] = 1.0;
        P.add(e, a);
        P.add(-e, a);
    }
    Vec one = Vec::Ones(d - 1);
    P.add(one, a);
    P.add(-one, a);
    return std::log(P.volume());
}

}  // namespace detail

/// mu of the base ball: exact for cubes, slice quadrature for balls.
inline double log_base_measure(const CubeBallFamily& F) {
    if (F.kind == NormKind::Linf) return measure::mu_cube_exact(F.center(), F.radius()).log_value;
    return -F.d * F.s + detail::log_capsule(F.d, 0.0, F.radius());
}

/// Exact mu of the union region (polytope slicing for cubes, closed-form slices for balls).
inline double log_union_measure(const CubeBallFamily& F) {
    if (F.kind == NormKind::Linf) return measure::mu_polytope_quadrature(F.union_polytope(), 1e-10).log_value;
    return -F.d * F.s + detail::log_capsule(F.d, 0.25 * F.s, F.radius());
}

/// Closed-form mu of the prism (cubes) or cylinder (balls) contained in the union.
inline double log_prism_measure(const CubeBallFamily& F) {
    const int d = F.d;
    const double s = F.s;
    if (F.kind == NormKind::Linf)
        return detail::log_projected_hexagon(d, 0.25 * s) + numeric::log_diff_exp(-0.5 * d * s, -1.5 * d * s);
    const double sd = std::sqrt(static_cast<double>(d));
    return std::log(measure::detail::unit_ball_volume(d - 1)) + (d - 1) * std::log(0.25 * s) - std::log(sd) +
           numeric::log_diff_exp(-(d - 0.5 * sd) * s, -(d + 0.5 * sd) * s);
}

/// Level-set description of the union for Monte Carlo.
inline measure::SlabRegion union_slab(const CubeBallFamily& F) {
    measure::SlabRegion R;
    R.d = F.d;
    const double reach = F.kind == NormKind::Linf ? 0.5 * F.d * F.s : 0.5 * std::sqrt(static_cast<double>(F.d)) * F.s;
    R.t_lo = F.d * F.s - reach;
    R.t_hi = F.d * F.s + reach;
    R.proj_lo = Vec(F.d - 1);
    R.proj_hi = Vec(F.d - 1);
    for (int i = 0; i + 1 < F.d; ++i) {
        R.proj_lo[i] = 0.25 * F.s;
        R.proj_hi[i] = 1.75 * F.s;
    }
    R.member = [F](const Vec& x) { return F.contains(x); };
    return R;
}

struct RatioRow {
    std::string family;
    double s = 0.0;
    int d = 0;
    double log_base = 0.0;
    double log_union = 0.0;
    double log_ratio = 0.0;
    double analytic_prediction_log = 0.0;  // prism lower bound: log mu(prism) - log mu(base)
    Method method = Method::Quadrature;
    long long n_samples = 0;
    std::uint64_t seed = 0;
    double rel_stderr = 0.0;
    bool zero_hits = false;
};

/// log mu(union) - log mu(base). Quadrature is exact up to its tolerance; MonteCarlo samples the union
/// with the level-set proposal.
inline RatioRow counterexample_ratio(const CubeBallFamily& F, Method method = Method::Quadrature, long long n = 0,
                                     std::uint64_t seed = 0, int threads = 1) {
    RatioRow row;
    row.family = F.kind == NormKind::Linf ? "cube" : "ball";
    row.s = F.s;
    row.d = F.d;
    row.log_base = log_base_measure(F);
    row.method = method;
    row.seed = seed;
    if (method == Method::MonteCarlo) {
        auto est = measure::mc_slab(union_slab(F), LaguerreParams{}, n, seed, threads);
        row.log_union = est.log_value;
        row.n_samples = est.samples;
        row.rel_stderr = est.rel_stderr;
        row.zero_hits = est.zero_hits;
    } else {
        row.log_union = log_union_measure(F);
    }
    row.log_ratio = row.log_union - row.log_base;
    row.analytic_prediction_log = log_prism_measure(F) - row.log_base;
    return row;
}

/// Grid check that M f >= (1 - eta) / mu(base) on the union, for f the normalized indicator of the half cube.
struct GridCertificate {
    double s = 0.0, spacing = 0.0;
    std::size_t points = 0;    // cells checked
    double min_scaled = 0.0;   // min of M f * mu(base) over checked cells
};

inline GridCertificate cube_grid_certificate(double s, int cells_per_unit = 8, double margin_cells = 2.0) {
    auto F = build_cube_family(s, 2);
    const double h = 1.0 / cells_per_unit;
    const int n = static_cast<int>(std::lround(2.0 * s / h));
    const double mu_half = std::exp(measure::mu_cube_exact(F.center(), 0.25 * s).log_value);
    GridFunction f({0.0, 0.0}, h, {n, n});
    for (std::size_t k = 0; k < f.size(); ++k) {
        Vec x = f.center(k);
        bool in = std::abs(x[0] - s) < 0.25 * s && std::abs(x[1] - s) < 0.25 * s;
        f.values[k] = in ? 1.0 / mu_half : 0.0;
    }
    maximal::CandidatePolicy pol;
    pol.r_max = F.radius() * (1 + 1e-9);
    pol.r_min = pol.r_max;
    pol.log_rho = std::log(2.0);
    auto M = maximal::max_op_grid(f, NormKind::Linf, pol);
    const double mu_q = std::exp(log_base_measure(F));
    GridCertificate c{s, h, 0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!F.contains(f.center(k), margin_cells * h)) continue;
        ++c.points;
        c.min_scaled = std::min(c.min_scaled, M.values[k] * mu_q);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Diamond witness

struct DiamondWitness {
    double N = 16.0;
    int d = 2;
    double eps = 1e-2;

    /// Center of the cube carrying the mass.
    Vec mass_center() const {
        Vec c = ones(d) * eps;
        c[d - 1] = N;
        return c;
    }
    double log_lambda() const { return (1 - d) * std::log(N) + N; }
    /// log of e^s / (1 + s - xi_d)^{d-1}, s = |xi|_1.
    double log_lower_bound(const Vec& xi) const {
        double s = xi.sum();
        return s - (d - 1) * std::log1p(s - xi[d - 1]);
    }
    /// f = indicator of the cube / its mu; returns the value on the cube.
    double log_density() const { return -measure::mu_cube_exact(mass_center(), eps).log_value; }
    bool in_support(const Vec& x) const { return (x - mass_center()).lpNorm<Eigen::Infinity>() < eps; }
};

inline DiamondWitness diamond_witness(double N, int d, double eps = 1e-2) {
    if (!(N >= 8.0) || !std::isfinite(N)) throw std::invalid_argument("witness needs N >= 8");
    if (d < 2 || d > 4) throw std::invalid_argument("witness needs d in 2..4");
    if (!(eps > 0.0) || eps > 0.01 * N) throw std::invalid_argument("witness needs 0 < eps <= N/100");
    return {N, d, eps};
}

struct DiamondFunctional {
    double log_value = numeric::neg_inf;  // log of lambda * mu{lower bound >= c lambda} / |f|_1
    bool empty = true;
    double s_min = 0.0;  // smallest |xi|_1 in the level set
    double s_full = 0.0; // above this the whole shell is in the level set
};

/// Largest sum of the first d-1 coordinates admitted at |xi|_1 = s, or negative if none.
inline double sigma_max(const DiamondWitness& w, double c, double s) {
    const double L = std::log(c) + w.log_lambda();
    return std::exp((s - L) / (w.d - 1)) - 1.0;
}

inline bool in_level_set(const DiamondWitness& w, double c, const Vec& xi) {
    if (!in_orthant(xi) || !(xi.sum() < w.N)) return false;
    return w.log_lower_bound(xi) >= std::log(c) + w.log_lambda();
}

/// Integrates shells |xi|_1 = s in (0, N): the admissible set at level s is the simplex
/// {sum_{i<d} xi_i <= min(s, sigma_max(s))}, of Lebesgue measure m^{d-1}/(d-1)! per unit ds.
inline DiamondFunctional diamond_weak_functional(const DiamondWitness& w, double c, double rel_tol = 1e-10) {
    if (!(c > 0.0) || c > 1.0) throw std::invalid_argument("level constant must lie in (0, 1]");
    DiamondFunctional out;
    const double N = w.N;
    const double L = std::log(c) + w.log_lambda();
    const double s0 = std::max(0.0, L);  // sigma_max(s0) = 0
    if (!(s0 < N)) return out;
    auto g = [&](double s) { return sigma_max(w, c, s) - s; };
    double s1 = g(s0) >= 0.0 ? s0 : (g(N) <= 0.0 ? N : numeric::bisect(g, s0, N));
    out.s_min = s0;
    out.s_full = s1;
    double log_fact = std::lgamma(static_cast<double>(w.d));
    auto f = [&](double s) {
        double m = std::min(s, sigma_max(w, c, s));
        if (m <= 0.0) return 0.0;
        return std::exp(N - s + (w.d - 1) * std::log(m) - log_fact);
    };
    numeric::QuadratureOptions opt;
    opt.rel_tol = rel_tol;
    opt.initial_panels = 64;
    double J = numeric::adaptive_simpson_pieces(f, {s0, s1, N}, opt);
    if (!(J > 0.0)) return out;
    out.empty = false;
    out.log_value = w.log_lambda() - N + std::log(J);
    return out;
}

/// Certificate at sampled points of the level set: the diamond with c_i = xi_i (i < d),
/// c_d = xi_d + M - shift, M = N + s + 1, contains xi and the mass cube, and its measure (by quadrature)
/// is at most e^{shift - s} sum_{k<d} sigma^k / k!, which gives M f(xi) >= e^s / (1 + sigma)^{d-1} up to e^{-shift}.
struct DiamondCertificate {
    std::vector<Vec> points;
    std::vector<double> log_mu_diamond, log_bound;
    std::size_t containment_failures = 0;
    std::size_t bound_failures = 0;
    double max_ratio = 0.0;  // max mu(D) / bound
    bool pass() const { return containment_failures == 0 && bound_failures == 0 && !points.empty(); }
};

inline DiamondCertificate diamond_certificate(const DiamondWitness& w, double c, int count, std::uint64_t seed) {
    DiamondCertificate cert;
    auto F = diamond_weak_functional(w, c);
    if (F.empty) return cert;
    numeric::Rng rng(seed);
    const int d = w.d;
    const double s_hi = w.N - (2 * d) * w.eps;
    int tries = 0;
    while (static_cast<int>(cert.points.size()) < count && tries < 100000) {
        ++tries;
        double s = rng.uniform(F.s_min, s_hi);
        double m = std::min(s, sigma_max(w, c, s));
        if (!(m > 0.0)) continue;
        // uniform point of the simplex {x >= 0, sum x <= m} in d-1 coordinates
        Vec xi(d);
        std::vector<double> e(d);
        double tot = 0.0;
        for (int i = 0; i < d; ++i) {
            e[i] = -std::log(rng.uniform_open());
            tot += e[i];
        }
        double sigma = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            xi[i] = m * e[i] / tot;
            sigma += xi[i];
        }
        xi[d - 1] = s - sigma;
        if (!in_level_set(w, c, xi)) continue;
        // the center sits slightly below xi_d + M so that xi is interior to the open diamond
        const double M = w.N + s + 1.0, shift = 1e-6;
        Vec z = xi;
        z[d - 1] += M - shift;
        auto P = diamond_polytope(z, M);
        bool ok = true;
        for (int mask = 0; mask < (1 << d); ++mask) {
            Vec v = w.mass_center();
            for (int i = 0; i < d; ++i) v[i] += (mask & (1 << i)) ? w.eps : -w.eps;
            if (!((v - z).lpNorm<1>() < M)) ok = false;
        }
        if (!((xi - z).lpNorm<1>() < M)) ok = false;
        double lmu = measure::mu_polytope_quadrature(P, 1e-10).log_value;
        double bound = 0.0, term = 1.0;
        for (int k = 0; k < d; ++k) {
            bound += term;
            term *= sigma / (k + 1);
        }
        double lb = -(s - shift) + std::log(bound);
        cert.points.push_back(xi);
        cert.log_mu_diamond.push_back(lmu);
        cert.log_bound.push_back(lb);
        if (!ok) ++cert.containment_failures;
        if (lmu > lb + 1e-8) ++cert.bound_failures;
        cert.max_ratio = std::max(cert.max_ratio, std::exp(lmu - lb));
    }
    return cert;
}

}  // namespace mxlab::counterexamples

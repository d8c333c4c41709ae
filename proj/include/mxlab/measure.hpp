#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "numerics.hpp"

namespace mxlab {

enum class Method { Exact, Quadrature, MonteCarlo };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Exact: return "exact";
        case Method::Quadrature: return "quadrature";
        case Method::MonteCarlo: return "montecarlo";
    }
    return "?";
}

/// A measure in log domain. `zero_hits` marks a Monte Carlo run that never hit the set.
struct MeasureEstimate {
    double log_value = numeric::neg_inf;
    Method method = Method::Exact;
    double rel_stderr = 0.0;
    long long samples = 0;
    bool zero_hits = false;

    double value() const { return std::exp(log_value); }
    /// Absolute standard error of log_value (delta method).
    double log_stderr() const { return rel_stderr; }
};

/// Exponents of the Laguerre-type density prod x_i^alpha_i e^{-x_i}.
struct LaguerreParams {
    std::vector<double> alpha;

    LaguerreParams() = default;
    explicit LaguerreParams(std::vector<double> a) : alpha(std::move(a)) {
        for (double v : alpha)
            if (!(v > -1.0)) throw std::invalid_argument("Laguerre exponents must exceed -1");
    }
    bool trivial() const {
        for (double v : alpha)
            if (v != 0.0) return false;
        return true;
    }
    double log_weight(const Vec& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i)
            if (alpha[i] != 0.0) s += alpha[i] * std::log(x[static_cast<Eigen::Index>(i)]);
        return s;
    }
};

namespace measure {

inline MeasureEstimate exact(double logv) { return {logv, Method::Exact, 0.0, 0, false}; }
inline MeasureEstimate quadrature(double logv) { return {logv, Method::Quadrature, 0.0, 0, false}; }

/// mu of the orthant-truncated cube Q(x, r).
inline MeasureEstimate mu_cube_exact(const Vec& x, double r) {
    require_point_plus(x);
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) s += numeric::log_diff_exp(-std::max(0.0, x[i] - r), -(x[i] + r));
    return exact(s);
}

/// log of the integral of t^a e^{-t} over (lo, hi), 0 <= lo < hi < inf.
inline double log_gamma_window(double a, double lo, double hi, double tol = 1e-10) {
    if (a == 0.0) return numeric::log_diff_exp(-lo, -hi);
    // u = t^{a+1} removes the singularity at 0: integrand becomes e^{-u^{1/(a+1)}} / (a+1)
    const double k = a + 1.0;
    const double ulo = std::pow(lo, k), uhi = std::pow(hi, k);
    auto g = [&](double u) { return std::exp(-(std::pow(u, 1.0 / k) - lo)); };
    numeric::QuadratureOptions opt;
    opt.rel_tol = tol;
    opt.initial_panels = 64;
    double I = numeric::adaptive_simpson(g, ulo, uhi, opt);
    return -lo + std::log(I / k);
}

/// mu_alpha of the orthant-truncated cube, coordinate by coordinate.
inline MeasureEstimate mu_cube_laguerre(const Vec& x, double r, const LaguerreParams& lp) {
    if (lp.trivial()) return mu_cube_exact(x, r);
    require_point_plus(x);
    if (static_cast<int>(lp.alpha.size()) != x.size()) throw std::invalid_argument("alpha dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) s += log_gamma_window(lp.alpha[i], std::max(0.0, x[i] - r), x[i] + r);
    return quadrature(s);
}

/// mu of a bounded convex polytope by slicing along {x_0 = t}; slice volumes are exact,
/// the t-integral is adaptive Simpson split at the vertex levels.
inline MeasureEstimate mu_polytope_quadrature(const HPolytope& P, double tol = 1e-8) {
    const int d = P.dim;
    auto verts = P.vertices();
    if (verts.empty()) return quadrature(numeric::neg_inf);
    std::vector<double> levels;
    Vec centroid = Vec::Zero(d);
    for (const auto& v : verts) {
        levels.push_back(v.sum());
        centroid += v;
    }
    centroid /= static_cast<double>(verts.size());
    const double t_lo = *std::min_element(levels.begin(), levels.end());
    const double t_hi = *std::max_element(levels.begin(), levels.end());
    if (!(t_hi > t_lo)) return quadrature(numeric::neg_inf);
    if (d == 1) return quadrature(numeric::log_diff_exp(-t_lo, -t_hi));
    const double c0 = centroid.sum();
    auto f = [&](double t) {
        Vec anchor = (centroid + ones(d) * (t - c0) / d).head(d - 1);
        return std::exp(-(t - t_lo)) * P.level_slice(t).volume(anchor);
    };
    numeric::QuadratureOptions opt;
    opt.rel_tol = tol;
    double I = numeric::adaptive_simpson_pieces(f, levels, opt);
    if (!(I > 0.0)) return quadrature(numeric::neg_inf);
    return quadrature(-t_lo + std::log(I));
}

namespace detail {

inline double unit_ball_volume(int k) {
    return std::pow(M_PI, k / 2.0) / std::tgamma(k / 2.0 + 1.0);
}

// Euclidean ball in d = 2 (possibly cut by the axes) or interior ball in any d,
// parameterized by theta in (0, pi) along the diagonal so the square-root endpoints disappear.
inline MeasureEstimate mu_euclid(const Ball& b, double tol) {
    const int d = b.dim();
    const double r = b.radius;
    const double sd = std::sqrt(static_cast<double>(d));
    const double c0 = b.center.sum();
    const double t_lo = c0 - sd * r;
    numeric::QuadratureOptions opt;
    opt.rel_tol = tol;
    opt.initial_panels = 64;
    if (b.interior()) {
        const double vk = unit_ball_volume(d - 1);
        auto f = [&](double th) {
            double rho = r * std::sin(th);
            return std::exp(-sd * r * (1.0 - std::cos(th))) * vk * std::pow(rho, d - 1) * r * std::sin(th);
        };
        return quadrature(-t_lo + std::log(numeric::adaptive_simpson(f, 0.0, M_PI, opt)));
    }
    if (d != 2) throw CapabilityError("Euclidean-ball quadrature needs d <= 2 or an interior ball");
    const Vec& c = b.center;
    const double s2 = std::sqrt(2.0);
    // chord of the disc on {x + y = t}: foot point F, half-length r sin(theta), clipped by the axes
    auto f = [&](double th) {
        double u = -r * std::cos(th);
        double F1 = c[0] + u / s2, F2 = c[1] + u / s2;
        double hl = r * std::sin(th);
        double len = std::min(hl, s2 * F2) - std::max(-hl, -s2 * F1);
        if (len <= 0.0) return 0.0;
        double t = c0 + s2 * u;
        return std::exp(-(t - t_lo)) * len * r * std::sin(th);
    };
    // kinks where the chord ends cross an axis
    std::vector<double> br{0.0, M_PI};
    for (int i = 0; i < 2; ++i) {
        auto g = [&](double th) {
            double u = -r * std::cos(th);
            double Fi = c[i] + u / s2;
            return r * std::sin(th) - s2 * Fi;
        };
        const int n = 512;
        for (int k = 0; k < n; ++k) {
            double a = M_PI * k / n, bb = M_PI * (k + 1) / n;
            if ((g(a) > 0) != (g(bb) > 0)) br.push_back(numeric::bisect(g, a, bb));
        }
    }
    double I = numeric::adaptive_simpson_pieces(f, br, opt);
    if (!(I > 0.0)) return quadrature(numeric::neg_inf);
    return quadrature(-t_lo + std::log(I));
}

}  // namespace detail

/// mu(ball) by slice quadrature: L1 and Linf through polytope slices, L2 when d <= 2 or the ball is interior.
inline MeasureEstimate mu_quadrature(const Ball& b, double tol = 1e-8) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const int d = b.dim();
    switch (b.kind) {
        case NormKind::L1: return mu_polytope_quadrature(diamond_polytope(b.center, b.radius), tol);
        case NormKind::Linf: {
            Vec lo = (b.center.array() - b.radius).max(0.0).matrix();
            return mu_polytope_quadrature(box_polytope(lo, Vec(b.center.array() + b.radius)), tol);
        }
        case NormKind::L2:
            if (d == 1) return mu_cube_exact(b.center, b.radius);
            return detail::mu_euclid(b, tol);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Monte Carlo

enum class Proposal { Box, Slab };

inline std::string to_string(Proposal p) { return p == Proposal::Box ? "box" : "slab"; }

/// A region described for level-set sampling: t = x_0 in (t_lo, t_hi), the first d-1
/// coordinates in a box, x_d = t - sum of the others.
struct SlabRegion {
    int d = 0;
    double t_lo = 0.0, t_hi = 0.0;
    Vec proj_lo, proj_hi;
    std::function<bool(const Vec&)> member;
};

inline constexpr int kBatches = 32;

namespace detail {

// Combines per-batch (log scale, mean) pairs into an estimate with batch-means stderr.
inline MeasureEstimate combine_batches(double log_scale, const std::vector<double>& means,
                                       const std::vector<long long>& sizes, long long n) {
    double total = 0.0;
    for (std::size_t b = 0; b < means.size(); ++b) total += means[b] * static_cast<double>(sizes[b]);
    const double mean = total / static_cast<double>(n);
    MeasureEstimate e;
    e.method = Method::MonteCarlo;
    e.samples = n;
    if (!(mean > 0.0)) {
        e.zero_hits = true;
        e.log_value = numeric::neg_inf;
        e.rel_stderr = std::numeric_limits<double>::infinity();
        return e;
    }
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(means.size() - 1);
    e.log_value = log_scale + std::log(mean);
    e.rel_stderr = std::sqrt(var / static_cast<double>(means.size())) / mean;
    return e;
}

inline std::vector<long long> batch_sizes(long long n) {
    std::vector<long long> s(kBatches, n / kBatches);
    for (long long i = 0; i < n % kBatches; ++i) ++s[static_cast<std::size_t>(i)];
    return s;
}

}  // namespace detail

/// Level-set importance sampling: t from the exponential law on (t_lo, t_hi), the rest uniform.
inline MeasureEstimate mc_slab(const SlabRegion& R, const LaguerreParams& lp, long long n, std::uint64_t seed,
                               int threads = 1) {
    if (n < 1000) throw std::invalid_argument("Monte Carlo needs n >= 1000");
    const int d = R.d;
    double log_scale = numeric::log_diff_exp(-R.t_lo, -R.t_hi);
    for (int i = 0; i + 1 < d; ++i) log_scale += std::log(R.proj_hi[i] - R.proj_lo[i]);
    auto sizes = detail::batch_sizes(n);
    std::vector<double> means(kBatches, 0.0);
    const bool weighted = !lp.alpha.empty() && !lp.trivial();
    numeric::parallel_for(kBatches, threads, [&](std::size_t b) {
        numeric::Rng rng(numeric::derive_seed(seed, b));
        double acc = 0.0;
        Vec x(d);
        for (long long k = 0; k < sizes[b]; ++k) {
            double t = rng.trunc_exp(R.t_lo, R.t_hi);
            double rest = t;
            for (int i = 0; i + 1 < d; ++i) {
                x[i] = rng.uniform(R.proj_lo[i], R.proj_hi[i]);
                rest -= x[i];
            }
            x[d - 1] = rest;
            if (!R.member(x)) continue;
            acc += weighted ? std::exp(lp.log_weight(x)) : 1.0;
        }
        means[b] = sizes[b] > 0 ? acc / static_cast<double>(sizes[b]) : 0.0;
    });
    return detail::combine_batches(log_scale, means, sizes, n);
}

/// Level-set description of an orthant-truncated ball.
inline SlabRegion slab_region(const Ball& b) {
    const int d = b.dim();
    const double r = b.radius;
    double reach = r;  // max of x_0 - c_0 over the ball
    if (b.kind == NormKind::L2) reach = std::sqrt(static_cast<double>(d)) * r;
    if (b.kind == NormKind::Linf) reach = d * r;
    SlabRegion R;
    R.d = d;
    double lo_sum = 0.0;
    for (int i = 0; i < d; ++i) lo_sum += std::max(0.0, b.center[i] - r);
    R.t_lo = std::max(lo_sum, b.center.sum() - reach);
    R.t_hi = b.center.sum() + reach;
    R.proj_lo = Vec(std::max(d - 1, 1));
    R.proj_hi = Vec(std::max(d - 1, 1));
    for (int i = 0; i + 1 < d; ++i) {
        R.proj_lo[i] = std::max(0.0, b.center[i] - r);
        R.proj_hi[i] = b.center[i] + r;
    }
    R.member = [b](const Vec& x) { return ball_contains(b, x); };
    return R;
}

/// Importance-sampled Monte Carlo estimate of mu (or mu_alpha) of a ball.
/// Box: product exponential law on the bounding box. Slab: level-set law (see mc_slab).
inline MeasureEstimate mu_montecarlo(const Ball& b, const LaguerreParams& lp, long long n, std::uint64_t seed,
                                     Proposal proposal = Proposal::Box, int threads = 1) {
    if (n < 1000) throw std::invalid_argument("Monte Carlo needs n >= 1000");
    const int d = b.dim();
    if (!lp.alpha.empty() && static_cast<int>(lp.alpha.size()) != d)
        throw std::invalid_argument("alpha dimension mismatch");
    if (proposal == Proposal::Slab) return mc_slab(slab_region(b), lp, n, seed, threads);
    Vec lo(d), hi(d);
    double log_scale = 0.0;
    for (int i = 0; i < d; ++i) {
        lo[i] = std::max(0.0, b.center[i] - b.radius);
        hi[i] = b.center[i] + b.radius;
        log_scale += numeric::log_diff_exp(-lo[i], -hi[i]);
    }
    auto sizes = detail::batch_sizes(n);
    std::vector<double> means(kBatches, 0.0);
    const bool weighted = !lp.alpha.empty() && !lp.trivial();
    numeric::parallel_for(kBatches, threads, [&](std::size_t bi) {
        numeric::Rng rng(numeric::derive_seed(seed, bi));
        double acc = 0.0;
        Vec x(d);
        for (long long k = 0; k < sizes[bi]; ++k) {
            for (int i = 0; i < d; ++i) x[i] = rng.trunc_exp(lo[i], hi[i]);
            if (!ball_contains(b, x)) continue;
            acc += weighted ? std::exp(lp.log_weight(x)) : 1.0;
        }
        means[bi] = sizes[bi] > 0 ? acc / static_cast<double>(sizes[bi]) : 0.0;
    });
    return detail::combine_batches(log_scale, means, sizes, n);
}

inline MeasureEstimate mu_montecarlo(const Ball& b, long long n, std::uint64_t seed,
                                     Proposal proposal = Proposal::Box) {
    return mu_montecarlo(b, LaguerreParams{}, n, seed, proposal);
}

/// Most accurate available method: exact for cubes, quadrature where supported, Monte Carlo otherwise.
inline MeasureEstimate mu_best(const Ball& b, long long mc_samples = 1000000, std::uint64_t seed = 0x5eed) {
    if (b.kind == NormKind::Linf) return mu_cube_exact(b.center, b.radius);
    try {
        return mu_quadrature(b);
    } catch (const CapabilityError&) {
        return mu_montecarlo(b, mc_samples, seed, Proposal::Slab);
    }
}

/// Log of the two-sided envelope for interior balls: e^{-|z|_1} times r^{(d-1)/q}, times prod x_i^alpha_i.
inline double asymptotic_prediction(const Ball& b, const LaguerreParams& lp = {}) {
    if (!(b.radius >= 1.0) || !b.interior())
        throw std::domain_error("envelope requires 1 <= r <= min center coordinate");
    const int d = b.dim();
    Vec z = minimizing_point(b);
    double v = -z.sum();
    if (b.kind == NormKind::L2) v += 0.5 * (d - 1) * std::log(b.radius);
    if (b.kind == NormKind::L1) v += (d - 1) * std::log(b.radius);
    if (!lp.alpha.empty()) v += lp.log_weight(b.center);
    return v;
}

/// mu(ball(x, 2r)) / mu(ball(x, r)), linear domain.
inline double doubling_ratio(NormKind kind, const Vec& x, double r) {
    auto big = mu_best(Ball(kind, x, 2 * r));
    auto small = mu_best(Ball(kind, x, r));
    return std::exp(big.log_value - small.log_value);
}

struct DoublingReport {
    double radius_cap = 0.0;
    double max_ratio = 1.0;
    Vec argmax_center;
    double argmax_radius = 0.0;
};

/// Largest doubling ratio over centers c*1 (c on a grid in [c_min, c_max]) and radii in (0, R].
inline DoublingReport doubling_report(NormKind kind, int d, double R, int n_centers = 20, int n_radii = 20,
                                      double c_min = 0.05, double c_max = 20.0) {
    DoublingReport rep;
    rep.radius_cap = R;
    double best = -1.0;
    for (int i = 0; i < n_centers; ++i) {
        double c = c_min + (c_max - c_min) * i / std::max(1, n_centers - 1);
        for (int j = 1; j <= n_radii; ++j) {
            double r = R * j / n_radii;
            Vec x = ones(d) * c;
            double q = doubling_ratio(kind, x, r);
            if (q > best) {
                best = q;
                rep.max_ratio = q;
                rep.argmax_center = x;
                rep.argmax_radius = r;
            }
        }
    }
    return rep;
}

}  // namespace measure
}  // namespace mxlab

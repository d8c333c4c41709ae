#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace mxlab {

/// Small dense vector, dimension chosen at runtime (at most 4), stored inline.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

inline Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vec vec(const std::vector<double>& xs) {
    if (xs.empty() || xs.size() > 4) throw std::invalid_argument("vector dimension must be in 1..4");
    Vec v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
    return v;
}

inline Vec ones(int d) { return Vec::Ones(d); }

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

enum class NormKind { L1, L2, Linf };

inline std::string to_string(NormKind k) {
    switch (k) {
        case NormKind::L1: return "L1";
        case NormKind::L2: return "L2";
        case NormKind::Linf: return "Linf";
    }
    return "?";
}

/// Accepts L1/diamond, L2/ball, Linf/cube.
inline NormKind parse_norm_kind(const std::string& s) {
    if (s == "L1" || s == "l1" || s == "diamond") return NormKind::L1;
    if (s == "L2" || s == "l2" || s == "ball") return NormKind::L2;
    if (s == "Linf" || s == "linf" || s == "cube") return NormKind::Linf;
    throw std::invalid_argument("unknown norm kind: " + s);
}

inline double norm(NormKind k, const Vec& v) {
    switch (k) {
        case NormKind::L1: return v.lpNorm<1>();
        case NormKind::L2: return v.norm();
        case NormKind::Linf: return v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

inline bool in_orthant(const Vec& p) { return (p.array() > 0.0).all(); }

inline void require_point_plus(const Vec& p) {
    if (p.size() < 1 || p.size() > 4) throw std::invalid_argument("dimension must be in 1..4");
    if (!in_orthant(p)) throw std::invalid_argument("point must have strictly positive coordinates");
}

/// Open metric ball, always intersected with the open positive orthant.
struct Ball {
    NormKind kind;
    Vec center;
    double radius;

    Ball(NormKind k, Vec c, double r) : kind(k), center(std::move(c)), radius(r) {
        require_point_plus(center);
        if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
    }
    int dim() const { return static_cast<int>(center.size()); }
    /// No part of the ball leaves the orthant.
    bool interior() const { return radius <= center.minCoeff(); }
};

inline bool ball_contains(const Ball& ball, const Vec& p) {
    if (p.size() != ball.center.size()) throw std::invalid_argument("dimension mismatch");
    return in_orthant(p) && norm(ball.kind, p - ball.center) < ball.radius;
}

/// Point of the closed ball where |.|_1 is minimal (the formula point for L1).
inline Vec minimizing_point(const Ball& ball) {
    if (!ball.interior()) throw std::domain_error("minimizing_point requires radius <= min center coordinate");
    const double d = ball.dim();
    double shift = 0.0;
    switch (ball.kind) {
        case NormKind::Linf: shift = ball.radius; break;
        case NormKind::L2: shift = ball.radius / std::sqrt(d); break;
        case NormKind::L1: shift = ball.radius / d; break;
    }
    return ball.center - shift * ones(ball.dim());
}

// ---------------------------------------------------------------------------
// Cone frame: Householder reflection exchanging (1,...,1)/sqrt(d) and e_1.

struct ConeFrame {
    int d;
    Mat rotation;

    explicit ConeFrame(int dim) : d(dim) {
        if (d < 1 || d > 4) throw std::invalid_argument("dimension must be in 1..4");
        rotation = Mat::Identity(d, d);
        if (d == 1) return;
        Vec v = ones(d) / std::sqrt(static_cast<double>(d));
        v[0] -= 1.0;
        rotation -= 2.0 * v * v.transpose() / v.squaredNorm();
    }
    Vec rotate(const Vec& p) const { return rotation * p; }
    Vec inverse(const Vec& p) const { return rotation.transpose() * p; }
    /// Inward unit normal of the cone face that is the image of {x_i = 0}.
    Vec face_normal(int i) const { return rotation.col(i); }
    /// Coordinates of y in the original orthant frame.
    Vec orthant_coords(const Vec& y) const { return inverse(y); }
    bool in_cone(const Vec& y) const { return in_orthant(inverse(y)); }
};

inline Vec cone_rotate(const ConeFrame& f, const Vec& p) { return f.rotate(p); }
inline Vec cone_rotate_inverse(const ConeFrame& f, const Vec& p) { return f.inverse(p); }

// ---------------------------------------------------------------------------
// Convex polytopes in H-representation {x : a_i . x <= b_i}.

struct Halfspace {
    Vec a;
    double b;
};

namespace detail {

// Normalizes rows, merges parallel duplicates, drops trivially true rows.
// Returns false when some row is trivially infeasible.
inline bool normalize_rows(std::vector<Halfspace>& rows) {
    std::vector<Halfspace> out;
    out.reserve(rows.size());
    for (auto& h : rows) {
        double n = h.a.norm();
        if (n < 1e-13) {
            if (h.b < -1e-12) return false;
            continue;
        }
        Halfspace g{h.a / n, h.b / n};
        bool merged = false;
        for (auto& o : out) {
            if ((o.a - g.a).lpNorm<Eigen::Infinity>() < 1e-12) {
                o.b = std::min(o.b, g.b);
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(std::move(g));
    }
    rows = std::move(out);
    return true;
}

inline double lasserre(std::vector<Halfspace> rows, int k) {
    if (!normalize_rows(rows)) return 0.0;
    if (k == 1) {
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        for (const auto& h : rows) {
            if (h.a[0] > 0) hi = std::min(hi, h.b / h.a[0]);
            else lo = std::max(lo, h.b / h.a[0]);
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::domain_error("unbounded polytope");
        return std::max(0.0, hi - lo);
    }
    double vol = 0.0;
    const std::size_t m = rows.size();
    std::vector<Halfspace> sub;
    sub.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec& ai = rows[i].a;
        if (std::abs(rows[i].b) < 1e-300) continue;  // facet through the origin contributes nothing
        Eigen::Index j;
        ai.cwiseAbs().maxCoeff(&j);
        const double aij = ai[j];
        sub.clear();
        for (std::size_t l = 0; l < m; ++l) {
            if (l == i) continue;
            const Vec& al = rows[l].a;
            const double f = al[j] / aij;
            Vec na(k - 1);
            for (int c = 0, cc = 0; c < k; ++c) {
                if (c == j) continue;
                na[cc++] = al[c] - f * ai[c];
            }
            sub.push_back({na, rows[l].b - f * rows[i].b});
        }
        double facet = lasserre(sub, k - 1);
        vol += rows[i].b * facet / std::abs(aij);
    }
    return std::max(0.0, vol / k);
}

}  // namespace detail

struct HPolytope {
    int dim = 0;
    std::vector<Halfspace> rows;

    HPolytope() = default;
    explicit HPolytope(int k) : dim(k) {}

    void add(const Vec& a, double b) { rows.push_back({a, b}); }

    bool contains(const Vec& x, double tol = 0.0) const {
        for (const auto& h : rows)
            if (h.a.dot(x) > h.b + tol) return false;
        return true;
    }
    bool contains_strict(const Vec& x) const {
        for (const auto& h : rows)
            if (!(h.a.dot(x) < h.b)) return false;
        return true;
    }

    /// Translate so that `shift` becomes the origin.
    HPolytope translated(const Vec& shift) const {
        HPolytope p(dim);
        for (const auto& h : rows) p.add(h.a, h.b - h.a.dot(shift));
        return p;
    }

    /// Lebesgue volume by recursive facet elimination; `anchor` should be near the body to limit cancellation.
    double volume(const std::optional<Vec>& anchor = std::nullopt) const {
        if (dim == 0) return 1.0;
        const HPolytope& base = *this;
        if (anchor) return detail::lasserre(base.translated(*anchor).rows, dim);
        return detail::lasserre(rows, dim);
    }

    /// Vertices by brute-force active-set enumeration (fine for d <= 4 and a few dozen rows).
    std::vector<Vec> vertices(double tol = 1e-9) const {
        std::vector<Vec> out;
        const int m = static_cast<int>(rows.size());
        std::vector<int> idx(dim);
        auto rec = [&](auto&& self, int start, int depth) -> void {
            if (depth == dim) {
                Mat A(dim, dim);
                Vec b(dim);
                for (int r = 0; r < dim; ++r) {
                    A.row(r) = rows[idx[r]].a.transpose();
                    b[r] = rows[idx[r]].b;
                }
                Eigen::FullPivLU<Mat> lu(A);
                if (lu.rank() < dim) return;
                Vec x = lu.solve(b);
                double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
                if (!contains(x, tol * scale)) return;
                for (const auto& v : out)
                    if ((v - x).lpNorm<Eigen::Infinity>() < tol * scale) return;
                out.push_back(x);
                return;
            }
            for (int i = start; i < m; ++i) {
                idx[depth] = i;
                self(self, i + 1, depth + 1);
            }
        };
        rec(rec, 0, 0);
        return out;
    }

    /// Slice {x_0 = sum x_i = t}, projected to the first dim-1 coordinates.
    HPolytope level_slice(double t) const {
        HPolytope s(dim - 1);
        for (const auto& h : rows) {
            Vec a(dim - 1);
            for (int i = 0; i + 1 < dim; ++i) a[i] = h.a[i] - h.a[dim - 1];
            s.add(a, h.b - h.a[dim - 1] * t);
        }
        return s;
    }
};

inline void add_orthant_rows(HPolytope& p) {
    for (int i = 0; i < p.dim; ++i) {
        Vec a = Vec::Zero(p.dim);
        a[i] = -1.0;
        p.add(a, 0.0);
    }
}

/// Closure of D(z, r) intersected with the orthant.
inline HPolytope diamond_polytope(const Vec& z, double r) {
    const int d = static_cast<int>(z.size());
    HPolytope p(d);
    for (int mask = 0; mask < (1 << d); ++mask) {
        Vec s(d);
        for (int i = 0; i < d; ++i) s[i] = (mask >> i & 1) ? -1.0 : 1.0;
        p.add(s, r + s.dot(z));
    }
    add_orthant_rows(p);
    return p;
}

/// Axis box [lo, hi] (callers pass lo >= 0 for orthant truncation).
inline HPolytope box_polytope(const Vec& lo, const Vec& hi) {
    const int d = static_cast<int>(lo.size());
    HPolytope p(d);
    for (int i = 0; i < d; ++i) {
        Vec a = Vec::Zero(d);
        a[i] = 1.0;
        p.add(a, hi[i]);
        a[i] = -1.0;
        p.add(a, -lo[i]);
    }
    return p;
}

/// (d-1)-dimensional measure of D(z, r) within the level set {x_0 = t}.
inline double diamond_slice_measure(const Vec& z, double r, double t) {
    require_point_plus(z);
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    const int d = static_cast<int>(z.size());
    const double z0 = z.sum();
    if (!(t > z0 - r && t < z0 + r) || t <= 0.0) return 0.0;
    if (d == 1) return 1.0;
    HPolytope s = diamond_polytope(z, r).level_slice(t);
    Vec anchor = (z + ones(d) * (t - z0) / d).head(d - 1);
    return std::sqrt(static_cast<double>(d)) * s.volume(anchor);
}

// ---------------------------------------------------------------------------
// Linear optimization over the intersection of a closed Euclidean ball and a polytope.

/// argmin of c.x over cl(B(center, r)) intersected with {A x <= b}, by active-set enumeration.
/// Ties are broken toward the lexicographically smallest point.
inline std::optional<Vec> minimize_over_ball_polytope(const Vec& c, const Vec& center, double r,
                                                      const HPolytope& poly) {
    const int k = static_cast<int>(center.size());
    const int m = static_cast<int>(poly.rows.size());
    const double tol = 1e-9 * (1.0 + r + center.lpNorm<Eigen::Infinity>());
    std::optional<Vec> best;
    double best_val = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& x) {
        if ((x - center).norm() > r + tol) return;
        if (!poly.contains(x, tol)) return;
        double v = c.dot(x);
        double scale = 1e-12 * (1.0 + std::abs(v));
        bool better = v < best_val - scale;
        if (!better && best && std::abs(v - best_val) <= scale) {
            for (int i = 0; i < k; ++i) {
                if (x[i] < (*best)[i] - 1e-12) { better = true; break; }
                if (x[i] > (*best)[i] + 1e-12) break;
            }
        }
        if (better || !best) {
            best = x;
            best_val = std::min(best_val, v);
        }
    };
    std::vector<int> S;
    auto rec = [&](auto&& self, int start) -> void {
        const int s = static_cast<int>(S.size());
        Vec p = center;
        Vec cp = c;
        if (s > 0) {
            Eigen::MatrixXd A(s, k);
            Eigen::VectorXd b(s);
            for (int i = 0; i < s; ++i) {
                A.row(i) = poly.rows[S[i]].a.transpose();
                b[i] = poly.rows[S[i]].b;
            }
            Eigen::MatrixXd G = A * A.transpose();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            if (lu.rank() < s) return;
            Eigen::VectorXd lam = lu.solve(A * center - b);
            p = center - Vec(A.transpose() * lam);
            cp = c - Vec(A.transpose() * lu.solve(A * c));
        }
        const double dist2 = (p - center).squaredNorm();
        if (dist2 <= r * r + tol) {
            if (s == k || cp.norm() < 1e-13) {
                consider(p);
            } else {
                double rho = std::sqrt(std::max(0.0, r * r - dist2));
                consider(p - rho * cp / cp.norm());
            }
        }
        if (s == k) return;
        for (int i = start; i < m; ++i) {
            S.push_back(i);
            self(self, i + 1);
            S.pop_back();
        }
    };
    rec(rec, 0);
    return best;
}

inline std::optional<Vec> maximize_over_ball_polytope(const Vec& c, const Vec& center, double r,
                                                      const HPolytope& poly) {
    return minimize_over_ball_polytope(-c, center, r, poly);
}

/// The rotated cone (closure) as a polytope: -n_i . x <= 0.
inline HPolytope cone_polytope(const ConeFrame& frame) {
    HPolytope p(frame.d);
    for (int i = 0; i < frame.d; ++i) p.add(-frame.face_normal(i), 0.0);
    return p;
}

/// Lowest point (min x_1) of the closure of B(m, r) intersected with the cone.
inline Vec bottom_point(const ConeFrame& frame, const Vec& m, double r) {
    if (m.size() != frame.d) throw std::invalid_argument("dimension mismatch");
    if (!frame.in_cone(m)) throw std::domain_error("center must lie in the open cone");
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    Vec e1 = Vec::Zero(frame.d);
    e1[0] = 1.0;
    auto a = minimize_over_ball_polytope(e1, m, r, cone_polytope(frame));
    if (!a) throw std::logic_error("empty ball-cone intersection");
    return *a;
}

// ---------------------------------------------------------------------------
// Rays and spheres.

/// Parameters (t0, t1) where origin + t dir crosses the sphere, t0 <= t1, if it does.
inline std::optional<std::pair<double, double>> ray_sphere(const Vec& center, double radius, const Vec& origin,
                                                           const Vec& dir) {
    const double a = dir.squaredNorm();
    const Vec w = origin - center;
    const double hb = w.dot(dir);
    const double c = w.squaredNorm() - radius * radius;
    const double disc = hb * hb - a * c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // stable roots
    const double q = -(hb + std::copysign(sq, hb));
    double t0, t1;
    if (q == 0.0) {
        t0 = t1 = 0.0;
    } else {
        t0 = q / a;
        t1 = c / q;
    }
    if (t0 > t1) std::swap(t0, t1);
    return std::make_pair(t0, t1);
}

/// Distance from an interior point to the sphere along a unit direction.
inline double exit_length(const Vec& center, double radius, const Vec& origin, const Vec& dir) {
    if ((origin - center).norm() > radius * (1.0 + 1e-14)) throw std::domain_error("origin outside the ball");
    auto t = ray_sphere(center, radius, origin, dir);
    if (!t) throw std::domain_error("ray misses the sphere");
    return std::max(0.0, t->second);
}

/// Whether p - s*dir lies in the ball for some s >= 0.
inline bool shadow_contains(const Ball& ball, const Vec& dir, const Vec& p) {
    if (std::abs(dir.norm() - 1.0) > 1e-9) throw std::invalid_argument("direction must be a unit vector");
    const int d = ball.dim();
    // orthant constraints p_i - s dir_i > 0 give an open interval in s, intersected with [0, inf)
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
        if (dir[i] > 0) hi = std::min(hi, p[i] / dir[i]);
        else if (dir[i] < 0) lo = std::max(lo, p[i] / dir[i]);
        else if (p[i] <= 0) return false;
    }
    if (!(hi > lo)) return false;
    if (ball.kind == NormKind::L2) {
        auto t = ray_sphere(ball.center, ball.radius, p, -dir);
        if (!t || t->first == t->second) return false;
        return std::max(lo, t->first) < std::min(hi, t->second);
    }
    if (ball.kind == NormKind::Linf) {
        // each coordinate constraint is an open interval in s
        for (int i = 0; i < d; ++i) {
            const double u = p[i] - ball.center[i];
            if (dir[i] == 0.0) {
                if (!(std::abs(u) < ball.radius)) return false;
                continue;
            }
            double s0 = (u - ball.radius) / dir[i], s1 = (u + ball.radius) / dir[i];
            if (s0 > s1) std::swap(s0, s1);
            lo = std::max(lo, s0);
            hi = std::min(hi, s1);
        }
        return hi > lo;
    }
    // L1: g(s) = |p - s dir - c|_1 is convex piecewise linear with kinks where a term vanishes;
    // its infimum over [lo, hi] sits at an endpoint or a kink.
    std::vector<double> cand{lo};
    if (std::isfinite(hi)) cand.push_back(hi);
    for (int i = 0; i < d; ++i)
        if (dir[i] != 0.0) {
            double s = (p[i] - ball.center[i]) / dir[i];
            if (s > lo && s < hi) cand.push_back(s);
        }
    if (!std::isfinite(hi)) cand.push_back(lo + 1e6 * (1.0 + ball.radius));
    double best = std::numeric_limits<double>::infinity();
    for (double s : cand) best = std::min(best, norm(ball.kind, p - s * dir - ball.center));
    return best < ball.radius;
}

/// Generic shadow test: samples s on [0, s_max] with the region's membership predicate.
template <class Pred>
bool shadow_contains_generic(const Pred& member, const Vec& dir, const Vec& p, double s_max, int samples = 4096) {
    for (int k = 0; k <= samples; ++k) {
        double s = s_max * k / samples;
        if (member(Vec(p - s * dir))) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------

/// vertex + sum_i c_i edges_i with c in (0,1)^k.
struct Parallelepiped {
    Vec vertex;
    Mat edges;  // columns

    Parallelepiped(Vec v, Mat e) : vertex(std::move(v)), edges(std::move(e)) {
        if (edges.rows() != vertex.size() || edges.cols() != vertex.size())
            throw std::invalid_argument("parallelepiped needs k edges in R^k");
        if (!(volume() > 0.0)) throw std::invalid_argument("parallelepiped edges are linearly dependent");
    }
    int dim() const { return static_cast<int>(vertex.size()); }
    double volume() const { return std::abs(edges.determinant()); }
    Vec coefficients(const Vec& p) const { return edges.partialPivLu().solve(Vec(p - vertex)); }
    /// Membership in the closure, with relative slack `tol` on the coefficients.
    bool contains(const Vec& p, double tol = 1e-9) const {
        Vec c = coefficients(p);
        return (c.array() >= -tol).all() && (c.array() <= 1.0 + tol).all();
    }
    std::vector<Vec> vertices() const {
        std::vector<Vec> out;
        const int k = dim();
        for (int mask = 0; mask < (1 << k); ++mask) {
            Vec v = vertex;
            for (int i = 0; i < k; ++i)
                if (mask >> i & 1) v += edges.col(i);
            out.push_back(v);
        }
        return out;
    }
    Vec side_lengths() const { return edges.colwise().norm().transpose(); }
};

}  // namespace mxlab

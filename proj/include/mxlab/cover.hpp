#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"
#include "numerics.hpp"
#include "oracle.hpp"

namespace mxlab {

// ---------------------------------------------------------------------------
// Oblique boxes {vertex + sum alpha_k u_k : 0 <= alpha_k <= side_k}

struct ObliqueBox {
    Vec vertex;
    Mat U;  // unit edge directions as columns
    Mat Uinv;
    Vec side;

    ObliqueBox() = default;
    ObliqueBox(Vec v, Mat u, Vec s) : vertex(std::move(v)), U(std::move(u)), side(std::move(s)) {
        Uinv = U.inverse();
    }
    int dim() const { return static_cast<int>(vertex.size()); }
    Vec coords(const Vec& x) const { return Uinv * (x - vertex); }
    bool contains(const Vec& x, double tol = 1e-9) const {
        const double slack = tol * (1.0 + side.maxCoeff());
        Vec a = coords(x);
        for (int k = 0; k < a.size(); ++k)
            if (a[k] < -slack || a[k] > side[k] + slack) return false;
        return true;
    }
    std::vector<Vec> vertices() const {
        std::vector<Vec> out;
        const int k = dim();
        for (int mask = 0; mask < (1 << k); ++mask) {
            Vec v = vertex;
            for (int i = 0; i < k; ++i)
                if (mask >> i & 1) v += side[i] * U.col(i);
            out.push_back(v);
        }
        return out;
    }
    /// Inclusion in another box with the same edge directions, by vertex containment.
    bool inside(const ObliqueBox& o, double tol = 1e-9) const {
        for (const Vec& v : vertices())
            if (!o.contains(v, tol)) return false;
        return true;
    }
    double volume() const { return std::abs(U.determinant()) * side.prod(); }
    nlohmann::json to_json() const {
        nlohmann::json edges = nlohmann::json::array();
        for (int k = 0; k < dim(); ++k) edges.push_back(to_std(Vec(U.col(k))));
        return {{"vertex", to_std(vertex)}, {"directions", edges}, {"sides", to_std(side)}};
    }
};

// ---------------------------------------------------------------------------
// Hit-and-run sampling of the open convex body B(center, radius) ∩ {A x < b}

class HitAndRun {
public:
    HitAndRun(Vec center, double radius, HPolytope poly, Vec start)
        : c_(std::move(center)), r_(radius), P_(std::move(poly)), x_(std::move(start)) {}

    const Vec& point() const { return x_; }

    bool inside(const Vec& x) const { return (x - c_).norm() < r_ && P_.contains_strict(x); }

    void step(numeric::Rng& rng) {
        const int k = static_cast<int>(x_.size());
        Vec dir(k);
        for (int i = 0; i < k; ++i) dir[i] = rng.normal();
        dir.normalize();
        auto t = ray_sphere(c_, r_, x_, dir);
        if (!t) return;
        double lo = t->first, hi = t->second;
        for (const auto& row : P_.rows) {
            const double ad = row.a.dot(dir), slack = row.b - row.a.dot(x_);
            if (ad > 0) hi = std::min(hi, slack / ad);
            else if (ad < 0) lo = std::max(lo, slack / ad);
        }
        if (!(hi > lo)) return;
        Vec y = x_ + rng.uniform(lo, hi) * dir;
        if (inside(y)) x_ = y;
    }

private:
    Vec c_;
    double r_;
    HPolytope P_;
    Vec x_;
};

/// An interior point of cl(B) ∩ P as the mean of extreme points in a fixed spread of directions
/// and along each inward facet normal (the latter lift thin lenses off their facets).
inline std::optional<Vec> interior_point(const Vec& center, double radius, const HPolytope& P) {
    const int k = static_cast<int>(center.size());
    Vec sum = Vec::Zero(k);
    int n = 0;
    numeric::Rng rng(0x1A7E);
    std::vector<Vec> dirs;
    for (int i = 0; i < 8 * k; ++i) {
        Vec c(k);
        for (int j = 0; j < k; ++j) c[j] = rng.normal();
        dirs.push_back(c);
    }
    for (const auto& row : P.rows) dirs.push_back(row.a);
    for (const Vec& c : dirs) {
        auto x = minimize_over_ball_polytope(c, center, radius, P);
        if (!x) return std::nullopt;
        sum += *x;
        ++n;
    }
    Vec x = sum / n;
    if ((x - center).norm() < radius && P.contains_strict(x)) return x;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cover pieces: cones at a'_h spanned by unit edge directions

struct CoverPiece {
    Mat U;           // unit edge directions (columns) at a'
    bool clip = true;  // clip by C_h; otherwise a tetrahedron of edge edge_factor (a_1 + h)
    double edge_factor = 0.0;

    /// Piece polytope at level h: the cone at a'_h, optionally clipped by C_h or by the tetrahedron face.
    HPolytope polytope(const BallConeConfig& c, double h, bool cone_rows = true) const {
        const int k = static_cast<int>(U.rows());
        HPolytope P(k);
        const Vec ah = c.a_h(h);
        const Mat Ui = U.inverse();
        if (clip)
            for (const auto& row : cross_section_polytope(c.frame(), c.a[0] + h).rows) P.add(row.a, row.b);
        if (cone_rows)
            for (int i = 0; i < k; ++i) {
                Vec g = Ui.row(i).transpose();
                P.add(-g, -g.dot(ah));
            }
        if (!clip) {
            Vec g = (Vec::Ones(k).transpose() * Ui).transpose();
            P.add(g, edge_factor * (c.a[0] + h) + g.dot(ah));
        }
        return P;
    }
};

namespace cover_detail {

inline Mat columns(const std::vector<Vec>& cols) {
    Mat M(cols[0].size(), static_cast<int>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) M.col(static_cast<int>(i)) = cols[i];
    return M;
}

inline bool cone_has(const Mat& Uinv, const Vec& d, double tol = 1e-10) {
    return ((Uinv * d).array() >= -tol).all();
}

/// Canonical regular tetrahedron of unit edge.
inline std::vector<Vec> canonical_tetrahedron() {
    const double s = 1.0 / std::sqrt(8.0);
    return {vec({s, s, s}), vec({s, -s, -s}), vec({-s, s, -s}), vec({-s, -s, s})};
}

inline Mat vertex_cone(const std::vector<Vec>& V, int j) {
    std::vector<Vec> cols;
    for (int k = 0; k < 4; ++k)
        if (k != j) cols.push_back((V[k] - V[j]).normalized());
    return columns(cols);
}

inline Vec fibonacci_direction(int i, int n) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (i + 0.5) / n;  // upper hemisphere, z in (0, 1)
    const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
    return vec({rr * std::cos(golden * i), rr * std::sin(golden * i), z});
}

/// Orthonormal frame with third axis n.
inline Mat frame_from_normal(const Vec& n) {
    Eigen::Vector3d z(n[0], n[1], n[2]);
    Eigen::Vector3d t = std::abs(z[0]) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d x = (t - t.dot(z) * z).normalized(), y = z.cross(x);
    Mat F(3, 3);
    F.col(0) = vec({x[0], x[1], x[2]});
    F.col(1) = vec({y[0], y[1], y[2]});
    F.col(2) = n;
    return F;
}

/// Greedy set cover of the targets by candidate cones, seeded with `initial`.
inline std::vector<int> greedy_cover(const std::vector<Mat>& inv, const std::vector<int>& initial,
                                     const std::vector<Vec>& targets) {
    std::vector<char> covered(targets.size(), 0);
    std::vector<int> chosen;
    auto take = [&](int j) {
        chosen.push_back(j);
        for (std::size_t t = 0; t < targets.size(); ++t)
            if (!covered[t] && cone_has(inv[j], targets[t])) covered[t] = 1;
    };
    for (int j : initial) take(j);
    for (;;) {
        int best = -1;
        long long best_gain = 0;
        for (int j = 0; j < static_cast<int>(inv.size()); ++j) {
            long long gain = 0;
            for (std::size_t t = 0; t < targets.size(); ++t)
                if (!covered[t] && cone_has(inv[j], targets[t])) ++gain;
            if (gain > best_gain) best_gain = gain, best = j;
        }
        if (best < 0) break;
        take(best);
    }
    for (char c : covered)
        if (!c) throw std::runtime_error("candidate cones do not cover the target directions");
    return chosen;
}

struct CanonicalCover {
    std::vector<Mat> cones;  // in canonical coordinates
    std::vector<Vec> vertices;
    Vec normal;  // inward normal of the supporting plane used for targets
    int verified_directions = 0;
};

/// Cone family at an inner point of face (0,1,2) of the canonical tetrahedron covering the closed
/// half-space on the side of vertex 3: the three translates, their rotations about the normal,
/// and tilted copies with all edges in the half-space.
inline const CanonicalCover& face_cover() {
    static CanonicalCover cov;
    static std::once_flag once;
    std::call_once(once, [] {
        auto V = canonical_tetrahedron();
        Vec cf = (V[0] + V[1] + V[2]) / 3.0;
        Vec n = (V[3] - cf).normalized();
        std::vector<Mat> cand;
        Mat base = vertex_cone(V, 0);
        for (int k = 0; k < 72; ++k) {
            Mat R(3, 3);
            for (int i = 0; i < 3; ++i)
                R.col(i) = oracle_detail::rodrigues(base.col(i), n, k * std::numbers::pi / 36.0);
            cand.push_back(R);
        }
        numeric::Rng rng(0xC0FE);
        while (cand.size() < 72 + 1500) {
            Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
            q.normalize();
            Eigen::Matrix3d Q = q.toRotationMatrix();
            Mat R(3, 3);
            bool ok = true;
            for (int i = 0; i < 3; ++i) {
                Eigen::Vector3d u = Q * Eigen::Vector3d(base(0, i), base(1, i), base(2, i));
                R.col(i) = vec({u[0], u[1], u[2]});
                if (R.col(i).dot(n) < 0) ok = false;
            }
            if (ok) cand.push_back(R);
        }
        std::vector<Mat> inv;
        for (const Mat& c : cand) inv.push_back(c.inverse());
        const Mat F = frame_from_normal(n);
        std::vector<Vec> targets;
        for (int i = 0; i < 6000; ++i) targets.push_back(F * fibonacci_direction(i, 6000));
        for (int i = 0; i < 720; ++i) {
            double a = 2 * std::numbers::pi * i / 720;
            targets.push_back(F * vec({std::cos(a), std::sin(a), 0.0}));
        }
        // the three translates have a vertex of the face at the point
        std::vector<int> init{0, 24, 48};
        numeric::Rng check(0xBEEF);
        std::vector<int> chosen;
        for (int round = 0; round < 8; ++round) {
            chosen = greedy_cover(inv, init, targets);
            int missed = 0;
            for (int s = 0; s < 200000; ++s) {
                Vec d = F * vec({check.normal(), check.normal(), std::abs(check.normal())});
                d.normalize();
                bool hit = false;
                for (int j : chosen)
                    if (cone_has(inv[j], d)) {
                        hit = true;
                        break;
                    }
                if (!hit) targets.push_back(d), ++missed;
            }
            cov.verified_directions = 200000;
            if (missed == 0) break;
        }
        for (int j : chosen) cov.cones.push_back(cand[j]);
        cov.vertices = V;
        cov.normal = n;
    });
    return cov;
}

/// Cone family at an inner point of edge (0,1) covering the wedge between faces (0,1,2) and (0,1,3):
/// the two translates and their rotations about the normals of either face.
inline const CanonicalCover& edge_cover() {
    static CanonicalCover cov;
    static std::once_flag once;
    std::call_once(once, [] {
        auto V = canonical_tetrahedron();
        auto inward = [&](int i, int j, int k, int opp) {
            Eigen::Vector3d a(V[i][0], V[i][1], V[i][2]), b(V[j][0], V[j][1], V[j][2]), c(V[k][0], V[k][1], V[k][2]);
            Eigen::Vector3d nn = (b - a).cross(c - a).normalized();
            Vec n = vec({nn[0], nn[1], nn[2]});
            if (n.dot(V[opp] - V[i]) < 0) n = -n;
            return n;
        };
        const Vec n1 = inward(0, 1, 2, 3), n2 = inward(0, 1, 3, 2);
        const Mat C1 = vertex_cone(V, 0), C2 = vertex_cone(V, 1);
        auto same_cone = [](const Mat& A, const Mat& B) {
            for (int i = 0; i < 3; ++i) {
                bool found = false;
                for (int j = 0; j < 3; ++j)
                    if ((A.col(i) - B.col(j)).norm() < 1e-9) found = true;
                if (!found) return false;
            }
            return true;
        };
        std::vector<Mat> cand;
        for (const Vec& axis : {n1, n2}) {
            double sign = 1.0;
            Mat T(3, 3);
            for (int i = 0; i < 3; ++i) T.col(i) = oracle_detail::rodrigues(C1.col(i), axis, 2 * std::numbers::pi / 3);
            if (!same_cone(T, C2)) sign = -1.0;
            for (int k = 0; k <= 120; ++k) {
                Mat R(3, 3);
                for (int i = 0; i < 3; ++i)
                    R.col(i) = oracle_detail::rodrigues(C1.col(i), axis, sign * k * std::numbers::pi / 180.0);
                cand.push_back(R);
            }
        }
        std::vector<Mat> inv;
        for (const Mat& c : cand) inv.push_back(c.inverse());
        numeric::Rng gen(0xED6E);
        auto wedge_dir = [&](numeric::Rng& g) {
            for (;;) {
                Vec d = vec({g.normal(), g.normal(), g.normal()}).normalized();
                if (d.dot(n1) >= 0 && d.dot(n2) >= 0) return d;
            }
        };
        std::vector<Vec> targets;
        for (int i = 0; i < 6000; ++i) targets.push_back(wedge_dir(gen));
        // boundary half-planes of the wedge and the edge itself
        const Vec e0 = (V[1] - V[0]).normalized();
        for (const auto& [inplane, other] : {std::pair{n1, n2}, std::pair{n2, n1}}) {
            Eigen::Vector3d a(inplane[0], inplane[1], inplane[2]), e(e0[0], e0[1], e0[2]);
            Eigen::Vector3d w = a.cross(e);
            Vec wv = vec({w[0], w[1], w[2]});
            if (wv.dot(other) < 0) wv = -wv;
            for (int i = 0; i <= 360; ++i) {
                double t = std::numbers::pi * i / 360;
                targets.push_back(Vec(std::cos(t) * e0 + std::sin(t) * wv));
            }
        }
        std::vector<int> init{0, 120};
        numeric::Rng check(0xBEEF);
        std::vector<int> chosen;
        for (int round = 0; round < 8; ++round) {
            chosen = greedy_cover(inv, init, targets);
            int missed = 0;
            for (int s = 0; s < 200000; ++s) {
                Vec d = wedge_dir(check);
                bool hit = false;
                for (int j : chosen)
                    if (cone_has(inv[j], d)) {
                        hit = true;
                        break;
                    }
                if (!hit) targets.push_back(d), ++missed;
            }
            cov.verified_directions = 200000;
            if (missed == 0) break;
        }
        for (int j : chosen) cov.cones.push_back(cand[j]);
        cov.vertices = V;
        cov.normal = (n1 + n2).normalized();
    });
    return cov;
}

/// Orthogonal map sending canonical vertex k to actual vertex perm[k] (up to scale and translation).
inline Mat canonical_map(const std::vector<Vec>& canon, const std::vector<Vec>& actual, const std::vector<int>& perm) {
    Mat C(3, 3), W(3, 3);
    for (int k = 1; k < 4; ++k) {
        C.col(k - 1) = canon[k] - canon[0];
        W.col(k - 1) = actual[perm[k]] - actual[perm[0]];
    }
    Mat A = W * C.inverse();
    return A / std::cbrt(std::abs(A.determinant()));
}

}  // namespace cover_detail

/// The pieces used to cover B_h ∩ C_h for a configuration.
inline std::vector<CoverPiece> cover_pieces(const BallConeConfig& c) {
    using namespace cover_detail;
    std::vector<CoverPiece> out;
    if (c.d == 3) {
        if (c.boundary == BoundaryCase::Vertex) {
            auto e = vertex_edges(c);
            if (sin_to_tangent(c, e[1]) < sin_to_tangent(c, e[0])) std::swap(e[0], e[1]);
            out.push_back({columns(e), true, 0.0});
            return out;
        }
        // three sub-cones at a' cut by rays at angles pi/3 and 2pi/3 from the side
        Vec n = c.up();
        Vec s = vec({-n[1], n[0]});
        auto dir = [&](double phi) { return Vec(std::cos(phi) * s + std::sin(phi) * n); };
        const double t = std::numbers::pi / 3;
        for (int j = 0; j < 3; ++j) out.push_back({columns({dir(j * t), dir((j + 1) * t)}), true, 0.0});
        return out;
    }
    if (c.d == 4) {
        ConeFrame f(4);
        auto W = cross_section_vertices(f, c.a[0]);
        if (c.boundary == BoundaryCase::Vertex) {
            out.push_back({columns(vertex_edges(c)), true, 0.0});
            return out;
        }
        Vec x = f.inverse(c.a);
        const double tol = 1e-9 * std::max(1.0, c.a[0]);
        std::vector<int> zero, pos;
        for (int k = 0; k < 4; ++k) (x[k] <= tol ? zero : pos).push_back(k);
        const CanonicalCover& cov = c.boundary == BoundaryCase::Face ? face_cover() : edge_cover();
        std::vector<int> perm;
        if (c.boundary == BoundaryCase::Face) perm = {pos[0], pos[1], pos[2], zero[0]};
        else perm = {pos[0], pos[1], zero[1], zero[0]};
        Mat Q = canonical_map(cov.vertices, W, perm);
        for (const Mat& cone : cov.cones) {
            Mat U = Q * cone;
            for (int i = 0; i < 3; ++i) U.col(i).normalize();
            out.push_back({U, false, 2.0 * std::sqrt(8.0)});
        }
        return out;
    }
    throw ClassificationError("cover pieces exist for d = 3 and d = 4");
}

/// Smallest box at a'_h with the piece's edge directions containing cl(B_h) ∩ piece.
inline ObliqueBox minimal_box(const BallConeConfig& c, const CoverPiece& p, double h) {
    const Vec ah = c.a_h(h);
    const HPolytope P = p.polytope(c, h, !(p.clip && c.boundary == BoundaryCase::Vertex));
    const Mat Ui = p.U.inverse();
    const int k = static_cast<int>(p.U.cols());
    Vec side = Vec::Zero(k);
    for (int i = 0; i < k; ++i) {
        Vec g = Ui.row(i).transpose();
        auto x = maximize_over_ball_polytope(g, c.m_prime(), c.R_h(h), P);
        if (x) side[i] = std::max(0.0, g.dot(*x - ah));
    }
    return ObliqueBox(ah, p.U, side);
}

/// Smallest box with the given directions containing a box and the ball B(center, radius).
inline ObliqueBox enclose(const ObliqueBox& b, const Vec& center, double radius) {
    const int k = b.dim();
    Vec lo = Vec::Constant(k, std::numeric_limits<double>::infinity()), hi = -lo;
    for (const Vec& v : b.vertices()) {
        Vec a = b.Uinv * v;
        lo = lo.cwiseMin(a);
        hi = hi.cwiseMax(a);
    }
    Vec ac = b.Uinv * center;
    for (int i = 0; i < k; ++i) {
        const double w = radius * b.Uinv.row(i).norm();
        lo[i] = std::min(lo[i], ac[i] - w);
        hi[i] = std::max(hi[i], ac[i] + w);
    }
    return ObliqueBox(b.U * lo, b.U, hi - lo);
}

struct CoverOptions {
    long long samples = 100000;
    double c0 = 1.0 / 64.0;
    int ladder = 20;
    int burn_in = 500;
};

/// The box family used for the cover at level h (before any star construction).
inline ObliqueBox family_box(const BallConeConfig& c, const CoverPiece& p, double h) {
    if (c.d == 3 && h > c.r / 3.0) return enclose(minimal_box(c, p, c.r / 3.0), c.m_prime(), c.r);
    return minimal_box(c, p, h);
}

/// Containment certificate for B_h ∩ C_h by the cover, side bounds against the envelopes,
/// and monotonicity of the box families along an h ladder.
inline OracleReport cover_check(const BallConeConfig& c, double h, std::uint64_t seed, const CoverOptions& opt = {}) {
    c.validate();
    const double r = c.r, R = c.R(), a1 = c.a[0];
    if (c.d == 3) {
        if (!(h > 0.0 && h < r + c.delta())) throw std::domain_error("h must lie in (0, r + m_1 - a_1)");
    } else if (c.d == 4) {
        if (!(h > 0.0 && h <= r / 2.0)) throw std::domain_error("h must lie in (0, r/2]");
    } else {
        throw ClassificationError("cover check needs d = 3 or d = 4");
    }
    const auto pieces = cover_pieces(c);
    OracleReport rep;
    rep.lemma = c.d == 3 ? "fcl-cover" : "parallelep-cover";
    rep.config = c.to_json();
    rep.config["h"] = h;
    rep.config["seed"] = seed;
    const bool star = c.d == 4 && h < opt.c0 * R;
    const Vec ah = c.a_h(h), up = c.up();
    const double Rh = c.R_h(h);
    std::vector<ObliqueBox> boxes;
    long long star_lower_failures = 0, leaves_halfspace = 0;
    for (const auto& p : pieces) {
        for (int i = 0; i < p.U.cols(); ++i)
            if (p.U.col(i).dot(up) < -1e-9) ++leaves_halfspace;
        if (!star) {
            boxes.push_back(family_box(c, p, h));
            continue;
        }
        // P'_h ∩ P''_h: |v_i| from the half-space H or from the sphere of B_h, capped by the piece size
        const double L = (p.clip ? std::sqrt(8.0) : p.edge_factor) * (a1 + h);
        Vec side(p.U.cols());
        for (int i = 0; i < p.U.cols(); ++i) {
            const Vec u = p.U.col(i);
            const double s = std::max(0.0, u.dot(up));
            double v;
            if (s >= 1.0 / 32.0) {
                v = (R * Rh - c.tau(ah)) / (R * s);
            } else {
                if (!((ah - c.m_prime()).norm() < Rh)) {
                    rep.violation(ah);
                    v = L;
                } else {
                    v = exit_length(c.m_prime(), Rh, ah, u);
                }
                if (!(v >= 4.0 * h)) ++star_lower_failures;
            }
            side[i] = std::min(v, L);
        }
        boxes.emplace_back(ah, p.U, side);
    }
    if (leaves_halfspace) rep.violation();
    // side lengths against (a_1 + h) ∧ p_h^i envelopes, or r beyond r/3 in d = 3
    for (std::size_t j = 0; j < boxes.size(); ++j)
        for (int i = 0; i < boxes[j].side.size(); ++i) {
            double env;
            if (c.d == 3 && h > r / 3.0) env = r;
            else env = std::min(a1 + h, exit_envelope(r, R, std::max(0.0, Vec(pieces[j].U.col(i)).dot(up)), h));
            if (boxes[j].side[i] > 0) rep.add_ratio(boxes[j].side[i] / env);
        }
    // hit-and-run samples of B_h ∩ C_h
    const HPolytope Ch = cross_section_polytope(c.frame(), a1 + h);
    auto start = interior_point(c.m_prime(), Rh, Ch);
    double tau_sup = -std::numeric_limits<double>::infinity();
    if (start) {
        HitAndRun walk(c.m_prime(), Rh, Ch, *start);
        numeric::Rng rng(seed);
        for (int s = 0; s < opt.burn_in; ++s) walk.step(rng);
        for (long long s = 0; s < opt.samples; ++s) {
            walk.step(rng);
            const Vec& x = walk.point();
            tau_sup = std::max(tau_sup, c.tau(x));
            bool hit = false;
            for (const auto& b : boxes)
                if (b.contains(x)) {
                    hit = true;
                    break;
                }
            if (!hit) rep.violation(x);
            ++rep.samples;
        }
    }
    // monotonicity of the minimal families along a ladder up to the top of the admissible range
    const double top = c.d == 3 ? (r + c.delta()) * (1 - 1e-9) : r / 2.0;
    long long mono_fail = 0, mono_pairs = 0;
    for (const auto& p : pieces) {
        std::optional<ObliqueBox> prev;
        for (int k = 1; k <= opt.ladder; ++k) {
            ObliqueBox b = family_box(c, p, top * k / opt.ladder);
            if (prev) {
                ++mono_pairs;
                if (!prev->inside(b)) ++mono_fail;
            }
            prev = b;
        }
    }
    // the increasing family is the single-piece vertex case
    const bool mono_required = c.boundary == BoundaryCase::Vertex;
    if (mono_required && mono_fail) rep.violation();
    nlohmann::json jb = nlohmann::json::array();
    for (const auto& b : boxes) jb.push_back(b.to_json());
    rep.details = {{"case", to_string(c.boundary)},
                   {"pieces", static_cast<int>(pieces.size())},
                   {"construction", star ? "star" : (c.d == 3 && h > r / 3.0 ? "enclosing" : "minimal")},
                   {"boxes", jb},
                   {"interior", start.has_value()},
                   {"tau_sup_sampled", start ? nlohmann::json(tau_sup) : nlohmann::json(nullptr)},
                   {"tau_sup_ball", R * Rh},
                   {"star_lower_bound_failures", star_lower_failures},
                   {"pieces_leaving_halfspace", leaves_halfspace},
                   {"monotone_pairs", mono_pairs},
                   {"monotone_failures", mono_fail},
                   {"monotone_required", mono_required}};
    if (start && tau_sup > R * Rh * (1 + 1e-12)) rep.violation();
    if (star && star_lower_failures) rep.violation();
    return rep;
}

/// Facts about the d = 4 tetrahedron covers: piece counts and the smallest largest edge elevation.
struct CoverStats {
    int face_pieces = 0, edge_pieces = 0;
    double face_min_max_elevation = 0.0;  // over the added tetrahedra (beyond the translates)
    int verified_directions = 0;
};

inline CoverStats cover_stats() {
    const auto& F = cover_detail::face_cover();
    const auto& E = cover_detail::edge_cover();
    CoverStats s;
    s.face_pieces = static_cast<int>(F.cones.size());
    s.edge_pieces = static_cast<int>(E.cones.size());
    s.verified_directions = F.verified_directions;
    double mm = std::numbers::pi / 2;
    for (std::size_t j = 3; j < F.cones.size(); ++j) {
        double best = -1.0;
        for (int i = 0; i < 3; ++i) best = std::max(best, std::asin(std::clamp(F.cones[j].col(i).dot(F.normal), -1.0, 1.0)));
        mm = std::min(mm, best);
    }
    s.face_min_max_elevation = mm;
    return s;
}

}  // namespace mxlab

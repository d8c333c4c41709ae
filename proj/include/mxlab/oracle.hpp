#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"
#include "measure.hpp"
#include "numerics.hpp"

namespace mxlab {

/// A configuration that fits none of the boundary cases an oracle handles.
struct ClassificationError : std::domain_error {
    using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Reports

struct OracleReport {
    std::string lemma;
    nlohmann::json config = nlohmann::json::object();
    long long samples = 0;
    long long violations = 0;
    double residual_max = 0.0;
    double tolerance = 1e-10;
    double ratio_min = std::numeric_limits<double>::infinity();
    double ratio_max = -std::numeric_limits<double>::infinity();
    nlohmann::json details = nlohmann::json::object();
    std::optional<std::vector<double>> violating_point;

    bool pass() const { return violations == 0 && residual_max < tolerance; }
    bool has_ratios() const { return ratio_max >= ratio_min; }
    double spread() const { return has_ratios() ? ratio_max / ratio_min : 1.0; }

    void add_ratio(double v) {
        ratio_min = std::min(ratio_min, v);
        ratio_max = std::max(ratio_max, v);
    }
    void add_residual(double v) { residual_max = std::max(residual_max, std::isfinite(v) ? v : 1e300); }
    void violation(const Vec& p) {
        ++violations;
        if (!violating_point) violating_point = to_std(p);
    }
    void violation() { ++violations; }
    /// Folds another instance into a sweep summary.
    void merge(const OracleReport& o) {
        samples += o.samples;
        violations += o.violations;
        residual_max = std::max(residual_max, o.residual_max);
        if (o.has_ratios()) {
            add_ratio(o.ratio_min);
            add_ratio(o.ratio_max);
        }
        if (!violating_point && o.violating_point) violating_point = o.violating_point;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"lemma", lemma},         {"config", config},
                         {"samples", samples},     {"violations", violations},
                         {"residual_max", residual_max}, {"tolerance", tolerance},
                         {"pass", pass()},         {"details", details}};
        if (has_ratios()) {
            j["ratio_min"] = ratio_min;
            j["ratio_max"] = ratio_max;
        } else {
            j["ratio_min"] = nullptr;
            j["ratio_max"] = nullptr;
        }
        j["violating_point"] = violating_point ? nlohmann::json(*violating_point) : nlohmann::json(nullptr);
        return j;
    }
};

// ---------------------------------------------------------------------------
// Rotated cone C+ and its cross-sections {x_1 = t}

namespace oracle_detail {

inline Vec tail(const Vec& v) { return v.tail(v.size() - 1); }

inline Vec with_height(double t, const Vec& xp) {
    Vec x(xp.size() + 1);
    x[0] = t;
    x.tail(xp.size()) = xp;
    return x;
}

/// Rotation of vector v about the unit axis k by angle phi.
inline Vec rodrigues(const Vec& v, const Vec& k, double phi) {
    const Eigen::Vector3d vv(v[0], v[1], v[2]), kk(k[0], k[1], k[2]);
    Eigen::Vector3d out = vv * std::cos(phi) + kk.cross(vv) * std::sin(phi) + kk * kk.dot(vv) * (1 - std::cos(phi));
    return vec({out[0], out[1], out[2]});
}

}  // namespace oracle_detail

/// Vertices (in x' coordinates) of the simplex C+ ∩ {x_1 = t}; vertex k is the image of the k-th axis.
inline std::vector<Vec> cross_section_vertices(const ConeFrame& f, double t) {
    std::vector<Vec> out;
    const double sd = std::sqrt(static_cast<double>(f.d));
    for (int k = 0; k < f.d; ++k) {
        Vec e = Vec::Zero(f.d);
        e[k] = sd * t;
        out.push_back(oracle_detail::tail(f.rotate(e)));
    }
    return out;
}

/// The closed cross-section C+ ∩ {x_1 = t} as a polytope in x' coordinates.
inline HPolytope cross_section_polytope(const ConeFrame& f, double t) {
    HPolytope p(f.d - 1);
    for (int k = 0; k < f.d; ++k) {
        Vec n = f.face_normal(k);
        p.add(-oracle_detail::tail(n), n[0] * t);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Ball-cone configurations

/// Where the bottom point a' sits on the boundary of the cross-section C_0.
enum class BoundaryCase { Vertex, Edge, Face };

inline std::string to_string(BoundaryCase c) {
    switch (c) {
        case BoundaryCase::Vertex: return "vertex";
        case BoundaryCase::Edge: return "edge";
        case BoundaryCase::Face: return "face";
    }
    return "?";
}

inline BoundaryCase parse_boundary_case(const std::string& s) {
    if (s == "vertex") return BoundaryCase::Vertex;
    if (s == "edge") return BoundaryCase::Edge;
    if (s == "face") return BoundaryCase::Face;
    throw std::invalid_argument("unknown boundary case: " + s);
}

/// Classifies a point of the closed cone by the number of vanishing orthant coordinates.
inline BoundaryCase classify_boundary(const ConeFrame& f, const Vec& a, double tol = 1e-9) {
    Vec x = f.inverse(a);
    const double scale = std::max(1.0, std::abs(a[0]));
    int positive = 0, zero = 0;
    for (int k = 0; k < f.d; ++k) {
        if (x[k] < -tol * scale) throw ClassificationError("point lies outside the cone");
        if (x[k] <= tol * scale) ++zero;
        else ++positive;
    }
    if (zero == 0) throw ClassificationError("bottom point is interior to the cone");
    if (positive == 1) return BoundaryCase::Vertex;
    if (zero == 1) return BoundaryCase::Face;
    if (f.d == 4 && positive == 2) return BoundaryCase::Edge;
    throw ClassificationError("bottom point at the apex");
}

/// A Euclidean ball B(m, r) in the rotated frame together with its bottom point a on the cone boundary.
struct BallConeConfig {
    int d = 2;
    Vec a, m;
    double r = 0.0;
    BoundaryCase boundary = BoundaryCase::Vertex;

    double delta() const { return m[0] - a[0]; }
    double R() const { return (oracle_detail::tail(m) - oracle_detail::tail(a)).norm(); }
    /// Radius of B ∩ {x_1 = a_1 + h}.
    double R_h(double h) const {
        double u = delta() - h;
        return std::sqrt(std::max(0.0, r * r - u * u));
    }
    Vec a_prime() const { return oracle_detail::tail(a); }
    Vec m_prime() const { return oracle_detail::tail(m); }
    /// Unit vector (a' - m')/R, the direction in which the vertical coordinate grows.
    Vec up() const { return (a_prime() - m_prime()) / R(); }
    /// tau(x') = <x' - m', a' - m'>.
    double tau(const Vec& xp) const { return (xp - m_prime()).dot(a_prime() - m_prime()); }
    /// The point of C_h corresponding to a' under the dilation of C_0.
    Vec a_h(double h) const { return a_prime() * ((a[0] + h) / a[0]); }
    /// Lower bound constant for (m_1 - a_1)/r: 1/sqrt(2), 1/sqrt(3), 1/2 in d = 2, 3, 4.
    double axial_floor() const { return 1.0 / std::sqrt(static_cast<double>(d)); }
    ConeFrame frame() const { return ConeFrame(d); }

    void validate() const {
        if (d < 2 || d > 4) throw std::invalid_argument("ball-cone configurations need d in 2..4");
        if (a.size() != d || m.size() != d) throw std::invalid_argument("dimension mismatch");
        if (!(r > std::sqrt(static_cast<double>(d)))) throw std::domain_error("radius must exceed sqrt(d)");
        if (!(a[0] > 2.0)) throw std::domain_error("bottom height a_1 must exceed 2");
        if (std::abs((m - a).norm() - r) >= 1e-10) throw std::domain_error("|m - a| must equal r");
        ConeFrame f(d);
        if (!f.in_cone(m)) throw std::domain_error("center must lie in the open cone");
        const double q = delta() / r;
        const bool ok = (d == 4) ? q > axial_floor() - 1e-12 : q >= axial_floor() - 1e-12;
        if (!ok || q > 1.0 + 1e-12) throw std::domain_error("m_1 - a_1 outside [r/sqrt(d), r]");
        if (classify_boundary(f, a) != boundary) throw ClassificationError("boundary case does not match a");
        if (d > 2 && !(R() > 1e-9 * r)) throw ClassificationError("tangent plane undefined: m' = a'");
    }

    nlohmann::json to_json() const {
        return {{"d", d}, {"a", to_std(a)}, {"m", to_std(m)}, {"r", r}, {"case", to_string(boundary)},
                {"R", R()}, {"delta", delta()}};
    }
};

/// Draws a configuration: a_1 in (2, 20), r in (sqrt d, 20), a on the requested stratum of the boundary,
/// m = a + r u with u a KKT direction for a being the bottom point, rejected until all invariants hold.
inline BallConeConfig random_ball_cone(int d, BoundaryCase bc, numeric::Rng& rng, long long* rejections = nullptr) {
    if (d < 2 || d > 4) throw std::invalid_argument("d must be 2, 3 or 4");
    if (d == 2 && bc != BoundaryCase::Vertex) throw ClassificationError("d = 2 has only the vertex case");
    if (d == 3 && bc == BoundaryCase::Edge) throw ClassificationError("d = 3 has vertex and face cases");
    ConeFrame f(d);
    const double sd = std::sqrt(static_cast<double>(d));
    const int nonzero = bc == BoundaryCase::Vertex ? 1 : bc == BoundaryCase::Face ? d - 1 : 2;
    for (long long attempt = 0; attempt < 1000000; ++attempt) {
        BallConeConfig c;
        c.d = d;
        c.boundary = bc;
        const double a1 = rng.uniform(2.0, 20.0);
        c.r = rng.uniform(sd, 20.0);
        std::vector<int> idx(d);
        for (int k = 0; k < d; ++k) idx[k] = k;
        for (int k = d - 1; k > 0; --k) std::swap(idx[k], idx[rng.next() % (k + 1)]);
        if (d == 2) idx = {0, 1};  // keeps a = (a_1, a_1), m_2 >= a_1
        Vec x = Vec::Zero(d), w(d);
        double ws = 0.0;
        for (int k = 0; k < nonzero; ++k) ws += (w[k] = rng.uniform(0.1, 1.0));
        for (int k = 0; k < nonzero; ++k) x[idx[k]] = sd * a1 * w[k] / ws;
        c.a = f.rotate(x);
        Vec u = Vec::Zero(d);
        u[0] = 1.0;
        for (int k = nonzero; k < d; ++k) {
            const double mu = std::exp(rng.uniform(std::log(1e-3), std::log(1.5)));
            u -= mu * f.face_normal(idx[k]);
        }
        u.normalize();
        c.m = c.a + c.r * u;
        try {
            c.validate();
        } catch (const std::exception&) {
            if (rejections) ++*rejections;
            continue;
        }
        return c;
    }
    throw std::runtime_error("configuration generator exhausted its attempts");
}

/// Unit edge directions of C_0 leaving the vertex a' (vertex case only).
inline std::vector<Vec> vertex_edges(const BallConeConfig& c) {
    if (c.boundary != BoundaryCase::Vertex) throw ClassificationError("edges at a' exist only in the vertex case");
    ConeFrame f(c.d);
    auto V = cross_section_vertices(f, c.a[0]);
    int k0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.d; ++k) {
        double dist = (V[k] - c.a_prime()).norm();
        if (dist < best) best = dist, k0 = k;
    }
    std::vector<Vec> out;
    for (int k = 0; k < c.d; ++k)
        if (k != k0) out.push_back((V[k] - V[k0]).normalized());
    return out;
}

/// sin of the angle between a direction leaving a' into C_0 and the tangent plane T.
inline double sin_to_tangent(const BallConeConfig& c, const Vec& u) { return std::max(0.0, u.dot(c.up())); }

// ---------------------------------------------------------------------------
// Closed-form roots

/// Positive root p of p^2 + 2 p R sin(beta) - (2 delta h - h^2) = 0.
inline double closed_form_exit(double R, double sin_beta, double delta, double h) {
    const double num = 2.0 * delta * h - h * h;
    const double Rs = R * sin_beta;
    return num / (std::sqrt(Rs * Rs + num) + Rs);
}

/// sqrt(rh) ∧ rh/(R sin beta).
inline double exit_envelope(double r, double R, double sin_beta, double h) {
    const double a = std::sqrt(r * h);
    const double den = R * sin_beta;
    return den > 0.0 ? std::min(a, r * h / den) : a;
}

struct XiValue {
    double exact = 0.0;
    double envelope = 0.0;
    double direct = 0.0;
    double residual = 0.0;  // |point - m| - r at the closed-form root
};

/// Lower crossing (frak_a + h, frak_a - xi) of the circle, for a = (frak_a, frak_a) in the cone |x_2| < x_1.
inline XiValue xi_of_h(double frak_a, const Vec& m, double r, double h) {
    if (!(h > 0.0 && h <= r / std::sqrt(2.0))) throw std::domain_error("h must lie in (0, r/sqrt(2)]");
    const double dm1 = m[0] - frak_a, dm2 = m[1] - frak_a;
    const double num = 2.0 * dm1 * h - h * h;
    XiValue v;
    v.exact = num / (dm2 + std::sqrt(dm2 * dm2 + num));
    v.envelope = r * h / (dm2 + std::sqrt(r * h));
    auto t = ray_sphere(m, r, vec({frak_a + h, frak_a}), vec({0.0, -1.0}));
    if (!t) throw std::domain_error("vertical line misses the circle");
    v.direct = t->second;
    v.residual = std::abs((vec({frak_a + h, frak_a - v.exact}) - m).norm() - r);
    return v;
}

inline XiValue xi_of_h(const BallConeConfig& c, double h) {
    if (c.d != 2) throw std::invalid_argument("xi(h) is defined for d = 2");
    Vec m = c.m;
    if (c.a[1] < 0) m[1] = -m[1];  // mirror so that a = (frak_a, frak_a)
    return xi_of_h(c.a[0], m, c.r, h);
}

enum class EnvelopeKind { P, Q, PI, V };

inline std::string to_string(EnvelopeKind k) {
    switch (k) {
        case EnvelopeKind::P: return "p_h";
        case EnvelopeKind::Q: return "q_h";
        case EnvelopeKind::PI: return "p_h^i";
        case EnvelopeKind::V: return "v_i";
    }
    return "?";
}

inline EnvelopeKind parse_envelope_kind(const std::string& s) {
    if (s == "p_h" || s == "p") return EnvelopeKind::P;
    if (s == "q_h" || s == "q") return EnvelopeKind::Q;
    if (s == "p_h^i" || s == "pi") return EnvelopeKind::PI;
    if (s == "v_i" || s == "v") return EnvelopeKind::V;
    throw std::invalid_argument("unknown envelope kind: " + s);
}

/// Quantities of the quadratic z^2 + 2Kz - L* = 0 for a segment from a'_h along u to the sphere of B_h.
struct ZRoots {
    double z_theta = 0.0, z0 = 0.0, zpi = 0.0;                 // closed forms
    double direct_theta = 0.0, direct0 = 0.0, directpi = 0.0;  // ray-sphere
    double sin_omega = 0.0, theta = 0.0, shift = 0.0;
};

/// Segment from a'_h along the unit direction u (tilted by beta from T) to the sphere of B_h;
/// requires a'_h inside B_h.
inline ZRoots z_roots(const BallConeConfig& c, double h, const Vec& u) {
    const Vec n = c.up();
    const Vec ap = c.a_prime(), ah = c.a_h(h), mp = c.m_prime();
    const double R = c.R(), Rh = c.R_h(h);
    ZRoots z;
    z.shift = (ah - ap).norm();
    const Vec w = (ah - ap) / z.shift;  // outward from the axis
    z.sin_omega = -w.dot(n);
    const double cos_omega = std::sqrt(std::max(0.0, 1.0 - z.sin_omega * z.sin_omega));
    const double sb = u.dot(n), cb = std::sqrt(std::max(0.0, 1.0 - sb * sb));
    Vec uh = u - sb * n, wh = -(w - w.dot(n) * n);  // horizontal parts; wh points along the projected axis
    if (wh.norm() < 1e-14) {
        // vertical axis: any horizontal reference works
        wh = uh.norm() > 1e-14 ? Vec(uh) : Vec(Vec::Zero(n.size()));
    }
    const double cth = (uh.norm() > 1e-14 && wh.norm() > 1e-14) ? uh.normalized().dot(wh.normalized()) : 1.0;
    z.theta = std::acos(std::clamp(cth, -1.0, 1.0));
    const double s = z.shift, ell = R - s * z.sin_omega;
    const double Lstar = Rh * Rh - R * R + 2.0 * s * R * z.sin_omega - s * s;
    auto root = [&](double K) { return Lstar / (K + std::sqrt(K * K + Lstar)); };
    const double K = ell * sb - s * cos_omega * cb * std::cos(z.theta);
    z.z_theta = root(K);
    z.z0 = root(R * sb - s * (cos_omega * cb + z.sin_omega * sb));
    z.zpi = root(R * sb + s * (cos_omega * cb - z.sin_omega * sb));
    // direct intersections, including the extreme azimuths theta = 0 and theta = pi
    auto direct = [&](const Vec& dir) {
        auto t = ray_sphere(mp, Rh, ah, dir);
        if (!t) throw std::domain_error("segment misses the sphere");
        return t->second;
    };
    z.direct_theta = direct(u);
    Vec axis_h = wh.norm() > 1e-14 ? Vec(wh.normalized()) : Vec(Vec::Zero(n.size()));
    if (axis_h.norm() == 0.0) {
        z.direct0 = z.direct_theta;
        z.directpi = z.direct_theta;
    } else {
        z.direct0 = direct(Vec(sb * n + cb * axis_h));
        z.directpi = direct(Vec(sb * n - cb * axis_h));
    }
    return z;
}

struct EnvelopeOptions {
    double c0 = 1.0 / 64.0;
};

/// Exact quantity versus its envelope, with the residual between closed form and direct geometry.
inline OracleReport envelope_check(EnvelopeKind kind, const BallConeConfig& c, double h,
                                   const EnvelopeOptions& opt = {}) {
    c.validate();
    OracleReport rep;
    rep.lemma = "envelope:" + to_string(kind);
    rep.config = c.to_json();
    rep.config["h"] = h;
    const double r = c.r, R = c.R(), delta = c.delta();
    const Vec ap = c.a_prime(), mp = c.m_prime();
    auto exit_check = [&](const Vec& u, double sin_beta, double envelope) {
        const double exact = closed_form_exit(R, sin_beta, delta, h);
        const double direct = exit_length(mp, c.R_h(h), ap, u);
        rep.add_residual(std::abs(exact - direct));
        rep.add_residual(std::abs((ap + exact * u - mp).norm() - c.R_h(h)));
        rep.add_ratio(exact / envelope);
        ++rep.samples;
        return exact;
    };
    switch (kind) {
        case EnvelopeKind::P:
        case EnvelopeKind::Q: {
            if (c.d != 3 || c.boundary != BoundaryCase::Vertex)
                throw ClassificationError("p_h and q_h need d = 3 with a' at a vertex");
            if (!(h > 0.0 && h <= r / std::sqrt(3.0))) throw std::domain_error("h must lie in (0, r/sqrt(3)]");
            auto e = vertex_edges(c);
            double s0 = sin_to_tangent(c, e[0]), s1 = sin_to_tangent(c, e[1]);
            if (s1 < s0) std::swap(e[0], e[1]), std::swap(s0, s1);
            rep.details["sin_beta"] = s0;
            rep.details["sin_beta_plus"] = s1;
            if (kind == EnvelopeKind::P) {
                rep.details["value"] = exit_check(e[0], s0, exit_envelope(r, R, s0, h));
            } else {
                rep.details["value"] = exit_check(e[1], s1, exit_envelope(r, R, 1.0, h));
            }
            break;
        }
        case EnvelopeKind::PI: {
            if (c.d != 4 || c.boundary != BoundaryCase::Vertex)
                throw ClassificationError("p_h^i needs d = 4 with a' at a vertex");
            if (!(h > 0.0 && h < r / 2.0)) throw std::domain_error("h must lie in (0, r/2)");
            nlohmann::json vals = nlohmann::json::array();
            for (const Vec& u : vertex_edges(c)) {
                double s = sin_to_tangent(c, u);
                vals.push_back(exit_check(u, s, exit_envelope(r, R, s, h)));
            }
            rep.details["values"] = vals;
            break;
        }
        case EnvelopeKind::V: {
            if (c.d != 4 || c.boundary != BoundaryCase::Vertex)
                throw ClassificationError("v_i needs d = 4 with a' at a vertex");
            if (!(h > 0.0 && h < opt.c0 * R)) throw std::domain_error("h must lie in (0, c0 R)");
            const Vec ah = c.a_h(h);
            const double Rh = c.R_h(h);
            if (!((ah - mp).norm() < Rh)) {
                rep.violation(ah);
                rep.details["a_h_outside"] = true;
                break;
            }
            const double sup_tau = R * Rh;
            nlohmann::json vals = nlohmann::json::array(), branches = nlohmann::json::array();
            long long ordering = 0, lower = 0;
            for (const Vec& u : vertex_edges(c)) {
                const double s = sin_to_tangent(c, u);
                ZRoots z = z_roots(c, h, u);
                // z(0), z(pi) and z(theta) against direct intersections
                rep.add_residual(std::abs(z.z0 - z.direct0));
                rep.add_residual(std::abs(z.zpi - z.directpi));
                rep.add_residual(std::abs(z.z_theta - z.direct_theta));
                double v;
                if (s >= 1.0 / 32.0) {
                    v = (sup_tau - c.tau(ah)) / (R * s);
                    const double paper = (Rh - R + z.shift * z.sin_omega) / s;
                    rep.add_residual(std::abs(v - paper));
                    branches.push_back("H");
                } else {
                    v = z.direct_theta;
                    if (!(z.zpi <= v * (1 + 1e-12) && v <= z.z0 * (1 + 1e-12))) {
                        ++ordering;
                        rep.violation(ah);
                    }
                    if (!(v >= 4.0 * h)) {
                        ++lower;
                        rep.violation(ah);
                    }
                    branches.push_back("B_h");
                }
                vals.push_back(v);
                rep.add_ratio(v / exit_envelope(r, R, s, h));
                ++rep.samples;
            }
            rep.details["values"] = vals;
            rep.details["branches"] = branches;
            rep.details["ordering_failures"] = ordering;
            rep.details["lower_bound_failures"] = lower;
            break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Rectangle lemma: E = {y in prod (0, a_i) : sum y_i < R} versus the box prod (0, a_i ∧ R)

/// |E| by inclusion-exclusion over the corners of the box.
inline double box_simplex_volume(const std::vector<double>& a, double R) {
    const int m = static_cast<int>(a.size());
    double fact = 1.0;
    for (int k = 2; k <= m; ++k) fact *= k;
    double total = 0.0;
    for (int mask = 0; mask < (1 << m); ++mask) {
        double s = R;
        int bits = 0;
        for (int i = 0; i < m; ++i)
            if (mask >> i & 1) s -= a[i], ++bits;
        if (s > 0.0) total += ((bits & 1) ? -1.0 : 1.0) * std::pow(s, m) / fact;
    }
    // the alternating sum equals the box volume once R exceeds every corner
    double box = 1.0;
    for (double v : a) box *= v;
    return std::clamp(total, 0.0, box);
}

/// Planar |E| by integrating the clipped height min(a_2, R - y) over y in (0, a_1 ∧ R).
inline double rectangle_area_2d(double a1, double a2, double R) {
    const double top = std::min(a1, R);
    const double knee = std::clamp(R - a2, 0.0, top);
    const double flat = a2 * knee;
    const double slope = R * (top - knee) - 0.5 * (top * top - knee * knee);
    return flat + slope;
}

inline OracleReport rectangle_lemma_check(const std::vector<double>& a, double R, std::uint64_t seed,
                                          long long mc_samples = 20000) {
    const int m = static_cast<int>(a.size());
    if (m < 2 || m > 3) throw std::invalid_argument("rectangle lemma check needs m in {2, 3}");
    if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
    for (double v : a)
        if (!(v > 0.0)) throw std::invalid_argument("side lengths must be positive");
    OracleReport rep;
    rep.lemma = "rectangle-lemma";
    rep.config = {{"a", a}, {"R", R}, {"m", m}, {"seed", seed}};
    double tilde = 1.0, inner_sum = 0.0;
    for (double v : a) {
        tilde *= std::min(v, R);
        inner_sum += std::min(v, R) / m;
    }
    // the inner box prod (0, (a_i ∧ R)/m) lies in E: its far corner satisfies every constraint
    if (!(inner_sum <= R * (1 + 1e-15))) rep.violation();
    const double exact = box_simplex_volume(a, R);
    if (m == 2) rep.add_residual(std::abs(exact - rectangle_area_2d(a[0], a[1], R)));
    const double lower = tilde / std::pow(static_cast<double>(m), m);
    if (!(exact >= lower * (1 - 1e-12))) rep.violation();
    if (!(exact <= tilde * (1 + 1e-12))) rep.violation();
    // Monte Carlo over the box prod (0, a_i): E-points must lie in the clipped box
    numeric::Rng rng(seed);
    long long hits = 0;
    Vec y(m);
    for (long long s = 0; s < mc_samples; ++s) {
        double sum = 0.0;
        for (int i = 0; i < m; ++i) sum += (y[i] = rng.uniform_open() * a[i]);
        if (!(sum < R)) continue;
        ++hits;
        for (int i = 0; i < m; ++i)
            if (!(y[i] < std::min(a[i], R))) {
                rep.violation(y);
                break;
            }
    }
    double box = 1.0;
    for (double v : a) box *= v;
    const double p = static_cast<double>(hits) / mc_samples;
    // stderr from the add-two estimate so that all-hit or no-hit runs keep a positive spread
    const double pt = (hits + 1.0) / (mc_samples + 2.0);
    const double mc = p * box, se = box * std::sqrt(pt * (1 - pt) / mc_samples);
    rep.samples = mc_samples;
    rep.add_ratio(exact / tilde);
    rep.details = {{"E", exact},          {"E_tilde", tilde},  {"lower_bound", lower},
                   {"mc_E", mc},          {"mc_stderr", se},   {"mc_z", se > 0 ? (mc - exact) / se : 0.0},
                   {"ratio", exact / tilde}};
    return rep;
}

// ---------------------------------------------------------------------------
// Diamond slices: parallelepipeds P_t in the level sets Pi_t = {x_0 = t}

/// A diamond D(z, r) in R^d_+, a point xi in it, coordinates renumbered so that z_d is maximal.
struct DiamondConfig {
    int d = 2;
    Vec z;
    double r = 0.0;
    Vec xi;
    std::vector<int> perm;  // perm[i] = original index of coordinate i

    double b() const { return z.sum() - r; }

    void validate() const {
        if (d < 2 || d > 4 || z.size() != d || xi.size() != d) throw std::invalid_argument("bad diamond config");
        if (!in_orthant(z)) throw std::domain_error("z must lie in the open orthant");
        if (!(r >= 1.0)) throw std::domain_error("r must be at least 1");
        if (!(b() > 2.0)) throw std::domain_error("bottom b = z_0 - r must exceed 2");
        if (!(in_orthant(xi) && (z - xi).lpNorm<1>() < r)) throw std::domain_error("xi must lie in D(z, r)");
        for (int i = 0; i < d; ++i)
            if (z[i] > z[d - 1]) throw std::domain_error("z_d must be the largest coordinate");
    }

    nlohmann::json to_json() const {
        return {{"d", d}, {"z", to_std(z)}, {"r", r}, {"xi", to_std(xi)}, {"b", b()}, {"perm", perm}};
    }
};

/// Renumbers coordinates so the largest entry of z comes last.
inline DiamondConfig make_diamond_config(const Vec& z, double r, const Vec& xi) {
    DiamondConfig c;
    c.d = static_cast<int>(z.size());
    c.r = r;
    c.perm.resize(c.d);
    for (int i = 0; i < c.d; ++i) c.perm[i] = i;
    int jmax = 0;
    for (int i = 1; i < c.d; ++i)
        if (z[i] > z[jmax]) jmax = i;
    std::swap(c.perm[jmax], c.perm[c.d - 1]);
    c.z = Vec(c.d);
    c.xi = Vec(c.d);
    for (int i = 0; i < c.d; ++i) {
        c.z[i] = z[c.perm[i]];
        c.xi[i] = xi[c.perm[i]];
    }
    c.validate();
    return c;
}

inline DiamondConfig random_diamond_config(int d, numeric::Rng& rng) {
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const double r = rng.uniform(1.0, 20.0);
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = rng.uniform(0.2, 25.0);
        if (!(z.sum() - r > 2.0)) continue;
        Vec xi(d);
        for (int tries = 0; tries < 10000; ++tries) {
            for (int i = 0; i < d; ++i) xi[i] = rng.uniform(std::max(0.0, z[i] - r), z[i] + r);
            if (in_orthant(xi) && (z - xi).lpNorm<1>() < r) return make_diamond_config(z, r, xi);
        }
    }
    throw std::runtime_error("diamond generator exhausted its attempts");
}

/// P_t described by bounds lo_i < x_i < hi_i (i < d) inside Pi_t.
struct SophiParallelepiped {
    Vec lo, hi;
    bool additional = false;  // sum_{i<d} z_i >= r - h, selecting the first construction
    double log_lambda = 0.0;  // log lambda_t(P_t)

    bool contains(const Vec& x, double tol = 0.0) const {
        for (int i = 0; i < lo.size(); ++i)
            if (x[i] <= lo[i] - tol || x[i] >= hi[i] + tol) return false;
        return true;
    }
    /// Edge vectors in R^d: e_i - e_d scaled to the side lengths.
    std::vector<Vec> edges() const {
        const int d = static_cast<int>(lo.size()) + 1;
        std::vector<Vec> out;
        for (int i = 0; i + 1 < d; ++i) {
            Vec e = Vec::Zero(d);
            e[i] = hi[i] - lo[i];
            e[d - 1] = -(hi[i] - lo[i]);
            out.push_back(e);
        }
        return out;
    }
};

/// Builds P_t from the rectangle lemma applied to the projection of G_{t,xi}.
inline SophiParallelepiped sophi_parallelepiped(const DiamondConfig& c, double t) {
    const double b = c.b();
    if (!(t > b && t < b + 2.0 * c.r)) throw std::domain_error("t must lie in (b, b + 2r)");
    const int d = c.d;
    const double h = t - b, dl = std::abs(t - c.xi.sum());
    double zsum = 0.0;
    for (int i = 0; i + 1 < d; ++i) zsum += c.z[i];
    SophiParallelepiped P;
    P.lo = Vec(d - 1);
    P.hi = Vec(d - 1);
    P.additional = zsum >= c.r - h;
    double log_area = 0.0;
    for (int i = 0; i + 1 < d; ++i) {
        const double A = c.z[i] + (h + 3.0 * dl) / 2.0;
        if (P.additional) {
            // y_i = z_i - x_i + (h + dl)/2 in (0, A), sum y_i < r - h + d (h + dl)/2
            const double Rr = c.r - h + d * (h + dl) / 2.0;
            const double side = std::min(A, Rr);
            P.hi[i] = c.z[i] + (h + dl) / 2.0;
            P.lo[i] = P.hi[i] - side;
            log_area += std::log(side);
        } else {
            // y_i = x_i + dl in (0, A), sum y_i < z_0 - r + h + d dl
            const double R2 = c.z.sum() - c.r + h + d * dl;
            const double side = std::min(A, R2);
            P.lo[i] = -dl;
            P.hi[i] = -dl + side;
            log_area += std::log(side);
        }
    }
    P.log_lambda = log_area + 0.5 * std::log(static_cast<double>(d));
    return P;
}

/// Projection of xi onto Pi_t.
inline Vec project_to_level(const Vec& xi, double t) {
    return xi + Vec::Constant(xi.size(), (t - xi.sum()) / static_cast<double>(xi.size()));
}

struct SophiOptions {
    long long samples = 100000;
    double log_mu_D = std::numeric_limits<double>::quiet_NaN();  // computed when NaN
};

inline OracleReport sophi_check(const DiamondConfig& c, double t, std::uint64_t seed, const SophiOptions& opt = {}) {
    c.validate();
    const SophiParallelepiped P = sophi_parallelepiped(c, t);
    const int d = c.d;
    const double b = c.b(), h = t - b, x0 = c.xi.sum(), dl = std::abs(t - x0);
    OracleReport rep;
    rep.lemma = "sophi";
    rep.config = c.to_json();
    rep.config["t"] = t;
    rep.config["seed"] = seed;
    numeric::Rng rng(seed);
    auto full = [&](const Vec& head) {
        Vec x(d);
        x.head(d - 1) = head;
        x[d - 1] = t - head.sum();
        return x;
    };
    // rejection samples of D_t and of the larger G_{t,xi}, drawn from boxes wider than the proof's bounds
    auto sample_into = [&](double lo_shift, double up_slack, auto member, long long& accepted, long long& missed) {
        Vec head(d - 1);
        long long attempts = 0;
        while (accepted < opt.samples && attempts < 200 * opt.samples) {
            ++attempts;
            for (int i = 0; i + 1 < d; ++i)
                head[i] = rng.uniform(std::max(lo_shift, c.z[i] - c.r - dl), c.z[i] + up_slack);
            Vec x = full(head);
            if (!member(x)) continue;
            ++accepted;
            if (!P.contains(head)) {
                ++missed;
                rep.violation(x);
            }
        }
    };
    long long nD = 0, missD = 0, nG = 0, missG = 0;
    const double slack = (h + dl) / 2.0 + 0.5 * (1.0 + h + dl);
    sample_into(0.0, slack, [&](const Vec& x) { return in_orthant(x) && (c.z - x).lpNorm<1>() < c.r; }, nD, missD);
    sample_into(-dl, slack,
                [&](const Vec& x) { return (x.array() > -dl).all() && (c.z - x).lpNorm<1>() < c.r + dl; }, nG,
                missG);
    rep.samples = nD + nG;
    const Vec xt = project_to_level(c.xi, t);
    const bool xi_in = P.contains(xt.head(d - 1));
    if (!xi_in) rep.violation(xt);
    // edges parallel to vectors of V: e_i - e_d
    bool edges_ok = true;
    for (const Vec& e : P.edges()) {
        int pos = 0, neg = 0;
        for (int i = 0; i < d; ++i) {
            if (e[i] > 0) ++pos;
            if (e[i] < 0) ++neg;
        }
        if (pos != 1 || neg != 1 || std::abs(e.sum()) > 1e-12 * e.norm()) edges_ok = false;
    }
    if (!edges_ok) rep.violation();
    const double log_mu = std::isnan(opt.log_mu_D)
                              ? measure::mu_quadrature(Ball(NormKind::L1, c.z, c.r), 1e-8).log_value
                              : opt.log_mu_D;
    const double growth = 1.0 + std::max(t - b, x0 - b);
    const double logC = P.log_lambda - (d - 1) * std::log(growth) - b - log_mu;
    rep.add_ratio(std::exp(logC));
    rep.details = {{"branch", P.additional ? "paral" : "paral.addit"},
                   {"lo", to_std(P.lo)},
                   {"hi", to_std(P.hi)},
                   {"log_lambda", P.log_lambda},
                   {"log_mu_D", log_mu},
                   {"log_constant", logC},
                   {"samples_D", nD},
                   {"samples_G", nG},
                   {"missed_D", missD},
                   {"missed_G", missG},
                   {"xi_t_inside", xi_in},
                   {"edges_in_V", edges_ok}};
    return rep;
}

// ---------------------------------------------------------------------------
// Regular tetrahedron identities from the d = 4 cross-section

struct TetrahedronAngles {
    double sin_gamma = 0, sin_kappa = 0, face_angle = 0, two_gamma = 0, height_over_edge = 0, edge = 0;
};

inline TetrahedronAngles tetrahedron_angles(double t) {
    ConeFrame f(4);
    auto V = cross_section_vertices(f, t);
    TetrahedronAngles a;
    a.edge = (V[1] - V[0]).norm();
    Vec centroid = (V[0] + V[1] + V[2] + V[3]) / 4.0;
    Vec axis = (centroid - V[0]).normalized(), e = (V[1] - V[0]).normalized();
    a.sin_gamma = std::sqrt(std::max(0.0, 1.0 - std::pow(axis.dot(e), 2)));
    // face (0,1,2) normal; edge 0-3 leaves that face
    auto normal3 = [](const Vec& p, const Vec& q, const Vec& s) {
        Eigen::Vector3d u(q[0] - p[0], q[1] - p[1], q[2] - p[2]), v(s[0] - p[0], s[1] - p[1], s[2] - p[2]);
        Eigen::Vector3d n = u.cross(v).normalized();
        return vec({n[0], n[1], n[2]});
    };
    Vec n012 = normal3(V[0], V[1], V[2]), n013 = normal3(V[0], V[1], V[3]);
    a.sin_kappa = std::abs(n012.dot((V[3] - V[0]).normalized()));
    // interior dihedral angle between faces sharing edge 0-1
    a.face_angle = std::acos(std::clamp(std::abs(n012.dot(n013)), 0.0, 1.0));
    a.two_gamma = 2.0 * std::asin(a.sin_gamma);
    a.height_over_edge = std::abs(n012.dot(V[3] - V[0])) / a.edge;
    return a;
}

}  // namespace mxlab

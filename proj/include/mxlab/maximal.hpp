#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"
#include "numerics.hpp"

namespace mxlab::maximal {

/// Centers on the grid with a stride, radii r_min * exp(k * log_rho) up to r_max.
struct CandidatePolicy {
    int stride = 1;
    double log_rho = 0.25 * std::log(2.0);
    double r_min = 0.0;
    double r_max = 0.0;

    double rho() const { return std::exp(log_rho); }
    void set_rho(double rho) { log_rho = std::log(rho); }

    void validate(double spacing) const {
        if (stride < 1) throw std::invalid_argument("stride must be >= 1");
        if (!(log_rho > 0.0) || log_rho > std::log(2.0) * (1 + 1e-12))
            throw std::invalid_argument("ladder ratio must lie in (1, 2]");
        if (!(r_min >= spacing * (1 - 1e-12))) throw std::invalid_argument("r_min must be >= spacing");
        if (!(r_max >= r_min)) throw std::invalid_argument("r_max must be >= r_min");
    }
    std::vector<double> radii() const {
        std::vector<double> out;
        for (int k = 0;; ++k) {
            double r = r_min * std::exp(k * log_rho);
            if (r > r_max * (1 + 1e-12)) break;
            out.push_back(r);
        }
        return out;
    }
    /// Same centers, ladder with every other rung added (exactly nested).
    CandidatePolicy denser_ladder() const {
        CandidatePolicy p = *this;
        p.log_rho = 0.5 * log_rho;
        return p;
    }
    std::string describe() const {
        return "stride=" + std::to_string(stride) + ";log_rho=" + fmt_double(log_rho) + ";r_min=" + fmt_double(r_min) +
               ";r_max=" + fmt_double(r_max);
    }
};

/// Default family: stride 1, ratio 2^{1/4}, from one cell to the box diameter in the given norm.
inline CandidatePolicy default_policy(const GridFunction& f, NormKind kind) {
    CandidatePolicy p;
    p.r_min = f.spacing;
    double diam = 0.0;
    for (int n : f.dims) {
        double side = n * f.spacing;
        if (kind == NormKind::L1) diam += side;
        else if (kind == NormKind::L2) diam += side * side;
        else diam = std::max(diam, side);
    }
    if (kind == NormKind::L2) diam = std::sqrt(diam);
    p.r_max = diam + f.spacing;
    return p;
}

enum class Engine { Auto, Brute, Rows, Rotated, Separable };

inline std::string to_string(Engine e) {
    switch (e) {
        case Engine::Auto: return "auto";
        case Engine::Brute: return "brute";
        case Engine::Rows: return "rows";
        case Engine::Rotated: return "rotated";
        case Engine::Separable: return "separable";
    }
    return "?";
}

// Discrete balls: offsets D (in cells) with |D| < r/h, strict.
// For L2 the parameter is the largest admissible squared length, otherwise the largest length.
inline long discrete_param(NormKind kind, double r, double h) {
    double q = r / h;
    if (kind == NormKind::L2) q *= q;
    double fl = std::floor(q);
    long p = static_cast<long>(fl);
    if (fl >= q) --p;
    return p;
}

inline long isqrt(long v) {
    if (v < 0) return -1;
    long k = static_cast<long>(std::sqrt(static_cast<double>(v)));
    while (k * k > v) --k;
    while ((k + 1) * (k + 1) <= v) ++k;
    return k;
}

/// Largest coordinate offset in the discrete ball.
inline long extent(NormKind kind, long p) { return kind == NormKind::L2 ? isqrt(p) : p; }

/// Half-width of the discrete ball's row at vertical offset dy.
inline long half_width(NormKind kind, long p, long dy) {
    dy = std::abs(dy);
    switch (kind) {
        case NormKind::Linf: return dy <= p ? p : -1;
        case NormKind::L1: return p - dy;
        case NormKind::L2: return isqrt(p - dy * dy);
    }
    return -1;
}

inline bool offset_inside(NormKind kind, long p, const long* o, int d) {
    long acc = 0;
    for (int a = 0; a < d; ++a) {
        long v = std::abs(o[a]);
        if (kind == NormKind::Linf) acc = std::max(acc, v);
        else if (kind == NormKind::L1) acc += v;
        else acc += v * v;
    }
    return acc <= p;
}

/// Input of the grid engines: values and weights on a d <= 3 lattice.
struct Problem {
    std::vector<int> dims;
    const double* f = nullptr;
    const double* w = nullptr;
    const std::uint8_t* center_ok = nullptr;  // optional mask of admissible centers
};

struct Options {
    Engine engine = Engine::Auto;
    bool centered = false;
    int row_lo = 0, row_hi = -1;  // output rows (axis 0) to fill for the Rows engine; -1 = all
};

namespace detail {

struct Shape {
    int n[3] = {1, 1, 1};
    int d = 0;
    std::size_t N = 1;
    explicit Shape(const std::vector<int>& dims) {
        d = static_cast<int>(dims.size());
        if (d < 1 || d > 3) throw std::invalid_argument("grid maximal operators need d <= 3");
        for (int a = 0; a < d; ++a) n[3 - d + a] = dims[a];
        N = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    }
    std::size_t at(int i, int j, int k) const { return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k; }
};

// Suffix sums S(i) = sum over j >= i componentwise, padded by one; built axis by axis so that only
// nonnegative terms are added. Box sums by inclusion-exclusion of the eight far corners.
struct Suffix {
    int m[3];
    std::vector<double> S;
    Suffix(const Shape& sh, const double* a) {
        for (int t = 0; t < 3; ++t) m[t] = sh.n[t] + 1;
        S.assign(static_cast<std::size_t>(m[0]) * m[1] * m[2], 0.0);
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = 0; k < sh.n[2]; ++k) S[idx(i, j, k)] = a[sh.at(i, j, k)];
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = sh.n[2] - 1; k >= 0; --k) S[idx(i, j, k)] += S[idx(i, j, k + 1)];
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = sh.n[1] - 1; j >= 0; --j)
                for (int k = 0; k < sh.n[2]; ++k) S[idx(i, j, k)] += S[idx(i, j + 1, k)];
        for (int i = sh.n[0] - 1; i >= 0; --i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = 0; k < sh.n[2]; ++k) S[idx(i, j, k)] += S[idx(i + 1, j, k)];
    }
    std::size_t idx(int i, int j, int k) const { return (static_cast<std::size_t>(i) * m[1] + j) * m[2] + k; }
    // inclusive box [lo, hi], already clipped
    double box(const int lo[3], const int hi[3]) const {
        double s = 0.0;
        for (int c = 0; c < 8; ++c) {
            int i = (c & 4) ? hi[0] + 1 : lo[0];
            int j = (c & 2) ? hi[1] + 1 : lo[1];
            int k = (c & 1) ? hi[2] + 1 : lo[2];
            double v = S[idx(i, j, k)];
            s += (__builtin_popcount(c) & 1) ? -v : v;
        }
        return s;
    }
};

// out[x] = max of a[y] over |y - x| <= K along one axis (clipped), in place.
inline void sliding_max_axis(const Shape& sh, std::vector<double>& a, int axis, long K) {
    if (K <= 0) return;
    const int n = sh.n[axis];
    if (n <= 1) return;
    std::vector<double> line(n), out(n);
    std::vector<int> dq(n);
    int o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
    for (int p = 0; p < sh.n[o1]; ++p)
        for (int q = 0; q < sh.n[o2]; ++q) {
            auto pos = [&](int t) {
                int c[3];
                c[axis] = t;
                c[o1] = p;
                c[o2] = q;
                return sh.at(c[0], c[1], c[2]);
            };
            for (int t = 0; t < n; ++t) line[t] = a[pos(t)];
            int head = 0, tail = 0;
            for (long y = 0; y < n + K; ++y) {
                if (y < n) {
                    while (tail > head && line[dq[tail - 1]] <= line[y]) --tail;
                    dq[tail++] = static_cast<int>(y);
                }
                long x = y - K;
                if (x < 0) continue;
                while (dq[head] < x - K) ++head;
                out[x] = line[dq[head]];
            }
            for (int t = 0; t < n; ++t) a[pos(t)] = out[t];
        }
}

inline bool is_center(const Problem& pb, const Shape& sh, int stride, int i, int j, int k) {
    if (stride > 1) {
        int c[3] = {i, j, k};
        for (int a = 3 - sh.d; a < 3; ++a)
            if (c[a] % stride) return false;
    }
    std::size_t at = sh.at(i, j, k);
    if (pb.center_ok && !pb.center_ok[at]) return false;
    return pb.w[at] > 0.0;
}

inline std::vector<long> params_for(NormKind kind, const CandidatePolicy& pol, double h) {
    std::vector<long> ps;
    for (double r : pol.radii()) {
        long p = discrete_param(kind, r, h);
        if (p >= 0 && (ps.empty() || p != ps.back())) ps.push_back(p);
    }
    return ps;
}

inline double finite_max(const Problem& pb, std::size_t N) {
    double m = 0.0;
    for (std::size_t k = 0; k < N; ++k)
        if (pb.w[k] > 0.0) m = std::max(m, pb.f[k]);
    return m;
}

// True once every output value has reached the largest possible average.
inline bool saturated(const std::vector<double>& M, const std::vector<double>& wts, double fmax) {
    for (std::size_t k = 0; k < M.size(); ++k)
        if (wts[k] > 0.0 && M[k] < fmax) return false;
    return true;
}

inline std::vector<double> run_separable(const Problem& pb, const Shape& sh, const std::vector<long>& ps, int stride,
                                         bool centered, double fmax) {
    std::vector<double> g(sh.N);
    for (std::size_t k = 0; k < sh.N; ++k) g[k] = pb.f[k] * pb.w[k];
    Suffix Sg(sh, g.data()), Sw(sh, pb.w);
    std::vector<double> wv(pb.w, pb.w + sh.N);
    std::vector<double> M(sh.N, 0.0), A(sh.N);
    for (long K : ps) {
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = 0; k < sh.n[2]; ++k) {
                    std::size_t at = sh.at(i, j, k);
                    if (!is_center(pb, sh, stride, i, j, k)) {
                        A[at] = -1.0;
                        continue;
                    }
                    int c[3] = {i, j, k}, lo[3], hi[3];
                    for (int a = 0; a < 3; ++a) {
                        long e = a >= 3 - sh.d ? K : 0;
                        lo[a] = static_cast<int>(std::max<long>(0, c[a] - e));
                        hi[a] = static_cast<int>(std::min<long>(sh.n[a] - 1, c[a] + e));
                    }
                    double sw = Sw.box(lo, hi);
                    A[at] = sw > 0.0 ? std::max(0.0, Sg.box(lo, hi)) / sw : -1.0;
                }
        if (!centered)
            for (int a = 3 - sh.d; a < 3; ++a) sliding_max_axis(sh, A, a, K);
        for (std::size_t t = 0; t < sh.N; ++t) M[t] = std::max(M[t], A[t]);
        if (!centered && saturated(M, wv, fmax)) break;
    }
    return M;
}

inline std::vector<double> run_brute(const Problem& pb, const Shape& sh, NormKind kind, const std::vector<long>& ps,
                                     int stride, bool centered, double fmax) {
    std::vector<double> M(sh.N, 0.0);
    std::vector<double> wv(pb.w, pb.w + sh.N);
    // support bounding box of f*w
    int slo[3] = {sh.n[0], sh.n[1], sh.n[2]}, shi[3] = {-1, -1, -1};
    for (int i = 0; i < sh.n[0]; ++i)
        for (int j = 0; j < sh.n[1]; ++j)
            for (int k = 0; k < sh.n[2]; ++k)
                if (pb.f[sh.at(i, j, k)] * pb.w[sh.at(i, j, k)] > 0.0) {
                    int c[3] = {i, j, k};
                    for (int a = 0; a < 3; ++a) {
                        slo[a] = std::min(slo[a], c[a]);
                        shi[a] = std::max(shi[a], c[a]);
                    }
                }
    if (shi[0] < 0) return M;
    const int d = sh.d;
    std::vector<double> A(sh.N);
    for (long P : ps) {
        const long E = extent(kind, P);
        std::vector<std::array<long, 3>> offs;
        long o[3] = {0, 0, 0};
        for (long a0 = (d == 3 ? -E : 0); a0 <= (d == 3 ? E : 0); ++a0)
            for (long a1 = (d >= 2 ? -E : 0); a1 <= (d >= 2 ? E : 0); ++a1)
                for (long a2 = -E; a2 <= E; ++a2) {
                    o[0] = a0;
                    o[1] = a1;
                    o[2] = a2;
                    if (offset_inside(kind, P, o + (3 - d), d)) offs.push_back({a0, a1, a2});
                }
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = 0; k < sh.n[2]; ++k) {
                    std::size_t at = sh.at(i, j, k);
                    A[at] = -1.0;
                    if (!is_center(pb, sh, stride, i, j, k)) continue;
                    int c[3] = {i, j, k};
                    bool misses = false;
                    for (int a = 3 - d; a < 3; ++a)
                        if (c[a] + E < slo[a] || c[a] - E > shi[a]) misses = true;
                    if (misses) {
                        A[at] = 0.0;
                        continue;
                    }
                    double sg = 0.0, sw = 0.0;
                    for (const auto& of : offs) {
                        long y0 = i + of[0], y1 = j + of[1], y2 = k + of[2];
                        if (y0 < 0 || y1 < 0 || y2 < 0 || y0 >= sh.n[0] || y1 >= sh.n[1] || y2 >= sh.n[2]) continue;
                        std::size_t q = sh.at(static_cast<int>(y0), static_cast<int>(y1), static_cast<int>(y2));
                        sg += pb.f[q] * pb.w[q];
                        sw += pb.w[q];
                    }
                    A[at] = sw > 0.0 ? sg / sw : -1.0;
                }
        if (centered) {
            for (std::size_t t = 0; t < sh.N; ++t) M[t] = std::max(M[t], A[t]);
            continue;
        }
        for (int i = 0; i < sh.n[0]; ++i)
            for (int j = 0; j < sh.n[1]; ++j)
                for (int k = 0; k < sh.n[2]; ++k) {
                    double v = A[sh.at(i, j, k)];
                    if (v <= 0.0) continue;
                    for (const auto& of : offs) {
                        long y0 = i + of[0], y1 = j + of[1], y2 = k + of[2];
                        if (y0 < 0 || y1 < 0 || y2 < 0 || y0 >= sh.n[0] || y1 >= sh.n[1] || y2 >= sh.n[2]) continue;
                        double& m = M[sh.at(static_cast<int>(y0), static_cast<int>(y1), static_cast<int>(y2))];
                        m = std::max(m, v);
                    }
                }
        if (saturated(M, wv, fmax)) break;
    }
    return M;
}

// d = 2, any norm: each discrete ball is a stack of row segments.
inline std::vector<double> run_rows(const Problem& pb, const Shape& sh, NormKind kind, const std::vector<long>& ps,
                                    int stride, bool centered, double fmax, int row_lo, int row_hi) {
    const int n0 = sh.n[1], n1 = sh.n[2];
    if (row_hi < 0) row_hi = n0 - 1;
    std::vector<double> Rg(static_cast<std::size_t>(n0) * (n1 + 1), 0.0), Rw(Rg.size(), 0.0);
    auto R = [&](std::vector<double>& v, int i, int j) -> double& { return v[static_cast<std::size_t>(i) * (n1 + 1) + j]; };
    int srow_lo = n0, srow_hi = -1, scol_lo = n1, scol_hi = -1;
    for (int i = 0; i < n0; ++i) {
        for (int j = n1 - 1; j >= 0; --j) {
            std::size_t at = sh.at(0, i, j);
            double g = pb.f[at] * pb.w[at];
            R(Rg, i, j) = R(Rg, i, j + 1) + g;
            R(Rw, i, j) = R(Rw, i, j + 1) + pb.w[at];
            if (g > 0.0) {
                srow_lo = std::min(srow_lo, i);
                srow_hi = std::max(srow_hi, i);
                scol_lo = std::min(scol_lo, j);
                scol_hi = std::max(scol_hi, j);
            }
        }
    }
    std::vector<double> M(sh.N, 0.0);
    if (srow_hi < 0) return M;
    std::vector<double> A(sh.N), rowmax(n0), line(n1), out(n1);
    std::vector<int> dq(n1);
    std::vector<double> wv(sh.N, 0.0);
    for (int i = row_lo; i <= row_hi; ++i)
        for (int j = 0; j < n1; ++j) wv[sh.at(0, i, j)] = pb.w[sh.at(0, i, j)];
    for (long P : ps) {
        const long E = extent(kind, P);
        for (int i = 0; i < n0; ++i) {
            rowmax[i] = -1.0;
            for (int j = 0; j < n1; ++j) {
                std::size_t at = sh.at(0, i, j);
                A[at] = -1.0;
                if (!is_center(pb, sh, stride, 0, i, j)) continue;
                if (i + E < srow_lo || i - E > srow_hi || j + E < scol_lo || j - E > scol_hi) {
                    A[at] = 0.0;
                    rowmax[i] = std::max(rowmax[i], 0.0);
                    continue;
                }
                double sg = 0.0, sw = 0.0;
                for (long dy = -E; dy <= E; ++dy) {
                    long r = i + dy;
                    if (r < 0 || r >= n0) continue;
                    long hw = half_width(kind, P, dy);
                    if (hw < 0) continue;
                    int a = static_cast<int>(std::max<long>(0, j - hw));
                    int b = static_cast<int>(std::min<long>(n1 - 1, j + hw));
                    sw += R(Rw, r, a) - R(Rw, r, b + 1);
                    if (r >= srow_lo && r <= srow_hi) sg += R(Rg, r, a) - R(Rg, r, b + 1);
                }
                A[at] = sw > 0.0 ? std::max(0.0, sg) / sw : -1.0;
                rowmax[i] = std::max(rowmax[i], A[at]);
            }
        }
        if (centered) {
            for (std::size_t t = 0; t < sh.N; ++t) M[t] = std::max(M[t], A[t]);
            continue;
        }
        for (int i = row_lo; i <= row_hi; ++i) {
            for (long dy = -E; dy <= E; ++dy) {
                long r = i + dy;
                if (r < 0 || r >= n0 || rowmax[r] <= 0.0) continue;
                long hw = half_width(kind, P, dy);
                if (hw < 0) continue;
                for (int j = 0; j < n1; ++j) line[j] = A[sh.at(0, static_cast<int>(r), j)];
                int head = 0, tail = 0;
                for (long y = 0; y < n1 + hw; ++y) {
                    if (y < n1) {
                        while (tail > head && line[dq[tail - 1]] <= line[y]) --tail;
                        dq[tail++] = static_cast<int>(y);
                    }
                    long x = y - hw;
                    if (x < 0) continue;
                    while (dq[head] < x - hw) ++head;
                    out[x] = line[dq[head]];
                }
                for (int j = 0; j < n1; ++j) {
                    double& m = M[sh.at(0, i, j)];
                    m = std::max(m, out[j]);
                }
            }
        }
        if (saturated(M, wv, fmax)) break;
    }
    return M;
}

// d = 2, L1: in coordinates u = i + j, v = i - j the discrete diamond is a square.
inline std::vector<double> run_rotated(const Problem& pb, const Shape& sh, const std::vector<long>& ps, int stride,
                                       bool centered, double fmax) {
    const int n0 = sh.n[1], n1 = sh.n[2];
    const int U = n0 + n1 - 1;
    std::vector<double> f(static_cast<std::size_t>(U) * U, 0.0), w(f.size(), 0.0);
    std::vector<std::uint8_t> ok(f.size(), 0);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            std::size_t src = sh.at(0, i, j);
            std::size_t dst = static_cast<std::size_t>(i + j) * U + (i - j + n1 - 1);
            f[dst] = pb.f[src];
            w[dst] = pb.w[src];
            ok[dst] = is_center(pb, sh, stride, 0, i, j) ? 1 : 0;
        }
    Problem rp{{U, U}, f.data(), w.data(), ok.data()};
    Shape rs(rp.dims);
    auto Mr = run_separable(rp, rs, ps, 1, centered, fmax);
    std::vector<double> M(sh.N, 0.0);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) M[sh.at(0, i, j)] = Mr[static_cast<std::size_t>(i + j) * U + (i - j + n1 - 1)];
    return M;
}

}  // namespace detail

/// Discrete maximal function of f with respect to the weights w: at each cell, the largest
/// w-average of f over candidate balls containing it (or centered at it). Cells in no candidate get 0.
inline std::vector<double> maximal_values(const Problem& pb, NormKind kind, double spacing, const CandidatePolicy& pol,
                                          const Options& opt = {}) {
    pol.validate(spacing);
    detail::Shape sh(pb.dims);
    auto ps = detail::params_for(kind, pol, spacing);
    const double fmax = detail::finite_max(pb, sh.N);
    Engine e = opt.engine;
    if (sh.d == 1 && kind != NormKind::Linf) {
        // in one dimension all three norms give the same intervals
        for (auto& p : ps) p = extent(kind, p);
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
        kind = NormKind::Linf;
    }
    if (e == Engine::Auto) {
        if (kind == NormKind::Linf) e = Engine::Separable;
        else if (sh.d == 2 && kind == NormKind::L1) e = Engine::Rotated;
        else if (sh.d == 2) e = Engine::Rows;
        else e = Engine::Brute;
    }
    switch (e) {
        case Engine::Separable:
            if (kind != NormKind::Linf) throw CapabilityError("separable engine handles cubes only");
            return detail::run_separable(pb, sh, ps, pol.stride, opt.centered, fmax);
        case Engine::Rotated:
            if (kind != NormKind::L1 || sh.d != 2) throw CapabilityError("rotated engine handles planar diamonds only");
            return detail::run_rotated(pb, sh, ps, pol.stride, opt.centered, fmax);
        case Engine::Rows:
            if (sh.d != 2) throw CapabilityError("row engine handles d = 2 only");
            return detail::run_rows(pb, sh, kind, ps, pol.stride, opt.centered, fmax, opt.row_lo, opt.row_hi);
        case Engine::Brute:
        case Engine::Auto:
            return detail::run_brute(pb, sh, kind, ps, pol.stride, opt.centered, fmax);
    }
    return {};
}

inline GridFunction run_on_grid(const GridFunction& f, NormKind kind, const CandidatePolicy& pol, Engine engine,
                                bool centered) {
    f.validate();
    auto w = f.mu_weights();
    Problem pb{f.dims, f.values.data(), w.data(), nullptr};
    Options opt;
    opt.engine = engine;
    opt.centered = centered;
    GridFunction out = f;
    out.values = maximal_values(pb, kind, f.spacing, pol, opt);
    return out;
}

/// Non-centered maximal function of f under the exponential measure.
inline GridFunction max_op_grid(const GridFunction& f, NormKind kind, const CandidatePolicy& pol,
                                Engine engine = Engine::Auto) {
    return run_on_grid(f, kind, pol, engine, false);
}

/// Centered variant: only balls centered at the point itself.
inline GridFunction centered_max_op_grid(const GridFunction& f, NormKind kind, const CandidatePolicy& pol,
                                         Engine engine = Engine::Auto) {
    return run_on_grid(f, kind, pol, engine, true);
}

/// mu-average of f over the cells whose centers lie in the ball; empty when no cell does.
inline std::optional<double> average_over_ball(const GridFunction& f, const Ball& ball) {
    f.validate();
    if (ball.dim() != f.dim()) throw std::invalid_argument("dimension mismatch");
    const double cv = f.cell_volume();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        Vec x = f.center(k);
        if (!ball_contains(ball, x)) continue;
        double w = cv * std::exp(-x.lpNorm<1>());
        num += f.values[k] * w;
        den += w;
    }
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
}

// ---------------------------------------------------------------------------
// Strong maximal function (Lebesgue measure, axis-parallel rectangles).

namespace detail {

// Exact 1D non-centered maximal function over all index intervals, O(n^2).
inline std::vector<double> hl_1d(const std::vector<double>& a) {
    const int n = static_cast<int>(a.size());
    std::vector<double> pre(n + 1, 0.0), M(n, 0.0);
    for (int i = 0; i < n; ++i) pre[i + 1] = pre[i] + a[i];
    // best[x] over intervals [l, r] with l <= x <= r
    for (int l = 0; l < n; ++l) {
        // running max over r >= x of mean(l..r), computed from the right
        double run = -1.0;
        std::vector<double> tail(n - l);
        for (int r = n - 1; r >= l; --r) {
            run = std::max(run, (pre[r + 1] - pre[l]) / (r - l + 1));
            tail[r - l] = run;
        }
        for (int x = l; x < n; ++x) M[x] = std::max(M[x], tail[x - l]);
    }
    return M;
}

}  // namespace detail

struct StrongResult {
    GridFunction values;
    bool exact = false;  // false: upper bound by composing one-dimensional operators
};

/// Strong maximal function on the grid. Exact rectangle enumeration when d == 1, or d == 2 with
/// at most `exact_limit` cells per side; otherwise the composition of axis-wise 1D maximal functions,
/// which dominates it.
inline StrongResult strong_max_grid(const GridFunction& f, int exact_limit = 128) {
    f.validate();
    StrongResult res{f, false};
    const int d = f.dim();
    if (d == 1) {
        res.values.values = detail::hl_1d(f.values);
        res.exact = true;
        return res;
    }
    if (d == 2 && f.dims[0] <= exact_limit && f.dims[1] <= exact_limit) {
        const int n0 = f.dims[0], n1 = f.dims[1];
        std::vector<double> prof(n1), M(f.size(), 0.0);
        for (int a = 0; a < n0; ++a) {
            std::fill(prof.begin(), prof.end(), 0.0);
            for (int b = a; b < n0; ++b) {
                for (int j = 0; j < n1; ++j)
                    prof[j] = (prof[j] * (b - a) + f.values[static_cast<std::size_t>(b) * n1 + j]) / (b - a + 1);
                auto m1 = detail::hl_1d(prof);
                for (int i = a; i <= b; ++i)
                    for (int j = 0; j < n1; ++j) {
                        double& m = M[static_cast<std::size_t>(i) * n1 + j];
                        m = std::max(m, m1[j]);
                    }
            }
        }
        res.values.values = M;
        res.exact = true;
        return res;
    }
    // composition of 1D operators along each axis
    std::vector<double> v = f.values;
    std::vector<int> dims = f.dims;
    std::size_t N = f.size();
    for (int axis = 0; axis < d; ++axis) {
        std::size_t stride = 1;
        for (int a = axis + 1; a < d; ++a) stride *= dims[a];
        const int n = dims[axis];
        std::vector<double> line(n);
        for (std::size_t base = 0; base < N; ++base) {
            if ((base / stride) % n != 0) continue;
            for (int t = 0; t < n; ++t) line[t] = v[base + t * stride];
            auto m = detail::hl_1d(line);
            for (int t = 0; t < n; ++t) v[base + t * stride] = m[t];
        }
    }
    res.values.values = v;
    return res;
}

// ---------------------------------------------------------------------------
// Norms and weak-type functional.

struct WeakTypeReport {
    std::vector<double> lambdas;
    std::vector<double> level_log_measures;  // log mu{Mf > lambda}
    double f_l1_log = numeric::neg_inf;
    double functional = numeric::neg_inf;  // log sup lambda mu{Mf > lambda} / |f|_1
    double argmax_lambda = 0.0;
};

struct NormsReport {
    double lp_ratio = 0.0;  // |Mf|_p / |f|_p
    double log_lp_ratio = 0.0;
    WeakTypeReport weak;
};

/// L^p ratio and weak-type functional under the given cell weights. With an empty lambda list the
/// supremum is exact: it is taken over lambda approaching each attained value of Mf from below.
inline NormsReport norms_and_weak(const std::vector<double>& f, const std::vector<double>& Mf,
                                  const std::vector<double>& w, double p, std::vector<double> lambdas = {}) {
    if (!(p >= 1.0)) throw std::domain_error("p must be >= 1");
    if (f.size() != Mf.size() || f.size() != w.size()) throw std::invalid_argument("size mismatch");
    numeric::LogAccumulator fp, mp, f1;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (w[k] <= 0.0) continue;
        double lw = std::log(w[k]);
        if (f[k] > 0.0) {
            fp.add(p * std::log(f[k]) + lw);
            f1.add(std::log(f[k]) + lw);
        }
        if (Mf[k] > 0.0) mp.add(p * std::log(Mf[k]) + lw);
    }
    if (f1.value() == numeric::neg_inf) throw std::domain_error("f vanishes identically");
    NormsReport rep;
    rep.log_lp_ratio = (mp.value() - fp.value()) / p;
    rep.lp_ratio = std::exp(rep.log_lp_ratio);
    auto& wk = rep.weak;
    wk.f_l1_log = f1.value();
    // cells sorted by Mf descending; level measures from a running log-sum
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (w[k] > 0.0 && Mf[k] > 0.0) order.push_back(k);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return Mf[a] > Mf[b]; });
    const bool exact = lambdas.empty();
    if (exact) {
        // mu{Mf >= v} for each distinct value v, i.e. mu{Mf > lambda} as lambda -> v from below
        numeric::LogAccumulator acc;
        for (std::size_t q = 0; q < order.size(); ++q) {
            acc.add(std::log(w[order[q]]));
            bool last_of_value = q + 1 == order.size() || Mf[order[q + 1]] < Mf[order[q]];
            if (!last_of_value) continue;
            wk.lambdas.push_back(Mf[order[q]]);
            wk.level_log_measures.push_back(acc.value());
        }
        std::reverse(wk.lambdas.begin(), wk.lambdas.end());
        std::reverse(wk.level_log_measures.begin(), wk.level_log_measures.end());
    } else {
        std::sort(lambdas.begin(), lambdas.end());
        for (double lam : lambdas) {
            numeric::LogAccumulator acc;
            for (std::size_t k : order)
                if (Mf[k] > lam) acc.add(std::log(w[k]));
            wk.lambdas.push_back(lam);
            wk.level_log_measures.push_back(acc.value());
        }
    }
    for (std::size_t i = 0; i < wk.lambdas.size(); ++i) {
        if (!(wk.lambdas[i] > 0.0) || wk.level_log_measures[i] == numeric::neg_inf) continue;
        double v = std::log(wk.lambdas[i]) + wk.level_log_measures[i] - wk.f_l1_log;
        if (v > wk.functional) {
            wk.functional = v;
            wk.argmax_lambda = wk.lambdas[i];
        }
    }
    return rep;
}

inline NormsReport norms_and_weak(const GridFunction& f, const GridFunction& Mf, double p,
                                  std::vector<double> lambdas = {}) {
    return norms_and_weak(f.values, Mf.values, f.mu_weights(), p, std::move(lambdas));
}

/// Even reflection across every coordinate hyperplane; needs the grid to start at the origin.
inline GridFunction even_extension(const GridFunction& f) {
    f.validate();
    for (double o : f.origin)
        if (o != 0.0) throw std::domain_error("even extension needs the grid origin at 0");
    const int d = f.dim();
    std::vector<double> origin(d);
    std::vector<int> dims(d);
    for (int a = 0; a < d; ++a) {
        origin[a] = -f.dims[a] * f.spacing;
        dims[a] = 2 * f.dims[a];
    }
    GridFunction g(origin, f.spacing, dims);
    std::vector<int> src(d);
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto idx = g.unflatten(k);
        for (int a = 0; a < d; ++a) {
            int n = f.dims[a];
            src[a] = idx[a] < n ? n - 1 - idx[a] : idx[a] - n;
        }
        g.values[k] = f.values[f.flatten(src)];
    }
    return g;
}

}  // namespace mxlab::maximal

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace mxlab {

/// Raised when a method cannot handle the requested kind/dimension.
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace numeric {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = neg_inf;
    for (double x : xs) m = std::max(m, x);
    if (m == neg_inf || !std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/// log(1 - exp(-x)) for x > 0.
inline double log1mexp(double x) {
    if (x <= 0.0) return neg_inf;
    return x < 0.693147180559945 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_diff_exp(double a, double b) {
    if (b == neg_inf) return a;
    if (b >= a) return neg_inf;
    return a + log1mexp(a - b);
}

/// Streaming log-sum-exp accumulator.
class LogAccumulator {
public:
    void add(double x) {
        if (x == neg_inf) return;
        if (x <= m_) {
            s_ += std::exp(x - m_);
        } else {
            s_ = s_ * std::exp(m_ - x) + 1.0;
            m_ = x;
        }
    }
    double value() const { return m_ == neg_inf ? neg_inf : m_ + std::log(s_); }

private:
    double m_ = neg_inf;
    double s_ = 0.0;
};

// Adaptive Simpson with Richardson extrapolation of each accepted panel.
namespace detail {
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole, double eps,
                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}
}  // namespace detail

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_floor = 0.0;
    int initial_panels = 16;
    int max_depth = 40;
};

/// Integral of f over [a, b] to relative tolerance, judged against a coarse estimate of the total.
template <class F>
double adaptive_simpson(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (!(b > a)) return 0.0;
    const int n = std::max(1, opt.initial_panels);
    const double w = (b - a) / n;
    std::vector<double> x(2 * n + 1), fx(2 * n + 1);
    for (int i = 0; i <= 2 * n; ++i) {
        x[i] = (i == 2 * n) ? b : a + 0.5 * w * i;
        fx[i] = f(x[i]);
    }
    double coarse = 0.0;
    std::vector<double> whole(n);
    for (int i = 0; i < n; ++i) {
        whole[i] = (x[2 * i + 2] - x[2 * i]) / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
        coarse += std::abs(whole[i]);
    }
    const double eps = std::max(opt.rel_tol * coarse, opt.abs_floor) / n;
    if (eps == 0.0) return 0.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += detail::simpson_rec(f, x[2 * i], x[2 * i + 2], fx[2 * i], fx[2 * i + 1], fx[2 * i + 2], whole[i],
                                     eps, opt.max_depth);
    return total;
}

/// Piecewise adaptive Simpson over sorted breakpoints (kinks of the integrand).
template <class F>
double adaptive_simpson_pieces(const F& f, std::vector<double> breaks, const QuadratureOptions& opt = {}) {
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] - breaks[i] <= 1e-14 * std::max(1.0, std::abs(breaks[i]))) continue;
        total += adaptive_simpson(f, breaks[i], breaks[i + 1], opt);
    }
    return total;
}

// ---- random numbers ----

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed of sub-stream k of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (k + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// mt19937_64 with a portable double conversion, so streams match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    /// Uniform in (0, 1).
    double uniform_open() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    /// Exp(1) truncated to (a, b); b may be +inf.
    double trunc_exp(double a, double b) {
        double u = uniform_open();
        if (!std::isfinite(b)) return a - std::log1p(-u);
        return a - std::log1p(u * std::expm1(-(b - a)));
    }
    double normal() {
        double u1 = uniform_open(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

/// FNV-1a, used for policy hashes in artifacts.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xF];
    return out;
}

/// Bisection root of a sign-changing function on [a, b].
template <class F>
double bisect(const F& f, double a, double b, int iters = 200) {
    double fa = f(a);
    for (int i = 0; i < iters; ++i) {
        double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        double fm = f(m);
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Least-squares slope and intercept of y against x.
inline std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; each index is handled exactly once,
/// so results written by index do not depend on the worker count.
template <class F>
void parallel_for(std::size_t n, int threads, const F& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += w) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace numeric
}  // namespace mxlab

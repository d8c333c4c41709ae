#include <gtest/gtest.h>

#include <cmath>

#include "mxlab/counterexamples.hpp"

using namespace mxlab;
using namespace mxlab::counterexamples;

namespace {

// mu of the union in d = 2 by a midpoint rule over its bounding box.
double union_midpoint_d2(const CubeBallFamily& F, int n) {
    const double lo = 0.25 * F.s, hi = 1.75 * F.s, h = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = lo + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) {
            double y = lo + (j + 0.5) * h;
            if (F.contains(vec({x, y}))) sum += std::exp(-(x + y));
        }
    }
    return sum * h * h;
}

// Level-set measure integrated in the other order: over sigma = sum of the first d-1 coordinates,
// then over s >= max(sigma, s*(sigma)) with s* the inverse of sigma_max.
double transposed_functional(const DiamondWitness& w, double c) {
    const double L = std::log(c) + w.log_lambda();
    const int d = w.d;
    auto inner = [&](double sigma) {
        double a = std::max(sigma, L + (d - 1) * std::log1p(sigma));
        a = std::max(a, 0.0);
        if (a >= w.N) return 0.0;
        double dens = std::pow(sigma, d - 2) / std::tgamma(d - 1.0);
        return dens * (std::exp(w.N - a) - 1.0);
    };
    // sigma ranges up to the point where the lower limit reaches N
    double top = numeric::bisect([&](double sg) { return std::max(sg, L + (d - 1) * std::log1p(sg)) - w.N; }, 0.0,
                                 w.N);
    numeric::QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    opt.initial_panels = 256;
    double J = numeric::adaptive_simpson(inner, 0.0, top, opt);
    return w.log_lambda() - w.N + std::log(J);
}

}  // namespace

TEST(CubeFamily, Examples) {
    auto F = build_cube_family(4.0, 2);
    EXPECT_EQ(F.center(), vec({4.0, 4.0}));
    EXPECT_EQ(F.radius(), 2.0);
    auto [a, b] = F.segment_endpoints();
    EXPECT_EQ(a, vec({5.0, 3.0}));
    EXPECT_EQ(b, vec({3.0, 5.0}));
    EXPECT_TRUE(F.contains(vec({5.5, 2.5})));
    EXPECT_TRUE(F.in_segment(vec({4.5, 3.5})));
    EXPECT_LT((vec({5.5, 2.5}) - vec({4.5, 3.5})).lpNorm<Eigen::Infinity>(), 2.0);
    EXPECT_NEAR(log_base_measure(F), std::log(std::pow(std::exp(-2.0) - std::exp(-6.0), 2)), 1e-13);
    EXPECT_FALSE(F.contains(vec({7.1, 4.0})));
    EXPECT_THROW(build_cube_family(1.5, 2), std::invalid_argument);
    EXPECT_THROW(build_cube_family(4.0, 4), std::invalid_argument);
}

TEST(BallFamily, Examples) {
    auto F = build_ball_family(4.0, 2);
    EXPECT_EQ(F.center(), vec({4.0, 4.0}));
    EXPECT_EQ(F.radius(), 2.0);
    EXPECT_TRUE(F.contains(F.center()));
    auto [a, b] = F.segment_endpoints();
    // line x + y = 8 against the disc of radius 1 about (4, 4): half chord 1
    EXPECT_NEAR((a - b).norm(), 2.0, 1e-14);
    EXPECT_NEAR(a.sum(), 8.0, 1e-14);
    EXPECT_NEAR((a - F.center()).norm(), 1.0, 1e-14);
}

TEST(Families, BaseInsideUnionAndPrismInsideUnion) {
    numeric::Rng rng(3);
    for (int d : {2, 3})
        for (double s : {4.0, 16.0})
            for (auto F : {build_cube_family(s, d), build_ball_family(s, d)}) {
                int base_hits = 0, prism_hits = 0;
                for (int k = 0; k < 20000; ++k) {
                    Vec p(d);
                    for (int i = 0; i < d; ++i) p[i] = rng.uniform(0.0, 2.0 * s);
                    if (F.base_contains(p)) {
                        ++base_hits;
                        EXPECT_TRUE(F.contains(p));
                    }
                    if (F.prism_contains(p)) {
                        ++prism_hits;
                        EXPECT_TRUE(F.contains(p));
                    }
                }
                EXPECT_GT(base_hits, 100);
                EXPECT_GT(prism_hits, 100);
            }
}

TEST(CubeFamily, PolytopeMatchesMembership) {
    numeric::Rng rng(4);
    for (int d : {2, 3}) {
        auto F = build_cube_family(8.0, d);
        auto P = F.union_polytope();
        for (int k = 0; k < 50000; ++k) {
            Vec p(d);
            for (int i = 0; i < d; ++i) p[i] = rng.uniform(0.0, 16.0);
            EXPECT_EQ(P.contains_strict(p), F.contains(p)) << p.transpose();
        }
    }
}

TEST(Measures, BaseBallMatchesMeasureModule) {
    for (int d : {2, 3})
        for (double s : {4.0, 10.0}) {
            auto F = build_ball_family(s, d);
            EXPECT_NEAR(log_base_measure(F), measure::mu_quadrature(F.base_ball(), 1e-11).log_value, 1e-8);
        }
}

TEST(Measures, UnionAgainstMidpointGrid) {
    for (auto F : {build_cube_family(4.0, 2), build_ball_family(4.0, 2)}) {
        double ref = union_midpoint_d2(F, 3000);
        EXPECT_NEAR(log_union_measure(F), std::log(ref), 2e-3);
    }
}

TEST(Measures, UnionAgainstMonteCarlo) {
    for (int d : {2, 3})
        for (auto F : {build_cube_family(8.0, d), build_ball_family(8.0, d)}) {
            auto row = counterexample_ratio(F, Method::MonteCarlo, 200000, 17);
            ASSERT_FALSE(row.zero_hits);
            double exact = log_union_measure(F);
            EXPECT_LT(std::abs(std::exp(row.log_union - exact) - 1.0), 4.0 * row.rel_stderr + 1e-12)
                << row.family << " d=" << d;
        }
}

TEST(Measures, PrismAgainstMonteCarlo) {
    for (int d : {2, 3})
        for (auto F : {build_cube_family(6.0, d), build_ball_family(6.0, d)}) {
            auto R = union_slab(F);
            R.member = [F](const Vec& x) { return F.prism_contains(x); };
            auto est = measure::mc_slab(R, LaguerreParams{}, 200000, 5);
            EXPECT_LT(std::abs(std::exp(est.log_value - log_prism_measure(F)) - 1.0), 4.0 * est.rel_stderr);
        }
}

TEST(Ratio, CubeGrowthPerDoubling) {
    double prev = 0.0;
    for (double s : {4.0, 8.0, 16.0, 32.0}) {
        auto row = counterexample_ratio(build_cube_family(s, 2));
        EXPECT_GE(row.log_ratio, 0.0);
        EXPECT_GE(row.log_ratio, row.analytic_prediction_log);
        if (s > 4.0) {
            EXPECT_GE(std::exp(row.log_ratio - prev), 1.4) << s;
        }
        prev = row.log_ratio;
    }
}

TEST(Ratio, BallRatioIncreasing) {
    double prev = 0.0;
    for (double s : {4.0, 8.0, 16.0, 32.0}) {
        auto row = counterexample_ratio(build_ball_family(s, 2));
        EXPECT_GE(row.log_ratio, row.analytic_prediction_log);
        EXPECT_GT(row.log_ratio, prev);
        prev = row.log_ratio;
    }
}

TEST(Ratio, PrismGivesLogSLowerBound) {
    for (double s : {4.0, 8.0, 16.0, 32.0, 64.0}) {
        auto row = counterexample_ratio(build_cube_family(s, 2));
        // prism / base = (s/2)(e^{-s} - e^{-3s}) / (e^{-s/2} - e^{-3s/2})^2 >= s/2
        EXPECT_GE(row.analytic_prediction_log, std::log(s) - std::log(2.0) - 1e-12);
    }
}

TEST(Ratio, FiniteUpToSixtyFour) {
    for (int d : {2, 3})
        for (double s : {2.0, 16.0, 64.0})
            for (auto F : {build_cube_family(s, d), build_ball_family(s, d)}) {
                auto row = counterexample_ratio(F);
                EXPECT_TRUE(std::isfinite(row.log_base));
                EXPECT_TRUE(std::isfinite(row.log_union));
                EXPECT_TRUE(std::isfinite(row.analytic_prediction_log));
            }
}

TEST(Ratio, MonteCarloZeroHitsFlagged) {
    auto F = build_cube_family(4.0, 2);
    auto R = union_slab(F);
    R.member = [](const Vec&) { return false; };
    auto est = measure::mc_slab(R, LaguerreParams{}, 1000, 1);
    EXPECT_TRUE(est.zero_hits);
}

TEST(GridCertificate, CubeUnionLevelSet) {
    for (double s : {4.0, 8.0}) {
        auto c = cube_grid_certificate(s, 8, 2.0);
        EXPECT_GT(c.points, 100u);
        EXPECT_GE(c.min_scaled, 1.0 - 4.0 * c.spacing) << s;
    }
}

TEST(Diamond, WitnessExamples) {
    auto w = diamond_witness(16.0, 2);
    EXPECT_NEAR(w.log_lambda(), 16.0 - std::log(16.0), 1e-14);
    EXPECT_NEAR(w.log_lambda(), 13.2274, 1e-4);
    EXPECT_NEAR(std::exp(w.log_lambda()), 5.5538e5, 1e1);
    double lb = w.log_lower_bound(vec({0.1, 14.9}));
    EXPECT_NEAR(std::exp(lb), std::exp(15.0) / 1.1, 1e-6 * std::exp(lb));
    EXPECT_NEAR(std::exp(lb), 2.971e6, 1e3);
    EXPECT_GE(lb, w.log_lambda());
    // |f|_1 = 1: density times mu of its support
    EXPECT_NEAR(w.log_density() + measure::mu_cube_exact(w.mass_center(), w.eps).log_value, 0.0, 1e-14);
    EXPECT_THROW(diamond_witness(4.0, 2), std::invalid_argument);
    EXPECT_THROW(diamond_witness(16.0, 2, 1.0), std::invalid_argument);
}

TEST(Diamond, FunctionalMatchesTransposedIntegral) {
    for (int d : {2, 3})
        for (double N : {8.0, 16.0, 64.0})
            for (double c : {0.25, 1.0}) {
                auto w = diamond_witness(N, d);
                auto F = diamond_weak_functional(w, c);
                ASSERT_FALSE(F.empty);
                EXPECT_NEAR(F.log_value, transposed_functional(w, c), 1e-8) << d << " " << N << " " << c;
            }
}

TEST(Diamond, MonotoneInLevelConstant) {
    auto w = diamond_witness(32.0, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {0.01, 0.05, 0.25, 0.5, 1.0}) {
        double v = diamond_weak_functional(w, c).log_value;
        EXPECT_LE(v, prev);
        prev = v;
    }
    EXPECT_THROW(diamond_weak_functional(w, 0.0), std::invalid_argument);
}

TEST(Diamond, GrowthPerDoubling) {
    double prev = 0.0;
    for (double N : {8.0, 16.0, 32.0, 64.0}) {
        double v = std::exp(diamond_weak_functional(diamond_witness(N, 2), 0.25).log_value);
        if (N > 8.0) {
            EXPECT_GE(v / prev, 1.1) << N;
        }
        prev = v;
    }
    double f16 = std::exp(diamond_weak_functional(diamond_witness(16.0, 2), 0.25).log_value);
    double f32 = std::exp(diamond_weak_functional(diamond_witness(32.0, 2), 0.25).log_value);
    EXPECT_GE(f32 / f16, 1.1);
}

TEST(Diamond, AdmissibleRegionInsideLevelSet) {
    numeric::Rng rng(9);
    for (int d : {2, 3}) {
        auto w = diamond_witness(32.0, d);
        for (int k = 0; k < 5000; ++k) {
            double s = rng.uniform(w.N - (d - 1) * std::log(w.N), w.N);
            double cap = w.N * std::exp((s - w.N) / (d - 1)) / d;
            Vec xi(d);
            double sigma = 0.0;
            for (int i = 0; i + 1 < d; ++i) {
                xi[i] = rng.uniform(0.0, cap);
                sigma += xi[i];
            }
            xi[d - 1] = s - sigma;
            if (xi[d - 1] <= 0.0 || xi.minCoeff() <= 0.0) continue;
            EXPECT_TRUE(in_level_set(w, 0.25, xi)) << xi.transpose();
        }
    }
}

TEST(Diamond, QuadratureCertificate) {
    for (int d : {2, 3}) {
        auto w = diamond_witness(16.0, d);
        auto cert = diamond_certificate(w, 0.25, 10, 123);
        EXPECT_EQ(cert.points.size(), 10u);
        EXPECT_TRUE(cert.pass()) << cert.containment_failures << " " << cert.bound_failures;
        EXPECT_LE(cert.max_ratio, 1.0 + 1e-8);
    }
}

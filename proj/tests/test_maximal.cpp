#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mxlab/maximal.hpp"
#include "mxlab/measure.hpp"

using namespace mxlab;
using namespace mxlab::maximal;

namespace {

GridFunction random_grid(std::vector<int> dims, double h, std::uint64_t seed, double density = 0.3) {
    std::vector<double> o(dims.size(), 0.0);
    GridFunction f(o, h, dims);
    numeric::Rng rng(seed);
    for (auto& v : f.values) v = rng.uniform() < density ? rng.uniform(0.0, 5.0) : 0.0;
    return f;
}

CandidatePolicy small_policy(const GridFunction& f, NormKind kind) {
    auto p = default_policy(f, kind);
    return p;
}

// Oracle: enumerate every candidate ball with real geometry and take the max of averages.
double oracle_value(const GridFunction& f, NormKind kind, const CandidatePolicy& pol, std::size_t x, bool centered) {
    Vec px = f.center(x);
    double best = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c) {
        if (centered && c != x) continue;
        auto idx = f.unflatten(c);
        bool on = true;
        for (int a : idx)
            if (a % pol.stride) on = false;
        if (!on) continue;
        for (double r : pol.radii()) {
            Ball b(kind, f.center(c), r);
            if (!ball_contains(b, px)) continue;
            auto avg = average_over_ball(f, b);
            if (avg) best = std::max(best, *avg);
        }
    }
    return best;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double rel) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_NEAR(a[k], b[k], rel * std::max(1.0, std::abs(b[k]))) << "index " << k;
}

GridFunction transpose(const GridFunction& f) {
    GridFunction g({f.origin[1], f.origin[0]}, f.spacing, {f.dims[1], f.dims[0]});
    for (int i = 0; i < f.dims[0]; ++i)
        for (int j = 0; j < f.dims[1]; ++j) g.values[j * f.dims[0] + i] = f.values[i * f.dims[1] + j];
    return g;
}

const NormKind kKinds[] = {NormKind::L1, NormKind::L2, NormKind::Linf};

}  // namespace

TEST(Policy, Validation) {
    CandidatePolicy p;
    p.r_min = 0.5;
    p.r_max = 4.0;
    EXPECT_NO_THROW(p.validate(0.5));
    EXPECT_THROW(p.validate(1.0), std::invalid_argument);
    p.set_rho(2.5);
    EXPECT_THROW(p.validate(0.5), std::invalid_argument);
    p.set_rho(1.0);
    EXPECT_THROW(p.validate(0.5), std::invalid_argument);
    p.set_rho(2.0);
    p.r_max = 0.25;
    EXPECT_THROW(p.validate(0.5), std::invalid_argument);
}

TEST(Policy, DenserLadderIsNested) {
    CandidatePolicy p;
    p.r_min = 0.25;
    p.r_max = 10.0;
    auto a = p.radii();
    auto b = p.denser_ladder().radii();
    for (double r : a) EXPECT_NE(std::find(b.begin(), b.end(), r), b.end());
}

TEST(DiscreteBall, StrictInequality) {
    EXPECT_EQ(discrete_param(NormKind::Linf, 1.0, 1.0), 0);
    EXPECT_EQ(discrete_param(NormKind::Linf, 1.5, 1.0), 1);
    EXPECT_EQ(discrete_param(NormKind::L2, 2.0, 1.0), 3);
    EXPECT_EQ(discrete_param(NormKind::L2, 2.5, 1.0), 6);
    EXPECT_EQ(extent(NormKind::L2, 6), 2);
    EXPECT_EQ(half_width(NormKind::L2, 6, 2), 1);
    EXPECT_EQ(half_width(NormKind::L1, 3, 1), 2);
}

TEST(AverageOverBall, Examples) {
    GridFunction one = GridFunction::sample({0, 0}, 0.125, {32, 32}, [](const Vec&) { return 1.0; });
    for (auto k : kKinds) {
        auto v = average_over_ball(one, Ball(k, vec({2.0, 2.0}), 1.3));
        ASSERT_TRUE(v);
        EXPECT_EQ(*v, 1.0);
    }
    GridFunction far = GridFunction::sample({0, 0}, 0.125, {32, 32}, [](const Vec& x) { return x[0] > 3 ? 1.0 : 0.0; });
    EXPECT_EQ(*average_over_ball(far, Ball(NormKind::L2, vec({1.0, 1.0}), 0.9)), 0.0);
    // no cell center inside
    EXPECT_FALSE(average_over_ball(one, Ball(NormKind::Linf, vec({2.0, 2.0}), 0.01)));
}

TEST(AverageOverBall, HalfCubeIndicator) {
    const double mu_half = std::pow(std::exp(-3.0) - std::exp(-5.0), 2);
    const double mu_q = std::pow(std::exp(-2.0) - std::exp(-6.0), 2);
    EXPECT_NEAR(1.0 / mu_q, 56.65, 0.01);
    for (double h : {0.125, 0.0625, 0.03125}) {
        int n = static_cast<int>(std::lround(8.0 / h));
        auto f = GridFunction::sample({0, 0}, h, {n, n}, [&](const Vec& x) {
            return (x[0] > 3 && x[0] < 5 && x[1] > 3 && x[1] < 5) ? 1.0 / mu_half : 0.0;
        });
        double v = *average_over_ball(f, Ball(NormKind::Linf, vec({4.0, 4.0}), 2.0));
        // aligned cells: the midpoint factor cancels between numerator and denominator
        EXPECT_NEAR(v * mu_q, 1.0, 1e-10) << h;
    }
}

TEST(MaxOp, ConstantIsFixed) {
    for (auto k : kKinds)
        for (std::vector<int> dims : {std::vector<int>{40}, {12, 15}, {6, 7, 5}}) {
            std::vector<double> o(dims.size(), 0.0);
            GridFunction f(o, 0.25, dims, 1.0);
            auto pol = small_policy(f, k);
            auto M = max_op_grid(f, k, pol);
            auto C = centered_max_op_grid(f, k, pol);
            for (double v : M.values) EXPECT_EQ(v, 1.0);
            for (double v : C.values) EXPECT_EQ(v, 1.0);
        }
}

TEST(MaxOp, BruteMatchesRealGeometryOracle) {
    for (auto k : kKinds)
        for (bool centered : {false, true}) {
            auto f = random_grid({7, 6}, 0.3, 11 + static_cast<int>(k), 0.25);
            auto pol = small_policy(f, k);
            pol.set_rho(1.5);
            pol.r_min = 1.07 * f.spacing;  // keep radii off lattice distances
            auto M = maximal::run_on_grid(f, k, pol, Engine::Brute, centered);
            for (std::size_t x = 0; x < f.size(); ++x)
                EXPECT_NEAR(M.values[x], oracle_value(f, k, pol, x, centered), 1e-12 * std::max(1.0, M.values[x]));
        }
}

TEST(MaxOp, StrideOracle) {
    auto f = random_grid({9, 8}, 0.25, 5, 0.3);
    auto pol = small_policy(f, NormKind::L2);
    pol.stride = 2;
    pol.r_min = 1.07 * f.spacing;
    auto M = max_op_grid(f, NormKind::L2, pol, Engine::Brute);
    for (std::size_t x = 0; x < f.size(); ++x) EXPECT_NEAR(M.values[x], oracle_value(f, NormKind::L2, pol, x, false), 1e-12 * std::max(1.0, M.values[x]));
}

TEST(MaxOp, EnginesAgree2D) {
    for (auto k : kKinds)
        for (bool centered : {false, true})
            for (int stride : {1, 3}) {
                auto f = random_grid({23, 19}, 0.2, 100 + stride, 0.1);
                auto pol = small_policy(f, k);
                pol.stride = stride;
                auto ref = maximal::run_on_grid(f, k, pol, Engine::Brute, centered);
                auto rows = maximal::run_on_grid(f, k, pol, Engine::Rows, centered);
                expect_close(rows.values, ref.values, 1e-12);
                auto aut = maximal::run_on_grid(f, k, pol, Engine::Auto, centered);
                expect_close(aut.values, ref.values, 1e-12);
            }
}

TEST(MaxOp, EnginesAgree1DAnd3D) {
    for (auto k : kKinds) {
        auto f1 = random_grid({70}, 0.1, 3, 0.2);
        auto p1 = small_policy(f1, k);
        expect_close(max_op_grid(f1, k, p1).values, max_op_grid(f1, k, p1, Engine::Brute).values, 1e-12);
    }
    auto f3 = random_grid({9, 8, 7}, 0.3, 4, 0.1);
    auto p3 = small_policy(f3, NormKind::Linf);
    expect_close(max_op_grid(f3, NormKind::Linf, p3).values, max_op_grid(f3, NormKind::Linf, p3, Engine::Brute).values,
                 1e-12);
    expect_close(centered_max_op_grid(f3, NormKind::Linf, p3).values,
                 centered_max_op_grid(f3, NormKind::Linf, p3, Engine::Brute).values, 1e-12);
}

TEST(MaxOp, FarFromOriginKeepsPrecision) {
    // weights span many orders of magnitude; suffix sums keep the far averages exact for constants
    GridFunction f({0, 0}, 0.5, {64, 64}, 3.0);
    auto pol = default_policy(f, NormKind::Linf);
    for (auto e : {Engine::Separable, Engine::Rows}) {
        auto M = max_op_grid(f, NormKind::Linf, pol, e);
        for (double v : M.values) EXPECT_NEAR(v, 3.0, 1e-12);
    }
}

TEST(MaxOp, WrongEngineIsCapabilityError) {
    auto f = random_grid({5, 5}, 0.5, 1);
    auto pol = small_policy(f, NormKind::L2);
    EXPECT_THROW(max_op_grid(f, NormKind::L2, pol, Engine::Separable), CapabilityError);
    EXPECT_THROW(max_op_grid(f, NormKind::L2, pol, Engine::Rotated), CapabilityError);
    auto g = random_grid({4, 4, 4}, 0.5, 1);
    EXPECT_THROW(max_op_grid(g, NormKind::L2, small_policy(g, NormKind::L2), Engine::Rows), CapabilityError);
}

TEST(MaxOpProperties, Monotone) {
    for (auto k : kKinds) {
        auto f = random_grid({20, 20}, 0.25, 7, 0.3);
        auto g = f;
        numeric::Rng rng(8);
        for (auto& v : g.values) v += rng.uniform() < 0.2 ? rng.uniform() : 0.0;
        auto pol = small_policy(f, k);
        auto Mf = max_op_grid(f, k, pol), Mg = max_op_grid(g, k, pol);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(Mf.values[i], Mg.values[i] * (1 + 1e-14));
    }
}

TEST(MaxOpProperties, HomogeneousAndBoundedBySup) {
    for (auto k : kKinds) {
        auto f = random_grid({18, 21}, 0.25, 9, 0.3);
        auto g = f;
        for (auto& v : g.values) v *= 4.0;
        auto pol = small_policy(f, k);
        auto Mf = max_op_grid(f, k, pol), Mg = max_op_grid(g, k, pol);
        double fmax = *std::max_element(f.values.begin(), f.values.end());
        for (std::size_t i = 0; i < f.size(); ++i) {
            EXPECT_EQ(Mg.values[i], 4.0 * Mf.values[i]);
            EXPECT_LE(Mf.values[i], fmax * (1 + 1e-14));
            EXPECT_GE(Mf.values[i], f.values[i] * (1 - 1e-14));
        }
    }
}

TEST(MaxOpProperties, TransposeEquivariant) {
    for (auto k : kKinds) {
        auto f = random_grid({16, 11}, 0.3, 21, 0.2);
        auto pol = small_policy(f, k);
        auto a = transpose(max_op_grid(f, k, pol));
        auto b = max_op_grid(transpose(f), k, pol);
        expect_close(a.values, b.values, 1e-12);
    }
}

TEST(MaxOpProperties, CenteredBelowNonCentered) {
    for (auto k : kKinds) {
        auto f = random_grid({20, 17}, 0.25, 31, 0.15);
        auto pol = small_policy(f, k);
        auto M = max_op_grid(f, k, pol), C = centered_max_op_grid(f, k, pol);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(C.values[i], M.values[i] * (1 + 1e-14));
    }
}

TEST(MaxOpProperties, RefinementMonotone) {
    for (auto k : kKinds) {
        auto f = random_grid({24, 24}, 0.25, 41, 0.1);
        auto coarse = small_policy(f, k);
        coarse.stride = 2;
        coarse.set_rho(2.0);
        auto fine_ladder = coarse.denser_ladder();
        auto fine_stride = coarse;
        fine_stride.stride = 1;
        auto a = max_op_grid(f, k, coarse);
        auto b = max_op_grid(f, k, fine_ladder);
        auto c = max_op_grid(f, k, fine_stride);
        for (std::size_t i = 0; i < f.size(); ++i) {
            EXPECT_LE(a.values[i], b.values[i]);
            EXPECT_LE(a.values[i], c.values[i]);
        }
    }
}

TEST(MaxOpProperties, CenteredBumpMatchesLadderEnumeration) {
    GridFunction f({0, 0}, 0.25, {16, 16});
    std::size_t c = f.flatten({5, 9});
    f.values[c] = 1.0 / f.mu_weights()[c];
    for (auto k : kKinds) {
        auto pol = small_policy(f, k);
        auto C = centered_max_op_grid(f, k, pol);
        double best = 0.0;
        for (double r : pol.radii()) best = std::max(best, *average_over_ball(f, Ball(k, f.center(c), r)));
        EXPECT_NEAR(C.values[c], best, 1e-12 * best);
    }
}

TEST(Strong, ConstantAndOneDimensional) {
    GridFunction f({0, 0}, 0.5, {9, 11}, 2.5);
    auto S = strong_max_grid(f);
    EXPECT_TRUE(S.exact);
    for (double v : S.values.values) EXPECT_NEAR(v, 2.5, 1e-14);

    auto g = random_grid({25}, 0.1, 3, 0.4);
    auto s1 = strong_max_grid(g).values.values;
    for (int x = 0; x < 25; ++x) {
        double best = 0.0;
        for (int l = 0; l <= x; ++l)
            for (int r = x; r < 25; ++r) {
                double sum = 0.0;
                for (int t = l; t <= r; ++t) sum += g.values[t];
                best = std::max(best, sum / (r - l + 1));
            }
        EXPECT_NEAR(s1[x], best, 1e-12 * std::max(1.0, best));
    }
}

TEST(Strong, DominatesRectanglesAndComposition) {
    auto f = random_grid({10, 12}, 0.5, 17, 0.3);
    auto S = strong_max_grid(f);
    ASSERT_TRUE(S.exact);
    numeric::Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        int a = static_cast<int>(rng.uniform() * 10), b = static_cast<int>(rng.uniform() * 10);
        int c = static_cast<int>(rng.uniform() * 12), e = static_cast<int>(rng.uniform() * 12);
        if (a > b) std::swap(a, b);
        if (c > e) std::swap(c, e);
        double sum = 0.0;
        for (int i = a; i <= b; ++i)
            for (int j = c; j <= e; ++j) sum += f.values[i * 12 + j];
        double avg = sum / ((b - a + 1) * (e - c + 1));
        for (int i = a; i <= b; ++i)
            for (int j = c; j <= e; ++j) EXPECT_GE(S.values.values[i * 12 + j], avg * (1 - 1e-12));
    }
    auto U = strong_max_grid(f, 4);
    EXPECT_FALSE(U.exact);
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_GE(U.values.values[k], S.values.values[k] * (1 - 1e-12));
}

TEST(Norms, IdentityAndErrors) {
    auto f = random_grid({12, 12}, 0.25, 3, 0.5);
    auto rep = norms_and_weak(f, f, 2.0);
    EXPECT_NEAR(rep.lp_ratio, 1.0, 1e-12);
    GridFunction zero({0, 0}, 0.25, {4, 4});
    EXPECT_THROW(norms_and_weak(zero, zero, 2.0), std::domain_error);
    EXPECT_THROW(norms_and_weak(f, f, 0.5), std::domain_error);
}

TEST(Norms, LevelMeasuresNonIncreasing) {
    auto f = random_grid({20, 20}, 0.25, 5, 0.1);
    auto M = max_op_grid(f, NormKind::L2, small_policy(f, NormKind::L2));
    for (bool exact : {true, false}) {
        std::vector<double> lams;
        if (!exact)
            for (int i = 0; i < 30; ++i) lams.push_back(0.05 * std::pow(1.3, i));
        auto rep = norms_and_weak(f, M, 1.0, lams);
        const auto& w = rep.weak;
        for (std::size_t i = 1; i < w.lambdas.size(); ++i) {
            EXPECT_GE(w.lambdas[i], w.lambdas[i - 1]);
            EXPECT_LE(w.level_log_measures[i], w.level_log_measures[i - 1]);
        }
    }
}

TEST(Norms, ExactSupremumDominatesLambdaGrid) {
    auto f = random_grid({20, 20}, 0.25, 6, 0.1);
    auto M = max_op_grid(f, NormKind::Linf, small_policy(f, NormKind::Linf));
    auto exact = norms_and_weak(f, M, 1.0);
    std::vector<double> lams;
    for (int i = 0; i < 200; ++i) lams.push_back(0.01 * std::pow(1.05, i));
    auto grid = norms_and_weak(f, M, 1.0, lams);
    EXPECT_GE(exact.weak.functional, grid.weak.functional - 1e-12);
    EXPECT_LT(exact.weak.functional - grid.weak.functional, std::log(1.05) + 1e-12);
    // direct evaluation at the attained values
    auto w = f.mu_weights();
    double f1 = 0.0, best = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) f1 += f.values[k] * w[k];
    for (std::size_t k = 0; k < f.size(); ++k) {
        double lev = 0.0;
        for (std::size_t q = 0; q < f.size(); ++q)
            if (M.values[q] >= M.values[k]) lev += w[q];
        best = std::max(best, M.values[k] * lev / f1);
    }
    EXPECT_NEAR(exact.weak.functional, std::log(best), 1e-12);
}

TEST(EvenExtension, NormAndSymmetry) {
    for (std::vector<int> dims : {std::vector<int>{13}, {6, 9}, {4, 5, 3}}) {
        std::vector<double> o(dims.size(), 0.0);
        GridFunction f(o, 0.3, dims);
        numeric::Rng rng(dims.size());
        for (auto& v : f.values) v = rng.uniform();
        auto g = even_extension(f);
        auto wf = f.mu_weights(), wg = g.mu_weights();
        double nf = 0.0, ng = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) nf += f.values[k] * wf[k];
        for (std::size_t k = 0; k < g.size(); ++k) ng += g.values[k] * wg[k];
        EXPECT_NEAR(ng, std::ldexp(nf, static_cast<int>(dims.size())), 1e-12 * ng);
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto idx = g.unflatten(k);
            for (int a = 0; a < g.dim(); ++a) {
                auto flip = idx;
                flip[a] = g.dims[a] - 1 - idx[a];
                EXPECT_EQ(g.values[k], g.values[g.flatten(flip)]);
            }
        }
    }
    GridFunction shifted({0.5}, 0.1, {4});
    EXPECT_THROW(even_extension(shifted), std::domain_error);
}

TEST(EvenExtension, OneDimensionalFamilyInclusion) {
    // Every candidate interval of f that stays off the boundary point 0 is also a candidate for the
    // extension (same center cell, same radius), so the extension's maximal function dominates the
    // supremum over that subfamily.
    auto f = random_grid({30}, 0.2, 12, 0.2);
    auto g = even_extension(f);
    auto polg = default_policy(g, NormKind::L2);
    polg.r_min = 1.07 * f.spacing;
    auto Mg = max_op_grid(g, NormKind::L2, polg);
    for (int i = 0; i < 30; ++i) {
        double best = 0.0;
        for (int c = 0; c < 30; ++c)
            for (double r : polg.radii()) {
                double lo = f.center(c)[0] - r;
                if (lo < 0.0) continue;
                Ball b(NormKind::L2, f.center(c), r);
                if (!ball_contains(b, f.center(i))) continue;
                best = std::max(best, *average_over_ball(f, b));
            }
        EXPECT_GE(Mg.values[30 + i], best * (1 - 1e-12));
    }
}

TEST(Serialization, RoundTrip) {
    auto f = random_grid({5, 7}, 0.125, 77, 0.5);
    f.values[3] = 1.0 / 3.0;
    auto dir = std::filesystem::temp_directory_path() / "mxlab_grid_rt";
    std::filesystem::create_directories(dir);
    save_grid(f, (dir / "f").string());
    auto g = load_grid((dir / "f").string());
    EXPECT_EQ(g.dims, f.dims);
    EXPECT_EQ(g.origin, f.origin);
    EXPECT_EQ(g.spacing, f.spacing);
    EXPECT_EQ(g.values, f.values);
    EXPECT_THROW(grid_from_text(R"({"origin":[0],"spacing":1,"dims":[2]})", "index,value\n0,1\n"), std::invalid_argument);
    EXPECT_THROW(grid_from_text(R"({"origin":[0],"spacing":1,"dims":[2]})", "index,value\n0,1\n1,-2\n"),
                 std::invalid_argument);
}

#include <gtest/gtest.h>

#include <cmath>

#include "mxlab/experiments.hpp"

using namespace mxlab;
using namespace mxlab::experiments;

TEST(SweepSpecTest, Validation) {
    SweepSpec s;
    EXPECT_NO_THROW(s.validate());
    s.ladder = {8, 8};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.ladder = {16, 8};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.ladder = {8, 16};
    s.family = "gaussian";
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(SweepSpecTest, PolicyHashTracksResolution) {
    SweepSpec a, b;
    EXPECT_EQ(a.policy_hash(), b.policy_hash());
    b.spacing = 0.25;
    EXPECT_NE(a.policy_hash(), b.policy_hash());
    b = a;
    b.ladder = {4, 8, 16, 32};
    EXPECT_EQ(a.policy_hash(), b.policy_hash());
}

TEST(Weak11, CubeFamilyGrowth) {
    SweepSpec s;
    s.family = "cube";
    s.ladder = {4, 8, 16, 32};
    auto t = weak11_scan(s);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_TRUE(std::isnan(t.rows[0].growth));
    EXPECT_GE(t.min_growth(), 1.4);
    for (const auto& r : t.rows) EXPECT_EQ(r.policy_hash, s.policy_hash());
}

TEST(Weak11, DiamondWitnessGrowth) {
    SweepSpec s;
    s.family = "diamond";
    s.ladder = {8, 16, 32, 64};
    auto t = weak11_scan(s);
    EXPECT_GE(t.min_growth(), 1.1);
}

TEST(Weak11, GridFamilyGrowsAndIsDeterministic) {
    SweepSpec s;
    s.spacing = 0.25;
    s.ladder = {8, 16, 32};
    auto t = weak11_scan(s);
    EXPECT_GE(t.min_growth(), 1.3);
    s.threads = 3;
    auto u = weak11_scan(s);
    EXPECT_EQ(t.to_csv(), u.to_csv());
}

TEST(Weak11, ConstantFunctionFunctionalIsOne) {
    // M1 = 1, so lambda mu{M1 > lambda} / |1|_1 <= 1 at every size
    for (double L : {4.0, 8.0}) {
        GridFunction f({0.0, 0.0}, 0.25, {static_cast<int>(L / 0.25), static_cast<int>(L / 0.25)}, 1.0);
        auto M = maximal::max_op_grid(f, NormKind::Linf, maximal::default_policy(f, NormKind::Linf));
        EXPECT_LE(maximal::norms_and_weak(f, M, 1.0).weak.functional, 1e-12);
    }
}

TEST(Lp, RefusesPOne) {
    SweepSpec s;
    s.p = 1.0;
    EXPECT_THROW(lp_scan(s), std::domain_error);
}

TEST(Lp, BoundedGrowthForCubesAndDiamonds) {
    for (auto k : {NormKind::Linf, NormKind::L1}) {
        SweepSpec s;
        s.kind = k;
        s.p = 2.0;
        s.spacing = 0.25;
        s.ladder = {8, 16, 32};
        s.family = "grid+bumps";
        auto t = lp_scan(s);
        EXPECT_LT(t.max_growth(), 1.10) << to_string(k);
        for (const auto& r : t.rows) EXPECT_GE(r.log_value, 0.0);
    }
}

TEST(Contrast, CenteredStaysBoundedInTwoDimensions) {
    SweepSpec s;
    s.spacing = 0.25;
    s.ladder = {8, 16, 32};
    auto c = centered_contrast(s);
    EXPECT_EQ(c.pointwise_failures, 0u);
    EXPECT_LT(c.centered.max_growth(), 1.2);
    EXPECT_GE(c.noncentered.min_growth(), 1.4);
}

TEST(Contrast, OneDimensionBothBounded) {
    SweepSpec s;
    s.dim = 1;
    s.ladder = {8, 16, 32, 64};
    auto c = centered_contrast(s);
    EXPECT_EQ(c.pointwise_failures, 0u);
    for (const auto& r : c.centered.rows) EXPECT_LT(r.log_value, std::log(2.0));
    for (const auto& r : c.noncentered.rows) EXPECT_LT(r.log_value, std::log(2.0));
}

TEST(Tables, CsvShape) {
    SweepSpec s;
    s.family = "cube";
    s.ladder = {4, 8};
    auto csv = weak11_scan(s).to_csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.rfind("table,size,log_value,value,growth,seed,policy_hash", 0), 0u);
}

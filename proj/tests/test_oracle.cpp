#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mxlab/cover.hpp"
#include "mxlab/oracle.hpp"
#include "mxlab/slicing.hpp"
#include "mxlab/sweeps.hpp"

using namespace mxlab;

// ---- roots ----

TEST(Xi, Examples) {
    auto v = xi_of_h(3.0, vec({7.0, 6.0}), 5.0, 1.0);
    EXPECT_NEAR(v.exact, 1.0, 1e-14);
    EXPECT_NEAR(v.direct, 1.0, 1e-14);
    EXPECT_LT(v.residual, 1e-14);
    auto tiny = xi_of_h(3.0, vec({7.0, 6.0}), 5.0, 1e-9);
    EXPECT_LT(tiny.exact, 1e-8);
    EXPECT_GT(tiny.exact, 0.0);
}

TEST(Xi, RangeErrors) {
    EXPECT_THROW(xi_of_h(3.0, vec({7.0, 6.0}), 5.0, 0.0), std::domain_error);
    EXPECT_THROW(xi_of_h(3.0, vec({7.0, 6.0}), 5.0, 5.0 / std::sqrt(2.0) + 1e-9), std::domain_error);
    EXPECT_NO_THROW(xi_of_h(3.0, vec({7.0, 6.0}), 5.0, 5.0 / std::sqrt(2.0)));
}

TEST(ExitRoot, ClosedFormExample) {
    // p^2 + 6p - 7 = 0
    EXPECT_NEAR(closed_form_exit(3.0, 1.0, 4.0, 1.0), 1.0, 1e-14);
    // the same root from the slice circle: center at distance 3 below a' along the normal, radius R_1 = 4
    EXPECT_NEAR(exit_length(vec({0.0, -3.0}), 4.0, vec({0.0, 0.0}), vec({0.0, 1.0})), 1.0, 1e-14);
}

TEST(ExitRoot, ChordIdentity) {
    numeric::Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        Vec c = vec({rng.normal(), rng.normal(), rng.normal()});
        const double r = rng.uniform(0.5, 3.0);
        Vec o = c + 0.9 * r * vec({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
        Vec u = vec({rng.normal(), rng.normal(), rng.normal()}).normalized();
        auto t = ray_sphere(c, r, o, u);
        ASSERT_TRUE(t);
        EXPECT_NEAR(exit_length(c, r, o, u) + exit_length(c, r, o, -u), t->second - t->first, 1e-12);
    }
}

TEST(RootSweeps, ResidualsAndSpreads) {
    for (auto f : all_root_formulas()) {
        auto s = roots_sweep(f, 1000, 11);
        EXPECT_TRUE(s.pass()) << to_string(f) << " " << s.to_json().dump();
        EXPECT_LT(s.total.residual_max, 1e-10) << to_string(f);
        EXPECT_LE(s.total.spread(), 1e3) << to_string(f);
        EXPECT_EQ(s.total.violations, 0) << to_string(f);
    }
}

TEST(Envelope, VOrderingAndLowerBound) {
    numeric::Rng rng(5);
    int small_branch = 0;
    for (int k = 0; k < 300; ++k) {
        auto c = random_ball_cone(4, BoundaryCase::Vertex, rng);
        const double h = rng.uniform(1e-4, 0.99) * c.R() / 64.0;
        auto rep = envelope_check(EnvelopeKind::V, c, h);
        ASSERT_TRUE(rep.pass()) << rep.to_json().dump();
        for (const auto& b : rep.details["branches"])
            if (b == "B_h") ++small_branch;
    }
    EXPECT_GT(small_branch, 0);
}

TEST(Envelope, Errors) {
    numeric::Rng rng(6);
    auto c3 = random_ball_cone(3, BoundaryCase::Face, rng);
    EXPECT_THROW(envelope_check(EnvelopeKind::P, c3, 0.1), ClassificationError);
    auto v3 = random_ball_cone(3, BoundaryCase::Vertex, rng);
    EXPECT_THROW(envelope_check(EnvelopeKind::P, v3, v3.r), std::domain_error);
    auto v4 = random_ball_cone(4, BoundaryCase::Vertex, rng);
    EXPECT_THROW(envelope_check(EnvelopeKind::V, v4, v4.R()), std::domain_error);
    EXPECT_THROW(envelope_check(EnvelopeKind::PI, v3, 0.1), ClassificationError);
}

// ---- configurations ----

TEST(BallCone, GeneratorInvariants) {
    numeric::Rng rng(8);
    for (int d : {2, 3, 4})
        for (auto bc : {BoundaryCase::Vertex, BoundaryCase::Face, BoundaryCase::Edge}) {
            if ((d == 2 && bc != BoundaryCase::Vertex) || (d == 3 && bc == BoundaryCase::Edge)) {
                EXPECT_THROW(random_ball_cone(d, bc, rng), ClassificationError);
                continue;
            }
            for (int k = 0; k < 50; ++k) {
                auto c = random_ball_cone(d, bc, rng);
                EXPECT_LT(std::abs((c.m - c.a).norm() - c.r), 1e-10);
                EXPECT_GT(c.a[0], 2.0);
                EXPECT_GT(c.r, std::sqrt(static_cast<double>(d)));
                EXPECT_LE(c.delta(), c.r * (1 + 1e-12));
                EXPECT_GE(c.delta(), c.r / std::sqrt(static_cast<double>(d)) * (1 - 1e-12));
                EXPECT_EQ(classify_boundary(c.frame(), c.a), bc);
                EXPECT_TRUE(c.frame().in_cone(c.m));
            }
        }
}

TEST(CrossSection, Sizes) {
    for (double t : {0.5, 2.0, 7.25}) {
        auto V3 = cross_section_vertices(ConeFrame(3), t);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) EXPECT_NEAR((V3[i] - V3[j]).norm(), std::sqrt(6.0) * t, 1e-10);
        auto V4 = cross_section_vertices(ConeFrame(4), t);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) EXPECT_NEAR((V4[i] - V4[j]).norm(), std::sqrt(8.0) * t, 1e-10);
        auto V2 = cross_section_vertices(ConeFrame(2), t);
        EXPECT_NEAR((V2[0] - V2[1]).norm(), 2.0 * t, 1e-12);
    }
}

TEST(CrossSection, PolytopeMatchesVertices) {
    ConeFrame f(4);
    auto P = cross_section_polytope(f, 3.0);
    for (const Vec& v : cross_section_vertices(f, 3.0)) EXPECT_TRUE(P.contains(v, 1e-12));
    Vec c = Vec::Zero(3);
    for (const Vec& v : cross_section_vertices(f, 3.0)) c += v / 4.0;
    EXPECT_TRUE(P.contains_strict(c));
}

TEST(Tetrahedron, AngleIdentities) {
    auto a = tetrahedron_angles(4.0);
    EXPECT_NEAR(a.sin_gamma, 1.0 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(a.sin_kappa, std::sqrt(2.0 / 3.0), 1e-12);
    EXPECT_NEAR(a.face_angle, a.two_gamma, 1e-12);
    EXPECT_NEAR(a.height_over_edge, std::sqrt(2.0 / 3.0), 1e-12);
    EXPECT_NEAR(a.edge, std::sqrt(8.0) * 4.0, 1e-12);
}

// ---- rectangle lemma ----

TEST(RectangleLemma, Examples) {
    auto rep = rectangle_lemma_check({1.0, 1.5}, 1.5, 1);
    EXPECT_TRUE(rep.pass());
    EXPECT_NEAR(rep.details["E"].get<double>(), 1.0, 1e-14);
    EXPECT_NEAR(rep.details["E_tilde"].get<double>(), 1.5, 1e-14);
    EXPECT_NEAR(rep.details["ratio"].get<double>(), 2.0 / 3.0, 1e-14);
    EXPECT_GE(rep.details["ratio"].get<double>(), 0.25);
    auto full = rectangle_lemma_check({1.0, 2.0, 0.5}, 3.5, 2);
    EXPECT_NEAR(full.details["ratio"].get<double>(), 1.0, 1e-12);
}

TEST(RectangleLemma, CornerFormulaAgreesWithInclusionExclusion) {
    numeric::Rng rng(4);
    for (int k = 0; k < 500; ++k) {
        double a1 = rng.uniform(0.1, 4), a2 = rng.uniform(0.1, 4), R = rng.uniform(0.01, 9);
        EXPECT_NEAR(box_simplex_volume({a1, a2}, R), rectangle_area_2d(a1, a2, R), 1e-12);
    }
    EXPECT_NEAR(box_simplex_volume({1.0, 1.0, 1.0}, 3.0), 1.0, 1e-14);
    EXPECT_NEAR(box_simplex_volume({1.0, 1.0, 1.0}, 1.0), 1.0 / 6.0, 1e-14);
}

TEST(RectangleLemma, RandomSweep) {
    auto s = rectangle_sweep(1000, 17);
    EXPECT_TRUE(s.pass());
    int within = 0, m3 = 0;
    for (const auto& r : s.instances) {
        if (r.config["m"] != 3) continue;
        ++m3;
        within += std::abs(r.details["mc_z"].get<double>()) <= 3.0;
    }
    EXPECT_GE(within, 0.95 * m3);
}

// ---- diamond parallelepipeds ----

TEST(Sophi, Example) {
    auto c = make_diamond_config(vec({5.0, 5.0}), 3.0, vec({4.0, 4.0}));
    auto rep = sophi_check(c, 8.0, 1);
    EXPECT_TRUE(rep.pass()) << rep.to_json().dump();
    EXPECT_EQ(rep.violations, 0);
    EXPECT_GE(rep.details["samples_D"].get<long long>(), 100000);
    EXPECT_TRUE(rep.details["edges_in_V"].get<bool>());
    EXPECT_TRUE(rep.details["xi_t_inside"].get<bool>());
}

TEST(Sophi, DegenerateLevelNearBottom) {
    auto c = make_diamond_config(vec({5.0, 5.0}), 3.0, vec({4.0, 4.0}));
    const double t = c.b() + 1e-9;
    auto P = sophi_parallelepiped(c, t);
    EXPECT_TRUE((P.hi.array() > P.lo.array()).all());
    EXPECT_TRUE(P.contains(project_to_level(c.xi, t).head(1)));
    SophiOptions opt;
    opt.samples = 2000;
    EXPECT_TRUE(sophi_check(c, t, 2, opt).pass());
    EXPECT_THROW(sophi_parallelepiped(c, c.b()), std::domain_error);
    EXPECT_THROW(sophi_parallelepiped(c, c.b() + 2 * c.r), std::domain_error);
}

TEST(Sophi, Renumbering) {
    auto c = make_diamond_config(vec({9.0, 4.0, 6.0}), 2.0, vec({8.5, 4.0, 6.0}));
    EXPECT_EQ(c.z[2], 9.0);
    EXPECT_EQ(c.xi[2], 8.5);
}

TEST(Sophi, RandomSweeps) {
    for (int d : {2, 3}) {
        auto s = sophi_sweep(d, 15, 23, 20000);
        EXPECT_TRUE(s.pass()) << s.to_json().dump();
    }
}

// ---- covers ----

TEST(Cover, PlanarVertexCase) {
    numeric::Rng rng(12);
    auto c = random_ball_cone(3, BoundaryCase::Vertex, rng);
    for (double frac : {1e-3, 0.1, 0.3, 0.9}) {
        const double h = frac * (c.r + c.delta());
        CoverOptions opt;
        opt.samples = 20000;
        auto rep = cover_check(c, h, 3, opt);
        EXPECT_TRUE(rep.pass()) << rep.to_json().dump();
        EXPECT_EQ(rep.details["monotone_failures"].get<long long>(), 0);
        EXPECT_EQ(rep.details["monotone_pairs"].get<long long>(), 19);
        EXPECT_GT(rep.ratio_min, 0.1);
        EXPECT_LT(rep.ratio_max, 10.0);
    }
}

TEST(Cover, AllCases) {
    CoverOptions opt;
    opt.samples = 20000;
    for (int d : {3, 4})
        for (auto bc : {BoundaryCase::Vertex, BoundaryCase::Face, BoundaryCase::Edge}) {
            if (d == 3 && bc == BoundaryCase::Edge) continue;
            auto s = cover_sweep(d, bc, 6, 31, opt);
            EXPECT_TRUE(s.pass()) << s.to_json().dump();
            EXPECT_LE(s.total.spread(), 1e3);
        }
}

TEST(Cover, HalfSpaceBranchBoundsTau) {
    numeric::Rng rng(14);
    int checked = 0;
    for (int k = 0; k < 20; ++k) {
        auto c = random_ball_cone(4, BoundaryCase::Vertex, rng);
        CoverOptions opt;
        opt.samples = 5000;
        auto rep = cover_check(c, 0.5 * c.R() / 64.0, k, opt);
        ASSERT_TRUE(rep.pass());
        EXPECT_EQ(rep.details["construction"], "star");
        EXPECT_LE(rep.details["tau_sup_sampled"].get<double>(), rep.details["tau_sup_ball"].get<double>());
        ++checked;
    }
    EXPECT_EQ(checked, 20);
}

TEST(Cover, TetrahedronFamilies) {
    auto st = cover_stats();
    EXPECT_GE(st.face_pieces, 4);
    EXPECT_GE(st.edge_pieces, 2);
    EXPECT_GE(st.face_min_max_elevation, std::numbers::pi / 4 - 1e-12);
    // every piece is a unit-edge cone with the angles of the regular tetrahedron
    for (const auto& c : cover_detail::face_cover().cones)
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) EXPECT_NEAR(c.col(i).dot(c.col(j)), 0.5, 1e-12);
}

TEST(Cover, Errors) {
    numeric::Rng rng(15);
    auto c2 = random_ball_cone(2, BoundaryCase::Vertex, rng);
    EXPECT_THROW(cover_check(c2, 0.1, 1), ClassificationError);
    auto c4 = random_ball_cone(4, BoundaryCase::Face, rng);
    EXPECT_THROW(cover_check(c4, c4.r, 1), std::domain_error);
    auto c3 = random_ball_cone(3, BoundaryCase::Face, rng);
    EXPECT_THROW(cover_check(c3, c3.r + c3.delta(), 1), std::domain_error);
}

TEST(ObliqueBoxTest, ContainmentAndEnclosure) {
    Mat U(2, 2);
    U << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
    ObliqueBox b(vec({0.0, 0.0}), U, vec({2.0, 1.0}));
    EXPECT_TRUE(b.contains(vec({1.0, 0.1})));
    EXPECT_FALSE(b.contains(vec({-0.1, 0.0})));
    EXPECT_NEAR(b.volume(), 2.0 * std::sqrt(3.0) / 2.0, 1e-14);
    auto e = enclose(b, vec({5.0, 0.0}), 1.0);
    EXPECT_TRUE(b.inside(e));
    for (int k = 0; k < 64; ++k) {
        double a = 2 * std::numbers::pi * k / 64;
        EXPECT_TRUE(e.contains(vec({5.0 + std::cos(a), std::sin(a)})));
    }
}

// ---- slicing ----

TEST(Slicing, ZeroFunction) {
    SlicingGrid g(NormKind::L2, 4, {});
    std::vector<double> f(g.grid.size(), 0.0);
    EXPECT_EQ(slicing_decay(2.0, NormKind::L2, 3, 4, f), 0.0);
}

TEST(Slicing, SliceLabels) {
    EXPECT_EQ(slice_index(NormKind::L1, vec({0.5, 0.5})), 0);
    EXPECT_EQ(slice_index(NormKind::L1, vec({1.0, 0.5})), 1);
    EXPECT_EQ(slice_index(NormKind::L2, vec({1.0, 1.0})), 1);
    EXPECT_EQ(slice_index(NormKind::L2, vec({-0.1, 1.0})), -1);
}

TEST(Slicing, DiagonalRatioBounded) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) worst = std::max(worst, slicing_decay(2.0, NormKind::L2, 5, 5, s));
    EXPECT_GT(worst, 0.0);
    EXPECT_LT(worst, 10.0);
}

TEST(Slicing, DecayFit) {
    auto fit = fit_decay(2.0, NormKind::L2, 7, 6, 20, 99);
    EXPECT_GE(fit.delta, 0.2);
    EXPECT_TRUE(fit.decreasing);
    EXPECT_THROW(fit_decay(1.0, NormKind::L2, 7, 6, 2, 1), std::domain_error);
    EXPECT_THROW(slicing_decay(2.0, NormKind::L1, 0, 1, std::uint64_t{1}), std::domain_error);
}

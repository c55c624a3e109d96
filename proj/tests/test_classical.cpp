#include <gtest/gtest.h>

#include <set>

#include <sloppy_baker/classical.hpp>

using namespace sloppy_baker;

namespace {

void expect_point(PhasePoint got, PhasePoint want, double tol = 1e-15) {
    EXPECT_NEAR(got.q, want.q, tol);
    EXPECT_NEAR(got.p, want.p, tol);
}

ClassicalDensity iterate(ClassicalDensity f, const SloppyParams& params, int steps) {
    for (int t = 0; t < steps; ++t) f = frobenius_perron_step(f, params);
    return f;
}

} // namespace

TEST(SloppyMap, HandEvaluatedPoints) {
    for (double delta : {0.0, 0.25, 0.5, 1.0}) {
        expect_point(sloppy_map({0.25, 0.25}, SloppyParams(delta)), {0.5, 0.125});
        expect_point(sloppy_map({0.0, 0.0}, SloppyParams(delta)), {0.0, 0.0});
    }
    expect_point(sloppy_map({0.75, 0.5}, SloppyParams(0.25)), {0.5, 0.625});
}

TEST(SloppyMap, OutputStaysInUnitSquare) {
    const SloppyParams params(0.25);
    PhasePoint x{0.123456, 0.987654};
    for (int t = 0; t < 200; ++t) {
        x = sloppy_map(x, params);
        ASSERT_GE(x.q, 0.0);
        ASSERT_LT(x.q, 1.0);
        ASSERT_GE(x.p, 0.0);
        ASSERT_LT(x.p, 1.0);
    }
}

TEST(SloppyParams, RejectsOutOfRange) {
    EXPECT_THROW(SloppyParams(-0.1), PreconditionError);
    EXPECT_THROW(SloppyParams(1.5), PreconditionError);
    EXPECT_NO_THROW(SloppyParams(1.0));
}

TEST(BakerStep, HandEvaluatedPoints) {
    expect_point(baker_step({0.25, 0.25}), {0.5, 0.125});
    expect_point(baker_step({0.75, 0.5}), {0.5, 0.75});
    expect_point(baker_step({0.5, 0.0}), {0.0, 0.5});
}

TEST(ClassicalDensity, ValidatesInput) {
    EXPECT_THROW(ClassicalDensity(3, std::vector<double>(9, 1.0)), PreconditionError);
    EXPECT_THROW(ClassicalDensity(2, std::vector<double>(3, 1.0)), PreconditionError);
    EXPECT_THROW(ClassicalDensity(2, {2.0, 2.0, 2.0, -2.0}), PreconditionError);
    EXPECT_THROW(ClassicalDensity(2, {1.0, 1.0, 1.0, 2.0}), PreconditionError);
    EXPECT_NO_THROW(ClassicalDensity(2, {1.0, 1.0, 1.0, 1.0}));
}

TEST(FrobeniusPerron, InvariantDensityIsFixed) {
    const SloppyParams params(0.25);
    const ClassicalDensity f = invariant_density(params, 64);
    EXPECT_LE(l1_distance(frobenius_perron_step(f, params), f), 1e-12);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) EXPECT_NEAR(frobenius_perron_step(f, params)(i, j), f(i, j), 1e-12);
}

TEST(FrobeniusPerron, UniformFixedByReversibleMap) {
    const ClassicalDensity u = uniform_density(32);
    EXPECT_LE(l1_distance(frobenius_perron_step(u, SloppyParams(0.0)), u), 1e-15);
}

TEST(FrobeniusPerron, PointMassImage) {
    const SloppyParams params(0.25);
    const ClassicalDensity f = point_mass_density(64, {0.25, 0.25});
    const ClassicalDensity g = frobenius_perron_step(f, params);
    EXPECT_NEAR(g.total_mass(), 1.0, 1e-12);
    // cell (16,16) covers q in [1/4, 1/4 + 1/64), p in [1/4, 1/4 + 1/64); its image
    // is q in [1/2, 1/2 + 1/32), p in [1/8, 1/8 + 1/128): cells 32..33 in q, row 8
    double inside = 0.0;
    for (int i = 32; i <= 33; ++i) inside += g(i, 8);
    EXPECT_NEAR(inside / (64.0 * 64.0), 1.0, 1e-12);
}

TEST(FrobeniusPerron, MassConservationAndSupportContraction) {
    const SloppyParams params(0.25);
    ClassicalDensity f = gaussian_density(64, {0.6, 0.9}, 64);
    f = frobenius_perron_step(f, params);
    EXPECT_NEAR(f.total_mass(), 1.0, 1e-12);
    EXPECT_LE(f.mass_above(1.0 - 0.125), 1e-15);
    f = iterate(f, params, 29);
    EXPECT_NEAR(f.total_mass(), 1.0, 1e-12);
    EXPECT_LE(f.mass_above(0.75), 1e-12);
}

TEST(FrobeniusPerron, OverlapStripHasTwoPreimages) {
    const SloppyParams params(0.25);
    const int m = 16;
    // left row j lands on rows [j/2, j/2 + 1/2), right row j on [j/2 + 6, j/2 + 6.5)
    // with M*delta/2 = 2; rows 14 (left) and 2 (right) share image row 7, inside
    // the overlap strip p in (3/8, 1/2]
    const ClassicalDensity a = point_mass_density(m, {2.5 / m, 14.5 / m});
    const ClassicalDensity b = point_mass_density(m, {10.5 / m, 2.5 / m});
    const ClassicalDensity fa = frobenius_perron_step(a, params);
    const ClassicalDensity fb = frobenius_perron_step(b, params);
    double overlap = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) overlap += std::min(fa(i, j), fb(i, j));
    EXPECT_GT(overlap, 0.0);
}

TEST(FrobeniusPerron, MisalignedGridNamesNearestDelta) {
    const ClassicalDensity f = uniform_density(10);
    try {
        frobenius_perron_step(f, SloppyParams(0.25));
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("nearest aligned delta"), std::string::npos);
    }
    const ClassicalDensity g = frobenius_perron_step(f, SloppyParams(0.25), GridAlignment::area_weighted);
    EXPECT_NEAR(g.total_mass(), 1.0, 1e-12);
}

TEST(FrobeniusPerron, GaussianConvergesToInvariantDensity) {
    const SloppyParams params(0.25);
    const ClassicalDensity f = iterate(gaussian_density(64, {0.25, 0.25}, 64), params, 30);
    EXPECT_LT(l1_distance(f, invariant_density(params, 64)), 1e-6);
}

TEST(InvariantDensity, Examples) {
    const ClassicalDensity u = invariant_density(SloppyParams(0.0), 8);
    for (double v : u.values()) EXPECT_EQ(v, 1.0);
    const ClassicalDensity f = invariant_density(SloppyParams(0.25), 8);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(f(i, j), 4.0 / 3.0, 1e-15);
        for (int j = 6; j < 8; ++j) EXPECT_EQ(f(i, j), 0.0);
    }
    EXPECT_THROW(invariant_density(SloppyParams(0.3), 8), PreconditionError);
    EXPECT_THROW(invariant_density(SloppyParams(1.0), 8), PreconditionError);
}

TEST(InvariantDensity, FixedForEveryAlignedPair) {
    for (int m : {8, 16, 32}) {
        for (int k = 0; k < m / 2; ++k) {
            const SloppyParams params(2.0 * k / m);
            const ClassicalDensity f = invariant_density(params, m);
            EXPECT_LE(l1_distance(frobenius_perron_step(f, params), f), 1e-12) << "M=" << m << " k=" << k;
        }
    }
}

TEST(BitReverse, Examples) {
    EXPECT_EQ(bit_reverse(0, 5), 0u);
    EXPECT_EQ(bit_reverse(3, 3), 6u);
    EXPECT_EQ(bit_reverse(1, 2), 2u);
    EXPECT_THROW(bit_reverse(8, 3), PreconditionError);
}

TEST(PeriodicOrbits, PeriodOneIsTheOrigin) {
    const auto orbits = periodic_orbits(1, SloppyParams(0.25));
    ASSERT_EQ(orbits.size(), 1u);
    EXPECT_EQ(orbits[0].period, 1);
    expect_point(orbits[0].points[0], {0.0, 0.0});
}

TEST(PeriodicOrbits, PeriodTwoReversibleMap) {
    const auto orbits = periodic_orbits(2, SloppyParams(0.0));
    bool found = false;
    for (const auto& o : orbits) {
        if (o.period != 2) continue;
        found = true;
        ASSERT_EQ(o.points.size(), 2u);
        expect_point(o.points[0], {1.0 / 3.0, 2.0 / 3.0}, 1e-15);
        expect_point(o.points[1], {2.0 / 3.0, 1.0 / 3.0}, 1e-15);
    }
    EXPECT_TRUE(found);
}

TEST(PeriodicOrbits, SeedFormula) {
    expect_point(orbit_seed(3, 3, SloppyParams(0.25)), {3.0 / 7.0, 9.0 / 14.0}, 1e-15);
}

TEST(PeriodicOrbits, EveryPointReturns) {
    for (double delta : {0.0, 0.25}) {
        const SloppyParams params(delta);
        for (int t = 1; t <= 8; ++t) {
            std::set<std::uint64_t> labels;
            std::size_t points = 0;
            for (const auto& o : periodic_orbits(t, params)) {
                EXPECT_EQ(t % o.period, 0);
                EXPECT_TRUE(labels.insert(o.label).second);
                points += o.points.size();
                for (const auto& x : o.points) {
                    PhasePoint y = x;
                    for (int k = 0; k < t; ++k) y = sloppy_map(y, params);
                    EXPECT_LE(torus_distance(x, y), 1e-12);
                }
            }
            // every label 0..2^T-2 is a point of exactly one listed cycle
            EXPECT_EQ(points, (std::size_t{1} << t) - 1) << "T=" << t;
        }
    }
}

TEST(PeriodicOrbits, RejectsOutOfRangePeriod) {
    EXPECT_THROW(periodic_orbits(0, SloppyParams(0.25)), PreconditionError);
    EXPECT_THROW(periodic_orbits(21, SloppyParams(0.25)), PreconditionError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/lusin.hpp"

using namespace cocycle_forge;

namespace {

double gap(const Mat2& l, const Mat2& r) { return op_norm(l - r); }

// Grid cocycle from an island, with a few cells rotated by a small angle.
struct Fixture {
    GridCocycle grid;
    PerturbedCocycle tilde;
};

Fixture make_fixture(std::size_t cells, std::uint64_t seed, double theta, std::size_t every) {
    const FiniteBase b = FiniteBase::cyclic(cells);
    Cocycle values = elliptic_island(b, seed, IslandParams{8, 4, 2.0});
    GridCocycle grid(values, 1e-3);
    PerturbedCocycle tilde(values);
    for (std::size_t i = 0; i < cells; i += every) {
        const Mat2 m = rotation(theta) * values(i);
        tilde.set(i, m, lift_sl2(m));
    }
    return {grid, tilde};
}

LusinOptions options(long long n) {
    LusinOptions o;
    o.epsilon = 0.3;
    o.delta = 0.4;
    o.n_horizon = n;
    o.samples = 64;
    o.seed = 3;
    return o;
}

}  // namespace

TEST(PolarInterpolate, EndpointsAndDeterminant) {
    const Mat2 a0 = Mat2::diag(3.0, 1.0 / 3.0) * rotation(0.4);
    const Mat2 a1 = rotation(2.0);
    EXPECT_LT(gap(polar_interpolate(a0, a1, 0.0), a0), 1e-12);
    EXPECT_LT(gap(polar_interpolate(a0, a1, 1.0), a1), 1e-12);
    for (int k = 0; k <= 100; ++k) EXPECT_TRUE(is_sl2(polar_interpolate(a0, a1, k / 100.0), 1e-12));
}

TEST(PolarInterpolate, Continuous) {
    const Mat2 a0 = Mat2{1.0, 2.0, 0.0, 1.0};
    const Mat2 a1 = Mat2::diag(0.25, 4.0) * rotation(-1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k)
        worst = std::max(worst, gap(polar_interpolate(a0, a1, k / 1000.0), polar_interpolate(a0, a1, (k + 1) / 1000.0)));
    EXPECT_LT(worst, 0.05);
}

TEST(GridCocycle, PlateausAndCollars) {
    const Fixture f = make_fixture(64, 1, 0.0, 1000);
    const GridCocycle& g = f.grid;
    for (std::size_t i = 0; i < g.cells(); ++i) {
        EXPECT_EQ(g.at(i, 0.0).a, g.values()(i).a);
        EXPECT_EQ(g.at(i, 0.5).b, g.values()(i).b);
        // the collar ends at the next cell's value
        const Mat2 end = g.at(i, 1.0 - 1e-15);
        EXPECT_LT(gap(end, g.values()((i + 1) % g.cells())), 1e-6);
        EXPECT_TRUE(is_sl2(g.at(i, 1.0 - 0.5 * g.collar()), 1e-12));
    }
    EXPECT_THROW(GridCocycle(g.values(), 0.0), InvalidInput);
    EXPECT_THROW(GridCocycle(g.values(), 0.6), InvalidInput);
}

TEST(LusinBridge, ZeroJLeavesCocycleUnchanged) {
    const Fixture f = make_fixture(64, 2, 0.0, 1000);
    const PerturbedCocycle plain(f.grid.values());
    const LusinResult r = lusin_bridge(f.grid, plain, options(64));
    EXPECT_EQ(r.report.max_j, 0.0);
    EXPECT_EQ(r.report.max_b_minus_a, 0.0);
    for (int k = 0; k < 2000; ++k) {
        const double u = k / 2000.0 + 1.3e-4;
        const Mat2 b = r.b(u), a = f.grid(u);
        EXPECT_EQ(b.a, a.a);
        EXPECT_EQ(b.b, a.b);
        EXPECT_EQ(b.c, a.c);
        EXPECT_EQ(b.d, a.d);
    }
}

TEST(LusinBridge, DeterminantRepairIsExact) {
    const Fixture f = make_fixture(96, 3, 0.01, 7);
    const LusinResult r = lusin_bridge(f.grid, f.tilde, options(96));
    ASSERT_FALSE(r.transcript.empty());
    for (const DetCheck& d : r.transcript) {
        EXPECT_LE(std::abs(d.det_i_plus_j - 1.0), 1e-12);
        EXPECT_LE(std::abs(d.det_b - 1.0), 1e-12);
    }
    EXPECT_LE(r.report.max_det_error, 1e-12);
    EXPECT_LT(r.report.max_j11, 2 * 0.3);
    EXPECT_LT(r.report.collar_measure, r.report.gamma);
    EXPECT_LE(r.report.max_b_minus_a, r.report.b_minus_a_bound);
}

TEST(LusinBridge, J11BoundOnSeededRuns) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const Fixture f = make_fixture(80, seed, 0.015, 3 + seed % 4);
        const LusinResult r = lusin_bridge(f.grid, f.tilde, options(80));
        EXPECT_LT(r.report.max_j11, 0.6) << "seed " << seed;
        // the repaired J'' stays within K eps of zero
        for (std::size_t i = 0; i < 80; ++i)
            for (double s : {0.0, 0.5, 0.9995, 0.99999}) {
                EXPECT_LE(op_norm(r.b.j_second(i, s)), r.report.k_constant * 0.3 * (1 + 1e-12));
            }
    }
}

TEST(LusinBridge, PlateausCarryPerturbedValues) {
    const Fixture f = make_fixture(64, 4, 0.01, 5);
    const LusinResult r = lusin_bridge(f.grid, f.tilde, options(64));
    for (std::size_t i = 0; i < 64; ++i) EXPECT_LT(gap(r.b.at(i, 0.25), f.tilde(i)), 1e-12) << "cell " << i;
    // same integrated exponent as A~ on the plateaus
    const HpExponent hp = integrated_le_hp(f.tilde, f.grid.finite_base(), r.report.bits);
    EXPECT_NEAR(r.report.le_plateau, hp.le, 1e-12);
}

TEST(LusinBridge, Continuous) {
    const Fixture f = make_fixture(64, 5, 0.01, 5);
    const LusinResult r = lusin_bridge(f.grid, f.tilde, options(64));
    // across every cell boundary
    for (std::size_t i = 0; i < 64; ++i) EXPECT_LT(gap(r.b.at(i, 1.0 - 1e-13), r.b.at((i + 1) % 64, 0.0)), 1e-6);
    // a fine scan over a few cells: refining the step 10x shrinks the worst jump ~10x
    auto worst_step = [&](int steps) {
        double worst = 0.0;
        Mat2 prev = r.b(0.0);
        for (int k = 1; k <= steps; ++k) {
            const Mat2 cur = r.b(4.0 / 64.0 * k / steps);
            worst = std::max(worst, gap(cur, prev));
            prev = cur;
        }
        return worst;
    };
    const double coarse = worst_step(40000), fine = worst_step(400000);
    EXPECT_GT(coarse, 0.0);
    EXPECT_LT(fine, 0.2 * coarse);
    EXPECT_LE(r.report.max_node_jump, r.report.lipschitz * r.report.node_spacing * (1 + 1e-9) + 1e-12);
}

TEST(LusinBridge, EpsilonAtOneThirdRejected) {
    const Fixture f = make_fixture(32, 1, 0.0, 1000);
    LusinOptions o = options(32);
    o.epsilon = 1.0 / 3.0;
    EXPECT_THROW(lusin_bridge(f.grid, f.tilde, o), PreconditionError);
    o.epsilon = 0.5;
    EXPECT_THROW(lusin_bridge(f.grid, f.tilde, o), PreconditionError);
}

TEST(LusinBridge, LargeJRejected) {
    const Fixture f = make_fixture(32, 1, 0.6, 4);
    EXPECT_THROW(lusin_bridge(f.grid, f.tilde, options(32)), PreconditionError);
}

TEST(LusinBridge, SampledExponentIsSeeded) {
    const Fixture f = make_fixture(64, 6, 0.01, 5);
    const LusinResult r1 = lusin_bridge(f.grid, f.tilde, options(64));
    const LusinResult r2 = lusin_bridge(f.grid, f.tilde, options(64));
    EXPECT_EQ(r1.report.sampled_le, r2.report.sampled_le);
    EXPECT_EQ(r1.report.seed, 3u);
}

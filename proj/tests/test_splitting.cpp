#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/parallel.hpp"
#include "cocycle_forge/splitting.hpp"

using namespace cocycle_forge;

namespace {

constexpr double kPi = std::numbers::pi;

Mat2 shear(double s) { return {1.0, s, 0.0, 1.0}; }

}  // namespace

TEST(Oseledets, ConstantDiagonalExact) {
    const Cocycle a = constant_cocycle(6, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(6);
    for (std::size_t x = 0; x < 6; ++x) {
        const Splitting s = oseledets(a, b, x);
        EXPECT_EQ(s.eu.angle(), 0.0);
        EXPECT_NEAR(s.es.angle(), kPi / 2, 1e-15);
    }
}

TEST(Oseledets, RotationHasNoSplitting) {
    EXPECT_THROW(oseledets(rotation_cocycle(6, 0.7), FiniteBase::cyclic(6), 0), NoSplitting);
    const CircleCocycle r([](double) { return rotation(0.7); });
    EXPECT_THROW(oseledets(r, CircleBase::golden(), 0.2), NoSplitting);
}

TEST(Oseledets, ConjugatedConstant) {
    const Mat2 m = shear(0.7) * rotation(0.4);
    const Mat2 a_val = m * Mat2::diag(2.0, 0.5) * m.inverse();
    const Dir eu_ref = apply(m, Dir(0.0)), es_ref = apply(m, Dir(kPi / 2));
    const Splitting s = oseledets(constant_cocycle(5, a_val), FiniteBase::cyclic(5), 2);
    EXPECT_LT(angle_between(s.eu, eu_ref), 1e-8);
    EXPECT_LT(angle_between(s.es, es_ref), 1e-8);

    const CircleCocycle c([&](double) { return a_val; });
    const Splitting sc = oseledets(c, CircleBase::golden(), 0.3, 40);
    EXPECT_LT(angle_between(sc.eu, eu_ref), 1e-8);
    EXPECT_LT(angle_between(sc.es, es_ref), 1e-8);
}

TEST(Oseledets, Invariance) {
    const FiniteBase b = FiniteBase::cyclic(64);
    const Cocycle a = elliptic_island(b, 3, IslandParams{8, 4, 3.0});
    const SplittingTable t(a, b);
    std::size_t checked = 0;
    for (std::size_t x = 0; x < 64; ++x) {
        if (!t.has_splitting(x)) continue;
        ++checked;
        const Splitting here = t.splitting(x), there = t.splitting(b.forward(x));
        EXPECT_LT(angle_between(apply(a(x), here.eu), there.eu), 1e-9);
        EXPECT_LT(angle_between(apply(a(x), here.es), there.es), 1e-9);
    }
    EXPECT_GT(checked, 0u);
    EXPECT_LT(t.max_closure_error(), 1e-9);
}

TEST(DeltaRatio, ConstantDiagonal) {
    const Cocycle a = constant_cocycle(6, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(6);
    EXPECT_NEAR(delta_ratio(a, b, 0, 1), 0.25, 1e-15);
    EXPECT_NEAR(delta_ratio(a, b, 0, 3), std::pow(4.0, -3), 1e-15);
}

TEST(DeltaRatio, Multiplicative) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const FiniteBase b = FiniteBase::cyclic(37, 5);
        const Cocycle a = random_cocycle(37, seed, 1.0);
        const SplittingTable t(a, b);
        Rng rng(seed);
        for (int k = 0; k < 100; ++k) {
            const std::size_t x = rng.below(37);
            if (!t.has_splitting(x)) continue;
            const long long i = static_cast<long long>(rng.below(20)), j = static_cast<long long>(rng.below(20));
            const double lhs = t.log_delta(x, i + j);
            const double rhs = t.log_delta(b.iterate(x, i), j) + t.log_delta(x, i);
            EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(DeltaRatio, MatchesDirectVectorGrowth) {
    const FiniteBase b = FiniteBase::cyclic(29);
    const Cocycle a = random_cocycle(29, 4, 0.7);
    const SplittingTable t(a, b);
    for (std::size_t x = 0; x < 29; ++x) {
        if (!t.has_splitting(x)) continue;
        for (long long m : {1LL, 5LL, 12LL}) {
            const Mat2 p = product(a, b, x, m);
            const double direct = norm(p * t.es(x)) / norm(p * t.eu(x));
            EXPECT_NEAR(std::log(t.delta(x, m)), std::log(direct), 1e-8);
        }
    }
}

TEST(GammaM, EmptyCases) {
    const FiniteBase b = FiniteBase::cyclic(10);
    for (long long m : {1LL, 4LL, 12LL}) {
        EXPECT_TRUE(gamma_m(constant_cocycle(10, Mat2::diag(2.0, 0.5)), b, m).empty());
        EXPECT_TRUE(gamma_m(rotation_cocycle(10, 0.7), b, m).empty());
    }
}

TEST(GammaM, IslandMatchesExhaustiveDelta) {
    const FiniteBase b = FiniteBase::cyclic(400);
    const Cocycle a = elliptic_island(b, 7);
    for (long long m : {4LL, 8LL}) {
        const IndicatorSet g = gamma_m(a, b, m);
        EXPECT_FALSE(g.empty()) << "m=" << m;
        for (std::size_t x = 0; x < 400; ++x) {
            const bool member = delta_ratio(a, b, x, m) >= 0.5;
            EXPECT_EQ(g.contains(x), member) << "x=" << x << " m=" << m;
        }
    }
}

TEST(HmDiagnostics, ConstantDiagonal) {
    const Cocycle a = constant_cocycle(10, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(10);
    const SplittingTable t(a, b);
    const HmReport r = h_m_diagnostics(t, 3);
    EXPECT_EQ(r.h_points, 10u);
    EXPECT_NEAR(r.tau1, 0.5, 1e-14);
    EXPECT_NEAR(r.angle_floor, kPi / 2, 1e-14);
    EXPECT_TRUE(r.halving_holds);
    EXPECT_TRUE(r.contraction_holds);
}

TEST(HmDiagnostics, IslandIsProperSubset) {
    const FiniteBase b = FiniteBase::cyclic(400);
    const Cocycle a = elliptic_island(b, 7);
    const SplittingTable t(a, b);
    const HmReport r = h_m_diagnostics(t, 8);
    const IndicatorSet plus = oplus_set(t);
    EXPECT_LT(r.h_points, plus.count());
    // Here the single cycle meets Gamma_m, so its saturation swallows H_m.
    EXPECT_EQ(r.h_points + omega_m(t, 8).count(), plus.count());
}

TEST(HmDiagnostics, RotationEmpty) {
    const Cocycle a = rotation_cocycle(10, 0.7);
    const FiniteBase b = FiniteBase::cyclic(10);
    const SplittingTable t(a, b);
    EXPECT_TRUE(h_m_diagnostics(t, 3).empty);
}

TEST(HmDiagnostics, ContractionOnMixedBase) {
    // Two cycles: one uniformly hyperbolic, one island. H_m is the first cycle.
    std::vector<std::size_t> sigma;
    for (std::size_t i = 0; i < 20; ++i) sigma.push_back((i + 1) % 20);
    for (std::size_t i = 0; i < 400; ++i) sigma.push_back(20 + (i + 1) % 400);
    const FiniteBase b(sigma);
    const Cocycle island = elliptic_island(FiniteBase::cyclic(400), 7);
    std::vector<Mat2> v(20, shear(0.3) * Mat2::diag(2.0, 0.5) * shear(-0.3));
    for (std::size_t i = 0; i < 400; ++i) v.push_back(island(i));
    const SplittingTable t(Cocycle(v), b);
    const HmReport r = h_m_diagnostics(t, 8);
    EXPECT_EQ(r.h_points, 20u);
    EXPECT_TRUE(r.halving_holds);
    EXPECT_TRUE(r.contraction_holds);
}

TEST(GammaSampled, ReproducibleAndConsistent) {
    const CircleCocycle a([](double x) { return Mat2::diag(2.0, 0.5) * rotation(1.2 * std::cos(2 * kPi * x)); });
    const CircleBase b = CircleBase::golden();
    const CircleGammaSample s1 = gamma_m_sampled(a, b, 4, 40, 5);
    const CircleGammaSample s2 = gamma_m_sampled(a, b, 4, 40, 5);
    EXPECT_EQ(s1.points, s2.points);
    EXPECT_EQ(s1.members, s2.members);
    std::size_t members = 0;
    for (double ld : s1.log_delta)
        if (std::isfinite(ld) && ld >= std::log(0.5)) ++members;
    EXPECT_EQ(members, s1.members);
}

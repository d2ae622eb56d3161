#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numeric>

#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/parallel.hpp"

using namespace cocycle_forge;

namespace {

using Big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<256, boost::multiprecision::digit_base_2>>;
using BigMat = BasicMat2<Big>;

double max_entry_gap(const Mat2& l, const Mat2& r) {
    return std::max({std::abs(l.a - r.a), std::abs(l.b - r.b), std::abs(l.c - r.c), std::abs(l.d - r.d)});
}

double max_entry(const Mat2& m) { return std::max({std::abs(m.a), std::abs(m.b), std::abs(m.c), std::abs(m.d)}); }

// Rotation followed by diag(e^10, e^-10): norm e^10 at every point.
Cocycle strong_cocycle(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Mat2> v;
    for (std::size_t i = 0; i < n; ++i)
        v.push_back(Mat2::diag(std::exp(10.0), std::exp(-10.0)) * rotation(rng.uniform(0.0, 3.14)));
    return Cocycle(v, 1e-9);
}

FiniteBase multi_cycle(std::vector<std::size_t> lengths) {
    std::vector<std::size_t> sigma;
    std::size_t off = 0;
    for (std::size_t len : lengths) {
        for (std::size_t i = 0; i < len; ++i) sigma.push_back(off + (i + 1) % len);
        off += len;
    }
    return FiniteBase(sigma);
}

}  // namespace

TEST(Cocycle, RejectsBadEntries) {
    EXPECT_THROW(Cocycle({Mat2::diag(2.0, 0.6)}), InvalidInput);
    EXPECT_THROW(Cocycle({Mat2{NAN, 0, 0, 1}}), InvalidInput);
    EXPECT_THROW(check_compatible(constant_cocycle(4, Mat2::identity()), FiniteBase::cyclic(5)), InvalidInput);
}

TEST(Cocycle, SupNormCached) {
    const Cocycle a({Mat2::diag(3.0, 1.0 / 3.0), rotation(0.2)});
    EXPECT_NEAR(a.sup_norm(), 3.0, 1e-15);
}

TEST(Product, ZeroIsIdentity) {
    const Cocycle a = random_cocycle(10, 1);
    const Mat2 p = product(a, FiniteBase::cyclic(10), 3, 0);
    EXPECT_EQ(max_entry_gap(p, Mat2::identity()), 0.0);
}

TEST(Product, ConstantDiagonal) {
    const Mat2 p = product(constant_cocycle(7, Mat2::diag(2.0, 0.5)), FiniteBase::cyclic(7), 0, 5);
    EXPECT_EQ(p.a, 32.0);
    EXPECT_EQ(p.d, 1.0 / 32.0);
    EXPECT_EQ(p.b, 0.0);
}

TEST(Product, CocycleIdentity) {
    const std::size_t n_pts = 50;
    const FiniteBase b = FiniteBase::cyclic(n_pts, 7);
    const Cocycle a = random_cocycle(n_pts, 9, 0.5);
    Rng rng(10);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t x = rng.below(n_pts);
        const long long n = static_cast<long long>(rng.below(30));
        const long long m = static_cast<long long>(rng.below(30));
        const Mat2 lhs = product(a, b, x, n + m);
        const Mat2 rhs = product(a, b, b.iterate(x, m), n) * product(a, b, x, m);
        const double scale = std::max(1.0, max_entry(product(a, b, b.iterate(x, m), n)) *
                                               max_entry(product(a, b, x, m)));
        worst = std::max(worst, max_entry_gap(lhs, rhs) / scale);
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Product, NegativePowersInvert) {
    const FiniteBase b = FiniteBase::cyclic(20, 3);
    const Cocycle a = random_cocycle(20, 4, 0.5);
    for (std::size_t x = 0; x < 20; ++x) {
        const Mat2 fwd = product(a, b, x, 6);
        const Mat2 back = product(a, b, b.iterate(x, 6), -6);
        EXPECT_LT(max_entry_gap(back * fwd, Mat2::identity()), 1e-9 * max_entry(fwd) * max_entry(back));
    }
}

TEST(FiniteTimeLe, RotationIsZero) {
    const Cocycle a = rotation_cocycle(9, 0.7);
    const FiniteBase b = FiniteBase::cyclic(9);
    for (long long n : {1LL, 10LL, 1000LL}) EXPECT_NEAR(finite_time_le(a, b, 0, n), 0.0, 1e-13);
}

TEST(FiniteTimeLe, ConstantDiagonal) {
    const Cocycle a = constant_cocycle(9, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(9);
    for (long long n : {1LL, 10LL, 1000LL}) EXPECT_NEAR(finite_time_le(a, b, 4, n), std::log(2.0), 1e-13);
}

TEST(FiniteTimeLe, LongRunAgainstWideFloatOracle) {
    const std::size_t n_pts = 1000;
    const FiniteBase b = FiniteBase::cyclic(n_pts);
    const Cocycle a = strong_cocycle(n_pts, 3);
    EXPECT_NEAR(a.sup_norm(), std::exp(10.0), 1e-6 * std::exp(10.0));

    const double long_run = finite_time_le(a, b, 0, 1'000'000);
    EXPECT_TRUE(std::isfinite(long_run));
    EXPECT_GT(long_run, 0.0);

    BigMat prod = BigMat::identity();
    for (std::size_t j = 0; j < n_pts; ++j) {
        const Mat2& m = a(j);
        prod = BigMat{Big(m.a), Big(m.b), Big(m.c), Big(m.d)} * prod;
    }
    const Big oracle = log(op_norm_unchecked(prod)) / Big(n_pts);
    EXPECT_NEAR(finite_time_le(a, b, 0, static_cast<long long>(n_pts)), static_cast<double>(oracle), 1e-9);
}

TEST(FiniteTimeLe, CircleRotation) {
    const CircleCocycle a([](double) { return rotation(0.7); });
    EXPECT_NEAR(finite_time_le(a, CircleBase::golden(), 0.3, 500), 0.0, 1e-13);
}

TEST(IntegratedExact, ConstantCases) {
    const FiniteBase b = multi_cycle({3, 5, 8});
    EXPECT_NEAR(integrated_le_exact(constant_cocycle(16, Mat2::diag(2.0, 0.5)), b).le, std::log(2.0), 1e-12);
    EXPECT_NEAR(integrated_le_exact(rotation_cocycle(16, 0.7), b).le, 0.0, 1e-15);
}

TEST(IntegratedExact, DiagonalIsAbsoluteMeanOfH) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<double> h(n);
        for (auto& v : h) v = rng.uniform(-1.0, 1.2);
        const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n);
        const ExponentReport r = integrated_le_exact(diagonal_cocycle(h), FiniteBase::cyclic(n));
        EXPECT_NEAR(r.le, std::abs(mean), 1e-12);
        EXPECT_EQ(r.method, ExponentMethod::ExactCycle);
    }
}

TEST(IntegratedExact, WeightedOverCycles) {
    const FiniteBase b = multi_cycle({4, 6});
    std::vector<double> h{1, 1, 1, 1, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5};
    EXPECT_NEAR(integrated_le_exact(diagonal_cocycle(h), b).le, 0.4, 1e-12);
}

TEST(Subadditive, SequenceIsSubadditive) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const FiniteBase b = FiniteBase::cyclic(40, 3);
        const Cocycle a = random_cocycle(40, seed, 1.0);
        const std::vector<double> an = log_norm_means(a, b, 64);
        for (long long n = 1; n <= 32; ++n)
            for (long long m = 1; m <= 32; ++m)
                EXPECT_LE(an[n + m - 1], an[n - 1] + an[m - 1] + 1e-12) << "seed " << seed;
    }
}

TEST(Subadditive, ConstantDiagonal) {
    const ExponentReport r = integrated_le_subadditive(constant_cocycle(10, Mat2::diag(2.0, 0.5)),
                                                       FiniteBase::cyclic(10), 20);
    EXPECT_NEAR(r.le, std::log(2.0), 1e-13);
    ASSERT_EQ(r.series.size(), 20u);
    for (double v : r.series) EXPECT_NEAR(v, std::log(2.0), 1e-13);
}

TEST(Subadditive, AgreesWithExactAtCommonPeriod) {
    // Normal cycle products (diagonal, rotations): |P^k| = rho^k, so a_n / n is exact at the lcm.
    Rng rng(14);
    const FiniteBase b = multi_cycle({3, 4, 5});
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> h(12);
        for (auto& v : h) v = rng.uniform(-1.0, 1.0);
        const Cocycle a = diagonal_cocycle(h);
        const double exact = integrated_le_exact(a, b).le;
        const double sub = integrated_le_subadditive(a, b, 60).le;
        EXPECT_NEAR(sub, exact, 1e-9);
    }
    EXPECT_NEAR(integrated_le_subadditive(rotation_cocycle(12, 0.4), b, 60).le, 0.0, 1e-9);
}

TEST(Subadditive, UpperBoundsExactAlways) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const FiniteBase b = multi_cycle({5, 7, 9});
        const Cocycle a = random_cocycle(21, seed, 1.0);
        EXPECT_GE(integrated_le_subadditive(a, b, 40).le, integrated_le_exact(a, b).le - 1e-12);
    }
}

TEST(Subadditive, ThreadCountDoesNotChangeResult) {
    const FiniteBase b = FiniteBase::cyclic(300, 7);
    const Cocycle a = random_cocycle(300, 5);
    const ExponentReport r1 = integrated_le_subadditive(a, b, 50, 1);
    const ExponentReport r8 = integrated_le_subadditive(a, b, 50, 8);
    EXPECT_EQ(r1.le, r8.le);
    EXPECT_EQ(r1.series, r8.series);
}

TEST(Subadditive, CircleSampledIsSeeded) {
    const CircleCocycle a([](double x) { return Mat2::diag(2.0, 0.5) * rotation(0.3 * std::cos(6.283185307179586 * x)); });
    const CircleBase b = CircleBase::golden();
    const ExponentReport r1 = integrated_le_subadditive(a, b, 32, 64, 99, 1);
    const ExponentReport r2 = integrated_le_subadditive(a, b, 32, 64, 99, 4);
    EXPECT_EQ(r1.le, r2.le);
    EXPECT_EQ(r1.seed, 99u);
    EXPECT_LE(r1.le, std::log(2.0) + 1e-12);
}

TEST(CycleExponents, TraceClassification) {
    const FiniteBase b = multi_cycle({2, 3});
    std::vector<Mat2> v{Mat2::diag(2.0, 0.5), Mat2::diag(2.0, 0.5), rotation(0.3), rotation(0.3), rotation(0.3)};
    const auto ce = cycle_exponents(Cocycle(v), b);
    ASSERT_EQ(ce.size(), 2u);
    EXPECT_TRUE(ce[0].hyperbolic);
    EXPECT_NEAR(ce[0].lambda, std::log(2.0), 1e-12);
    EXPECT_FALSE(ce[1].hyperbolic);
    EXPECT_EQ(ce[1].lambda, 0.0);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/hyperbolicity.hpp"
#include "cocycle_forge/parallel.hpp"

using namespace cocycle_forge;

namespace {

constexpr double kPi = std::numbers::pi;

FiniteBase two_cycles(std::size_t p, std::size_t q) {
    std::vector<std::size_t> sigma;
    for (std::size_t i = 0; i < p; ++i) sigma.push_back((i + 1) % p);
    for (std::size_t i = 0; i < q; ++i) sigma.push_back(p + (i + 1) % q);
    return FiniteBase(sigma);
}

}  // namespace

TEST(CheckCone, DiagonalContractsConeAroundE1) {
    const ConeCheck c = check_cone(Mat2::diag(2.0, 0.5), Cone{Dir(0.0), 0.5});
    EXPECT_TRUE(c.invariant);
    EXPECT_GT(c.min_expansion, 1.0);
    EXPECT_FALSE(check_cone(Mat2::diag(0.5, 2.0), Cone{Dir(0.0), 0.5}).invariant);
    EXPECT_FALSE(check_cone(rotation(0.7), Cone{Dir(0.0), 0.5}).invariant);
}

TEST(Certify, ConstantDiagonal) {
    const Cocycle a = constant_cocycle(16, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(16);
    const CertifyResult r = certify_uniform(a, b);
    ASSERT_TRUE(r.certified);
    const HyperbolicityCertificate& c = r.certificate;
    EXPECT_LT(angle_between(c.cone.center, Dir(0.0)), 1e-12);
    EXPECT_GT(c.lambda_exp, 1.0);
    EXPECT_LE(c.lambda_exp, 2.0 + 1e-12);
    EXPECT_GE(c.tau, 0.5 - 1e-12);
    EXPECT_LT(c.tau, 1.0);
    EXPECT_LT(c.c, 100.0);
    EXPECT_EQ(c.verified_points, 16u);
    EXPECT_FALSE(c.digest.empty());
}

TEST(Certify, CertificateHoldsPointwise) {
    // Every accepted cone is invariant at every point with the claimed expansion.
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Mat2> v;
        const double base_angle = rng.uniform(0, kPi);
        const Mat2 conj = rotation(base_angle);
        for (int i = 0; i < 30; ++i) {
            const double s = rng.uniform(1.5, 3.0);
            v.push_back(conj * Mat2{s, rng.uniform(-0.2, 0.2), 0.0, 1.0 / s} * conj.inverse());
        }
        const Cocycle a(v);
        const FiniteBase b = FiniteBase::cyclic(30);
        const CertifyResult r = certify_uniform(a, b);
        ASSERT_TRUE(r.certified) << trial;
        for (std::size_t x = 0; x < 30; ++x) {
            const ConeCheck ch = check_cone(a(x), r.certificate.cone);
            EXPECT_TRUE(ch.invariant);
            EXPECT_GE(ch.min_expansion, r.certificate.lambda_exp);
        }
    }
}

TEST(Certify, ConstantsBoundDeltaPointwise) {
    // delta(x, m) <= c tau^{2m} at every point, so Gamma_m is empty from m0 on.
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const FiniteBase b = FiniteBase::cyclic(40);
        std::vector<Mat2> v;
        const Mat2 conj = Mat2{1.0, rng.uniform(-1.0, 1.0), 0.0, 1.0} * rotation(rng.uniform(0, kPi));
        for (int i = 0; i < 40; ++i) {
            const double s = rng.uniform(1.3, 2.5);
            v.push_back(conj * Mat2{s, rng.uniform(-0.3, 0.3), 0.0, 1.0 / s} * conj.inverse());
        }
        const Cocycle a(v);
        const CertifyResult r = certify_uniform(a, b);
        ASSERT_TRUE(r.certified) << trial;
        const HyperbolicityCertificate& c = r.certificate;
        EXPECT_GT(c.splitting_angle, 0.0);
        for (std::size_t x = 0; x < 40; ++x)
            for (long long m : {1LL, 3LL, 10LL})
                EXPECT_LE(delta_ratio(a, b, x, m), c.c * std::pow(c.tau, 2.0 * static_cast<double>(m)) * (1 + 1e-9));
        for (long long m = c.m0; m < c.m0 + 5; ++m) EXPECT_TRUE(gamma_m(a, b, m).empty());
    }
}

TEST(Certify, RotationFails) {
    const CertifyResult r = certify_uniform(rotation_cocycle(16, 0.7), FiniteBase::cyclic(16));
    EXPECT_FALSE(r.certified);
    EXPECT_FALSE(r.reason.empty());
    EXPECT_GT(r.candidates, 0u);
}

TEST(Certify, SignChangingDiagonalFails) {
    // h = 1, 1, -0.5 on one cycle and zero-mean h on a second: the second cycle
    // has Birkhoff sums |S_n h| / n -> 0, so no cone can be uniformly expanded.
    const FiniteBase b = two_cycles(3, 4);
    std::vector<double> h{1.0, 1.0, -0.5, 0.7, -0.7, 0.7, -0.7};
    const CertifyResult r = certify_uniform(diagonal_cocycle(h), b);
    EXPECT_FALSE(r.certified);
}

TEST(Certify, ThreadCountDoesNotChangeResult) {
    const FiniteBase b = FiniteBase::cyclic(200);
    const Cocycle a = elliptic_island(b, 4);
    const CertifyResult r1 = certify_uniform(a, b, ConeGrid{}, 1);
    const CertifyResult r8 = certify_uniform(a, b, ConeGrid{}, 8);
    EXPECT_EQ(r1.certified, r8.certified);
    EXPECT_EQ(r1.violating_point, r8.violating_point);
    EXPECT_EQ(r1.best_cone.center, r8.best_cone.center);
    EXPECT_EQ(r1.best_cone.half_width, r8.best_cone.half_width);
}

TEST(Certify, CircleSampled) {
    const CircleCocycle a([](double x) { return Mat2::diag(3.0, 1.0 / 3.0) * rotation(0.05 * std::sin(2 * kPi * x)); });
    const CertifyResult r = certify_uniform(a, CircleBase::golden(), ConeGrid{}, 200, 7);
    ASSERT_TRUE(r.certified);
    EXPECT_TRUE(r.certificate.sampled);
    EXPECT_EQ(r.certificate.seed, 7u);
}

TEST(M0, FromConstants) {
    // 2 c^2 tau^{2 m0} <= 1
    for (double c : {1.0, 2.0, 10.0}) {
        for (double tau : {0.5, 0.9}) {
            const long long m0 = m0_from_constants(c, tau);
            EXPECT_LE(2 * c * c * std::pow(tau, 2.0 * static_cast<double>(m0)), 1.0 + 1e-12);
            if (m0 > 1) EXPECT_GT(2 * c * c * std::pow(tau, 2.0 * static_cast<double>(m0 - 1)), 1.0);
        }
    }
    EXPECT_THROW(m0_from_constants(0.5, 0.5), InvalidInput);
}

TEST(Dichotomy, ConstantDiagonalUniform) {
    const Verdict v = dichotomy_report(constant_cocycle(10, Mat2::diag(2.0, 0.5)), FiniteBase::cyclic(10), 4, 0.05);
    EXPECT_EQ(v.kind, VerdictKind::Uniform);
    ASSERT_TRUE(v.certificate.has_value());
    EXPECT_NEAR(v.le, std::log(2.0), 1e-12);
}

TEST(Dichotomy, RotationZero) {
    const Verdict v = dichotomy_report(rotation_cocycle(10, 0.7), FiniteBase::cyclic(10), 4, 0.05);
    EXPECT_EQ(v.kind, VerdictKind::Zero);
}

TEST(Dichotomy, IslandPerturbable) {
    const FiniteBase b = FiniteBase::cyclic(400);
    const Cocycle a = elliptic_island(b, 7);
    const Verdict v = dichotomy_report(a, b, 8, 0.05);
    ASSERT_EQ(v.kind, VerdictKind::Perturbable);
    const IndicatorSet g = gamma_m(a, b, 8);
    EXPECT_EQ(v.gamma_count, g.count());
    for (std::size_t x : v.gamma_witness) EXPECT_GE(delta_ratio(a, b, x, 8), 0.5);
}

TEST(Dichotomy, SplittingCertificateWhenConesFail) {
    // Hyperbolic in varying directions: no single constant cone works, but the
    // splitting is dominated everywhere.
    std::vector<Mat2> v;
    for (int i = 0; i < 12; ++i) {
        const Mat2 r = rotation(kPi * i / 6.0);
        const Mat2 rn = rotation(kPi * (i + 1) / 6.0);
        v.push_back(rn * Mat2::diag(4.0, 0.25) * r.inverse());
    }
    const Verdict d = dichotomy_report(Cocycle(v), FiniteBase::cyclic(12), 4, 0.05);
    EXPECT_EQ(d.kind, VerdictKind::Uniform);
    ASSERT_TRUE(d.certificate.has_value());
    EXPECT_LT(d.certificate->tau, 1.0);
}

TEST(Dichotomy, RejectsBadArguments) {
    const Cocycle a = rotation_cocycle(10, 0.7);
    EXPECT_THROW(dichotomy_report(a, FiniteBase::cyclic(10), 4, 0.0), InvalidInput);
    EXPECT_THROW(dichotomy_report(a, FiniteBase::cyclic(10), 0, 0.1), InvalidInput);
}

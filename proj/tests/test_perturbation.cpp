#include <gtest/gtest.h>

#include <cmath>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/perturbation.hpp"

using namespace cocycle_forge;

namespace {

Mat2 shear(double s) { return {1.0, s, 0.0, 1.0}; }

// Constant M diag(1.2, 1/1.2) M^-1, M a shear: splitting angle atan(1/8).
Cocycle case1_cocycle() { return constant_cocycle(20, shear(8.0) * Mat2::diag(1.2, 1.0 / 1.2) * shear(-8.0)); }

// 8 x diag(3, 1/3) then 2 x diag(1/4, 4).
Cocycle case2_cocycle() {
    std::vector<Mat2> v(8, Mat2::diag(3.0, 1.0 / 3.0));
    v.push_back(Mat2::diag(0.25, 4.0));
    v.push_back(Mat2::diag(0.25, 4.0));
    return Cocycle(v);
}

void expect_plan_invariants(const Cocycle& a, const FiniteBase& base, const PerturbPlan& p, const Constants& k) {
    EXPECT_LE(p.max_distance, k.epsilon);
    EXPECT_LE(p.max_det_error, 1e-12);
    for (const PlanEntry& e : p.entries) {
        const std::size_t z = base.iterate(p.x, e.offset);
        EXPECT_LE(distance(e.value, a(z)), k.epsilon);
        EXPECT_TRUE(is_sl2(e.value));
    }
    if (p.splice_offset >= 0) EXPECT_LT(p.alignment_error, 1e-8);
}

}  // namespace

TEST(Constants, ClosedFormAngle) {
    const Constants k = make_constants(constant_cocycle(4, Mat2::diag(2.0, 0.5)), 0.1, 0.05, 8);
    EXPECT_DOUBLE_EQ(k.c_mat, 2.0);
    EXPECT_NEAR(k.theta_max, 2.0 * std::asin(0.025), 1e-15);
    // a rotation by theta_max moves every matrix of norm C_mat by at most eps
    EXPECT_LE(op_norm(rotation(k.theta_max) - Mat2::identity()) * k.c_mat, 0.1 + 1e-15);
    EXPECT_EQ(k.delta, 0.05);
    EXPECT_EQ(k.m, 8);
}

TEST(Constants, LargeEpsilonFloorsWindow) {
    const Constants k = make_constants(constant_cocycle(4, Mat2::diag(2.0, 0.5)), 1e4, 0.05, 0);
    EXPECT_TRUE(k.clamped);
    EXPECT_EQ(k.m, 2);
    // the window shrinks as eps grows; small eps asks for windows too long to run
    EXPECT_THROW(make_constants(constant_cocycle(4, Mat2::diag(2.0, 0.5)), 0.05, 0.05, 0), InvalidInput);
    double prev = INFINITY;
    for (double eps : {0.05, 0.2, 1.0, 10.0, 1e3, 1e4}) {
        const double m = make_constants(constant_cocycle(4, Mat2::diag(2.0, 0.5)), eps, 0.05, 8).m_theory;
        EXPECT_LE(m, prev);
        prev = m;
    }
}

TEST(Constants, RejectsBadParameters) {
    const Cocycle a = constant_cocycle(4, Mat2::diag(2.0, 0.5));
    EXPECT_THROW(make_constants(a, 0.0, 0.05, 8), InvalidInput);
    EXPECT_THROW(make_constants(a, 0.1, 0.0, 8), InvalidInput);
    EXPECT_THROW(make_constants(a, 0.1, -1.0, 8), InvalidInput);
    EXPECT_THROW(make_constants(a, 0.1, 0.05, 1), InvalidInput);
}

TEST(CaseOne, AlignsWindow) {
    const Cocycle a = case1_cocycle();
    const FiniteBase b = FiniteBase::cyclic(20);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.5, 0.05, 4);
    const CaseChoice c = choose_case(t, 0, k);
    ASSERT_EQ(c.tag, CaseTag::I);
    const PerturbPlan p = build_case1(t, 0, k, c.j0);
    EXPECT_EQ(p.tag, CaseTag::I);
    expect_plan_invariants(a, b, p, k);
    // the double product carries E^u(0) onto E^s(T^m 0)
    const Mat2 prod = plan_product(a, b, p);
    const Vec2 img = prod * t.eu(0);
    EXPECT_LT(sin_angle(img, t.es(b.iterate(0, k.m))), 1e-7);
}

TEST(CaseOne, WrongCaseWhenAngleIsLarge) {
    const Cocycle a = constant_cocycle(10, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(10);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.5, 0.05, 4);
    EXPECT_THROW(build_case1(t, 0, k, 0), WrongCase);
}

TEST(CaseTwo, AlignsWindow) {
    const Cocycle a = case2_cocycle();
    const FiniteBase b = FiniteBase::cyclic(10);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.5, 0.05, 4);
    const CaseChoice c = choose_case(t, 8, k);
    ASSERT_EQ(c.tag, CaseTag::II);
    EXPECT_GE(c.j1 - c.j0, 1);
    EXPECT_GT(t.delta(b.iterate(8, c.j0), c.j1 - c.j0), k.c);
    const PerturbPlan p = build_case2(t, 8, k, c.j0, c.j1);
    expect_plan_invariants(a, b, p, k);
    for (const PlanEntry& e : p.entries) EXPECT_LE(std::abs(e.theta), k.alpha2 + 1e-15);
}

TEST(CaseTwo, WrongCaseBelowThreshold) {
    const Cocycle a = case2_cocycle();
    const FiniteBase b = FiniteBase::cyclic(10);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.5, 0.05, 4);
    // On the expanding run E^s is contracted, so Delta is tiny.
    EXPECT_THROW(build_case2(t, 0, k, 0, 2), WrongCase);
    EXPECT_THROW(build_case2(t, 0, k, 2, 2), InvalidInput);
}

TEST(CaseThree, IslandPlansAlignAndTelescope) {
    const FiniteBase b = FiniteBase::cyclic(1600);
    const Cocycle a = elliptic_island(b, 1);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.2, 0.05, 8);
    std::size_t plans = 0;
    for (std::size_t y : gamma_m(t, k.m).points()) {
        if (choose_case(t, y, k).tag != CaseTag::III) continue;
        PerturbPlan p;
        try {
            p = build_case3(t, y, k);
        } catch (const PreconditionError&) {
            continue;
        }
        ++plans;
        expect_plan_invariants(a, b, p, k);
        EXPECT_LT(case3_telescope_error(t, p), 1e-9);
    }
    EXPECT_GT(plans, 0u);
}

TEST(EuToEs, CasePrecedence) {
    // I wins whenever some window angle is small, II before III otherwise.
    const FiniteBase b = FiniteBase::cyclic(1600);
    const Cocycle a = elliptic_island(b, 2);
    const SplittingTable t(a, b);
    const Constants k = make_constants(a, 0.2, 0.05, 8);
    std::size_t seen = 0;
    for (std::size_t y : gamma_m(t, k.m).points()) {
        bool small_angle = false;
        for (long long j = 0; j < k.m; ++j) small_angle = small_angle || t.angle(b.iterate(y, j)) < k.alpha1;
        const CaseChoice c = choose_case(t, y, k);
        EXPECT_EQ(c.tag == CaseTag::I, small_angle);
        if (c.tag == CaseTag::I) EXPECT_LT(t.angle(b.iterate(y, c.j0)), k.alpha1);
        if (c.tag == CaseTag::II) EXPECT_GT(t.delta(b.iterate(y, c.j0), c.j1 - c.j0), k.c);
        ++seen;
    }
    EXPECT_GT(seen, 0u);
}

TEST(EuToEs, OutsideGammaRejected) {
    const Cocycle a = case1_cocycle();
    const FiniteBase b = FiniteBase::cyclic(20);
    const Constants k = make_constants(a, 0.5, 0.05, 4);
    EXPECT_THROW(eu_to_es(a, b, 0, k), PreconditionError);
}

TEST(EuToEs, EveryUsablePointSatisfiesInvariants) {
    const FiniteBase b = FiniteBase::cyclic(800);
    const Cocycle a = elliptic_island(b, 3);
    const Constants k = make_constants(a, 0.2, 0.05, 8);
    const PerturbationContext ctx(a, b, k);
    ASSERT_FALSE(ctx.usable().empty());
    for (std::size_t y : ctx.usable().points()) {
        const PerturbPlan p = eu_to_es(ctx.table(), y, k);
        expect_plan_invariants(a, b, p, k);
        EXPECT_EQ(p.length, k.m);
    }
}

TEST(Ml2, RotationIsTrivial) {
    const Cocycle a = rotation_cocycle(50, 0.7);
    const FiniteBase b = FiniteBase::cyclic(50);
    const Constants k = make_constants(a, 0.2, 0.05, 8);
    const PerturbPlan p = ml2_sequence(a, b, 3, 40, k);
    EXPECT_EQ(p.tag, CaseTag::TrivialZero);
    EXPECT_TRUE(p.entries.empty());
    EXPECT_NEAR(p.log_norm, 0.0, 1e-12);
    EXPECT_LT(p.log_norm, 40 * 0.05);
    EXPECT_LE(compute_n(a, b, 3, k, 100), 1);
}

TEST(Ml2, UniformInputRefused) {
    const Cocycle a = constant_cocycle(50, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(50);
    const Constants k = make_constants(a, 0.2, 0.05, 8);
    EXPECT_THROW(ml2_sequence(a, b, 0, 40, k), PreconditionError);
}

class IslandContext : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        base_ = new FiniteBase(FiniteBase::cyclic(2000));
        a_ = new Cocycle(elliptic_island(*base_, 4, IslandParams{8, 4, 3.0}));
        k_ = new Constants(make_constants(*a_, 0.5, 0.3, 4));
        ctx_ = new PerturbationContext(*a_, *base_, *k_, 4);
    }
    static void TearDownTestSuite() {
        delete ctx_;
        delete k_;
        delete a_;
        delete base_;
    }
    static FiniteBase* base_;
    static Cocycle* a_;
    static Constants* k_;
    static PerturbationContext* ctx_;
};

FiniteBase* IslandContext::base_ = nullptr;
Cocycle* IslandContext::a_ = nullptr;
Constants* IslandContext::k_ = nullptr;
PerturbationContext* IslandContext::ctx_ = nullptr;

TEST_F(IslandContext, ComputeNMatchesNaiveScan) {
    const long long cap = 1500;
    for (std::size_t x = 0; x < base_->n_points(); x += 97) {
        long long naive = -1;
        for (long long n = cap; n >= 1; --n) {
            if (!ctx_->ml2_ok(x, n)) break;
            naive = n;
        }
        EXPECT_EQ(ctx_->compute_n(x, cap), naive) << "x=" << x;
    }
}

TEST_F(IslandContext, ComputeNAllIsThreadIndependent) {
    const auto n1 = ctx_->compute_n_all(800, 1);
    const auto n8 = ctx_->compute_n_all(800, 8);
    EXPECT_EQ(n1, n8);
    // extending from a smaller cap agrees with a direct computation
    const auto small = ctx_->compute_n_all(400, 2);
    EXPECT_EQ(ctx_->extend_n_all(small, 400, 800, 2), n1);
}

TEST_F(IslandContext, SequenceBoundAndDistance) {
    std::size_t spliced = 0;
    for (std::size_t x = 0; x < base_->n_points(); x += 211) {
        const long long n0 = ctx_->compute_n(x, 1500);
        if (n0 < 0) continue;
        for (long long n : {n0, n0 + 7, 2 * n0}) {
            if (n > 1500) continue;
            const PerturbPlan p = ctx_->ml2_sequence(x, n);
            EXPECT_LT(p.log_norm, static_cast<double>(n) * k_->delta);
            expect_plan_invariants(*a_, *base_, p, *k_);
            if (p.splice_offset >= 0) ++spliced;
        }
    }
    EXPECT_GT(spliced, 0u);
}

TEST_F(IslandContext, SweepAgreesWithSequence) {
    const std::size_t x = 5;
    const long long n0 = ctx_->compute_n(x, 1500);
    ASSERT_GT(n0, 0);
    const long long hi = std::min<long long>(n0 + 60, 1500);
    const SweepResult s = ml2_sweep(*ctx_, x, n0, hi);
    EXPECT_EQ(s.violations, 0u);
    ASSERT_EQ(s.points.size(), static_cast<std::size_t>(hi - n0 + 1));
    for (std::size_t i = 0; i < s.points.size(); i += 15) {
        const SweepPoint& sp = s.points[i];
        const PerturbPlan p = ctx_->ml2_sequence(x, sp.n);
        EXPECT_NEAR(sp.log_norm, p.log_norm, 1e-9 * std::max(1.0, std::abs(p.log_norm))) << "n=" << sp.n;
        EXPECT_EQ(sp.tag, p.tag);
        EXPECT_TRUE(sp.ok);
    }
}

TEST(PerturbedCocycle, OverridesAndMaterialize) {
    PerturbedCocycle p(constant_cocycle(5, Mat2::diag(2.0, 0.5)));
    const Mat2 r = rotation(0.01) * Mat2::diag(2.0, 0.5);
    p.set(2, r, lift_sl2(r));
    EXPECT_TRUE(p.overridden(2));
    EXPECT_FALSE(p.overridden(1));
    EXPECT_EQ(p.override_count(), 1u);
    const Cocycle m = p.materialize();
    EXPECT_EQ(m(2).b, r.b);
    EXPECT_EQ(m(1).a, 2.0);
}

TEST(IntegratedHp, AgreesWithDoubleOnModestProducts) {
    const FiniteBase b = FiniteBase::cyclic(30, 7);
    const Cocycle a = random_cocycle(30, 8, 0.5);
    const HpExponent h = integrated_le_hp(PerturbedCocycle(a), b, 256);
    EXPECT_NEAR(h.le, integrated_le_exact(a, b).le, 1e-10);
}

TEST(Pipeline, ZeroInputIsTrivial) {
    const Cocycle a = rotation_cocycle(100, 0.7);
    const FiniteBase b = FiniteBase::cyclic(100);
    const TheoremBResult r = theorem_b_perturb(a, b, 0.05, 0.2, TheoremBOptions{});
    EXPECT_EQ(r.report.verdict, "trivial");
    EXPECT_EQ(r.cocycle.override_count(), 0u);
    EXPECT_EQ(r.report.le_after, r.report.le_before);
}

TEST(Pipeline, UniformInputRefused) {
    const Cocycle a = constant_cocycle(100, Mat2::diag(2.0, 0.5));
    const FiniteBase b = FiniteBase::cyclic(100);
    const TheoremBResult r = theorem_b_perturb(a, b, 0.05, 0.2, TheoremBOptions{});
    EXPECT_EQ(r.report.verdict, "refused-uniform");
    EXPECT_EQ(r.cocycle.override_count(), 0u);
}

TEST(Pipeline, ShortCyclesInfeasible) {
    const FiniteBase b = FiniteBase::cyclic(400, 200);  // 200 cycles of length 2
    std::vector<Mat2> v(400);
    for (std::size_t i = 0; i < 400; ++i) v[i] = i % 2 ? rotation(1.0) : Mat2::diag(3.0, 1.0 / 3.0);
    TheoremBOptions opt;
    opt.m = 4;
    try {
        theorem_b_perturb(Cocycle(v), b, 0.05, 0.5, opt);
        FAIL() << "expected PipelineInfeasible";
    } catch (const PipelineInfeasible& e) {
        EXPECT_EQ(e.report().verdict, "infeasible");
    }
}

TEST(Pipeline, IslandLowersExponent) {
    const FiniteBase b = FiniteBase::cyclic(4000);
    const Cocycle a = elliptic_island(b, 4, IslandParams{8, 4, 3.0});
    TheoremBOptions opt;
    opt.m = 4;
    opt.threads = 4;
    const TheoremBResult r = theorem_b_perturb(a, b, 0.3, 0.5, opt);
    const PerturbReport& rep = r.report;
    ASSERT_EQ(rep.verdict, "perturbed") << rep.reason;
    EXPECT_LT(rep.le_after, rep.le_bound);
    EXPECT_LE(rep.max_perturbation, 0.5);
    EXPECT_LE(rep.max_det_error, 1e-12);
    EXPECT_LT(rep.p_complement, 0.3 * 0.3);
    EXPECT_TRUE(rep.three_delta.holds);
    for (const auto& [x, m] : r.cocycle.overrides()) EXPECT_LE(distance(m, a(x)), 0.5);
    // the exact exponent of the materialized cocycle, in extended precision, is what the report says
    EXPECT_NEAR(integrated_le_hp(r.cocycle, b, rep.max_bits).le, rep.le_after, 1e-12);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/castles.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/linalg2.hpp"
#include "cocycle_forge/precise.hpp"
#include "cocycle_forge/splitting.hpp"

namespace cocycle_forge {

// Every tolerance of the perturbation machinery, derived once from (A, eps, delta).
struct Constants {
    double epsilon = 0.0;
    double delta = 0.0;
    double c_mat = 0.0;       // sup |A|
    double c_big = 0.0;       // (C_mat + eps)(1 + 1e-9), bounds every perturbed entry
    double c_log = 0.0;       // log c_big
    double theta_max = 0.0;   // |R_theta - I| <= eps / C_mat
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    bool clamped = false;     // eps >= 2 C_mat: angles capped at pi/2
    double c = 0.0;           // case II threshold on Delta
    double c_hat = 0.0;
    double e_bound = 0.0;     // case III bound on |A^j|
    double beta = 0.0;
    double m_theory = 0.0;    // ceil(2 pi / beta): the window length the estimates ask for
    long long m = 0;          // window length in use
    double gamma = 0.0;       // return-time tolerance around n/2
};

// m <= 0 selects m_theory (rejected when it does not fit in memory).
Constants make_constants(const Cocycle& a, double epsilon, double delta, long long m);

enum class CaseTag { I, II, III, TrivialZero, TrivialSmallLambda };
std::string to_string(CaseTag t);

enum class EntryFlag { RotatedRight, RotatedLeft, Conjugated };
std::string to_string(EntryFlag f);

// One replaced matrix: L at orbit offset `offset` from the plan start.
struct PlanEntry {
    long long offset = 0;
    Mat2 value;
    EntryFlag flag = EntryFlag::RotatedRight;
    double theta = 0.0;
    double distance = 0.0;  // |value - A|
};

// A sequence L_0 .. L_{length-1} along the orbit of x; offsets not listed keep A.
struct PerturbPlan {
    std::size_t x = 0;
    long long length = 0;
    CaseTag tag = CaseTag::TrivialZero;
    long long splice_offset = -1;  // where the E^u -> E^s window starts; -1 when trivial
    long long m = 0;
    long long j0 = -1, j1 = -1;    // case I / II indices inside the window
    std::vector<PlanEntry> entries;
    std::vector<HMat2> hp_values;  // extended-precision entries, parallel to `entries`
    unsigned precision_bits = 0;
    double log_norm = 0.0;         // log |L_{length-1} ... L_0|
    double max_distance = 0.0;
    double alignment_error = 0.0;  // |sin| between image of E^u and E^s at the window end
    double max_det_error = 0.0;
};

// Window data at y: A(T^j y) for j < m, unit E^u/E^s at T^j y for j <= m.
template <class T>
struct WindowData {
    std::vector<BasicMat2<T>> a;
    std::vector<BasicVec2<T>> eu, es;
};

// Case selection at y from double data: first j0 with small angle (I), else the
// first (j0, j1) pair with Delta > c (II), else III.
struct CaseChoice {
    CaseTag tag = CaseTag::III;
    long long j0 = -1, j1 = -1;
};
CaseChoice choose_case(const SplittingTable& table, std::size_t y, const Constants& k);

// The three constructions at y. Preconditions of each are checked (WrongCase /
// PreconditionError); the result always carries E^u(y) onto E^s(T^m y) within 1e-8.
PerturbPlan build_case1(const SplittingTable& table, std::size_t y, const Constants& k, long long j0);
PerturbPlan build_case2(const SplittingTable& table, std::size_t y, const Constants& k, long long j0, long long j1);
PerturbPlan build_case3(const SplittingTable& table, std::size_t y, const Constants& k);
PerturbPlan eu_to_es(const SplittingTable& table, std::size_t y, const Constants& k);

PerturbPlan build_case1(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k, long long j0);
PerturbPlan build_case2(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k, long long j0,
                        long long j1);
PerturbPlan build_case3(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k);
PerturbPlan eu_to_es(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k);

// max_j |L_{j-1}..L_0 - P_j R_{j theta}| / max(1, |P_j|) for a case III plan.
double case3_telescope_error(const SplittingTable& table, const PerturbPlan& plan);

// Applies the plan over its whole length and returns the product.
Mat2 plan_product(const Cocycle& a, const FiniteBase& base, const PerturbPlan& plan);

// Shared state for repeated ML2 queries on one cocycle: Oseledets table, the
// usable part of Gamma_m, and cached splice coefficients.
class PerturbationContext {
public:
    PerturbationContext(const Cocycle& a, const FiniteBase& base, const Constants& k, unsigned threads = 1);

    const Cocycle& cocycle() const { return *a_; }
    const FiniteBase& base() const { return *base_; }
    const SplittingTable& table() const { return table_; }
    const Constants& constants() const { return k_; }
    const IndicatorSet& gamma() const { return gamma_; }
    // Gamma_m points where the E^u -> E^s construction succeeds in double precision.
    const IndicatorSet& usable() const { return usable_; }
    std::size_t unusable_count() const { return gamma_.count() - usable_.count(); }
    std::size_t case_count(CaseTag t) const;

    // Return time l into usable Gamma for (x, n), or -1.
    long long splice_time(std::size_t x, long long n) const;
    // Fast double estimate of log |A~^n(x)| for the ML2 plan; +inf when no plan exists.
    double ml2_log_norm(std::size_t x, long long n) const;
    bool ml2_ok(std::size_t x, long long n) const;
    // Smallest n with ml2_ok for every n' in [n, n_cap]; -1 when none.
    long long compute_n(std::size_t x, long long n_cap) const;
    std::vector<long long> compute_n_all(long long n_cap, unsigned threads) const;
    // N against a larger cap, reusing values computed against `old_cap`.
    std::vector<long long> extend_n_all(const std::vector<long long>& previous, long long old_cap, long long n_cap,
                                        unsigned threads) const;
    // Largest failing n in [lo, hi], or 0 when all succeed.
    long long last_failure(std::size_t x, long long hi, long long lo) const;

    // Plan of length n at x, verified in extended precision. bits = 0 picks the
    // precision from the segment growth. Throws NTooSmall when no valid plan exists.
    PerturbPlan ml2_sequence(std::size_t x, long long n, unsigned bits = 0) const;
    // Precision ml2_sequence(x, n) would pick.
    unsigned bits_for(std::size_t x, long long n) const;

    // Extended-precision Oseledets vectors (call inside a PrecisionScope).
    HVec2 hp_eu(std::size_t y, unsigned bits) const;
    HVec2 hp_es(std::size_t z, unsigned bits) const;
    // Extended-precision E^u -> E^s window at a usable y.
    struct HpSplice {
        unsigned bits = 0;
        CaseChoice choice;
        std::vector<HMat2> l;       // m entries
        std::vector<Mat2> rounded;  // same, rounded
        std::vector<double> theta;
        std::vector<EntryFlag> flag;
        std::vector<std::uint8_t> changed;
        double alignment_error = 0.0;
    };
    HpSplice hp_splice(std::size_t y, unsigned bits) const;
    // Same, with the directions E^u(y) and E^s(T^m y) supplied by the caller.
    HpSplice hp_splice(std::size_t y, unsigned bits, const HVec2& eu, const HVec2& es_end) const;

    // Unperturbed log |A^n(x)| (renormalized double product).
    double plain_log_norm(std::size_t x, long long n) const;

private:
    struct Coeffs {
        double q1 = 0.0, p2 = 0.0, q2 = 0.0;
        double p1 = 0.0;  // residual of the alignment
        double log_k = 0.0;  // log of the Frobenius norm of (p2, q1, q2)
    };
    long long last_failure_spliced(std::size_t x, long long hi, long long lo) const;
    double spliced_log_norm(std::size_t x, long long n, long long l) const;
    double trivial_log_norm(std::size_t x, long long n) const;

    const Cocycle* a_;
    const FiniteBase* base_;
    Constants k_;
    SplittingTable table_;
    IndicatorSet gamma_, usable_;
    std::vector<Coeffs> coeffs_;   // indexed by point, valid on usable_
    std::vector<CaseChoice> choice_;
    std::vector<std::unique_ptr<CycleMembers>> members_;  // per cycle
};

// Extended-precision check of ml2_sequence(x, n) for every n in [n_lo, n_hi]:
// the product is formed as A^n(x) (A^{l+m}(x))^{-1} W(y) A^l(x) from prefix
// products, so each n costs O(1) multiplications.
struct SweepPoint {
    long long n = 0;
    long long l = -1;
    CaseTag tag = CaseTag::TrivialZero;
    double log_norm = 0.0;
    double fast_log_norm = 0.0;
    double bound = 0.0;  // n delta
    double max_distance = 0.0;
    bool ok = false;
};

struct SweepResult {
    std::size_t x = 0;
    long long n_lo = 0, n_hi = 0;
    unsigned bits = 0;
    std::vector<SweepPoint> points;
    std::size_t violations = 0;
    std::size_t spliced = 0;  // plans with a nontrivial E^u -> E^s window
};

SweepResult ml2_sweep(const PerturbationContext& ctx, std::size_t x, long long n_lo, long long n_hi);

PerturbPlan ml2_sequence(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n, const Constants& k);
long long compute_n(const Cocycle& a, const FiniteBase& base, std::size_t x, const Constants& k, long long n_cap);

// Original cocycle plus sparse replaced entries, each kept in both precisions.
class PerturbedCocycle {
public:
    PerturbedCocycle() = default;
    explicit PerturbedCocycle(Cocycle original) : original_(std::move(original)) {}

    const Cocycle& original() const { return original_; }
    std::size_t size() const { return original_.size(); }
    Mat2 operator()(std::size_t x) const;
    // Extended value: the override, or the SL(2) lift of the original entry.
    HMat2 hp_value(std::size_t x) const;
    bool overridden(std::size_t x) const { return hp_.count(x) != 0; }
    std::size_t override_count() const { return hp_.size(); }
    const std::map<std::size_t, Mat2>& overrides() const { return rounded_; }

    void set(std::size_t x, const Mat2& rounded, const HMat2& hp);
    void apply(const FiniteBase& base, const PerturbPlan& plan);
    Cocycle materialize() const;

private:
    Cocycle original_{std::vector<Mat2>{Mat2::identity()}};
    std::map<std::size_t, Mat2> rounded_;
    std::map<std::size_t, HMat2> hp_;
};

// Exact integrated exponent from extended-precision cycle products.
struct HpExponent {
    double le = 0.0;
    std::vector<CycleExponent> cycles;
    unsigned bits = 0;
};
HpExponent integrated_le_hp(const PerturbedCocycle& a, const FiniteBase& base, unsigned bits);

struct TheoremBOptions {
    long long m = 12;
    long long n_cap = 0;       // 0: 3 * H_max
    long long h_max = 0;       // 0: largest H with 3H < shortest cycle
    unsigned threads = 1;
    long long sample_n = 0;    // horizon for the sampled (1/N) int log|A~^N|; 0 skips
    std::uint64_t seed = 0;
};

struct TowerRecord {
    std::size_t base_point = 0;
    long long height = 0;
    CaseTag tag = CaseTag::TrivialZero;
    long long splice_offset = -1;
    long long entries = 0;
    double log_norm = 0.0;
    double fast_log_norm = 0.0;
    double bound = 0.0;  // height * delta
    unsigned bits = 0;
};

struct PerturbReport {
    std::string verdict;     // "perturbed", "trivial", "refused-uniform", "infeasible"
    std::string reason;
    Constants constants;
    double le_before = 0.0;
    double le_after = 0.0;        // extended-precision cycle products
    double le_after_rounded = 0.0;
    double le_bound = 0.0;        // (10 log C + 1) delta
    double max_perturbation = 0.0;
    double max_det_error = 0.0;
    long long h = 0;
    long long h_max = 0;
    long long n_cap = 0;
    double p_complement = 0.0;    // mu(P_H^C)
    std::vector<std::pair<long long, double>> p_curve;
    std::size_t gamma_points = 0;
    std::size_t unusable_points = 0;
    std::map<std::string, std::size_t> case_histogram;
    std::vector<std::pair<long long, std::size_t>> n_histogram;  // N(x) -> count, -1 = infinite
    double q_hat_measure = 0.0;
    double q_measure = 0.0;
    double q_complement = 0.0;
    ThreeDeltaCheck three_delta;
    double g_complement = 0.0;
    double g_chain_bound = 0.0;
    long long g_n = 0;
    std::vector<TowerRecord> towers;
    unsigned max_bits = 0;
    double sampled_le = 0.0;
    long long sampled_n = 0;
    std::uint64_t seed = 0;
    std::size_t overrides = 0;
    double seconds = 0.0;
};

struct TheoremBResult {
    PerturbedCocycle cocycle;
    PerturbReport report;
};

// No admissible H below the height cap; carries the partial report with the mu(P_H^C) curve.
class PipelineInfeasible : public Infeasible {
public:
    PipelineInfeasible(const std::string& what, PerturbReport report)
        : Infeasible(what), report_(std::move(report)) {}
    const PerturbReport& report() const { return report_; }

private:
    PerturbReport report_;
};

TheoremBResult theorem_b_perturb(const Cocycle& a, const FiniteBase& base, double delta, double epsilon,
                                 const TheoremBOptions& opt);

}  // namespace cocycle_forge

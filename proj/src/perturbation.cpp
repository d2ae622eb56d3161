#include "cocycle_forge/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/parallel.hpp"
#include "splice_kernels.hpp"

namespace cocycle_forge {

namespace {

constexpr double kAlignTol = 1e-8;
constexpr double kLn2 = 0.69314718055994530942;
// Angles are taken this fraction inside their budgets so rotation bounds stay strict.
constexpr double kShrink = 1.0 - 1e-9;

}  // namespace

std::string to_string(CaseTag t) {
    switch (t) {
        case CaseTag::I: return "I";
        case CaseTag::II: return "II";
        case CaseTag::III: return "III";
        case CaseTag::TrivialZero: return "trivial-zero";
        case CaseTag::TrivialSmallLambda: return "trivial-small-lambda";
    }
    return "?";
}

std::string to_string(EntryFlag f) {
    switch (f) {
        case EntryFlag::RotatedRight: return "rotated-right";
        case EntryFlag::RotatedLeft: return "rotated-left";
        case EntryFlag::Conjugated: return "conjugated";
    }
    return "?";
}

Constants make_constants(const Cocycle& a, double epsilon, double delta, long long m) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("constants: epsilon must be > 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput("constants: delta must be > 0");
    Constants k;
    k.epsilon = epsilon;
    k.delta = delta;
    k.c_mat = a.sup_norm();
    k.c_big = (k.c_mat + epsilon) * (1.0 + 1e-9);
    k.c_log = std::log(k.c_big);
    k.clamped = epsilon >= 2.0 * k.c_mat;
    k.theta_max = 2.0 * std::asin(std::min(1.0, epsilon / (2.0 * k.c_mat)));
    k.alpha1 = k.alpha2 = std::min(k.theta_max, std::numbers::pi / 2) * kShrink;
    const double sa = std::sin(k.alpha2);
    k.c = std::max(1.0 / (sa * sa), k.c_mat * k.c_mat * (1.0 + 1e-9));
    k.c_hat = 2.0 * k.c * k.c;
    k.e_bound = norm_bound_E(k.alpha1, k.c_hat);
    k.beta = 2.0 * std::asin(std::min(1.0, epsilon / (2.0 * k.c_mat * k.e_bound * k.e_bound)));
    k.m_theory = std::max(2.0, std::ceil(2.0 * std::numbers::pi / k.beta));
    if (m <= 0) {
        if (k.m_theory > 1e6)
            throw InvalidInput("constants: window length " + std::to_string(k.m_theory) + " is too large to run");
        k.m = static_cast<long long>(k.m_theory);
    } else {
        if (m < 2) throw InvalidInput("constants: m must be >= 2");
        k.m = m;
    }
    k.gamma = delta / (20.0 * k.c_log);
    if (!(k.gamma < 1.0)) k.gamma = 0.5;
    return k;
}

namespace {

WindowData<double> window_double(const SplittingTable& t, std::size_t y, long long m) {
    const FiniteBase& base = t.base();
    WindowData<double> w;
    std::size_t z = y;
    for (long long j = 0; j <= m; ++j, z = base.forward(z)) {
        if (j < m) w.a.push_back(t.cocycle()(z));
        w.eu.push_back(t.eu(z));
        w.es.push_back(t.es(z));
    }
    return w;
}

void check_window_point(const SplittingTable& t, std::size_t y, const Constants& k) {
    if (y >= t.base().n_points()) throw InvalidInput("point out of range");
    if (!t.has_splitting(y)) throw NoSplitting("no Oseledets splitting at point " + std::to_string(y));
    if (k.m < 2) throw InvalidInput("window length m must be >= 2");
}

PerturbPlan plan_from(const SplittingTable& t, std::size_t y, const Constants& k, CaseTag tag, long long j0,
                      long long j1, const detail::SpliceResult<double>& r) {
    PerturbPlan p;
    p.x = y;
    p.length = k.m;
    p.m = k.m;
    p.tag = tag;
    p.splice_offset = 0;
    p.j0 = j0;
    p.j1 = j1;
    std::size_t z = y;
    Mat2 prod = Mat2::identity();
    for (long long j = 0; j < k.m; ++j, z = t.base().forward(z)) {
        prod = r.l[j] * prod;
        if (!r.changed[j]) continue;
        PlanEntry e;
        e.offset = j;
        e.value = r.l[j];
        e.flag = r.flag[j];
        e.theta = r.theta[j];
        e.distance = distance(r.l[j], t.cocycle()(z));
        p.max_distance = std::max(p.max_distance, e.distance);
        p.max_det_error = std::max(p.max_det_error, std::abs(r.l[j].det() - 1.0));
        p.entries.push_back(e);
    }
    p.log_norm = std::log(op_norm(prod));
    p.alignment_error = r.misalignment;
    return p;
}

void check_plan(const PerturbPlan& p, const Constants& k) {
    if (p.alignment_error > kAlignTol)
        throw ContractViolation("E^u -> E^s window misaligned by " + std::to_string(p.alignment_error));
    if (p.max_det_error > 1e-12) throw ContractViolation("perturbed entry left SL(2)");
    if (!(p.max_distance <= k.epsilon))
        throw ContractViolation("perturbed entry moved by " + std::to_string(p.max_distance) + " > eps");
}

PerturbPlan case3_plan(const SplittingTable& t, std::size_t y, const Constants& k) {
    const auto w = window_double(t, y, k.m);
    const auto r = detail::case3_kernel(w, k.e_bound, kAlignTol);
    PerturbPlan p = plan_from(t, y, k, CaseTag::III, -1, -1, r);
    if (!(p.max_distance < k.epsilon))
        throw PreconditionError("case III: entry moved by " + std::to_string(p.max_distance) +
                                    " >= eps; the window is too short for this angle",
                                p.max_distance);
    return p;
}

}  // namespace

CaseChoice choose_case(const SplittingTable& t, std::size_t y, const Constants& k) {
    const FiniteBase& base = t.base();
    CaseChoice c;
    std::size_t z = y;
    for (long long j = 0; j < k.m; ++j, z = base.forward(z)) {
        if (t.angle(z) < k.alpha1) {
            c.tag = CaseTag::I;
            c.j0 = j;
            return c;
        }
    }
    const double log_c = std::log(k.c);
    z = y;
    for (long long j0 = 0; j0 < k.m; ++j0, z = base.forward(z)) {
        for (long long j1 = j0 + 1; j1 <= k.m - 1; ++j1) {
            if (t.log_delta(z, j1 - j0) > log_c) {
                c.tag = CaseTag::II;
                c.j0 = j0;
                c.j1 = j1;
                return c;
            }
        }
    }
    return c;
}

PerturbPlan build_case1(const SplittingTable& t, std::size_t y, const Constants& k, long long j0) {
    check_window_point(t, y, k);
    if (j0 < 0 || j0 >= k.m) throw InvalidInput("case I: j0 outside [0, m)");
    const std::size_t z = t.base().iterate(y, j0);
    if (!(t.angle(z) < k.alpha1))
        throw WrongCase("case I: splitting angle " + std::to_string(t.angle(z)) + " is not below alpha1", j0);
    const auto r = detail::case1_kernel(window_double(t, y, k.m), j0, kAlignTol);
    if (r.aligned < 1) throw ContractViolation("case I: no rotation sign aligns the window");
    PerturbPlan p = plan_from(t, y, k, CaseTag::I, j0, -1, r);
    check_plan(p, k);
    return p;
}

PerturbPlan build_case2(const SplittingTable& t, std::size_t y, const Constants& k, long long j0, long long j1) {
    check_window_point(t, y, k);
    if (j0 < 0 || j1 > k.m || j1 - j0 < 1) throw InvalidInput("case II: need 0 <= j0 < j1 <= m");
    const std::size_t z = t.base().iterate(y, j0);
    const double ld = t.log_delta(z, j1 - j0);
    if (!(ld > std::log(k.c)))
        throw WrongCase("case II: Delta = " + std::to_string(std::exp(ld)) + " does not exceed c", j0);
    const auto r = detail::case2_kernel(window_double(t, y, k.m), j0, j1, k.alpha2, kAlignTol);
    if (r.aligned < 1) throw ContractViolation("case II: no sign combination aligns the window");
    PerturbPlan p = plan_from(t, y, k, CaseTag::II, j0, j1, r);
    check_plan(p, k);
    return p;
}

PerturbPlan build_case3(const SplittingTable& t, std::size_t y, const Constants& k) {
    check_window_point(t, y, k);
    PerturbPlan p = case3_plan(t, y, k);
    check_plan(p, k);
    return p;
}

PerturbPlan eu_to_es(const SplittingTable& t, std::size_t y, const Constants& k) {
    check_window_point(t, y, k);
    if (!(t.log_delta(y, k.m) >= std::log(0.5)))
        throw PreconditionError("eu_to_es: point is not in Gamma_m", t.delta(y, k.m));
    const CaseChoice c = choose_case(t, y, k);
    switch (c.tag) {
        case CaseTag::I: return build_case1(t, y, k, c.j0);
        case CaseTag::II: return build_case2(t, y, k, c.j0, c.j1);
        default: return build_case3(t, y, k);
    }
}

PerturbPlan build_case1(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k, long long j0) {
    SplittingTable t(a, base);
    return build_case1(t, y, k, j0);
}

PerturbPlan build_case2(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k, long long j0,
                        long long j1) {
    SplittingTable t(a, base);
    return build_case2(t, y, k, j0, j1);
}

PerturbPlan build_case3(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k) {
    SplittingTable t(a, base);
    return build_case3(t, y, k);
}

PerturbPlan eu_to_es(const Cocycle& a, const FiniteBase& base, std::size_t y, const Constants& k) {
    SplittingTable t(a, base);
    return eu_to_es(t, y, k);
}

double case3_telescope_error(const SplittingTable& t, const PerturbPlan& plan) {
    if (plan.tag != CaseTag::III) throw InvalidInput("telescope check applies to case III plans");
    const auto w = window_double(t, plan.x, plan.m);
    const auto p = detail::partial_products(w);
    const double theta = plan.entries.empty() ? 0.0 : plan.entries.front().theta;
    Mat2 acc = Mat2::identity();
    double worst = 0.0;
    for (long long j = 1; j <= plan.m; ++j) {
        acc = plan.entries[j - 1].value * acc;
        const Mat2 expect = p[j] * rotation(theta * static_cast<double>(j));
        worst = std::max(worst, distance(acc, expect) / std::max(1.0, op_norm(p[j])));
    }
    return worst;
}

Mat2 plan_product(const Cocycle& a, const FiniteBase& base, const PerturbPlan& plan) {
    Mat2 prod = Mat2::identity();
    std::size_t z = plan.x;
    std::size_t e = 0;
    for (long long j = 0; j < plan.length; ++j, z = base.forward(z)) {
        if (e < plan.entries.size() && plan.entries[e].offset == j) {
            prod = plan.entries[e].value * prod;
            ++e;
        } else {
            prod = a(z) * prod;
        }
    }
    return prod;
}

// ---------------------------------------------------------------------------

PerturbationContext::PerturbationContext(const Cocycle& a, const FiniteBase& base, const Constants& k,
                                         unsigned threads)
    : a_(&a), base_(&base), k_(k), table_(a, base) {
    if (k.m < 2) throw InvalidInput("context: m must be >= 2");
    if (!(k.delta > 0.0)) throw InvalidInput("context: delta must be > 0");
    const std::size_t n = base.n_points();
    gamma_ = gamma_m(table_, k.m);
    usable_ = IndicatorSet(n);
    coeffs_.assign(n, Coeffs{});
    choice_.assign(n, CaseChoice{});
    const std::vector<std::size_t> pts = gamma_.points();
    std::vector<std::uint8_t> ok(pts.size(), 0);
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const std::size_t y = pts[i];
        try {
            const PerturbPlan p = eu_to_es(table_, y, k_);
            Mat2 lp = Mat2::identity();
            std::size_t e = 0;
            std::size_t z = y;
            for (long long j = 0; j < k_.m; ++j, z = base_->forward(z)) {
                if (e < p.entries.size() && p.entries[e].offset == j) lp = p.entries[e++].value * lp;
                else lp = (*a_)(z) * lp;
            }
            const Vec2 uz = table_.eu(z), sz = table_.es(z);
            const double d = cross(uz, sz);
            const Vec2 iu = lp * table_.eu(y), is = lp * table_.es(y);
            Coeffs c;
            c.p1 = cross(iu, sz) / d;
            c.q1 = cross(uz, iu) / d;
            c.p2 = cross(is, sz) / d;
            c.q2 = cross(uz, is) / d;
            c.log_k = 0.5 * std::log(c.p2 * c.p2 + c.q1 * c.q1 + c.q2 * c.q2);
            coeffs_[y] = c;
            choice_[y] = {p.tag, p.j0, p.j1};
            ok[i] = 1;
        } catch (const Error&) {
        }
    });
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (ok[i]) usable_.insert(pts[i]);
    for (std::size_t c = 0; c < base.cycles().size(); ++c)
        members_.push_back(std::make_unique<CycleMembers>(base, usable_, c));
}

std::size_t PerturbationContext::case_count(CaseTag t) const {
    std::size_t n = 0;
    for (std::size_t y = 0; y < usable_.size(); ++y)
        if (usable_.contains(y) && choice_[y].tag == t) ++n;
    return n;
}

long long PerturbationContext::splice_time(std::size_t x, long long n) const {
    const long long span = n - k_.m;
    if (span < 1) return -1;
    return recurrence_find(*members_[base_->cycle_of(x)], base_->position_of(x), span, 0.5, k_.gamma);
}

namespace {

// log |V_w K V_x^{-1}| with K = exp(scale) * k, columns of V the unit (u, s) vectors.
double framed_log_norm(const Vec2& ux, const Vec2& sx, const Vec2& uw, const Vec2& sw, const Mat2& k, double scale) {
    const Mat2 vw{uw.x, sw.x, uw.y, sw.y};
    const double dx = cross(ux, sx);
    const Mat2 vx_inv{sx.y / dx, -sx.x / dx, -ux.y / dx, ux.x / dx};
    const double n = op_norm(vw * k * vx_inv);
    if (!(n > 0.0)) return -std::numeric_limits<double>::infinity();
    return scale + std::log(n);
}

}  // namespace

double PerturbationContext::trivial_log_norm(std::size_t x, long long n) const {
    if (!table_.has_splitting(x)) return plain_log_norm(x, n);
    const Segment s = table_.segment(x, n);
    const std::size_t w = base_->iterate(x, n);
    const double top = std::max(s.log_u, s.log_s);
    const Mat2 k = Mat2::diag(s.sign_u * std::exp(s.log_u - top), s.sign_s * std::exp(s.log_s - top));
    return framed_log_norm(table_.eu(x), table_.es(x), table_.eu(w), table_.es(w), k, top);
}

double PerturbationContext::spliced_log_norm(std::size_t x, long long n, long long l) const {
    const std::size_t y = base_->iterate(x, l);
    const std::size_t z = base_->iterate(y, k_.m);
    const std::size_t w = base_->iterate(x, n);
    const Segment h = table_.segment(x, l);
    const Segment t = table_.segment(z, n - l - k_.m);
    const Coeffs& c = coeffs_[y];
    const double e01 = t.log_u + h.log_s, e10 = t.log_s + h.log_u, e11 = t.log_s + h.log_s;
    double top = -std::numeric_limits<double>::infinity();
    if (c.p2 != 0.0) top = std::max(top, e01);
    if (c.q1 != 0.0) top = std::max(top, e10);
    if (c.q2 != 0.0) top = std::max(top, e11);
    if (!std::isfinite(top)) return top;
    const Mat2 k{0.0, h.sign_s * t.sign_u * c.p2 * std::exp(e01 - top),
                 h.sign_u * t.sign_s * c.q1 * std::exp(e10 - top), h.sign_s * t.sign_s * c.q2 * std::exp(e11 - top)};
    return framed_log_norm(table_.eu(x), table_.es(x), table_.eu(w), table_.es(w), k, top);
}

double PerturbationContext::plain_log_norm(std::size_t x, long long n) const {
    RenormalizedProduct p;
    std::size_t z = x;
    for (long long j = 0; j < n; ++j, z = base_->forward(z)) p.push((*a_)(z));
    return p.log_norm();
}

double PerturbationContext::ml2_log_norm(std::size_t x, long long n) const {
    if (n < 1) return std::numeric_limits<double>::infinity();
    if (table_.lambda(x) < k_.delta) return trivial_log_norm(x, n);
    const long long l = splice_time(x, n);
    if (l < 0) return std::numeric_limits<double>::infinity();
    return spliced_log_norm(x, n, l);
}

bool PerturbationContext::ml2_ok(std::size_t x, long long n) const {
    return ml2_log_norm(x, n) < static_cast<double>(n) * k_.delta - 1e-6;
}

long long PerturbationContext::last_failure(std::size_t x, long long hi, long long lo) const {
    lo = std::max<long long>(lo, 1);
    if (hi < lo) return 0;
    if (table_.lambda(x) >= k_.delta) return last_failure_spliced(x, hi, lo);
    if (!table_.has_splitting(x)) {
        RenormalizedProduct p;
        std::size_t z = x;
        long long worst = 0;
        for (long long n = 1; n <= hi; ++n, z = base_->forward(z)) {
            p.push((*a_)(z));
            if (n >= lo && !(p.log_norm() < static_cast<double>(n) * k_.delta - 1e-6)) worst = n;
        }
        return worst;
    }
    for (long long n = hi; n >= lo; --n)
        if (!ml2_ok(x, n)) return n;
    return 0;
}

long long PerturbationContext::compute_n(std::size_t x, long long n_cap) const {
    if (n_cap < 1) throw InvalidInput("compute_N: n_cap must be >= 1");
    const long long f = last_failure(x, n_cap, 1);
    if (f == n_cap) return -1;
    return f + 1;
}

std::vector<long long> PerturbationContext::compute_n_all(long long n_cap, unsigned threads) const {
    std::vector<long long> out(base_->n_points(), -1);
    parallel_for(out.size(), threads, [&](std::size_t x) { out[x] = compute_n(x, n_cap); });
    return out;
}

std::vector<long long> PerturbationContext::extend_n_all(const std::vector<long long>& previous, long long old_cap,
                                                         long long n_cap, unsigned threads) const {
    if (previous.size() != base_->n_points() || n_cap < old_cap) throw InvalidInput("extend_n_all: bad arguments");
    std::vector<long long> out(previous.size(), -1);
    parallel_for(out.size(), threads, [&](std::size_t x) {
        const long long f = last_failure(x, n_cap, old_cap + 1);
        if (f == n_cap) out[x] = -1;
        else if (f > 0) out[x] = f + 1;
        else out[x] = previous[x] < 0 ? old_cap + 1 : previous[x];
    });
    return out;
}

// Downward scan with an incremental nearest-member cursor and a Frobenius upper
// bound on the framed norm; the exact norm is only evaluated when the bound fails.
// Decisions match ml2_ok exactly.
long long PerturbationContext::last_failure_spliced(std::size_t x, long long hi, long long lo) const {
    const CycleMembers& mem = *members_[base_->cycle_of(x)];
    if (mem.empty()) return hi;
    const auto& pos = mem.positions();
    const long long cnt = static_cast<long long>(pos.size());
    const long long len = static_cast<long long>(mem.cycle_length());
    const long long p = static_cast<long long>(base_->position_of(x));
    const long long s0 = std::lower_bound(pos.begin(), pos.end(), static_cast<std::size_t>(p)) - pos.begin();
    // j-th member offset from x, for any integer j (wraps over whole cycles)
    auto off = [&](long long j) {
        const long long q = j >= 0 ? (s0 + j) / cnt : -((cnt - 1 - (s0 + j)) / cnt);
        const long long r = s0 + j - q * cnt;
        return static_cast<long long>(pos[r]) - p + q * len;
    };
    const double log_frame = std::log(2.0 / std::abs(cross(table_.eu(x), table_.es(x))));
    const double t = 0.5, g = k_.gamma;
    long long j = -1;
    bool init = false;
    for (long long n = hi; n >= lo; --n) {
        const long long span = n - k_.m;
        bool ok = false;
        if (span >= 1) {
            const double dn = static_cast<double>(span);
            long long lo = std::max<long long>(0, static_cast<long long>(std::floor((t - g) * dn)));
            long long hi = std::min<long long>(span, static_cast<long long>(std::ceil((t + g) * dn)));
            while (lo <= hi && !(std::abs(static_cast<double>(lo) / dn - t) < g)) ++lo;
            while (hi >= lo && !(std::abs(static_cast<double>(hi) / dn - t) < g)) --hi;
            long long l = -1;
            if (lo <= hi) {
                const double target = t * dn;
                const long long split = std::clamp(static_cast<long long>(std::floor(target)), lo - 1, hi);
                if (!init) {
                    j = -1;
                    while (off(j + 1) <= split) ++j;
                    init = true;
                }
                while (off(j + 1) <= split) ++j;
                while (off(j) > split) --j;
                long long below = off(j), above = off(j + 1);
                if (below < lo) below = -1;
                if (above > hi) above = -1;
                if (below < 0) l = above;
                else if (above < 0) l = below;
                else l = std::abs(static_cast<double>(above) - target) < std::abs(static_cast<double>(below) - target) ? above : below;
            }
            if (l >= 0) {
                const double limit = static_cast<double>(n) * k_.delta - 1e-6;
                const std::size_t y = base_->iterate(x, l);
                const Segment h = table_.segment(x, l);
                const Segment tl = table_.segment(base_->iterate(y, k_.m), n - l - k_.m);
                const double top = std::max({tl.log_u + h.log_s, tl.log_s + h.log_u, tl.log_s + h.log_s});
                if (top + coeffs_[y].log_k + log_frame < limit) ok = true;
                else ok = spliced_log_norm(x, n, l) < limit;
            }
        }
        if (!ok) return n;
    }
    return 0;
}


unsigned PerturbationContext::bits_for(std::size_t x, long long n) const {
    if (!table_.has_splitting(x)) return 128;
    const long long l = std::max<long long>(0, splice_time(x, n));
    const long long tail = std::max<long long>(0, n - l - k_.m);
    const Segment h = table_.segment(x, l);
    const Segment t = table_.segment(base_->iterate(x, l + k_.m), tail);
    const double mag = std::abs(h.log_u) + std::abs(h.log_s) + std::abs(t.log_u) + std::abs(t.log_s);
    return bits_for_cancellation(mag, 128);
}

HVec2 PerturbationContext::hp_eu(std::size_t y, unsigned bits) const {
    if (!table_.has_splitting(y)) throw NoSplitting("hp_eu: no splitting");
    const double need = -static_cast<double>(bits) * kLn2 - 8.0;
    const long long cap = 64LL * static_cast<long long>(base_->cycle_length(y)) + 100000;
    long long kk = 1;
    while (table_.log_delta(base_->iterate(y, -kk), kk) > need) {
        if (++kk > cap) throw ContractViolation("hp_eu: forward iteration does not converge");
    }
    std::size_t z = base_->iterate(y, -kk);
    HVec2 v = to_hp(table_.eu(z));
    for (long long j = 0; j < kk; ++j, z = base_->forward(z)) v = lift_sl2((*a_)(z)) * v;
    v = normalized(v);
    // keep the sign of the double table vector
    if (dot(v, to_hp(table_.eu(y))) < 0) v = HpFloat(-1) * v;
    return v;
}

HVec2 PerturbationContext::hp_es(std::size_t z, unsigned bits) const {
    if (!table_.has_splitting(z)) throw NoSplitting("hp_es: no splitting");
    const double need = -static_cast<double>(bits) * kLn2 - 8.0;
    const long long cap = 64LL * static_cast<long long>(base_->cycle_length(z)) + 100000;
    long long kk = 1;
    while (table_.log_delta(z, kk) > need) {
        if (++kk > cap) throw ContractViolation("hp_es: backward iteration does not converge");
    }
    std::size_t p = base_->iterate(z, kk);
    HVec2 v = to_hp(table_.es(p));
    for (long long j = 0; j < kk; ++j) {
        p = base_->backward(p);
        const HMat2 m = lift_sl2((*a_)(p));
        v = HMat2{m.d, -m.b, -m.c, m.a} * v;
    }
    v = normalized(v);
    if (dot(v, to_hp(table_.es(z))) < 0) v = HpFloat(-1) * v;
    return v;
}

PerturbationContext::HpSplice PerturbationContext::hp_splice(std::size_t y, unsigned bits) const {
    if (!usable_.contains(y)) throw PreconditionError("hp_splice: point is not a usable Gamma_m point");
    PrecisionScope scope(bits);
    return hp_splice(y, bits, hp_eu(y, bits), hp_es(base_->iterate(y, k_.m), bits));
}

PerturbationContext::HpSplice PerturbationContext::hp_splice(std::size_t y, unsigned bits, const HVec2& eu,
                                                             const HVec2& es_end) const {
    if (!usable_.contains(y)) throw PreconditionError("hp_splice: point is not a usable Gamma_m point");
    PrecisionScope scope(bits);
    const long long m = k_.m;
    WindowData<HpFloat> w;
    std::size_t z = y;
    for (long long j = 0; j < m; ++j, z = base_->forward(z)) w.a.push_back(lift_sl2((*a_)(z)));
    w.eu.push_back(eu);
    for (long long j = 0; j < m; ++j) w.eu.push_back(normalized(w.a[j] * w.eu.back()));
    std::vector<HVec2> es_rev{es_end};
    for (long long j = m - 1; j >= 0; --j) {
        const HMat2& a = w.a[j];
        es_rev.push_back(normalized(HMat2{a.d, -a.b, -a.c, a.a} * es_rev.back()));
    }
    w.es.assign(es_rev.rbegin(), es_rev.rend());

    const CaseChoice c = choice_[y];
    detail::SpliceResult<HpFloat> r;
    switch (c.tag) {
        case CaseTag::I: r = detail::case1_kernel(w, c.j0, kAlignTol); break;
        case CaseTag::II: r = detail::case2_kernel(w, c.j0, c.j1, k_.alpha2, kAlignTol); break;
        default: r = detail::case3_kernel(w, k_.e_bound, kAlignTol); break;
    }
    HpSplice out;
    out.bits = bits;
    out.choice = c;
    out.l = std::move(r.l);
    out.theta = std::move(r.theta);
    out.flag = std::move(r.flag);
    out.changed = std::move(r.changed);
    out.alignment_error = static_cast<double>(r.misalignment);
    for (const HMat2& l : out.l) out.rounded.push_back(to_double(l));
    return out;
}

PerturbPlan PerturbationContext::ml2_sequence(std::size_t x, long long n, unsigned bits) const {
    if (x >= base_->n_points()) throw InvalidInput("ml2_sequence: point out of range");
    if (n < 1) throw InvalidInput("ml2_sequence: n must be >= 1");
    PerturbPlan p;
    p.x = x;
    p.length = n;
    p.m = k_.m;
    const double bound = static_cast<double>(n) * k_.delta;
    const double lambda = table_.lambda(x);
    if (lambda < k_.delta) {
        p.tag = lambda == 0.0 ? CaseTag::TrivialZero : CaseTag::TrivialSmallLambda;
        p.log_norm = plain_log_norm(x, n);
        if (!(p.log_norm < bound))
            throw NTooSmall("ml2_sequence: |A^n| = exp(" + std::to_string(p.log_norm) + ") is not below exp(n delta)");
        return p;
    }
    if (members_[base_->cycle_of(x)]->empty())
        throw PreconditionError("ml2_sequence: the cycle of x meets no usable Gamma_m point", lambda);
    const long long l = splice_time(x, n);
    if (l < 0) throw NTooSmall("ml2_sequence: no return to Gamma_m near n/2 for n = " + std::to_string(n));
    if (bits == 0) bits = bits_for(x, n);
    const std::size_t y = base_->iterate(x, l);
    const HpSplice sp = hp_splice(y, bits);
    p.tag = sp.choice.tag;
    p.splice_offset = l;
    p.j0 = sp.choice.j0;
    p.j1 = sp.choice.j1;
    p.precision_bits = bits;
    p.alignment_error = sp.alignment_error;

    PrecisionScope scope(bits);
    HMat2 prod = HMat2::identity();
    std::size_t z = x;
    for (long long j = 0; j < n; ++j, z = base_->forward(z)) {
        const long long off = j - l;
        if (off >= 0 && off < k_.m && sp.changed[off]) {
            prod = sp.l[off] * prod;
            PlanEntry e;
            e.offset = j;
            e.value = sp.rounded[off];
            e.flag = sp.flag[off];
            e.theta = sp.theta[off];
            e.distance = distance(e.value, (*a_)(z));
            p.max_distance = std::max(p.max_distance, e.distance);
            p.max_det_error = std::max(p.max_det_error, std::abs(e.value.det() - 1.0));
            p.entries.push_back(e);
            p.hp_values.push_back(sp.l[off]);
        } else {
            prod = lift_sl2((*a_)(z)) * prod;
        }
    }
    p.log_norm = log_op_norm(prod);
    if (!(p.max_distance <= k_.epsilon))
        throw ContractViolation("ml2_sequence: entry moved by " + std::to_string(p.max_distance) + " > eps");
    if (p.max_det_error > 1e-12) throw ContractViolation("ml2_sequence: rounded entry left SL(2)");
    if (!(p.log_norm < bound))
        throw NTooSmall("ml2_sequence: |A~^n| = exp(" + std::to_string(p.log_norm) + ") is not below exp(n delta) at n = " +
                        std::to_string(n));
    return p;
}

SweepResult ml2_sweep(const PerturbationContext& ctx, std::size_t x, long long n_lo, long long n_hi) {
    const FiniteBase& base = ctx.base();
    const Cocycle& a = ctx.cocycle();
    const Constants& k = ctx.constants();
    const SplittingTable& t = ctx.table();
    if (x >= base.n_points() || n_lo < 1 || n_hi < n_lo) throw InvalidInput("ml2_sweep: bad range");
    SweepResult out;
    out.x = x;
    out.n_lo = n_lo;
    out.n_hi = n_hi;
    const bool trivial = t.lambda(x) < k.delta;
    double mag = 0.0;
    if (t.has_splitting(x)) {
        for (long long n = n_lo; n <= n_hi; ++n) {
            const long long l = trivial ? 0 : std::max<long long>(0, ctx.splice_time(x, n));
            mag = std::max(mag, t.segment(x, n).log_u + 2.0 * t.segment(x, l + k.m).log_u);
        }
    }
    out.bits = bits_for_cancellation(mag, 160);
    PrecisionScope scope(out.bits);

    std::vector<HMat2> pre{HMat2::identity()};
    pre.reserve(static_cast<std::size_t>(n_hi) + 1);
    std::size_t z = x;
    for (long long j = 0; j < n_hi; ++j, z = base.forward(z)) pre.push_back(lift_sl2(a(z)) * pre.back());

    // E^u and E^s along the orbit segment, carried by the (contracting) direction
    // dynamics from one extended-precision seed at each end
    std::vector<HVec2> eu, es;
    if (!trivial) {
        const long long len = n_hi + k.m;
        eu.reserve(static_cast<std::size_t>(len) + 1);
        es.resize(static_cast<std::size_t>(len) + 1);
        eu.push_back(ctx.hp_eu(x, out.bits));
        z = x;
        for (long long j = 0; j < len; ++j, z = base.forward(z)) eu.push_back(normalized(lift_sl2(a(z)) * eu.back()));
        es[len] = ctx.hp_es(z, out.bits);
        for (long long j = len - 1; j >= 0; --j) {
            z = base.backward(z);
            const HMat2 m = lift_sl2(a(z));
            es[j] = normalized(HMat2{m.d, -m.b, -m.c, m.a} * es[j + 1]);
        }
    }

    struct Cached {
        HMat2 w;
        CaseTag tag;
        double max_distance;
    };
    std::map<std::size_t, Cached> cache;
    for (long long n = n_lo; n <= n_hi; ++n) {
        SweepPoint sp;
        sp.n = n;
        sp.bound = static_cast<double>(n) * k.delta;
        sp.fast_log_norm = ctx.ml2_log_norm(x, n);
        if (trivial) {
            sp.tag = t.lambda(x) == 0.0 ? CaseTag::TrivialZero : CaseTag::TrivialSmallLambda;
            sp.log_norm = log_op_norm(pre[n]);
        } else {
            sp.l = ctx.splice_time(x, n);
            if (sp.l < 0) {
                sp.log_norm = std::numeric_limits<double>::infinity();
                out.points.push_back(sp);
                ++out.violations;
                continue;
            }
            const std::size_t y = base.iterate(x, sp.l);
            auto it = cache.find(y);
            if (it == cache.end()) {
                const auto sl = ctx.hp_splice(y, out.bits, eu[sp.l], es[sp.l + k.m]);
                Cached c{HMat2::identity(), sl.choice.tag, 0.0};
                std::size_t q = y;
                for (long long j = 0; j < k.m; ++j, q = base.forward(q)) {
                    c.w = sl.l[j] * c.w;
                    if (sl.changed[j]) {
                        c.max_distance = std::max(c.max_distance, distance(sl.rounded[j], a(q)));
                        if (std::abs(sl.rounded[j].det() - 1.0) > 1e-12) c.max_distance = INFINITY;
                    }
                }
                it = cache.emplace(y, std::move(c)).first;
            }
            const HMat2& head = pre[sp.l];
            const HMat2& mid = pre[sp.l + k.m];
            const HMat2 mid_inv{mid.d, -mid.b, -mid.c, mid.a};
            sp.tag = it->second.tag;
            sp.max_distance = it->second.max_distance;
            sp.log_norm = log_op_norm(pre[n] * mid_inv * it->second.w * head);
            ++out.spliced;
        }
        sp.ok = sp.log_norm < sp.bound && sp.max_distance <= k.epsilon;
        if (!sp.ok) ++out.violations;
        out.points.push_back(sp);
    }
    return out;
}

PerturbPlan ml2_sequence(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n, const Constants& k) {
    PerturbationContext ctx(a, base, k);
    return ctx.ml2_sequence(x, n);
}

long long compute_n(const Cocycle& a, const FiniteBase& base, std::size_t x, const Constants& k, long long n_cap) {
    PerturbationContext ctx(a, base, k);
    return ctx.compute_n(x, n_cap);
}

// ---------------------------------------------------------------------------

Mat2 PerturbedCocycle::operator()(std::size_t x) const {
    auto it = rounded_.find(x);
    return it == rounded_.end() ? original_(x) : it->second;
}

HMat2 PerturbedCocycle::hp_value(std::size_t x) const {
    auto it = hp_.find(x);
    return it == hp_.end() ? lift_sl2(original_(x)) : it->second;
}

void PerturbedCocycle::set(std::size_t x, const Mat2& rounded, const HMat2& hp) {
    if (x >= original_.size()) throw InvalidInput("perturbed cocycle: point out of range");
    rounded_[x] = rounded;
    hp_[x] = hp;
}

void PerturbedCocycle::apply(const FiniteBase& base, const PerturbPlan& plan) {
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const PlanEntry& e = plan.entries[i];
        const std::size_t z = base.iterate(plan.x, e.offset);
        const HMat2 hp = i < plan.hp_values.size() ? plan.hp_values[i] : lift_sl2(e.value);
        set(z, e.value, hp);
    }
}

Cocycle PerturbedCocycle::materialize() const {
    std::vector<Mat2> v = original_.values();
    for (const auto& [x, m] : rounded_) v[x] = m;
    return Cocycle(std::move(v));
}

HpExponent integrated_le_hp(const PerturbedCocycle& a, const FiniteBase& base, unsigned bits) {
    check_compatible(a.original(), base);
    PrecisionScope scope(bits);
    HpExponent out;
    out.bits = bits;
    double sum = 0.0;
    const auto& cycles = base.cycles();
    for (std::size_t c = 0; c < cycles.size(); ++c) {
        HMat2 prod = HMat2::identity();
        for (std::size_t x : cycles[c]) prod = a.hp_value(x) * prod;
        CycleExponent e;
        e.cycle = c;
        e.length = cycles[c].size();
        const HpFloat tr = abs(prod.trace());
        e.log_abs_trace = tr > 0 ? static_cast<double>(log(tr)) : -std::numeric_limits<double>::infinity();
        const HpFloat half = tr / 2;
        if (tr > HpFloat(2) + HpFloat(1e-12)) {
            e.hyperbolic = true;
            e.lambda = static_cast<double>(log(half + sqrt(half * half - 1))) / static_cast<double>(e.length);
        }
        sum += e.lambda * static_cast<double>(e.length);
        out.cycles.push_back(e);
    }
    out.le = sum / static_cast<double>(base.n_points());
    return out;
}

}  // namespace cocycle_forge

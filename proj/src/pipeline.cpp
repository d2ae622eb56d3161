#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cocycle_forge/castles.hpp"
#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/hyperbolicity.hpp"
#include "cocycle_forge/parallel.hpp"
#include "cocycle_forge/perturbation.hpp"

namespace cocycle_forge {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// #{x : N(x) > h or N(x) infinite}
std::size_t complement_count(const std::vector<long long>& n, long long h) {
    std::size_t c = 0;
    for (long long v : n)
        if (v < 0 || v > h) ++c;
    return c;
}

// Points x with T^j x outside Q for some j < horizon, counted exactly per cycle.
std::size_t g_complement_count(const FiniteBase& base, const IndicatorSet& q, long long horizon) {
    std::size_t bad = 0;
    for (const auto& cyc : base.cycles()) {
        const long long p = static_cast<long long>(cyc.size());
        long long last_out = -1;
        for (long long i = 0; i < p; ++i)
            if (!q.contains(cyc[i])) last_out = i;
        if (last_out < 0) continue;
        // dist[i] = smallest j >= 0 with cyc[i + j] outside Q, walking backwards around the cycle
        long long next_out = last_out + p;
        for (long long i = p - 1; i >= 0; --i) {
            if (!q.contains(cyc[i])) next_out = i;
            if (next_out - i < horizon) ++bad;
        }
    }
    return bad;
}

}  // namespace

TheoremBResult theorem_b_perturb(const Cocycle& a, const FiniteBase& base, double delta, double epsilon,
                                 const TheoremBOptions& opt) {
    const auto t_start = std::chrono::steady_clock::now();
    check_compatible(a, base);
    TheoremBResult res{PerturbedCocycle(a), {}};
    PerturbReport& r = res.report;
    r.seed = opt.seed;
    const Constants k = make_constants(a, epsilon, delta, opt.m);
    r.constants = k;
    r.le_before = integrated_le_exact(a, base).le;
    r.le_bound = (10.0 * k.c_log + 1.0) * delta;
    auto finish = [&] {
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    const Verdict v = dichotomy_report(a, base, k.m, delta, opt.threads);
    if (v.kind == VerdictKind::Uniform) {
        r.verdict = "refused-uniform";
        r.reason = "uniformly hyperbolic: " + v.reason;
        r.le_after = r.le_after_rounded = r.le_before;
        finish();
        return res;
    }
    if (v.kind == VerdictKind::Zero) {
        r.verdict = "trivial";
        r.reason = "integrated exponent already at most delta";
        r.le_after = r.le_after_rounded = r.le_before;
        finish();
        return res;
    }

    const PerturbationContext ctx(a, base, k, opt.threads);
    r.gamma_points = ctx.gamma().count();
    r.unusable_points = ctx.unusable_count();
    for (CaseTag t : {CaseTag::I, CaseTag::II, CaseTag::III}) r.case_histogram["gamma-" + to_string(t)] = ctx.case_count(t);

    const long long n_pts = static_cast<long long>(base.n_points());
    long long h_max = (static_cast<long long>(base.min_cycle_length()) - 1) / 3;
    if (opt.h_max > 0) h_max = std::min(h_max, opt.h_max);
    if (opt.n_cap > 0) h_max = std::min(h_max, opt.n_cap / 3);
    r.h_max = h_max;
    if (h_max < 1) {
        r.verdict = "infeasible";
        r.reason = "no H with 3H below the shortest cycle";
        finish();
        throw PipelineInfeasible(r.reason, r);
    }

    // Smallest H with mu(P_H^C) < delta^2. N(x) is computed against the cap 3 H_c,
    // with H_c doubled until such an H exists below it.
    const double budget = delta * delta * static_cast<double>(n_pts);
    std::vector<long long> nx;
    long long h = -1;
    long long h_c = opt.n_cap > 0 ? h_max : std::min<long long>(64, h_max);
    long long prev_cap = 0;
    for (;;) {
        const long long cap = opt.n_cap > 0 ? opt.n_cap : 3 * h_c;
        nx = prev_cap > 0 ? ctx.extend_n_all(nx, prev_cap, cap, opt.threads) : ctx.compute_n_all(cap, opt.threads);
        prev_cap = cap;
        r.n_cap = cap;
        r.p_curve.clear();
        const long long stride = std::max<long long>(1, h_c / 64);
        for (long long hh = 1; hh <= h_c; ++hh) {
            const std::size_t cnt = complement_count(nx, hh);
            if (hh % stride == 0 || hh == h_c)
                r.p_curve.emplace_back(hh, static_cast<double>(cnt) / static_cast<double>(n_pts));
            if (h < 0 && static_cast<double>(cnt) < budget) h = hh;
        }
        if (h > 0 || h_c >= h_max) break;
        h_c = std::min(2 * h_c, h_max);
    }
    {
        std::map<long long, std::size_t> hist;
        for (long long v2 : nx) ++hist[v2];
        r.n_histogram.assign(hist.begin(), hist.end());
    }
    if (h < 0) {
        r.verdict = "infeasible";
        r.reason = "mu(P_H^C) stays above delta^2 for every H <= " + std::to_string(h_c);
        finish();
        throw PipelineInfeasible(r.reason, r);
    }
    r.h = h;
    const std::size_t p_comp = complement_count(nx, h);
    r.p_complement = static_cast<double>(p_comp) / static_cast<double>(n_pts);

    IndicatorSet p_h(base.n_points());
    for (std::size_t x = 0; x < base.n_points(); ++x)
        if (nx[x] >= 0 && nx[x] <= h) p_h.insert(x);
    const std::size_t hz = static_cast<std::size_t>(h);
    const IndicatorSet b = maximal_disjoint_base(base, p_h, hz);
    if (!verify_maximal_base(base, p_h, b, hz)) throw ContractViolation("tower base is not maximal");
    const Castle q_hat = kakutani_castle(base, b);
    const Castle q = truncate_castle(q_hat, 3 * hz);
    r.three_delta = verify_3delta2(base, p_comp, q_hat, q, hz);
    r.q_hat_measure = q_hat.measure();
    r.q_measure = q.measure();
    const IndicatorSet q_cover = castle_cover(base, q);
    r.q_complement = 1.0 - q.measure();

    // Towers, ordered by base point.
    std::vector<std::pair<std::size_t, long long>> towers;
    for (const Tower& t : q.towers)
        for (std::size_t x : t.base_points) towers.emplace_back(x, static_cast<long long>(t.height));
    std::sort(towers.begin(), towers.end());

    unsigned bits = 128;
    for (const auto& [x, n] : towers) bits = std::max(bits, ctx.bits_for(x, n));
    r.max_bits = bits;

    for (const auto& [x, n] : towers) {
        TowerRecord tr;
        tr.base_point = x;
        tr.height = n;
        tr.bound = static_cast<double>(n) * delta;
        tr.fast_log_norm = ctx.ml2_log_norm(x, n);
        PerturbPlan plan = ctx.ml2_sequence(x, n, bits);
        tr.tag = plan.tag;
        tr.splice_offset = plan.splice_offset;
        tr.entries = static_cast<long long>(plan.entries.size());
        tr.log_norm = plan.log_norm;
        tr.bits = plan.precision_bits;
        r.max_perturbation = std::max(r.max_perturbation, plan.max_distance);
        r.max_det_error = std::max(r.max_det_error, plan.max_det_error);
        ++r.case_histogram["tower-" + to_string(plan.tag)];
        res.cocycle.apply(base, plan);
        r.towers.push_back(tr);
    }
    r.overrides = res.cocycle.override_count();
    for (const auto& [x, m] : res.cocycle.overrides()) {
        if (!(distance(m, a(x)) <= epsilon)) throw ContractViolation("override exceeds eps at point " + std::to_string(x));
        if (!is_sl2(m)) throw ContractViolation("override leaves SL(2) at point " + std::to_string(x));
    }

    // G = intersection of T^-j Q over j < N, N = H / delta
    r.g_n = static_cast<long long>(std::floor(static_cast<double>(h) / delta));
    const std::size_t g_bad = g_complement_count(base, q_cover, r.g_n);
    r.g_complement = static_cast<double>(g_bad) / static_cast<double>(n_pts);
    r.g_chain_bound = (1.0 + static_cast<double>(r.g_n) / (3.0 * static_cast<double>(h))) * r.q_complement;
    if (r.g_complement > r.g_chain_bound * (1.0 + 1e-12) + 1e-15)
        throw ContractViolation("mu(G^C) exceeds (1 + N/(3H)) mu(Q^C)");

    // Precision for the cycle products: tower cancellations plus the growth of
    // everything that is multiplied around them.
    double growth = 0.0;
    for (const TowerRecord& t : r.towers) growth += std::max(0.0, t.log_norm);
    for (std::size_t x = 0; x < base.n_points(); ++x)
        if (!q_cover.contains(x)) growth += std::log(op_norm(a(x)));
    const unsigned le_bits = bits + static_cast<unsigned>(std::ceil(growth / kLn2)) + 128;
    r.le_after = integrated_le_hp(res.cocycle, base, le_bits).le;
    r.max_bits = std::max(r.max_bits, le_bits);
    r.le_after_rounded = integrated_le_exact(res.cocycle.materialize(), base).le;

    if (opt.sample_n > 0) {
        PrecisionScope scope(le_bits);
        Rng rng(opt.seed);
        const int samples = 32;
        double sum = 0.0;
        for (int i = 0; i < samples; ++i) {
            std::size_t x = rng.below(base.n_points());
            HMat2 prod = HMat2::identity();
            for (long long j = 0; j < opt.sample_n; ++j, x = base.forward(x)) prod = res.cocycle.hp_value(x) * prod;
            sum += log_op_norm(prod);
        }
        r.sampled_n = opt.sample_n;
        r.sampled_le = sum / (samples * static_cast<double>(opt.sample_n));
    }

    r.verdict = "perturbed";
    finish();
    return res;
}

}  // namespace cocycle_forge

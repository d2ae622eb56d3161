#include "cocycle_forge/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/parallel.hpp"

namespace cocycle_forge {

namespace {

Vec2 eigenvector(const Mat2& m, double mu) {
    const Vec2 v1{m.b, mu - m.a};
    const Vec2 v2{mu - m.d, m.c};
    const Vec2 v = norm(v1) >= norm(v2) ? v1 : v2;
    if (!(norm(v) > 0.0)) throw ContractViolation("eigenvector: degenerate cycle product");
    return normalized(v);
}

Mat2 sl2_inverse(const Mat2& m) { return m.inverse(); }

}  // namespace

SplittingTable::SplittingTable(const Cocycle& a, const FiniteBase& base) : a_(&a), base_(&base) {
    check_compatible(a, base);
    cycles_ = cycle_exponents(a, base);
    const std::size_t n = base.n_points();
    eu_.assign(n, Vec2{});
    es_.assign(n, Vec2{});
    const auto& cycles = base.cycles();
    hyperbolic_.assign(cycles.size(), 0);
    pref_u_.resize(cycles.size());
    pref_s_.resize(cycles.size());
    close_u_.assign(cycles.size(), 1);
    close_s_.assign(cycles.size(), 1);

    for (std::size_t c = 0; c < cycles.size(); ++c) {
        if (!cycles_[c].hyperbolic) continue;
        hyperbolic_[c] = 1;
        const auto& cyc = cycles[c];
        const std::size_t p = cyc.size();

        RenormalizedProduct prod;
        for (std::size_t x : cyc) prod.push(a(x));
        prod.renormalize();
        const Mat2& mh = prod.normalized();
        const double tr = mh.trace();
        const double det = std::exp(-2.0 * prod.log_scale());
        const double disc = std::max(0.0, 0.25 * tr * tr - det);
        const double mu_u = 0.5 * tr + std::copysign(std::sqrt(disc), tr);
        const double mu_s = det / mu_u;
        const Vec2 vu = eigenvector(mh, mu_u);
        const Vec2 vs = eigenvector(mh, mu_s);

        std::vector<double>& pu = pref_u_[c];
        std::vector<double>& ps = pref_s_[c];
        pu.assign(p + 1, 0.0);
        ps.assign(p + 1, 0.0);

        Vec2 u = vu;
        for (std::size_t i = 0; i < p; ++i) {
            eu_[cyc[i]] = u;
            const Vec2 w = a(cyc[i]) * u;
            const double g = norm(w);
            pu[i + 1] = pu[i] + std::log(g);
            u = (1.0 / g) * w;
        }
        close_u_[c] = dot(u, vu) >= 0.0 ? 1 : -1;
        closure_error_ = std::max(closure_error_, sin_angle(u, vu));

        std::vector<double> gain_s(p);
        Vec2 s = vs;
        for (std::size_t i = p; i-- > 0;) {
            const Vec2 w = sl2_inverse(a(cyc[i])) * s;
            const double g = norm(w);
            gain_s[i] = -std::log(g);
            s = (1.0 / g) * w;
            es_[cyc[i]] = s;
        }
        close_s_[c] = dot(vs, es_[cyc[0]]) >= 0.0 ? 1 : -1;
        closure_error_ = std::max(closure_error_, sin_angle(vs, es_[cyc[0]]));
        for (std::size_t i = 0; i < p; ++i) ps[i + 1] = ps[i] + gain_s[i];
    }
}

Splitting SplittingTable::splitting(std::size_t x) const {
    if (!has_splitting(x)) throw NoSplitting("no Oseledets splitting at point " + std::to_string(x) + " (zero exponent)");
    return {Dir::of(eu_[x]), Dir::of(es_[x])};
}

double SplittingTable::angle(std::size_t x) const {
    if (!has_splitting(x)) throw NoSplitting("no Oseledets splitting at point " + std::to_string(x));
    return std::atan2(std::abs(cross(eu_[x], es_[x])), std::abs(dot(eu_[x], es_[x])));
}

Segment SplittingTable::segment(std::size_t x, long long k) const {
    const std::size_t c = base_->cycle_of(x);
    if (!hyperbolic_[c]) throw NoSplitting("segment: zero-exponent cycle");
    if (k < 0) throw InvalidInput("segment: k must be >= 0");
    const long long p = static_cast<long long>(base_->cycles()[c].size());
    const long long i = static_cast<long long>(base_->position_of(x));
    const long long q = (i + k) / p, r = (i + k) % p;
    const auto& pu = pref_u_[c];
    const auto& ps = pref_s_[c];
    Segment s;
    s.log_u = static_cast<double>(q) * pu[p] + pu[r] - pu[i];
    s.log_s = static_cast<double>(q) * ps[p] + ps[r] - ps[i];
    s.sign_u = (close_u_[c] < 0 && (q & 1)) ? -1 : 1;
    s.sign_s = (close_s_[c] < 0 && (q & 1)) ? -1 : 1;
    return s;
}

double SplittingTable::log_delta(std::size_t x, long long m) const {
    const Segment s = segment(x, m);
    return s.log_s - s.log_u;
}

double SplittingTable::delta(std::size_t x, long long m) const { return std::exp(log_delta(x, m)); }

Splitting oseledets(const Cocycle& a, const FiniteBase& base, std::size_t x) {
    SplittingTable t(a, base);
    return t.splitting(x);
}

Splitting oseledets(const CircleCocycle& a, const CircleBase& base, double x, long long window,
                    long long* window_used) {
    const double target = 0.5 * std::log(1e6);
    long long w = window;
    if (w <= 0) {
        RenormalizedProduct p;
        double y = x;
        w = 0;
        while (w < 10000) {
            p.push(a(y));
            y = base.forward(y);
            ++w;
            if (p.log_norm() >= target) break;
        }
    }
    if (window_used) *window_used = w;
    RenormalizedProduct fwd;
    double y = x;
    for (long long j = 0; j < w; ++j, y = base.forward(y)) fwd.push(a(y));
    fwd.renormalize();
    if (!(fwd.log_norm() / static_cast<double>(w) > 1e-3))
        throw NoSplitting("oseledets: finite-time exponent below 1e-3");
    RenormalizedProduct back;
    double z = base.iterate(x, -w);
    for (long long j = 0; j < w; ++j, z = base.forward(z)) back.push(a(z));
    back.renormalize();
    const SingularData sf = singular_data(fwd.normalized());
    const SingularData sb = singular_data(back.normalized());
    return {sb.u_max, sf.v_min};
}

double delta_ratio(const Cocycle& a, const FiniteBase& base, std::size_t x, long long m) {
    if (m < 0) throw InvalidInput("delta_ratio: m must be >= 0");
    SplittingTable t(a, base);
    if (!t.has_splitting(x)) throw NoSplitting("delta_ratio: zero-exponent point");
    return t.delta(x, m);
}

IndicatorSet gamma_m(const SplittingTable& table, long long m) {
    if (m < 1) throw InvalidInput("gamma_m: m must be >= 1");
    const std::size_t n = table.base().n_points();
    IndicatorSet out(n);
    const double threshold = std::log(0.5);
    for (std::size_t x = 0; x < n; ++x)
        if (table.has_splitting(x) && table.log_delta(x, m) >= threshold) out.insert(x);
    return out;
}

IndicatorSet gamma_m(const Cocycle& a, const FiniteBase& base, long long m) {
    SplittingTable t(a, base);
    return gamma_m(t, m);
}

IndicatorSet omega_m(const SplittingTable& table, long long m) {
    return table.base().saturation(gamma_m(table, m));
}

IndicatorSet oplus_set(const SplittingTable& table) {
    IndicatorSet out(table.base().n_points());
    for (std::size_t x = 0; x < out.size(); ++x)
        if (table.has_splitting(x)) out.insert(x);
    return out;
}

HmReport h_m_diagnostics(const SplittingTable& table, long long m, long long horizon) {
    if (m < 1) throw InvalidInput("h_m_diagnostics: m must be >= 1");
    const FiniteBase& base = table.base();
    const IndicatorSet omega = omega_m(table, m);
    HmReport r;
    r.m = m;
    std::vector<std::size_t> hm;
    for (std::size_t x = 0; x < base.n_points(); ++x)
        if (table.has_splitting(x) && !omega.contains(x)) hm.push_back(x);
    r.h_points = hm.size();
    r.h_measure = static_cast<double>(hm.size()) / static_cast<double>(base.n_points());
    r.empty = hm.empty();
    if (hm.empty()) return r;

    double log_tau_m = -INFINITY;
    double min_angle = INFINITY;
    for (std::size_t x : hm) {
        log_tau_m = std::max(log_tau_m, table.log_delta(x, m));
        min_angle = std::min(min_angle, table.angle(x));
    }
    const double log_tau = log_tau_m / static_cast<double>(m);
    double log_k = 0.0;
    for (std::size_t x : hm)
        for (long long rr = 1; rr < m; ++rr)
            log_k = std::max(log_k, table.log_delta(x, rr) - static_cast<double>(rr) * log_tau);
    r.tau = std::exp(log_tau);
    r.k = std::exp(log_k);
    r.angle_floor = min_angle;
    const double log_k1 = 0.5 * (log_k - std::log(std::sin(min_angle)));
    const double log_tau1 = 0.5 * log_tau;
    r.k1 = std::exp(log_k1);
    r.tau1 = std::exp(log_tau1);

    double worst = INFINITY;
    long long used = 0;
    for (std::size_t x : hm) {
        const long long p = static_cast<long long>(base.cycle_length(x));
        const long long hz = horizon > 0 ? std::min(horizon, p) : p;
        used = std::max(used, hz);
        for (long long i = 1; i * m <= hz; ++i) {
            const double margin = -static_cast<double>(i) * std::log(2.0) - table.log_delta(x, i * m);
            if (margin < -1e-9) r.halving_holds = false;
        }
        for (long long n = 1; n <= hz; ++n) {
            const double bound = log_k1 + static_cast<double>(n) * log_tau1;
            const double ms = bound - table.segment(x, n).log_s;
            // |A^{-n}(x) restricted to E^u| = 1 / |A^n(T^{-n}x) restricted to E^u|
            const double mu = bound + table.segment(base.iterate(x, -n), n).log_u;
            worst = std::min({worst, ms, mu});
        }
    }
    r.checked_horizon = used;
    r.worst_log_margin = worst;
    r.contraction_holds = worst >= -1e-9;
    return r;
}

CircleGammaSample gamma_m_sampled(const CircleCocycle& a, const CircleBase& base, long long m,
                                  long long samples, std::uint64_t seed, long long window) {
    if (m < 1) throw InvalidInput("gamma_m: m must be >= 1");
    if (samples < 1) throw InvalidInput("gamma_m: samples must be >= 1");
    CircleGammaSample out;
    out.seed = seed;
    Rng rng(seed);
    out.min_margin = INFINITY;
    const double threshold = std::log(0.5);
    for (long long i = 0; i < samples; ++i) {
        const double x = rng.uniform();
        out.points.push_back(x);
        long long used = 0;
        try {
            const Splitting s = oseledets(a, base, x, window, &used);
            const Mat2 am = product(a, base, x, m);
            const double ld = std::log(norm(am * s.es.unit())) - std::log(norm(am * s.eu.unit()));
            out.log_delta.push_back(ld);
            out.exponent.push_back(finite_time_le(a, base, x, used));
            out.min_margin = std::min(out.min_margin, std::abs(ld - threshold));
            if (ld >= threshold) ++out.members;
        } catch (const NoSplitting&) {
            out.log_delta.push_back(std::numeric_limits<double>::quiet_NaN());
            out.exponent.push_back(finite_time_le(a, base, x, used > 0 ? used : 1));
        }
    }
    out.measure = static_cast<double>(out.members) / static_cast<double>(samples);
    return out;
}

}  // namespace cocycle_forge

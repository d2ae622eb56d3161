#include "cocycle_forge/discontinuity.hpp"

#include <algorithm>
#include <cmath>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"

namespace cocycle_forge {

DiscontinuityReport discontinuity_demo(const std::vector<double>& h, const FiniteBase& base, double epsilon,
                                       unsigned threads) {
    if (h.size() != base.n_points()) throw InvalidInput("discontinuity_demo: h does not match the base");
    if (!(epsilon > 0.0)) throw InvalidInput("discontinuity_demo: eps must be positive");
    for (double v : h)
        if (!std::isfinite(v)) throw InvalidInput("discontinuity_demo: h has a non-finite value");
    if (base.cycles().size() < 2)
        throw PreconditionError("discontinuity_demo: a single cycle is uniquely ergodic, nothing to demonstrate");

    DiscontinuityReport r;
    r.points = base.n_points();
    r.epsilon = epsilon;
    const double n = static_cast<double>(r.points);
    const Cocycle a = diagonal_cocycle(h);
    r.le = integrated_le_exact(a, base).le;
    double total = 0.0;
    for (double v : h) total += v;
    r.integral_h = total / n;

    const bool zero_h = std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; });
    const auto& cyc = base.cycles();
    const auto exps = cycle_exponents(a, base);
    for (std::size_t c = 0; c < cyc.size(); ++c) {
        CycleMean m;
        m.cycle = c;
        m.length = cyc[c].size();
        m.weight = static_cast<double>(m.length) / n;
        double s = 0.0;
        for (std::size_t x : cyc[c]) s += h[x];
        m.mean_h = s / static_cast<double>(m.length);
        m.lambda = exps[c].lambda;
        r.le_formula += m.weight * std::abs(m.mean_h);
        r.cycles.push_back(m);
    }
    if (zero_h) {
        r.status = "zero-h";
        return r;
    }

    // Zero-mean cycle: the smallest |mean|, required to vanish up to rounding.
    std::size_t best = 0;
    for (std::size_t c = 1; c < cyc.size(); ++c)
        if (std::abs(r.cycles[c].mean_h) < std::abs(r.cycles[best].mean_h)) best = c;
    double scale = 0.0;
    for (std::size_t x : cyc[best]) scale = std::max(scale, std::abs(h[x]));
    const double p = static_cast<double>(cyc[best].size());
    if (std::abs(r.cycles[best].mean_h) > 1e-12 * std::max(1.0, scale))
        throw PreconditionError("discontinuity_demo: no cycle where h has zero mean", r.cycles[best].mean_h);
    r.zero_cycle = static_cast<long long>(best);
    r.zero_cycle_measure = r.cycles[best].weight;

    // S_n(x) = P[i + n] - P[i] with P the prefix sums; zero mean makes P periodic,
    // so |S_n| <= max P - min P for every n.
    const std::vector<std::size_t>& c = cyc[best];
    std::vector<double> prefix{0.0};
    for (std::size_t x : c) prefix.push_back(prefix.back() + h[x]);
    const auto [lo, hi] = std::minmax_element(prefix.begin(), prefix.end() - 1);
    r.max_partial_sum = *hi - *lo + p * 1e-15 * std::max(1.0, scale);
    r.n_eps = static_cast<long long>(std::floor(r.max_partial_sum / epsilon)) + 1;
    // Direct check over one full period past n_eps (later n repeat the same sums
    // with a larger divisor).
    const std::size_t len = c.size();
    const long long span = std::min<long long>(static_cast<long long>(len), 4096);
    for (std::size_t i = 0; i < len; i += std::max<std::size_t>(1, len / 64)) {
        double s = 0.0;
        for (long long k = 0; k < r.n_eps; ++k) s += h[c[(i + static_cast<std::size_t>(k)) % len]];
        for (long long k = r.n_eps; k < r.n_eps + span; ++k) {
            if (!(std::abs(s) / static_cast<double>(k) < epsilon))
                throw ContractViolation("discontinuity_demo: Birkhoff bound fails on the zero-mean cycle");
            s += h[c[(i + static_cast<std::size_t>(k)) % len]];
            ++r.n_checked;
        }
    }

    r.cone_search = certify_uniform(a, base, ConeGrid{}, threads);
    r.uniform_certified = r.cone_search.certified;
    if (r.uniform_certified) throw ContractViolation("discontinuity_demo: cocycle with a zero-exponent cycle was certified");
    r.status = "demo";
    return r;
}

}  // namespace cocycle_forge

#include "cocycle_forge/castles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

std::size_t Castle::point_count() const {
    std::size_t n = 0;
    for (const Tower& t : towers) n += t.height * t.base_points.size();
    return n;
}

double Castle::measure() const {
    return n_points ? static_cast<double>(point_count()) / static_cast<double>(n_points) : 0.0;
}

std::size_t Castle::max_height() const {
    std::size_t h = 0;
    for (const Tower& t : towers) h = std::max(h, t.height);
    return h;
}

namespace {

void guard_horizon(const FiniteBase& base, std::size_t horizon) {
    if (horizon < 1) throw InvalidInput("castle horizon must be >= 1");
    if (base.min_cycle_length() <= horizon)
        throw InvalidBase("aperiodicity guard: a cycle of length " + std::to_string(base.min_cycle_length()) +
                          " does not exceed H = " + std::to_string(horizon));
}

}  // namespace

IndicatorSet maximal_disjoint_base(const FiniteBase& base, const IndicatorSet& s, std::size_t horizon) {
    if (s.size() != base.n_points()) throw InvalidInput("maximal_disjoint_base: size mismatch");
    guard_horizon(base, horizon);
    IndicatorSet b(base.n_points());
    std::vector<std::uint8_t> occupied(base.n_points(), 0);
    for (std::size_t x = 0; x < base.n_points(); ++x) {
        if (!s.contains(x)) continue;
        bool free = true;
        std::size_t y = x;
        for (std::size_t j = 0; j < horizon; ++j, y = base.forward(y)) {
            if (occupied[y]) {
                free = false;
                break;
            }
        }
        if (!free) continue;
        b.insert(x);
        y = x;
        for (std::size_t j = 0; j < horizon; ++j, y = base.forward(y)) occupied[y] = 1;
    }
    return b;
}

bool verify_maximal_base(const FiniteBase& base, const IndicatorSet& s, const IndicatorSet& b,
                         std::size_t horizon) {
    std::vector<std::uint8_t> occupied(base.n_points(), 0);
    for (std::size_t x = 0; x < base.n_points(); ++x) {
        if (!b.contains(x)) continue;
        if (!s.contains(x)) return false;
        std::size_t y = x;
        for (std::size_t j = 0; j < horizon; ++j, y = base.forward(y)) {
            if (occupied[y]) return false;
            occupied[y] = 1;
        }
    }
    for (std::size_t x = 0; x < base.n_points(); ++x) {
        if (!s.contains(x) || b.contains(x)) continue;
        bool collides = false;
        std::size_t y = x;
        for (std::size_t j = 0; j < horizon && !collides; ++j, y = base.forward(y)) collides = occupied[y] != 0;
        if (!collides) return false;
    }
    return true;
}

Castle kakutani_castle(const FiniteBase& base, const IndicatorSet& b) {
    if (b.size() != base.n_points()) throw InvalidInput("kakutani_castle: size mismatch");
    if (b.empty()) throw InvalidInput("kakutani_castle: empty base");
    std::map<std::size_t, std::vector<std::size_t>> by_height;
    Castle q;
    q.n_points = base.n_points();
    for (const auto& cyc : base.cycles()) {
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < cyc.size(); ++i)
            if (b.contains(cyc[i])) hits.push_back(i);
        if (hits.empty()) {
            q.uncovered += cyc.size();
            continue;
        }
        for (std::size_t k = 0; k < hits.size(); ++k) {
            const std::size_t next = k + 1 < hits.size() ? hits[k + 1] : hits[0] + cyc.size();
            by_height[next - hits[k]].push_back(cyc[hits[k]]);
        }
    }
    for (auto& [h, pts] : by_height) {
        std::sort(pts.begin(), pts.end());
        q.towers.push_back({h, std::move(pts)});
    }
    castle_cover(base, q);
    return q;
}

Castle truncate_castle(const Castle& q_hat, std::size_t max_height) {
    Castle q;
    q.n_points = q_hat.n_points;
    q.uncovered = q_hat.uncovered;
    for (const Tower& t : q_hat.towers)
        if (t.height <= max_height) q.towers.push_back(t);
    return q;
}

IndicatorSet castle_cover(const FiniteBase& base, const Castle& castle) {
    IndicatorSet cover(base.n_points());
    for (const Tower& t : castle.towers) {
        for (std::size_t x : t.base_points) {
            std::size_t y = x;
            for (std::size_t j = 0; j < t.height; ++j, y = base.forward(y)) {
                if (cover.contains(y)) throw ContractViolation("castle floors overlap at point " + std::to_string(y));
                cover.insert(y);
            }
        }
    }
    return cover;
}

ThreeDeltaCheck verify_3delta2(const FiniteBase& base, std::size_t complement_points, const Castle& q_hat,
                               const Castle& q, std::size_t horizon) {
    (void)horizon;
    ThreeDeltaCheck c;
    const std::size_t qh = q_hat.point_count(), qq = q.point_count();
    if (qq > qh) throw InvalidInput("verify_3delta2: Q is larger than Q_hat");
    c.lhs_points = qh - qq;
    c.rhs_points = 3 * complement_points;
    const double n = static_cast<double>(base.n_points());
    c.lhs = static_cast<double>(c.lhs_points) / n;
    c.rhs = static_cast<double>(c.rhs_points) / n;
    c.holds = c.lhs_points <= c.rhs_points;
    if (!c.holds)
        throw ContractViolation("3delta2 bound violated: mu(Q_hat - Q) = " + std::to_string(c.lhs) +
                                " > 3 mu(P_H^C) = " + std::to_string(c.rhs));
    return c;
}

ThreeDeltaCheck verify_3delta2(const FiniteBase& base, double complement_measure, const Castle& q_hat,
                               const Castle& q, std::size_t horizon) {
    if (!(complement_measure >= 0.0 && complement_measure <= 1.0)) throw InvalidInput("verify_3delta2: measure outside [0, 1]");
    const auto pts = static_cast<std::size_t>(std::llround(complement_measure * static_cast<double>(base.n_points())));
    return verify_3delta2(base, pts, q_hat, q, horizon);
}

}  // namespace cocycle_forge

#pragma once

#include <cstddef>
#include <vector>

#include "cocycle_forge/base.hpp"

namespace cocycle_forge {

// Floors T^j(base_points), 0 <= j < height.
struct Tower {
    std::size_t height = 0;
    std::vector<std::size_t> base_points;
};

struct Castle {
    std::size_t n_points = 0;
    std::vector<Tower> towers;  // ascending height
    // Points of cycles the base never meets.
    std::size_t uncovered = 0;

    std::size_t point_count() const;
    double measure() const;
    std::size_t max_height() const;
};

// Greedy ascending maximal B in S with B, TB, ..., T^{H-1}B pairwise disjoint.
IndicatorSet maximal_disjoint_base(const FiniteBase& base, const IndicatorSet& s, std::size_t horizon);
// Exhaustive check of containment, disjointness and maximality.
bool verify_maximal_base(const FiniteBase& base, const IndicatorSet& s, const IndicatorSet& b,
                         std::size_t horizon);

Castle kakutani_castle(const FiniteBase& base, const IndicatorSet& b);
Castle truncate_castle(const Castle& q_hat, std::size_t max_height);

// Marks every floor point; throws ContractViolation on any overlap.
IndicatorSet castle_cover(const FiniteBase& base, const Castle& castle);

struct ThreeDeltaCheck {
    std::size_t lhs_points = 0;  // |Q_hat - Q|
    std::size_t rhs_points = 0;  // 3 |P_H^C|
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// mu(Q_hat - Q) <= 3 mu(P_H^C), in exact integer counts.
ThreeDeltaCheck verify_3delta2(const FiniteBase& base, std::size_t complement_points, const Castle& q_hat,
                               const Castle& q, std::size_t horizon);
ThreeDeltaCheck verify_3delta2(const FiniteBase& base, double complement_measure, const Castle& q_hat,
                               const Castle& q, std::size_t horizon);

}  // namespace cocycle_forge

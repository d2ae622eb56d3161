#pragma once

#include <cstdint>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/parallel.hpp"

namespace cocycle_forge {

Cocycle constant_cocycle(std::size_t n, const Mat2& m);
Cocycle rotation_cocycle(std::size_t n, double theta);
// A(x) = diag(e^h(x), e^-h(x)).
Cocycle diagonal_cocycle(const std::vector<double>& h);

// Along each cycle, consecutive blocks of `block` points: the first `rotations`
// (default half the block) carry a rotation R_phi with phi drawn per block, the
// rest diag(h, 1/h).
struct IslandParams {
    std::size_t block = 16;
    std::size_t rotations = 0;
    double hyperbolic = 4.0;
    double angle_lo = 0.2;
    double angle_hi = 2.9415926535897931;  // pi - 0.2
};

Cocycle elliptic_island(const FiniteBase& base, std::uint64_t seed, const IslandParams& params = {});

// Seeded SL(2) matrix with entries of moderate size (for property tests).
Mat2 random_sl2(Rng& rng, double spread = 1.0);
Cocycle random_cocycle(std::size_t n, std::uint64_t seed, double spread = 1.0);

}  // namespace cocycle_forge

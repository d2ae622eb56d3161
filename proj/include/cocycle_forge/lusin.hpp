#pragma once

#include <cstdint>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/perturbation.hpp"
#include "cocycle_forge/precise.hpp"

namespace cocycle_forge {

// Continuous SL(2) cocycle over the rotation by 1/G. Cell i = [i/G, (i+1)/G)
// carries the value A_i on its plateau; where A_i != A_{i+1} the last `collar`
// fraction of the cell interpolates to A_{i+1} in polar coordinates (rotation
// angle and the logarithm of the positive factor), which stays in SL(2).
// Offsets s in [0, 1 - collar) see exactly the finite cocycle over cyclic(G).
class GridCocycle {
public:
    GridCocycle(Cocycle cells, double collar);

    std::size_t cells() const { return cells_.size(); }
    double collar() const { return collar_; }
    const Cocycle& values() const { return cells_; }
    CircleBase base() const { return CircleBase(1.0 / static_cast<double>(cells())); }
    FiniteBase finite_base() const { return FiniteBase::cyclic(cells()); }
    bool jumps(std::size_t i) const { return jump_[i] != 0; }

    // u in [0, 1)
    Mat2 operator()(double u) const;
    Mat2 at(std::size_t cell, double s) const;
    HMat2 hp_at(std::size_t cell, double s) const;
    CircleCocycle as_circle() const;

private:
    Cocycle cells_;
    double collar_;
    std::vector<std::uint8_t> jump_;
};

// t in [0, 1]; t = 0 gives a0, t = 1 gives a1 (up to rounding).
Mat2 polar_interpolate(const Mat2& a0, const Mat2& a1, double t);
HMat2 polar_interpolate(const HMat2& a0, const HMat2& a1, double t);

struct LusinOptions {
    double epsilon = 0.3;
    double delta = 0.4;
    long long n_horizon = 0;  // N; gamma = delta / N
    int samples = 256;
    std::uint64_t seed = 1;
    unsigned bits = 0;        // 0: from the cycle growth
    int collar_nodes = 16;
};

struct LusinReport {
    std::size_t cells = 0;
    double epsilon = 0.0, delta = 0.0;
    long long n_horizon = 0;
    double gamma = 0.0;
    double collar_a = 0.0, collar_j = 0.0;
    std::size_t a_jumps = 0, j_jumps = 0;
    double collar_measure = 0.0;  // mu{J' != J}
    int retries = 0;
    double max_j = 0.0;           // sup |J| over cells
    double max_det_error = 0.0;   // |det(I + J'') - 1| over nodes
    double max_det_error_b = 0.0; // |det B - 1| over nodes
    double max_j11 = 0.0;
    double j11_bound = 0.0;       // 2 eps
    double k_constant = 0.0;      // sup |J''| / eps
    double sup_norm_a = 0.0;
    double max_b_minus_a = 0.0;
    double b_minus_a_bound = 0.0; // K |A| eps
    double c = 0.0;               // |B|_inf (1 + 1e-9)
    double boundary_jump = 0.0;
    double max_node_jump = 0.0;
    double node_spacing = 0.0;
    double lipschitz = 0.0;       // estimated on a 4x finer node grid
    std::size_t nodes = 0;
    unsigned bits = 0;
    double le_plateau = 0.0;
    double le_collar_max = 0.0;
    double le_quadrature = 0.0;
    double le_bound_collar = 0.0; // (1 - w) le_plateau + w log C
    double sampled_le = 0.0;
    int samples = 0;
    int collar_samples = 0;
    std::uint64_t seed = 0;
    double le_target = 0.0;       // (1 + log C) delta
};

struct DetCheck {
    std::size_t cell = 0;
    double s = 0.0;
    double det_i_plus_j = 0.0;
    double det_b = 0.0;
    double j11 = 0.0;
};

class BridgedCocycle {
public:
    BridgedCocycle(GridCocycle a, std::vector<Mat2> j, std::vector<HMat2> j_hp, double collar_j);

    const GridCocycle& original() const { return a_; }
    std::size_t cells() const { return a_.cells(); }
    double collar_j() const { return collar_j_; }
    bool jumps(std::size_t i) const { return jump_[i] != 0; }

    Mat2 j_prime(std::size_t cell, double s) const;
    Mat2 j_second(std::size_t cell, double s) const;
    Mat2 at(std::size_t cell, double s) const;
    Mat2 operator()(double u) const;
    HMat2 hp_at(std::size_t cell, double s) const;
    CircleCocycle as_circle() const;
    // Integrated exponent of the cocycle seen at offset s, from an
    // extended-precision product around the grid.
    double offset_le(double s, unsigned bits) const;

private:
    GridCocycle a_;
    std::vector<Mat2> j_;
    std::vector<HMat2> j_hp_;
    double collar_j_;
    std::vector<std::uint8_t> jump_;
};

struct LusinResult {
    BridgedCocycle b;
    LusinReport report;
    std::vector<DetCheck> transcript;
};

// B = A (I + J''), with A~ = A (I + J) on the plateaus and J made continuous
// on collars of total measure below gamma. A~ lives on cyclic(G).
LusinResult lusin_bridge(const GridCocycle& a_cont, const PerturbedCocycle& a_tilde, const LusinOptions& opt);

}  // namespace cocycle_forge

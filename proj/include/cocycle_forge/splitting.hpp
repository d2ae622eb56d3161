#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/linalg2.hpp"

namespace cocycle_forge {

struct Splitting {
    Dir eu;
    Dir es;
};

// Growth of the unit Oseledets vectors along an orbit segment:
// A^k(x) u_x = sign_u * exp(log_u) * u_{T^k x}, same for s.
struct Segment {
    double log_u = 0.0;
    double log_s = 0.0;
    int sign_u = 1;
    int sign_s = 1;
};

// Oseledets data of a cocycle on every hyperbolic cycle of a FiniteBase. E^u/E^s
// are the eigen-directions of the cycle product, carried along the cycle with
// sign-consistent unit vectors; log gains are prefix-summed so every segment
// query is O(1).
class SplittingTable {
public:
    SplittingTable(const Cocycle& a, const FiniteBase& base);

    const FiniteBase& base() const { return *base_; }
    const Cocycle& cocycle() const { return *a_; }

    bool has_splitting(std::size_t x) const { return hyperbolic_[base_->cycle_of(x)] != 0; }
    Splitting splitting(std::size_t x) const;
    const Vec2& eu(std::size_t x) const { return eu_[x]; }
    const Vec2& es(std::size_t x) const { return es_[x]; }
    double angle(std::size_t x) const;  // angle between E^u(x) and E^s(x)

    Segment segment(std::size_t x, long long k) const;
    double log_delta(std::size_t x, long long m) const;
    double delta(std::size_t x, long long m) const;

    const std::vector<CycleExponent>& cycle_info() const { return cycles_; }
    double lambda(std::size_t x) const { return cycles_[base_->cycle_of(x)].lambda; }
    // Largest angular mismatch when an Oseledets vector is carried once around its cycle.
    double max_closure_error() const { return closure_error_; }

private:
    const Cocycle* a_;
    const FiniteBase* base_;
    std::vector<CycleExponent> cycles_;
    std::vector<std::uint8_t> hyperbolic_;
    std::vector<Vec2> eu_, es_;
    // per cycle: prefix sums of log gains in cycle order (length p + 1), closure signs
    std::vector<std::vector<double>> pref_u_, pref_s_;
    std::vector<int> close_u_, close_s_;
    double closure_error_ = 0.0;
};

Splitting oseledets(const Cocycle& a, const FiniteBase& base, std::size_t x);
// Circle version: E^s from the most contracted right singular direction of
// A^w(x), E^u from the most expanded left singular direction of A^w(T^{-w}x).
// window <= 0 picks the smallest w with sigma_max^2 >= 1e6, capped at 1e4.
Splitting oseledets(const CircleCocycle& a, const CircleBase& base, double x, long long window = 0,
                    long long* window_used = nullptr);

double delta_ratio(const Cocycle& a, const FiniteBase& base, std::size_t x, long long m);

IndicatorSet gamma_m(const SplittingTable& table, long long m);
IndicatorSet gamma_m(const Cocycle& a, const FiniteBase& base, long long m);
// Cycle saturation of Gamma_m (inside the hyperbolic cycles).
IndicatorSet omega_m(const SplittingTable& table, long long m);
// Points of hyperbolic cycles.
IndicatorSet oplus_set(const SplittingTable& table);

struct HmReport {
    long long m = 0;
    std::size_t h_points = 0;
    double h_measure = 0.0;
    bool empty = true;
    double tau = 0.0;          // max Delta(x, m)^(1/m) over H_m
    double k = 1.0;            // Delta(x, n) <= K tau^n
    double angle_floor = 0.0;  // min angle(E^u, E^s) over H_m
    double k1 = 1.0;           // contraction constants K1 tau1^n
    double tau1 = 0.0;
    long long checked_horizon = 0;
    bool halving_holds = true;   // Delta(x, m i) <= 2^-i
    bool contraction_holds = true;
    double worst_log_margin = 0.0;  // min over checks of (log bound - log value)
};

HmReport h_m_diagnostics(const SplittingTable& table, long long m, long long horizon = -1);

struct CircleGammaSample {
    std::vector<double> points;
    std::vector<double> log_delta;  // NaN where no splitting
    std::vector<double> exponent;   // finite-time exponent estimate at each sample
    std::size_t members = 0;
    double measure = 0.0;
    double min_margin = 0.0;  // smallest |log Delta - log 1/2| over classified samples
    std::uint64_t seed = 0;
};

CircleGammaSample gamma_m_sampled(const CircleCocycle& a, const CircleBase& base, long long m,
                                  long long samples, std::uint64_t seed, long long window = 0);

}  // namespace cocycle_forge

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/linalg2.hpp"

namespace cocycle_forge {

// Tabulated SL(2,R) cocycle over a FiniteBase.
class Cocycle {
public:
    explicit Cocycle(std::vector<Mat2> values, double det_tol = 1e-12);

    std::size_t size() const { return values_.size(); }
    const Mat2& operator()(std::size_t x) const { return values_[x]; }
    const std::vector<Mat2>& values() const { return values_; }
    double sup_norm() const { return sup_norm_; }

private:
    std::vector<Mat2> values_;
    double sup_norm_ = 1.0;
};

// Cocycle over a circle rotation given by a formula.
class CircleCocycle {
public:
    CircleCocycle(std::function<Mat2(double)> f, std::size_t norm_grid = 4096);

    Mat2 operator()(double x) const { return f_(x); }
    // Estimated on a uniform grid (plus a small safety factor).
    double sup_norm() const { return sup_norm_; }

private:
    std::function<Mat2(double)> f_;
    double sup_norm_ = 1.0;
};

enum class ExponentMethod { ExactCycle, InfSubadditive, MonteCarlo };
std::string to_string(ExponentMethod m);

struct CycleExponent {
    std::size_t cycle = 0;
    std::size_t length = 0;
    double lambda = 0.0;
    double log_abs_trace = 0.0;  // log |tr A^p|
    bool hyperbolic = false;
};

struct ExponentReport {
    double le = 0.0;
    ExponentMethod method = ExponentMethod::ExactCycle;
    long long n_used = 0;
    long long samples = 0;
    std::uint64_t seed = 0;
    // a_n / n for n = 1..n_used (subadditive method only).
    std::vector<double> series;
    std::vector<CycleExponent> cycles;
};

void check_compatible(const Cocycle& a, const FiniteBase& base);

// A^n(x) = A(T^{n-1}x) ... A(x); A^0 = I; negative n through inverses along the backward orbit.
Mat2 product(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n);
Mat2 product(const CircleCocycle& a, const CircleBase& base, double x, long long n);

RenormalizedProduct log_product(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n,
                                int cadence = 32);

double finite_time_le(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n,
                      int cadence = 32);
double finite_time_le(const CircleCocycle& a, const CircleBase& base, double x, long long n,
                      int cadence = 32);

// log rho for an SL(2) matrix known as exp(log_scale) * m; 0 when |tr| <= 2 + 1e-12.
double log_spectral_radius(const Mat2& m, double log_scale, double* log_abs_trace = nullptr);

std::vector<CycleExponent> cycle_exponents(const Cocycle& a, const FiniteBase& base);
ExponentReport integrated_le_exact(const Cocycle& a, const FiniteBase& base);

ExponentReport integrated_le_subadditive(const Cocycle& a, const FiniteBase& base, long long n_max,
                                         unsigned threads = 1);
ExponentReport integrated_le_subadditive(const CircleCocycle& a, const CircleBase& base,
                                         long long n_max, long long samples, std::uint64_t seed,
                                         unsigned threads = 1);

// a_n = mean_x log |A^n(x)| for n = 1..n_max (exact mean on FiniteBase).
std::vector<double> log_norm_means(const Cocycle& a, const FiniteBase& base, long long n_max,
                                   unsigned threads = 1);

}  // namespace cocycle_forge

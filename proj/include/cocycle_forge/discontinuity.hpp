#pragma once

#include <string>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/hyperbolicity.hpp"

namespace cocycle_forge {

struct CycleMean {
    std::size_t cycle = 0;
    std::size_t length = 0;
    double weight = 0.0;  // mu(cycle)
    double mean_h = 0.0;
    double lambda = 0.0;  // exact exponent of diag(e^h, e^-h) on the cycle
};

struct DiscontinuityReport {
    std::string status;  // "demo" or "zero-h"
    std::size_t points = 0;
    std::vector<CycleMean> cycles;
    double integral_h = 0.0;
    double le = 0.0;          // integrated_le_exact
    double le_formula = 0.0;  // sum over cycles of mu(c) |mean_c h|
    long long zero_cycle = -1;
    double zero_cycle_measure = 0.0;
    double epsilon = 0.0;
    double max_partial_sum = 0.0;  // sup_{x in zero cycle, n} |S_n h(x)|
    long long n_eps = 0;           // |S_n h(x)| / n < eps for n >= n_eps on the zero cycle
    long long n_checked = 0;
    bool uniform_certified = false;
    CertifyResult cone_search;
};

// A(x) = diag(e^h(x), e^-h(x)) on a base with at least two cycles.
DiscontinuityReport discontinuity_demo(const std::vector<double>& h, const FiniteBase& base, double epsilon = 0.1,
                                       unsigned threads = 1);

}  // namespace cocycle_forge

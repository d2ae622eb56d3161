#include "cocycle_forge/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/parallel.hpp"

namespace cocycle_forge {

Cocycle::Cocycle(std::vector<Mat2> values, double det_tol) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidInput("Cocycle: no values");
    sup_norm_ = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const Mat2& m = values_[i];
        if (!is_finite(m)) throw InvalidInput("Cocycle: non-finite entry at point " + std::to_string(i));
        if (std::abs(m.det() - 1.0) > det_tol)
            throw InvalidInput("Cocycle: det != 1 at point " + std::to_string(i) + " (det = " + std::to_string(m.det()) + ")");
        sup_norm_ = std::max(sup_norm_, op_norm(m));
    }
}

CircleCocycle::CircleCocycle(std::function<Mat2(double)> f, std::size_t norm_grid) : f_(std::move(f)) {
    if (norm_grid == 0) throw InvalidInput("CircleCocycle: empty norm grid");
    double s = 0.0;
    for (std::size_t i = 0; i < norm_grid; ++i) {
        const Mat2 m = f_(static_cast<double>(i) / static_cast<double>(norm_grid));
        if (!is_finite(m)) throw InvalidInput("CircleCocycle: non-finite value");
        if (std::abs(m.det() - 1.0) > 1e-12) throw InvalidInput("CircleCocycle: det != 1");
        s = std::max(s, op_norm(m));
    }
    sup_norm_ = s;
}

std::string to_string(ExponentMethod m) {
    switch (m) {
        case ExponentMethod::ExactCycle: return "exact-cycle";
        case ExponentMethod::InfSubadditive: return "inf-subadditive";
        case ExponentMethod::MonteCarlo: return "monte-carlo";
    }
    return "unknown";
}

void check_compatible(const Cocycle& a, const FiniteBase& base) {
    if (a.size() != base.n_points())
        throw InvalidInput("cocycle has " + std::to_string(a.size()) + " values but the base has " +
                           std::to_string(base.n_points()) + " points");
}

Mat2 product(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n) {
    check_compatible(a, base);
    Mat2 m = Mat2::identity();
    if (n >= 0) {
        for (long long j = 0; j < n; ++j, x = base.forward(x)) m = a(x) * m;
    } else {
        for (long long j = 0; j < -n; ++j) {
            x = base.backward(x);
            m = a(x).inverse() * m;
        }
    }
    return m;
}

Mat2 product(const CircleCocycle& a, const CircleBase& base, double x, long long n) {
    Mat2 m = Mat2::identity();
    if (n >= 0) {
        for (long long j = 0; j < n; ++j, x = base.forward(x)) m = a(x) * m;
    } else {
        for (long long j = 0; j < -n; ++j) {
            x = base.backward(x);
            m = a(x).inverse() * m;
        }
    }
    return m;
}

RenormalizedProduct log_product(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n,
                                int cadence) {
    check_compatible(a, base);
    if (n < 0) throw InvalidInput("log_product: n must be >= 0");
    RenormalizedProduct p(cadence);
    for (long long j = 0; j < n; ++j, x = base.forward(x)) p.push(a(x));
    return p;
}

double finite_time_le(const Cocycle& a, const FiniteBase& base, std::size_t x, long long n, int cadence) {
    if (n < 1) throw InvalidInput("finite_time_le: n must be >= 1");
    return log_product(a, base, x, n, cadence).log_norm() / static_cast<double>(n);
}

double finite_time_le(const CircleCocycle& a, const CircleBase& base, double x, long long n, int cadence) {
    if (n < 1) throw InvalidInput("finite_time_le: n must be >= 1");
    RenormalizedProduct p(cadence);
    for (long long j = 0; j < n; ++j, x = base.forward(x)) p.push(a(x));
    return p.log_norm() / static_cast<double>(n);
}

double log_spectral_radius(const Mat2& m, double log_scale, double* log_abs_trace) {
    const double tr = std::abs(m.trace());
    const double lt = tr > 0.0 ? log_scale + std::log(tr) : -INFINITY;
    if (log_abs_trace) *log_abs_trace = lt;
    // L = log(|tr|/2); hyperbolic iff |tr| > 2 + 1e-12
    const double L = lt - std::log(2.0);
    if (!(L > std::log1p(0.5e-12))) return 0.0;
    return L + std::log1p(std::sqrt(-std::expm1(-2.0 * L)));
}

std::vector<CycleExponent> cycle_exponents(const Cocycle& a, const FiniteBase& base) {
    check_compatible(a, base);
    std::vector<CycleExponent> out;
    const auto& cycles = base.cycles();
    for (std::size_t c = 0; c < cycles.size(); ++c) {
        RenormalizedProduct p;
        for (std::size_t x : cycles[c]) p.push(a(x));
        p.renormalize();
        CycleExponent e;
        e.cycle = c;
        e.length = cycles[c].size();
        const double lr = log_spectral_radius(p.normalized(), p.log_scale(), &e.log_abs_trace);
        e.hyperbolic = lr > 0.0;
        e.lambda = lr / static_cast<double>(e.length);
        out.push_back(e);
    }
    return out;
}

ExponentReport integrated_le_exact(const Cocycle& a, const FiniteBase& base) {
    ExponentReport r;
    r.method = ExponentMethod::ExactCycle;
    r.cycles = cycle_exponents(a, base);
    double sum = 0.0;
    for (const auto& c : r.cycles) sum += c.lambda * static_cast<double>(c.length);
    r.le = sum / static_cast<double>(base.n_points());
    r.n_used = static_cast<long long>(base.n_points());
    return r;
}

namespace {

constexpr std::size_t kChunk = 64;

// Sum over items of per-item series, reduced chunk by chunk in index order.
template <class PerItem>
std::vector<double> chunked_series_sum(std::size_t items, long long n_max, unsigned threads, PerItem&& per_item) {
    const std::size_t chunks = (items + kChunk - 1) / kChunk;
    const std::size_t len = static_cast<std::size_t>(n_max);
    std::vector<std::vector<double>> partial(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::vector<double> acc(len, 0.0), row(len);
        const std::size_t lo = c * kChunk, hi = std::min(items, lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            per_item(i, row);
            for (std::size_t n = 0; n < len; ++n) acc[n] += row[n];
        }
        partial[c] = std::move(acc);
    });
    std::vector<double> total(len, 0.0);
    for (const auto& p : partial)
        for (std::size_t n = 0; n < len; ++n) total[n] += p[n];
    return total;
}

ExponentReport from_means(const std::vector<double>& means, ExponentMethod method) {
    ExponentReport r;
    r.method = method;
    r.le = INFINITY;
    for (std::size_t n = 0; n < means.size(); ++n) {
        const double v = means[n] / static_cast<double>(n + 1);
        r.series.push_back(v);
        r.le = std::min(r.le, v);
    }
    r.le = std::max(r.le, 0.0);
    r.n_used = static_cast<long long>(means.size());
    return r;
}

}  // namespace

std::vector<double> log_norm_means(const Cocycle& a, const FiniteBase& base, long long n_max, unsigned threads) {
    check_compatible(a, base);
    if (n_max < 1) throw InvalidInput("n_max must be >= 1");
    std::vector<double> sums = chunked_series_sum(base.n_points(), n_max, threads, [&](std::size_t x, std::vector<double>& row) {
        RenormalizedProduct p;
        std::size_t y = x;
        for (long long n = 0; n < n_max; ++n, y = base.forward(y)) {
            p.push(a(y));
            row[static_cast<std::size_t>(n)] = p.log_norm();
        }
    });
    for (double& s : sums) s /= static_cast<double>(base.n_points());
    return sums;
}

ExponentReport integrated_le_subadditive(const Cocycle& a, const FiniteBase& base, long long n_max, unsigned threads) {
    return from_means(log_norm_means(a, base, n_max, threads), ExponentMethod::InfSubadditive);
}

ExponentReport integrated_le_subadditive(const CircleCocycle& a, const CircleBase& base, long long n_max,
                                         long long samples, std::uint64_t seed, unsigned threads) {
    if (n_max < 1) throw InvalidInput("n_max must be >= 1");
    if (samples < 1) throw InvalidInput("samples must be >= 1");
    std::vector<double> starts(static_cast<std::size_t>(samples));
    Rng rng(seed);
    for (double& s : starts) s = rng.uniform();
    std::vector<double> sums = chunked_series_sum(starts.size(), n_max, threads, [&](std::size_t i, std::vector<double>& row) {
        RenormalizedProduct p;
        double y = starts[i];
        for (long long n = 0; n < n_max; ++n, y = base.forward(y)) {
            p.push(a(y));
            row[static_cast<std::size_t>(n)] = p.log_norm();
        }
    });
    for (double& s : sums) s /= static_cast<double>(samples);
    ExponentReport r = from_means(sums, ExponentMethod::MonteCarlo);
    r.samples = samples;
    r.seed = seed;
    return r;
}

}  // namespace cocycle_forge

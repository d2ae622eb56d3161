#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace cocycle_forge {

// --threads flag, then COCYCLE_FORGE_THREADS, then 1.
unsigned resolve_threads(std::optional<unsigned> flag);

// Calls f(i) for i in [0, n) over static contiguous chunks. Callers write to
// disjoint slots and reduce afterwards in index order, so results never depend
// on the thread count.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t t = std::min<std::size_t>(threads, n);
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t k = 0; k < t; ++k) {
        const std::size_t lo = n * k / t, hi = n * (k + 1) / t;
        pool.emplace_back([&, k, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// mt19937_64 with a portable 53-bit uniform (std distributions are
// implementation-defined, their output is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

private:
    std::mt19937_64 eng_;
};

// Independent stream per index, for parallel sampling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cocycle_forge

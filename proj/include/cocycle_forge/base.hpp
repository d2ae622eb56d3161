#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace cocycle_forge {

class IndicatorSet {
public:
    IndicatorSet() = default;
    explicit IndicatorSet(std::size_t n, bool fill = false) : bits_(n, fill ? 1 : 0) {}

    std::size_t size() const { return bits_.size(); }
    bool contains(std::size_t i) const { return bits_[i] != 0; }
    void insert(std::size_t i) { bits_[i] = 1; }
    void erase(std::size_t i) { bits_[i] = 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

    std::size_t count() const;
    double measure() const;  // uniform measure |S| / N
    bool empty() const { return count() == 0; }
    std::vector<std::size_t> points() const;

    IndicatorSet complement() const;
    IndicatorSet operator&(const IndicatorSet& o) const;
    IndicatorSet operator|(const IndicatorSet& o) const;
    bool operator==(const IndicatorSet& o) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

// Permutation of {0..N-1} with the uniform measure.
class FiniteBase {
public:
    explicit FiniteBase(std::vector<std::size_t> sigma);
    static FiniteBase cyclic(std::size_t n, std::size_t shift = 1);

    std::size_t n_points() const { return sigma_.size(); }
    const std::vector<std::size_t>& sigma() const { return sigma_; }
    const std::vector<std::size_t>& sigma_inv() const { return sigma_inv_; }

    std::size_t forward(std::size_t x) const { return sigma_[x]; }
    std::size_t backward(std::size_t x) const { return sigma_inv_[x]; }
    // T^k x for any integer k, O(1) through the cycle tables.
    std::size_t iterate(std::size_t x, long long k) const;

    // Each cycle listed in orbit order, starting from its smallest point.
    const std::vector<std::vector<std::size_t>>& cycles() const { return cycles_; }
    std::size_t cycle_of(std::size_t x) const { return cycle_id_[x]; }
    std::size_t position_of(std::size_t x) const { return position_[x]; }
    std::size_t cycle_length(std::size_t x) const { return cycles_[cycle_id_[x]].size(); }
    std::size_t min_cycle_length() const;

    // Every cycle longer than 3H.
    bool effectively_aperiodic(std::size_t horizon) const;

    // Union of the cycles meeting S.
    IndicatorSet saturation(const IndicatorSet& s) const;

private:
    std::vector<std::size_t> sigma_;
    std::vector<std::size_t> sigma_inv_;
    std::vector<std::vector<std::size_t>> cycles_;
    std::vector<std::size_t> cycle_id_;
    std::vector<std::size_t> position_;
};

// x -> frac(x + alpha) with Lebesgue measure.
class CircleBase {
public:
    explicit CircleBase(double alpha);
    static CircleBase golden();

    double alpha() const { return alpha_; }
    double forward(double x) const;
    double backward(double x) const;
    double iterate(double x, long long k) const;

private:
    double alpha_;
};

constexpr long long kOrbitGuard = 1'000'000'000LL;

std::vector<std::size_t> orbit(const FiniteBase& base, std::size_t x, long long n);
std::vector<double> orbit(const CircleBase& base, double x, long long n);

double birkhoff_average(const FiniteBase& base, const std::function<double(std::size_t)>& f,
                        std::size_t x, long long n);
double birkhoff_average(const CircleBase& base, const std::function<double(double)>& f, double x,
                        long long n);

struct RecurrenceThreshold {
    double density = 0.0;   // a: density of Gamma along the cycle
    double epsilon = 0.0;   // tolerance on |s_n/n - a|
    long long n0 = 0;       // |s_n/n - a| < epsilon for all n >= n0
    long long value = 0;    // N0
};

RecurrenceThreshold recurrence_threshold(const FiniteBase& base, const IndicatorSet& gamma_set,
                                         std::size_t x, double gamma);

// Smallest-distance l in [0, n] with T^l x in Gamma and |l/n - t| < gamma; -1 if none.
long long recurrence_find(const FiniteBase& base, const IndicatorSet& gamma_set, std::size_t x,
                          long long n, double t, double gamma);
class CycleMembers;
// Same search against a prebuilt member view; `position` is x's cycle position.
long long recurrence_find(const CycleMembers& members, std::size_t position, long long n, double t,
                          double gamma);
// As above, but absence is a contract violation (callers guarantee n >= N0).
long long recurrence_locate(const FiniteBase& base, const IndicatorSet& gamma_set, std::size_t x,
                            long long n, double t, double gamma);

// Orbit-ordered view of Gamma on one cycle: answers nearest-member queries in O(log).
class CycleMembers {
public:
    CycleMembers(const FiniteBase& base, const IndicatorSet& members, std::size_t cycle);

    bool empty() const { return positions_.empty(); }
    std::size_t cycle_length() const { return length_; }
    const std::vector<std::size_t>& positions() const { return positions_; }

    // Offset l in [lo, hi] from cycle position p with member at p + l, nearest to
    // `target` (ties: smaller l); -1 if none.
    long long nearest(std::size_t p, long long lo, long long hi, double target) const;
    // Smallest member offset >= lo from position p, or -1.
    long long next_at_or_after(std::size_t p, long long lo) const;
    // Largest member offset <= hi from position p (hi >= 0), or -1.
    long long last_at_or_before(std::size_t p, long long hi) const;

private:
    std::size_t length_;
    std::vector<std::size_t> positions_;
};

}  // namespace cocycle_forge

#include "cocycle_forge/base.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

std::size_t IndicatorSet::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double IndicatorSet::measure() const {
    if (bits_.empty()) return 0.0;
    return static_cast<double>(count()) / static_cast<double>(bits_.size());
}

std::vector<std::size_t> IndicatorSet::points() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

IndicatorSet IndicatorSet::complement() const {
    IndicatorSet out(size());
    for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
    return out;
}

IndicatorSet IndicatorSet::operator&(const IndicatorSet& o) const {
    if (o.size() != size()) throw InvalidInput("IndicatorSet: size mismatch");
    IndicatorSet out(size());
    for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
    return out;
}

IndicatorSet IndicatorSet::operator|(const IndicatorSet& o) const {
    if (o.size() != size()) throw InvalidInput("IndicatorSet: size mismatch");
    IndicatorSet out(size());
    for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] | o.bits_[i];
    return out;
}

FiniteBase::FiniteBase(std::vector<std::size_t> sigma) : sigma_(std::move(sigma)) {
    const std::size_t n = sigma_.size();
    if (n == 0) throw InvalidBase("FiniteBase: empty permutation");
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    sigma_inv_.assign(n, kUnset);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = sigma_[i];
        if (j >= n) throw InvalidBase("FiniteBase: image " + std::to_string(j) + " out of range");
        if (sigma_inv_[j] != kUnset) throw InvalidBase("FiniteBase: not a bijection (repeated image " + std::to_string(j) + ")");
        sigma_inv_[j] = i;
    }
    cycle_id_.assign(n, kUnset);
    position_.assign(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
        if (cycle_id_[start] != kUnset) continue;
        std::vector<std::size_t> cyc;
        std::size_t x = start;
        do {
            cycle_id_[x] = cycles_.size();
            position_[x] = cyc.size();
            cyc.push_back(x);
            x = sigma_[x];
        } while (x != start);
        cycles_.push_back(std::move(cyc));
    }
}

FiniteBase FiniteBase::cyclic(std::size_t n, std::size_t shift) {
    if (n == 0) throw InvalidBase("cyclic: n must be positive");
    std::vector<std::size_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = (i + shift) % n;
    return FiniteBase(std::move(s));
}

std::size_t FiniteBase::iterate(std::size_t x, long long k) const {
    const auto& cyc = cycles_[cycle_id_[x]];
    const long long p = static_cast<long long>(cyc.size());
    long long pos = (static_cast<long long>(position_[x]) + k % p) % p;
    if (pos < 0) pos += p;
    return cyc[static_cast<std::size_t>(pos)];
}

std::size_t FiniteBase::min_cycle_length() const {
    std::size_t m = cycles_.front().size();
    for (const auto& c : cycles_) m = std::min(m, c.size());
    return m;
}

bool FiniteBase::effectively_aperiodic(std::size_t horizon) const {
    return min_cycle_length() > 3 * horizon;
}

IndicatorSet FiniteBase::saturation(const IndicatorSet& s) const {
    if (s.size() != n_points()) throw InvalidInput("saturation: size mismatch");
    std::vector<std::uint8_t> hit(cycles_.size(), 0);
    for (std::size_t i = 0; i < n_points(); ++i)
        if (s.contains(i)) hit[cycle_id_[i]] = 1;
    IndicatorSet out(n_points());
    for (std::size_t i = 0; i < n_points(); ++i)
        if (hit[cycle_id_[i]]) out.insert(i);
    return out;
}

CircleBase::CircleBase(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidBase("CircleBase: alpha must lie in (0, 1)");
}

CircleBase CircleBase::golden() { return CircleBase((std::sqrt(5.0) - 1.0) / 2.0); }

double CircleBase::forward(double x) const {
    double y = x + alpha_;
    if (y >= 1.0) y -= 1.0;
    return y;
}

double CircleBase::backward(double x) const {
    double y = x - alpha_;
    if (y < 0.0) y += 1.0;
    return y;
}

double CircleBase::iterate(double x, long long k) const {
    const long double shift = static_cast<long double>(k) * static_cast<long double>(alpha_);
    long double y = static_cast<long double>(x) + (shift - std::floor(shift));
    y -= std::floor(y);
    double out = static_cast<double>(y);
    if (out >= 1.0) out = 0.0;
    return out;
}

namespace {

void guard_length(long long n) {
    if (n > kOrbitGuard || n < -kOrbitGuard) throw InvalidInput("orbit length exceeds the 1e9 guard");
}

}  // namespace

std::vector<std::size_t> orbit(const FiniteBase& base, std::size_t x, long long n) {
    guard_length(n);
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(std::llabs(n)));
    if (n >= 0) {
        for (long long j = 0; j < n; ++j, x = base.forward(x)) out.push_back(x);
    } else {
        for (long long j = 0; j < -n; ++j, x = base.backward(x)) out.push_back(x);
    }
    return out;
}

std::vector<double> orbit(const CircleBase& base, double x, long long n) {
    guard_length(n);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::llabs(n)));
    if (n >= 0) {
        for (long long j = 0; j < n; ++j, x = base.forward(x)) out.push_back(x);
    } else {
        for (long long j = 0; j < -n; ++j, x = base.backward(x)) out.push_back(x);
    }
    return out;
}

double birkhoff_average(const FiniteBase& base, const std::function<double(std::size_t)>& f,
                        std::size_t x, long long n) {
    if (n < 1) throw InvalidInput("birkhoff_average: n must be >= 1");
    guard_length(n);
    double sum = 0.0;
    for (long long j = 0; j < n; ++j, x = base.forward(x)) sum += f(x);
    return sum / static_cast<double>(n);
}

double birkhoff_average(const CircleBase& base, const std::function<double(double)>& f, double x,
                        long long n) {
    if (n < 1) throw InvalidInput("birkhoff_average: n must be >= 1");
    guard_length(n);
    double sum = 0.0;
    for (long long j = 0; j < n; ++j, x = base.forward(x)) sum += f(x);
    return sum / static_cast<double>(n);
}

RecurrenceThreshold recurrence_threshold(const FiniteBase& base, const IndicatorSet& gamma_set,
                                         std::size_t x, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("recurrence_threshold: gamma must lie in (0, 1)");
    if (gamma_set.size() != base.n_points()) throw InvalidInput("recurrence_threshold: size mismatch");
    const auto& cyc = base.cycles()[base.cycle_of(x)];
    const long long p = static_cast<long long>(cyc.size());
    const std::size_t start = base.position_of(x);

    // prefix[r] = s_r(x) for r = 0..p
    std::vector<long long> prefix(static_cast<std::size_t>(p) + 1, 0);
    for (long long r = 0; r < p; ++r) {
        const std::size_t y = cyc[(start + static_cast<std::size_t>(r)) % cyc.size()];
        prefix[r + 1] = prefix[r] + (gamma_set.contains(y) ? 1 : 0);
    }
    const long long k = prefix[p];
    if (k == 0) throw NotInOmega("recurrence_threshold: the cycle of x never meets Gamma");

    RecurrenceThreshold out;
    out.density = static_cast<double>(k) / static_cast<double>(p);
    const double a = out.density;
    out.epsilon = a * gamma / (2.0 * (4.0 + gamma));

    // p * (s_n - n a) = p s_n - n k is periodic in n with period p.
    long long dmax = 0;
    for (long long r = 0; r < p; ++r) dmax = std::max(dmax, std::llabs(p * prefix[r] - r * k));
    // For n > dmax / (p epsilon) the deviation is below epsilon automatically.
    const double horizon = static_cast<double>(dmax) / (static_cast<double>(p) * out.epsilon);
    if (horizon > 4e9) throw Infeasible("recurrence_threshold: discrepancy scan horizon too large");
    const long long scan_to = static_cast<long long>(std::floor(horizon)) + 1;
    long long last_bad = 0;
    for (long long n = 1; n <= scan_to; ++n) {
        const long long q = n / p, r = n % p;
        const long long s_n = q * k + prefix[r];
        const double dev = std::abs(static_cast<double>(p * s_n - n * k)) / static_cast<double>(p * n);
        if (dev >= out.epsilon) last_bad = n;
    }
    out.n0 = last_bad + 1;
    const double bound = std::max(2.0 * static_cast<double>(out.n0) / (gamma * (a - out.epsilon)), 4.0 / gamma);
    out.value = static_cast<long long>(std::ceil(bound)) + 1;
    return out;
}

long long recurrence_find(const FiniteBase& base, const IndicatorSet& gamma_set, std::size_t x,
                          long long n, double t, double gamma) {
    const CycleMembers members(base, gamma_set, base.cycle_of(x));
    return recurrence_find(members, base.position_of(x), n, t, gamma);
}

long long recurrence_find(const CycleMembers& members, std::size_t position, long long n, double t,
                          double gamma) {
    if (n < 1) throw InvalidInput("recurrence_locate: n must be >= 1");
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("recurrence_locate: t must lie in [0, 1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("recurrence_locate: gamma must lie in (0, 1)");
    if (members.empty()) return -1;
    const double dn = static_cast<double>(n);
    long long lo = std::max<long long>(0, static_cast<long long>(std::floor((t - gamma) * dn)));
    long long hi = std::min<long long>(n, static_cast<long long>(std::ceil((t + gamma) * dn)));
    while (lo <= hi && !(std::abs(static_cast<double>(lo) / dn - t) < gamma)) ++lo;
    while (hi >= lo && !(std::abs(static_cast<double>(hi) / dn - t) < gamma)) --hi;
    if (lo > hi) return -1;
    return members.nearest(position, lo, hi, t * dn);
}

long long recurrence_locate(const FiniteBase& base, const IndicatorSet& gamma_set, std::size_t x,
                            long long n, double t, double gamma) {
    const long long l = recurrence_find(base, gamma_set, x, n, t, gamma);
    if (l < 0) throw ContractViolation("recurrence_locate: no admissible return time");
    if (!gamma_set.contains(base.iterate(x, l)) || !(std::abs(static_cast<double>(l) / static_cast<double>(n) - t) < gamma))
        throw ContractViolation("recurrence_locate: located time fails its own conditions");
    return l;
}

CycleMembers::CycleMembers(const FiniteBase& base, const IndicatorSet& members, std::size_t cycle)
    : length_(base.cycles()[cycle].size()) {
    const auto& cyc = base.cycles()[cycle];
    for (std::size_t i = 0; i < cyc.size(); ++i)
        if (members.contains(cyc[i])) positions_.push_back(i);
}

long long CycleMembers::next_at_or_after(std::size_t p, long long lo) const {
    if (positions_.empty()) return -1;
    const long long L = static_cast<long long>(length_);
    const long long abs_pos = static_cast<long long>(p) + std::max<long long>(lo, 0);
    const long long q = abs_pos / L, r = abs_pos % L;
    auto it = std::lower_bound(positions_.begin(), positions_.end(), static_cast<std::size_t>(r));
    long long hit;
    if (it == positions_.end()) hit = (q + 1) * L + static_cast<long long>(positions_.front());
    else hit = q * L + static_cast<long long>(*it);
    return hit - static_cast<long long>(p);
}

long long CycleMembers::last_at_or_before(std::size_t p, long long hi) const {
    if (positions_.empty() || hi < 0) return -1;
    const long long L = static_cast<long long>(length_);
    const long long abs_pos = static_cast<long long>(p) + hi;
    const long long q = abs_pos / L, r = abs_pos % L;
    auto it = std::upper_bound(positions_.begin(), positions_.end(), static_cast<std::size_t>(r));
    long long hit;
    if (it == positions_.begin()) hit = (q - 1) * L + static_cast<long long>(positions_.back());
    else hit = q * L + static_cast<long long>(*std::prev(it));
    const long long off = hit - static_cast<long long>(p);
    return off >= 0 ? off : -1;
}

long long CycleMembers::nearest(std::size_t p, long long lo, long long hi, double target) const {
    if (positions_.empty() || lo > hi) return -1;
    long long split = static_cast<long long>(std::floor(target));
    split = std::clamp(split, lo - 1, hi);
    long long below = last_at_or_before(p, split);
    if (below < lo) below = -1;
    long long above = next_at_or_after(p, split + 1);
    if (above > hi) above = -1;
    if (below < 0) return above;
    if (above < 0) return below;
    const double db = std::abs(static_cast<double>(below) - target);
    const double da = std::abs(static_cast<double>(above) - target);
    return da < db ? above : below;
}

}  // namespace cocycle_forge

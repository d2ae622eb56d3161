#include "cocycle_forge/lusin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/parallel.hpp"

namespace cocycle_forge {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

template <class T>
T pi_of();
template <>
double pi_of<double>() {
    return 3.14159265358979323846;
}
template <>
HpFloat pi_of<HpFloat>() {
    return hp_pi();
}

// M = R(phi) exp(S), S = [[sa, sb], [sb, -sa]]
template <class T>
struct Polar {
    T phi, sa, sb;
};

template <class T>
Polar<T> polar_of(const BasicMat2<T>& m) {
    using std::atan2;
    using std::log;
    using std::sinh;
    using std::sqrt;
    const BasicMat2<T> mtm = m.transpose() * m;
    const T k = sqrt(mtm.trace() + T(2));
    // sqrt of a unit-determinant SPD matrix: (M + I) / sqrt(tr M + 2)
    const BasicMat2<T> p{(mtm.a + T(1)) / k, mtm.b / k, mtm.c / k, (mtm.d + T(1)) / k};
    const BasicMat2<T> r = m * BasicMat2<T>{p.d, -p.b, -p.c, p.a};
    const T h = p.trace() / T(2);
    const T hh = h > T(1) ? h : T(1);
    const T rr = log(hh + sqrt(hh * hh - T(1)));
    const T f = rr > T(1e-30) ? T(rr / sinh(rr)) : T(1);
    const T sym = (p.b + p.c) / T(2);
    return {atan2(r.c, r.a), (p.a - p.d) / T(2) * f, sym * f};
}

template <class T>
BasicMat2<T> from_polar(const T& phi, const T& sa, const T& sb) {
    using std::cosh;
    using std::sinh;
    using std::sqrt;
    const T r = sqrt(sa * sa + sb * sb);
    const T ch = cosh(r);
    const T g = r > T(1e-30) ? T(sinh(r) / r) : T(1);
    const BasicMat2<T> e{ch + g * sa, g * sb, g * sb, ch - g * sa};
    return rotation_t(phi) * e;
}

template <class T>
BasicMat2<T> polar_interp(const BasicMat2<T>& a0, const BasicMat2<T>& a1, double t) {
    const Polar<T> p0 = polar_of(a0), p1 = polar_of(a1);
    const T pi = pi_of<T>();
    T d = p1.phi - p0.phi;
    while (d > pi) d -= T(2) * pi;
    while (d <= -pi) d += T(2) * pi;
    const T tt(t), u(1.0 - t);
    return from_polar<T>(p0.phi + tt * d, u * p0.sa + tt * p1.sa, u * p0.sb + tt * p1.sb);
}

template <class T>
BasicMat2<T> repair(const BasicMat2<T>& j) {
    BasicMat2<T> out = j;
    out.a = (j.b * j.c - j.d) / (T(1) + j.d);
    return out;
}

template <class T>
BasicMat2<T> lerp(const BasicMat2<T>& l, const BasicMat2<T>& r, double t) {
    const T u(1.0 - t), v(t);
    return {u * l.a + v * r.a, u * l.b + v * r.b, u * l.c + v * r.c, u * l.d + v * r.d};
}

double max_abs(const Mat2& m) {
    return std::max({std::abs(m.a), std::abs(m.b), std::abs(m.c), std::abs(m.d)});
}

}  // namespace

Mat2 polar_interpolate(const Mat2& a0, const Mat2& a1, double t) {
    return polar_interp(a0, a1, t);
}
HMat2 polar_interpolate(const HMat2& a0, const HMat2& a1, double t) {
    return polar_interp(a0, a1, t);
}

GridCocycle::GridCocycle(Cocycle cells, double collar) : cells_(std::move(cells)), collar_(collar) {
    if (!(collar > 0.0 && collar <= 0.5)) throw InvalidInput("GridCocycle: collar must lie in (0, 1/2]");
    const std::size_t g = cells_.size();
    jump_.assign(g, 0);
    for (std::size_t i = 0; i < g; ++i) {
        const Mat2& l = cells_(i);
        const Mat2& r = cells_((i + 1) % g);
        jump_[i] = (l.a != r.a || l.b != r.b || l.c != r.c || l.d != r.d) ? 1 : 0;
    }
}

Mat2 GridCocycle::at(std::size_t cell, double s) const {
    const double start = 1.0 - collar_;
    if (!jump_[cell] || s < start) return cells_(cell);
    return polar_interp(cells_(cell), cells_((cell + 1) % cells()), (s - start) / collar_);
}

HMat2 GridCocycle::hp_at(std::size_t cell, double s) const {
    const double start = 1.0 - collar_;
    const HMat2 l = lift_sl2(cells_(cell));
    if (!jump_[cell] || s < start) return l;
    return polar_interp(l, lift_sl2(cells_((cell + 1) % cells())), (s - start) / collar_);
}

Mat2 GridCocycle::operator()(double u) const {
    const double g = static_cast<double>(cells());
    const double v = (u - std::floor(u)) * g;
    const std::size_t i = std::min(static_cast<std::size_t>(v), cells() - 1);
    return at(i, v - static_cast<double>(i));
}

CircleCocycle GridCocycle::as_circle() const {
    return CircleCocycle([self = *this](double u) { return self(u); });
}

BridgedCocycle::BridgedCocycle(GridCocycle a, std::vector<Mat2> j, std::vector<HMat2> j_hp, double collar_j)
    : a_(std::move(a)), j_(std::move(j)), j_hp_(std::move(j_hp)), collar_j_(collar_j) {
    const std::size_t g = a_.cells();
    if (j_.size() != g || j_hp_.size() != g) throw InvalidInput("BridgedCocycle: J table does not match the grid");
    jump_.assign(g, 0);
    for (std::size_t i = 0; i < g; ++i) {
        const Mat2& l = j_[i];
        const Mat2& r = j_[(i + 1) % g];
        jump_[i] = (l.a != r.a || l.b != r.b || l.c != r.c || l.d != r.d) ? 1 : 0;
    }
}

Mat2 BridgedCocycle::j_prime(std::size_t cell, double s) const {
    const double start = 1.0 - collar_j_;
    if (!jump_[cell] || s < start) return j_[cell];
    return lerp(j_[cell], j_[(cell + 1) % cells()], (s - start) / collar_j_);
}

Mat2 BridgedCocycle::j_second(std::size_t cell, double s) const {
    return repair(j_prime(cell, s));
}

Mat2 BridgedCocycle::at(std::size_t cell, double s) const {
    return a_.at(cell, s) * (Mat2::identity() + j_second(cell, s));
}

Mat2 BridgedCocycle::operator()(double u) const {
    const double g = static_cast<double>(cells());
    const double v = (u - std::floor(u)) * g;
    const std::size_t i = std::min(static_cast<std::size_t>(v), cells() - 1);
    return at(i, v - static_cast<double>(i));
}

HMat2 BridgedCocycle::hp_at(std::size_t cell, double s) const {
    const double start = 1.0 - collar_j_;
    HMat2 jp = j_hp_[cell];
    if (jump_[cell] && s >= start) jp = lerp(j_hp_[cell], j_hp_[(cell + 1) % cells()], (s - start) / collar_j_);
    return a_.hp_at(cell, s) * (HMat2::identity() + repair(jp));
}

CircleCocycle BridgedCocycle::as_circle() const {
    return CircleCocycle([self = *this](double u) { return self(u); });
}

double BridgedCocycle::offset_le(double s, unsigned bits) const {
    PrecisionScope scope(bits);
    HMat2 prod = HMat2::identity();
    for (std::size_t i = 0; i < cells(); ++i) prod = hp_at(i, s) * prod;
    const HpFloat half = abs(prod.trace()) / 2;
    if (!(half > HpFloat(1) + HpFloat(5e-13))) return 0.0;
    return static_cast<double>(log(half + sqrt(half * half - 1))) / static_cast<double>(cells());
}

LusinResult lusin_bridge(const GridCocycle& a_cont, const PerturbedCocycle& a_tilde, const LusinOptions& opt) {
    const std::size_t g = a_cont.cells();
    if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0 / 3.0))
        throw PreconditionError("lusin_bridge: eps must lie in (0, 1/3)", opt.epsilon);
    if (!(opt.delta > 0.0)) throw InvalidInput("lusin_bridge: delta must be positive");
    if (opt.n_horizon < 1) throw InvalidInput("lusin_bridge: N must be >= 1");
    if (opt.samples < 1 || opt.collar_nodes < 1) throw InvalidInput("lusin_bridge: samples and collar nodes must be >= 1");
    if (a_tilde.size() != g) throw InvalidInput("lusin_bridge: perturbed cocycle does not live on the grid");
    for (std::size_t i = 0; i < g; ++i) {
        const Mat2& l = a_cont.values()(i);
        const Mat2& r = a_tilde.original()(i);
        if (l.a != r.a || l.b != r.b || l.c != r.c || l.d != r.d)
            throw InvalidInput("lusin_bridge: A~ is not a perturbation of the grid values at cell " + std::to_string(i));
    }

    LusinReport r;
    r.cells = g;
    r.epsilon = opt.epsilon;
    r.delta = opt.delta;
    r.n_horizon = opt.n_horizon;
    r.gamma = opt.delta / static_cast<double>(opt.n_horizon);
    r.collar_a = a_cont.collar();
    r.seed = opt.seed;
    r.j11_bound = 2.0 * opt.epsilon;

    // J = A^-1 A~ - I per cell, in extended precision.
    double growth = 0.0;
    for (std::size_t i = 0; i < g; ++i) growth += std::log(std::max(op_norm(a_tilde(i)), op_norm(a_cont.values()(i))) + opt.epsilon);
    r.bits = opt.bits > 0 ? opt.bits : bits_for_cancellation(growth, 128) + static_cast<unsigned>(std::ceil(std::log(static_cast<double>(g)) / kLn2));
    std::vector<Mat2> j(g, Mat2{0.0, 0.0, 0.0, 0.0});
    std::vector<HMat2> j_hp;
    {
        PrecisionScope scope(r.bits);
        j_hp.assign(g, HMat2{HpFloat(0), HpFloat(0), HpFloat(0), HpFloat(0)});
        for (std::size_t i = 0; i < g; ++i) {
            if (!a_tilde.overridden(i)) continue;
            const HMat2 a = lift_sl2(a_cont.values()(i));
            j_hp[i] = HMat2{a.d, -a.b, -a.c, a.a} * a_tilde.hp_value(i) - HMat2::identity();
            j[i] = to_double(j_hp[i]);
            const double nj = op_norm(j[i]);
            r.max_j = std::max(r.max_j, nj);
            if (!(nj <= opt.epsilon))
                throw PreconditionError("lusin_bridge: |J| exceeds eps at cell " + std::to_string(i), nj);
        }
    }
    for (std::size_t i = 0; i < g; ++i) r.a_jumps += a_cont.jumps(i) ? 1 : 0;

    // Collar width: start at a tenth of the budget, so three doublings stay below gamma.
    BridgedCocycle probe(a_cont, j, j_hp, 0.5);
    for (std::size_t i = 0; i < g; ++i) r.j_jumps += probe.jumps(i) ? 1 : 0;
    double w = r.j_jumps > 0 ? std::min(0.5, 0.1 * r.gamma * static_cast<double>(g) / static_cast<double>(r.j_jumps)) : 0.5;
    auto min_pivot = [&](const BridgedCocycle& b) {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g; ++i) {
            if (!b.jumps(i)) {
                lo = std::min(lo, std::abs(1.0 + j[i].d));
                continue;
            }
            for (int k = 0; k <= opt.collar_nodes; ++k)
                lo = std::min(lo, std::abs(1.0 + b.j_prime(i, 1.0 - w + w * k / opt.collar_nodes).d));
        }
        return lo;
    };
    BridgedCocycle b(a_cont, j, j_hp, w);
    while (min_pivot(b) < 1e-6) {
        if (++r.retries > 3) throw Infeasible("lusin_bridge: 1 + J'_22 vanishes on the collars");
        w = std::min(0.5, 2.0 * w);
        b = BridgedCocycle(a_cont, j, j_hp, w);
    }
    r.collar_j = r.j_jumps > 0 ? w : 0.0;
    r.collar_measure = static_cast<double>(r.j_jumps) * r.collar_j / static_cast<double>(g);
    if (!(r.collar_measure < r.gamma)) throw ContractViolation("lusin_bridge: collar measure reaches gamma");

    // Node checks: one plateau node per cell, collar nodes where something ramps.
    LusinResult out{b, r, {}};
    LusinReport& rep = out.report;
    const double wa = a_cont.collar();
    const double wmax = std::max(rep.a_jumps > 0 ? wa : 0.0, rep.collar_j);
    double sup_j2 = 0.0;
    double sup_b = 0.0;
    rep.sup_norm_a = 0.0;
    auto visit = [&](std::size_t i, double s) {
        const Mat2 j2 = b.j_second(i, s);
        const Mat2 ac = a_cont.at(i, s);
        const Mat2 bv = ac * (Mat2::identity() + j2);
        DetCheck dc{i, s, (Mat2::identity() + j2).det(), bv.det(), j2.a};
        rep.max_det_error = std::max(rep.max_det_error, std::abs(dc.det_i_plus_j - 1.0));
        rep.max_det_error_b = std::max(rep.max_det_error_b, std::abs(dc.det_b - 1.0));
        rep.max_j11 = std::max(rep.max_j11, std::abs(j2.a));
        sup_j2 = std::max(sup_j2, op_norm(j2));
        sup_b = std::max(sup_b, op_norm(bv));
        rep.sup_norm_a = std::max(rep.sup_norm_a, op_norm(ac));
        rep.max_b_minus_a = std::max(rep.max_b_minus_a, distance(bv, ac));
        ++rep.nodes;
        if (b.jumps(i) || a_cont.jumps(i) || i < 4) out.transcript.push_back(dc);
    };
    auto collar_offsets = [&](std::size_t i, int nodes) {
        std::vector<double> s;
        for (double width : {a_cont.jumps(i) ? wa : 0.0, b.jumps(i) ? rep.collar_j : 0.0}) {
            if (width <= 0.0) continue;
            for (int k = 0; k < nodes; ++k) s.push_back(1.0 - width + width * k / nodes);
        }
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    };
    for (std::size_t i = 0; i < g; ++i) {
        visit(i, 0.0);
        for (double s : collar_offsets(i, opt.collar_nodes)) visit(i, s);
    }
    rep.k_constant = sup_j2 / opt.epsilon;
    rep.b_minus_a_bound = rep.k_constant * rep.sup_norm_a * opt.epsilon;
    rep.c = sup_b * (1.0 + 1e-9);
    rep.le_target = (1.0 + std::log(rep.c)) * opt.delta;
    if (rep.max_b_minus_a > rep.b_minus_a_bound * (1.0 + 1e-12))
        throw ContractViolation("lusin_bridge: |B - A| exceeds K |A| eps");

    // Continuity: left limits at cell ends against the next cell's start, and
    // adjacent-node jumps inside the collars on two node spacings.
    auto node_jumps = [&](int nodes, double& spacing) {
        double worst = 0.0;
        spacing = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g; ++i) {
            std::vector<double> s = collar_offsets(i, nodes);
            if (s.empty()) continue;
            s.push_back(1.0);
            Mat2 prev = b.at(i, s.front());
            for (std::size_t k = 1; k < s.size(); ++k) {
                const Mat2 cur = b.at(i, s[k]);
                worst = std::max(worst, max_abs(cur - prev));
                spacing = std::min(spacing, (s[k] - s[k - 1]) / static_cast<double>(g));
                prev = cur;
            }
        }
        return worst;
    };
    for (std::size_t i = 0; i < g; ++i)
        rep.boundary_jump = std::max(rep.boundary_jump, max_abs(b.at(i, 1.0) - b.at((i + 1) % g, 0.0)));
    rep.max_node_jump = node_jumps(opt.collar_nodes, rep.node_spacing);
    double fine_spacing = 0.0;
    const double fine = node_jumps(4 * opt.collar_nodes, fine_spacing);
    rep.lipschitz = std::isfinite(fine_spacing) && fine_spacing > 0.0 ? fine / fine_spacing : 0.0;
    if (!std::isfinite(rep.node_spacing)) rep.node_spacing = 0.0;

    // Exponents. On plateau offsets B coincides with A~.
    rep.le_plateau = integrated_le_hp(a_tilde, a_cont.finite_base(), rep.bits).le;
    const double log_c = std::log(rep.c);
    rep.le_bound_collar = (1.0 - wmax) * rep.le_plateau + wmax * std::max(0.0, log_c);
    rep.le_collar_max = 0.0;
    rep.le_quadrature = rep.le_plateau;
    if (wmax > 0.0) {
        const int q = 4;
        double sum = 0.0;
        for (int k = 0; k < q; ++k) {
            const double le = b.offset_le(1.0 - wmax + wmax * (k + 0.5) / q, rep.bits);
            rep.le_collar_max = std::max(rep.le_collar_max, le);
            sum += le;
        }
        rep.le_quadrature = (1.0 - wmax) * rep.le_plateau + wmax * sum / q;
    }
    Rng rng(opt.seed);
    double total = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
        const double u = rng.uniform();
        const double v = u * static_cast<double>(g);
        const double s = v - std::floor(v);
        if (s < 1.0 - wmax) {
            total += rep.le_plateau;
        } else {
            total += b.offset_le(s, rep.bits);
            ++rep.collar_samples;
        }
    }
    rep.samples = opt.samples;
    rep.sampled_le = total / opt.samples;
    return out;
}

}  // namespace cocycle_forge

#pragma once

// E^u -> E^s window constructions, shared by the double-precision dispatch and
// the extended-precision rebuild. T is double or HpFloat.

#include <cmath>
#include <string>
#include <vector>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/perturbation.hpp"

namespace cocycle_forge::detail {

template <class T>
struct SpliceResult {
    std::vector<BasicMat2<T>> l;
    std::vector<std::uint8_t> changed;
    std::vector<EntryFlag> flag;
    std::vector<double> theta;
    T misalignment{0};
    int aligned = 0;  // candidates within tolerance
};

template <class T>
T window_misalignment(const std::vector<BasicMat2<T>>& l, const BasicVec2<T>& u0, const BasicVec2<T>& target) {
    BasicVec2<T> v = u0;
    for (const auto& m : l) v = normalized(m * v);
    return sin_angle(v, target);
}

template <class T>
SpliceResult<T> unchanged_window(const WindowData<T>& w) {
    SpliceResult<T> r;
    const std::size_t m = w.a.size();
    r.l = w.a;
    r.changed.assign(m, 0);
    r.flag.assign(m, EntryFlag::RotatedRight);
    r.theta.assign(m, 0.0);
    return r;
}

template <class T>
SpliceResult<T> case1_kernel(const WindowData<T>& w, long long j0, double tol) {
    using std::abs;
    const T th = abs(signed_line_angle(w.eu[j0], w.es[j0]));
    SpliceResult<T> best;
    bool have = false;
    int aligned = 0;
    for (int sign : {1, -1}) {
        SpliceResult<T> r = unchanged_window(w);
        const T theta = sign > 0 ? th : T(-th);
        r.l[j0] = w.a[j0] * rotation_t(theta);
        r.changed[j0] = 1;
        r.theta[j0] = static_cast<double>(theta);
        r.misalignment = window_misalignment(r.l, w.eu[0], w.es.back());
        if (static_cast<double>(r.misalignment) <= tol) ++aligned;
        if (!have || r.misalignment < best.misalignment) {
            best = std::move(r);
            have = true;
        }
    }
    best.aligned = aligned;
    return best;
}

template <class T>
SpliceResult<T> case2_kernel(const WindowData<T>& w, long long j0, long long j1, double alpha2, double tol) {
    using std::abs;
    using std::sin;
    BasicMat2<T> prod = BasicMat2<T>::identity();
    for (long long j = j0; j < j1; ++j) prod = w.a[j] * prod;
    const BasicVec2<T>& u = w.eu[j0];
    const BasicVec2<T>& s = w.es[j0];
    const T k = sin(T(alpha2));
    const BasicVec2<T> xi = u + k * s;
    const T t0 = abs(signed_line_angle(u, xi));
    const T t1 = abs(signed_line_angle(prod * xi, w.es[j1]));
    const double slack = 1e-12;
    if (static_cast<double>(t0) > alpha2 + slack || static_cast<double>(t1) > alpha2 + slack)
        throw ContractViolation("case II: rotation angle exceeds alpha2");
    SpliceResult<T> best;
    bool have = false;
    int aligned = 0;
    for (int s0 : {1, -1}) {
        for (int s1 : {1, -1}) {
            SpliceResult<T> r = unchanged_window(w);
            const T th0 = s0 > 0 ? t0 : T(-t0);
            const T th1 = s1 > 0 ? t1 : T(-t1);
            r.l[j0] = w.a[j0] * rotation_t(th0);
            r.changed[j0] = 1;
            r.theta[j0] = static_cast<double>(th0);
            r.l[j1 - 1] = rotation_t(th1) * r.l[j1 - 1];
            r.flag[j1 - 1] = j1 - 1 == j0 ? EntryFlag::Conjugated : EntryFlag::RotatedLeft;
            r.changed[j1 - 1] = 1;
            if (j1 - 1 != j0) r.theta[j1 - 1] = static_cast<double>(th1);
            r.misalignment = window_misalignment(r.l, w.eu[0], w.es.back());
            if (static_cast<double>(r.misalignment) <= tol) ++aligned;
            if (!have || r.misalignment < best.misalignment) {
                best = std::move(r);
                have = true;
            }
        }
    }
    best.aligned = aligned;
    return best;
}

// Partial products P_j = A^j(y), j = 0..m.
template <class T>
std::vector<BasicMat2<T>> partial_products(const WindowData<T>& w) {
    std::vector<BasicMat2<T>> p{BasicMat2<T>::identity()};
    for (const auto& a : w.a) p.push_back(a * p.back());
    return p;
}

template <class T>
SpliceResult<T> case3_kernel(const WindowData<T>& w, double e_bound, double tol) {
    const std::size_t m = w.a.size();
    const auto p = partial_products(w);
    for (std::size_t j = 1; j <= m; ++j) {
        const double nj = static_cast<double>(op_norm_unchecked(p[j]));
        if (!(nj <= e_bound))
            throw WrongCase("case III: |A^j| = " + std::to_string(nj) + " exceeds E", static_cast<long>(j));
    }
    const T theta = signed_line_angle(w.eu[0], w.es[0]) / T(static_cast<double>(m));
    const BasicMat2<T> r = rotation_t(theta);
    SpliceResult<T> out = unchanged_window(w);
    for (std::size_t j = 0; j < m; ++j) {
        // P_j has unit determinant, so its inverse is the adjugate
        const BasicMat2<T> inv{p[j].d, -p[j].b, -p[j].c, p[j].a};
        out.l[j] = p[j + 1] * r * inv;
        out.changed[j] = 1;
        out.flag[j] = EntryFlag::Conjugated;
        out.theta[j] = static_cast<double>(theta);
    }
    out.misalignment = window_misalignment(out.l, w.eu[0], w.es.back());
    out.aligned = static_cast<double>(out.misalignment) <= tol ? 1 : 0;
    return out;
}

}  // namespace cocycle_forge::detail

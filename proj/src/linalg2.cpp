#include "cocycle_forge/linalg2.hpp"

#include <algorithm>
#include <string>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

namespace {

constexpr double kPi = std::numbers::pi;

double canonical_angle(double t) {
    t = std::fmod(t, kPi);
    if (t < 0) t += kPi;
    if (t >= kPi) t -= kPi;
    return t;
}

}  // namespace

Dir::Dir(double angle) {
    if (!std::isfinite(angle)) throw InvalidInput("Dir: non-finite angle");
    theta_ = canonical_angle(angle);
}

Dir Dir::of(const Vec2& v) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidInput("Dir: non-finite vector");
    if (v.x == 0.0 && v.y == 0.0) throw InvalidInput("Dir: zero vector has no direction");
    return Dir(std::atan2(v.y, v.x));
}

bool is_finite(const Mat2& m) {
    return std::isfinite(m.a) && std::isfinite(m.b) && std::isfinite(m.c) && std::isfinite(m.d);
}

double op_norm(const Mat2& m) {
    if (!is_finite(m)) throw InvalidInput("op_norm: non-finite entries");
    return op_norm_unchecked(m);
}

Mat2 rotation(double theta) {
    if (!std::isfinite(theta)) throw InvalidInput("rotation: non-finite angle");
    return rotation_t(theta);
}

// A = rho1 R(phi1) + rho2 R(phi2) F with F = diag(1, -1). The right singular
// direction of sigma_max = rho1 + rho2 sits where both images line up.
SingularData singular_data(const Mat2& m) {
    if (!is_finite(m)) throw InvalidInput("singular_data: non-finite entries");
    const double p = 0.5 * (m.a + m.d), q = 0.5 * (m.c - m.b);
    const double r = 0.5 * (m.a - m.d), s = 0.5 * (m.b + m.c);
    const double rho1 = std::hypot(p, q), rho2 = std::hypot(r, s);
    SingularData out;
    out.sigma_max = rho1 + rho2;
    if (out.sigma_max == 0.0) throw InvalidInput("singular_data: zero matrix");
    const double det = m.det();
    if (det == 0.0) throw InvalidInput("singular_data: singular matrix");
    out.sigma_min = std::abs(det) / out.sigma_max;
    if (out.sigma_max < out.sigma_min * (1.0 + 1e-12)) {
        out.isotropic = true;
        out.v_max = Dir(0.0);
        out.v_min = Dir(kPi / 2);
    } else {
        const double phi1 = std::atan2(q, p), phi2 = std::atan2(s, r);
        const double t = 0.5 * (phi2 - phi1);
        out.v_max = Dir(t);
        out.v_min = Dir(t + kPi / 2);
    }
    out.u_max = apply(m, out.v_max);
    out.u_min = apply(m, out.v_min);
    return out;
}

double angle_between(Dir d1, Dir d2) {
    const double d = std::abs(d1.angle() - d2.angle());
    return std::min(d, kPi - d);
}

double signed_angle(Dir from, Dir to) {
    double t = to.angle() - from.angle();
    if (t > kPi / 2) t -= kPi;
    if (t <= -kPi / 2) t += kPi;
    return t;
}

Dir apply(const Mat2& m, Dir d) { return Dir::of(m * d.unit()); }

double mix_ratio_threshold(double alpha2) {
    const double a = std::sin(alpha2);
    return 1.0 / (a * a);
}

Dir mix_direction(const Mat2& m, Dir s, Dir u, double alpha2) {
    if (!(alpha2 > 0.0 && alpha2 <= kPi / 2)) throw InvalidInput("mix_direction: alpha2 out of (0, pi/2]");
    const double a = std::sin(alpha2);
    const double c = 1.0 / (a * a);
    const Vec2 su = s.unit(), uu = u.unit();
    const double ratio = norm(m * su) / norm(m * uu);
    if (!(ratio > c)) {
        throw PreconditionError("mix_direction: |As|/|Au| = " + std::to_string(ratio) +
                                    " does not exceed c = " + std::to_string(c),
                                ratio);
    }
    const Vec2 xi = uu + a * su;
    const Dir out = Dir::of(xi);
    // Both bounds follow from: a disk of radius r around v subtends at most asin(r/|v|).
    const double slack = 1e-12;
    if (angle_between(out, u) > alpha2 + slack || angle_between(apply(m, out), apply(m, s)) > alpha2 + slack) {
        throw ContractViolation("mix_direction: angle bound failed on accepted input");
    }
    return out;
}

double norm_bound_E(double alpha1, double c_hat) {
    if (!(alpha1 > 0.0 && alpha1 <= kPi / 2)) throw InvalidInput("norm_bound_E: alpha1 out of (0, pi/2]");
    if (!(c_hat >= 1.0) || !std::isfinite(c_hat)) throw InvalidInput("norm_bound_E: c_hat must be >= 1");
    const double sa = std::sin(alpha1);
    return 2.0 * std::sqrt(c_hat / sa) / sa;
}

bool is_sl2(const Mat2& m, double tol) { return is_finite(m) && std::abs(m.det() - 1.0) <= tol; }

double distance(const Mat2& l, const Mat2& r) { return op_norm(l - r); }

void RenormalizedProduct::push(const Mat2& next) {
    m_ = next * m_;
    ++steps_;
    if (steps_ % cadence_ == 0) renormalize();
}

void RenormalizedProduct::renormalize() {
    if (!is_finite(m_)) throw ContractViolation("renormalized product overflowed");
    const double n = op_norm_unchecked(m_);
    if (!(n > 0.0) || !std::isfinite(n)) throw ContractViolation("renormalized product degenerated");
    log_scale_ += std::log(n);
    const double k = 1.0 / n;
    m_ = k * m_;
}

double RenormalizedProduct::log_norm() const {
    if (!is_finite(m_)) throw ContractViolation("renormalized product overflowed");
    return log_scale_ + std::log(op_norm_unchecked(m_));
}

}  // namespace cocycle_forge

#include "cocycle_forge/precise.hpp"

#include <cmath>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

namespace {

unsigned digits10_for_bits(unsigned bits) {
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

}  // namespace

PrecisionScope::PrecisionScope(unsigned bits)
    : bits_(bits), saved_digits_(HpFloat::default_precision()) {
    HpFloat::default_precision(digits10_for_bits(bits));
}

PrecisionScope::~PrecisionScope() { HpFloat::default_precision(saved_digits_); }

unsigned bits_for_cancellation(double log_magnitude, unsigned guard_bits) {
    if (!std::isfinite(log_magnitude)) throw InvalidInput("bits_for_cancellation: non-finite magnitude");
    const double bits = std::max(0.0, log_magnitude) / std::log(2.0);
    return static_cast<unsigned>(std::ceil(bits)) + guard_bits;
}

HpFloat hp_pi() { return boost::multiprecision::atan2(HpFloat(1), HpFloat(0)) * 2; }

HMat2 to_hp(const Mat2& m) { return {HpFloat(m.a), HpFloat(m.b), HpFloat(m.c), HpFloat(m.d)}; }

HVec2 to_hp(const Vec2& v) { return {HpFloat(v.x), HpFloat(v.y)}; }

HMat2 lift_sl2(const Mat2& m) {
    HMat2 h = to_hp(m);
    HpFloat det = h.det();
    if (!(det > 0)) throw InvalidInput("lift_sl2: determinant must be positive");
    HpFloat k = 1 / sqrt(det);
    return k * h;
}

Mat2 to_double(const HMat2& m) {
    return {static_cast<double>(m.a), static_cast<double>(m.b), static_cast<double>(m.c),
            static_cast<double>(m.d)};
}

Vec2 to_double(const HVec2& v) { return {static_cast<double>(v.x), static_cast<double>(v.y)}; }

double log_op_norm(const HMat2& m) {
    HpFloat n = op_norm_unchecked(m);
    if (!(n > 0)) throw ContractViolation("log_op_norm: zero matrix");
    return static_cast<double>(log(n));
}

}  // namespace cocycle_forge

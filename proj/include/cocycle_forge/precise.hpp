#pragma once

// Extended-precision 2x2 arithmetic (MPFR). Splice products cancel growth of
// order exp(lambda * n); once lambda * n exceeds ~36 nats double precision can
// no longer represent the alignment, so constructions that must survive that
// cancellation run here.

#include <boost/multiprecision/mpfr.hpp>

#include "cocycle_forge/linalg2.hpp"

namespace cocycle_forge {

using HpFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                              boost::multiprecision::et_off>;
using HVec2 = BasicVec2<HpFloat>;
using HMat2 = BasicMat2<HpFloat>;

// Sets the working precision for newly created HpFloat values; restores on exit.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

    unsigned bits() const { return bits_; }

private:
    unsigned bits_;
    unsigned saved_digits_;
};

// Bits needed to resolve a cancellation of `log_magnitude` nats with `guard_bits` to spare.
unsigned bits_for_cancellation(double log_magnitude, unsigned guard_bits = 96);

HpFloat hp_pi();
// Exact conversion of the stored doubles.
HMat2 to_hp(const Mat2& m);
HVec2 to_hp(const Vec2& v);
// Exact conversion followed by division by sqrt(det): the SL(2) lift used by
// every extended-precision computation.
HMat2 lift_sl2(const Mat2& m);
Mat2 to_double(const HMat2& m);
Vec2 to_double(const HVec2& v);

double log_op_norm(const HMat2& m);

}  // namespace cocycle_forge

#include "cocycle_forge/generators.hpp"

#include <cmath>
#include <numbers>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

Cocycle constant_cocycle(std::size_t n, const Mat2& m) { return Cocycle(std::vector<Mat2>(n, m)); }

Cocycle rotation_cocycle(std::size_t n, double theta) { return constant_cocycle(n, rotation(theta)); }

Cocycle diagonal_cocycle(const std::vector<double>& h) {
    std::vector<Mat2> v;
    v.reserve(h.size());
    for (double t : h) {
        if (!std::isfinite(t)) throw InvalidInput("diagonal_cocycle: non-finite h");
        v.push_back(Mat2::diag(std::exp(t), std::exp(-t)));
    }
    return Cocycle(std::move(v));
}

Cocycle elliptic_island(const FiniteBase& base, std::uint64_t seed, const IslandParams& params) {
    if (params.block < 2) throw InvalidInput("elliptic_island: block must be >= 2");
    if (!(params.hyperbolic > 1.0)) throw InvalidInput("elliptic_island: hyperbolic factor must exceed 1");
    if (!(params.angle_lo <= params.angle_hi)) throw InvalidInput("elliptic_island: empty angle range");
    Rng rng(seed);
    const Mat2 hyp = Mat2::diag(params.hyperbolic, 1.0 / params.hyperbolic);
    std::vector<Mat2> v(base.n_points());
    const std::size_t half = params.rotations ? params.rotations : params.block / 2;
    if (half >= params.block) throw InvalidInput("elliptic_island: rotations must be fewer than block");
    for (const auto& cyc : base.cycles()) {
        Mat2 rot = Mat2::identity();
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            const std::size_t k = i % params.block;
            if (k == 0) rot = rotation(rng.uniform(params.angle_lo, params.angle_hi));
            v[cyc[i]] = k < half ? rot : hyp;
        }
    }
    return Cocycle(std::move(v));
}

Mat2 random_sl2(Rng& rng, double spread) {
    const double pi = std::numbers::pi;
    const double t = rng.uniform(-spread, spread);
    const Mat2 m = rotation(rng.uniform(0.0, pi)) * Mat2::diag(std::exp(t), std::exp(-t)) * rotation(rng.uniform(0.0, pi));
    return (1.0 / std::sqrt(m.det())) * m;
}

Cocycle random_cocycle(std::size_t n, std::uint64_t seed, double spread) {
    Rng rng(seed);
    std::vector<Mat2> v(n);
    for (auto& m : v) m = random_sl2(rng, spread);
    return Cocycle(std::move(v));
}

}  // namespace cocycle_forge

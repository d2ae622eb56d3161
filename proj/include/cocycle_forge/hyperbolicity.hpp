#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/linalg2.hpp"
#include "cocycle_forge/splitting.hpp"

namespace cocycle_forge {

struct Cone {
    Dir center;
    double half_width = 0.0;
};

// Constant cone families searched by the certifier: centers k*pi/centers,
// half-widths geometric between min_width and max_width.
struct ConeGrid {
    int centers = 64;
    int widths = 64;
    double min_width = 1e-5;
    double max_width = 1.5697963267948966;  // pi/2 - 1e-3

    double center(int i) const;
    double width(int j) const;
};

struct HyperbolicityCertificate {
    std::string method = "cone";  // "cone" or "splitting"
    Cone cone;
    double lambda_exp = 1.0;  // every cone vector grows by at least this per step
    double c = 1.0;
    double tau = 1.0;
    double gap = 0.0;  // smallest angle between an image cone and the cone boundary
    // Lower bound on the angle between E^u and E^s, from `iterations` forward
    // images of the cone and backward images of its complement; c = 1 / sin.
    double splitting_angle = 0.0;
    int iterations = 0;
    long long m0 = 0;  // Gamma_m is empty for m >= m0
    std::size_t verified_points = 0;
    bool sampled = false;
    std::uint64_t seed = 0;
    std::string digest;
};

struct CertifyResult {
    bool certified = false;
    HyperbolicityCertificate certificate;
    // Counterexample when not certified: the candidate that survived the most
    // points, and the point that broke it.
    Cone best_cone;
    std::size_t violating_point = 0;
    double violating_x = 0.0;  // circle bases
    std::string reason;
    std::size_t candidates = 0;
};

// Per-point outcome of the cone test.
struct ConeCheck {
    bool invariant = false;
    double t1 = 0.0, t2 = 0.0;  // image boundary lines, signed offsets from the center
    double min_expansion = 0.0;
};

ConeCheck check_cone(const Mat2& m, const Cone& cone);

CertifyResult certify_uniform(const Cocycle& a, const FiniteBase& base, const ConeGrid& grid = {},
                              unsigned threads = 1);
CertifyResult certify_uniform(const CircleCocycle& a, const CircleBase& base, const ConeGrid& grid,
                              long long samples, std::uint64_t seed, unsigned threads = 1);

// Exhaustive re-verification at every point; fills the transcript digest.
bool verify_certificate(const Cocycle& a, const FiniteBase& base, HyperbolicityCertificate& cert);

long long m0_from_constants(double c, double tau);

enum class VerdictKind { Uniform, Perturbable, Zero, Undecided };
std::string to_string(VerdictKind k);

struct Verdict {
    VerdictKind kind = VerdictKind::Undecided;
    long long m = 0;
    double delta = 0.0;
    double le = 0.0;  // exact integrated exponent
    std::optional<HyperbolicityCertificate> certificate;
    CertifyResult cone_search;
    std::size_t gamma_count = 0;
    double gamma_measure = 0.0;
    double omega_measure = 0.0;
    std::vector<std::size_t> gamma_witness;  // first few points of Gamma_m
    std::optional<HmReport> hm;
    std::string reason;
};

Verdict dichotomy_report(const Cocycle& a, const FiniteBase& base, long long m, double delta,
                         unsigned threads = 1);

}  // namespace cocycle_forge

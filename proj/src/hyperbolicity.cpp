#include "cocycle_forge/hyperbolicity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/parallel.hpp"

namespace cocycle_forge {

namespace {

constexpr double kPi = std::numbers::pi;

struct Candidate {
    bool ok = false;
    double lambda = 0.0;
    double gap = 0.0;
    std::size_t fail_index = 0;  // first failing sample when !ok
    std::string reason;
    int i = 0, j = 0;
};

// Larger expansion, then wider gap, then grid order.
bool better_certificate(const Candidate& a, const Candidate& b) {
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    if (a.gap != b.gap) return a.gap > b.gap;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

// Survived more samples, then grid order.
bool better_counterexample(const Candidate& a, const Candidate& b) {
    if (a.fail_index != b.fail_index) return a.fail_index > b.fail_index;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

Candidate evaluate(const std::vector<Mat2>& mats, const Cone& cone, int i, int j) {
    Candidate c;
    c.i = i;
    c.j = j;
    c.lambda = INFINITY;
    c.gap = INFINITY;
    for (std::size_t k = 0; k < mats.size(); ++k) {
        const ConeCheck ch = check_cone(mats[k], cone);
        if (!ch.invariant) {
            c.fail_index = k;
            c.reason = "cone not strictly invariant";
            return c;
        }
        if (!(ch.min_expansion > 1.0)) {
            c.fail_index = k;
            c.reason = "cone vectors not expanded";
            return c;
        }
        c.lambda = std::min(c.lambda, ch.min_expansion);
        c.gap = std::min(c.gap, cone.half_width - std::max(std::abs(ch.t1), std::abs(ch.t2)));
    }
    c.ok = true;
    c.fail_index = mats.size();
    return c;
}

struct Search {
    bool found = false;
    bool has_fail = false;
    Candidate best;
    Candidate worst_fail;
    std::size_t candidates = 0;
};

Search search_grid(const std::vector<Mat2>& mats, const ConeGrid& grid, unsigned threads) {
    if (grid.centers < 1 || grid.widths < 1) throw InvalidInput("cone grid must be nonempty");
    std::vector<Search> per_center(static_cast<std::size_t>(grid.centers));
    parallel_for(per_center.size(), threads, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        Search s;
        for (int j = 0; j < grid.widths; ++j) {
            const Cone cone{Dir(grid.center(i)), grid.width(j)};
            const Candidate c = evaluate(mats, cone, i, j);
            ++s.candidates;
            if (c.ok) {
                if (!s.found || better_certificate(c, s.best)) s.best = c;
                s.found = true;
            } else if (!s.has_fail || better_counterexample(c, s.worst_fail)) {
                s.worst_fail = c;
                s.has_fail = true;
            }
        }
        per_center[ii] = s;
    });
    Search out;
    for (const Search& s : per_center) {
        out.candidates += s.candidates;
        if (s.found && (!out.found || better_certificate(s.best, out.best))) {
            out.best = s.best;
            out.found = true;
        }
        if (s.has_fail && (!out.has_fail || better_counterexample(s.worst_fail, out.worst_fail))) {
            out.worst_fail = s.worst_fail;
            out.has_fail = true;
        }
    }
    return out;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void fnv_mix(std::uint64_t& h, double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
}

// Projective arc from `lo` counterclockwise to `hi`.
struct Arc {
    Dir lo, hi;
};

Arc image(const Mat2& m, const Arc& arc) { return {apply(m, arc.lo), apply(m, arc.hi)}; }

// Distance between disjoint arcs: some pair of endpoints realizes it.
double separation(const Arc& f, const Arc& b) {
    return std::min({angle_between(f.lo, b.lo), angle_between(f.lo, b.hi), angle_between(f.hi, b.lo),
                     angle_between(f.hi, b.hi)});
}

Arc cone_arc(const Cone& k) { return {Dir(k.center.angle() - k.half_width), Dir(k.center.angle() + k.half_width)}; }

Arc complement_arc(const Cone& k) {
    return {Dir(k.center.angle() + k.half_width), Dir(k.center.angle() + kPi - k.half_width)};
}

HyperbolicityCertificate certificate_from(const Candidate& c, const ConeGrid& grid) {
    HyperbolicityCertificate cert;
    cert.method = "cone";
    cert.cone = {Dir(grid.center(c.i)), grid.width(c.j)};
    cert.lambda_exp = c.lambda;
    cert.tau = 1.0 / c.lambda;
    cert.gap = c.gap;
    return cert;
}

// E^u(x) lies in the forward image of the cone and E^s(x) in the backward image
// of its complement, so their angle bounds the splitting angle from below.
// With |A^n u| >= lambda^n and det = 1, delta(x, n) <= tau^{2n} / sin(angle), and
// c = 1 / sin(angle) serves for both directions.
void set_constants(HyperbolicityCertificate& cert, double angle, int iterations) {
    cert.splitting_angle = angle;
    cert.iterations = iterations;
    cert.c = std::max(1.0, 1.0 / std::sin(std::min(angle, kPi / 2)));
    cert.m0 = m0_from_constants(cert.c, cert.tau);
}

constexpr int kIterations = 64;

double finite_splitting_angle(const Cocycle& a, const FiniteBase& base, const Cone& k) {
    const std::size_t n = base.n_points();
    std::vector<Arc> fwd(n, cone_arc(k)), bwd(n, complement_arc(k)), next(n);
    for (int step = 0; step < kIterations; ++step) {
        for (std::size_t x = 0; x < n; ++x) next[x] = image(a(base.backward(x)), fwd[base.backward(x)]);
        fwd.swap(next);
        for (std::size_t x = 0; x < n; ++x) next[x] = image(a(x).inverse(), bwd[base.forward(x)]);
        bwd.swap(next);
    }
    double angle = kPi / 2;
    for (std::size_t x = 0; x < n; ++x) angle = std::min(angle, separation(fwd[x], bwd[x]));
    return angle;
}

double sampled_splitting_angle(const CircleCocycle& a, const CircleBase& base, const std::vector<double>& xs,
                               const Cone& k) {
    double angle = kPi / 2;
    for (double x : xs) {
        double y = x;
        for (int i = 0; i < kIterations; ++i) y = base.backward(y);
        Arc f = cone_arc(k);
        for (int i = 0; i < kIterations; ++i, y = base.forward(y)) f = image(a(y), f);
        std::vector<double> orbit{x};
        for (int i = 1; i < kIterations; ++i) orbit.push_back(base.forward(orbit.back()));
        Arc b = complement_arc(k);
        for (auto it = orbit.rbegin(); it != orbit.rend(); ++it) b = image(a(*it).inverse(), b);
        angle = std::min(angle, separation(f, b));
    }
    return angle;
}

}  // namespace

double ConeGrid::center(int i) const { return kPi * static_cast<double>(i) / static_cast<double>(centers); }

double ConeGrid::width(int j) const {
    if (widths == 1) return min_width;
    const double t = static_cast<double>(j) / static_cast<double>(widths - 1);
    return min_width * std::pow(max_width / min_width, t);
}

ConeCheck check_cone(const Mat2& m, const Cone& cone) {
    ConeCheck out;
    const double th = cone.center.angle(), w = cone.half_width;
    const Vec2 center = cone.center.unit();
    const Vec2 lo{std::cos(th - w), std::sin(th - w)};
    const Vec2 hi{std::cos(th + w), std::sin(th + w)};
    const Vec2 ilo = m * lo, ihi = m * hi;
    out.t1 = signed_line_angle(center, ilo);
    out.t2 = signed_line_angle(center, ihi);
    out.invariant = m.det() > 0.0 && -w < out.t1 && out.t1 < out.t2 && out.t2 < w;
    double e = std::min(norm(ilo), norm(ihi));
    const SingularData sd = singular_data(m);
    if (!sd.isotropic && std::abs(signed_angle(cone.center, sd.v_min)) <= w) e = std::min(e, sd.sigma_min);
    if (sd.isotropic) e = std::min(e, sd.sigma_min);
    out.min_expansion = e;
    return out;
}

long long m0_from_constants(double c, double tau) {
    if (!(tau > 0.0 && tau < 1.0) || !(c >= 1.0)) throw InvalidInput("m0: need c >= 1 and tau in (0, 1)");
    return static_cast<long long>(std::ceil(std::log(2.0 * c * c) / (2.0 * std::log(1.0 / tau))));
}

bool verify_certificate(const Cocycle& a, const FiniteBase& base, HyperbolicityCertificate& cert) {
    check_compatible(a, base);
    if (cert.method != "cone") throw InvalidInput("verify_certificate: only cone certificates are re-verifiable pointwise");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    bool ok = true;
    for (std::size_t x = 0; x < base.n_points(); ++x) {
        const ConeCheck ch = check_cone(a(x), cert.cone);
        fnv_mix(h, ch.t1);
        fnv_mix(h, ch.t2);
        fnv_mix(h, ch.min_expansion);
        if (!ch.invariant || ch.min_expansion < cert.lambda_exp ||
            cert.cone.half_width - std::max(std::abs(ch.t1), std::abs(ch.t2)) < cert.gap)
            ok = false;
    }
    cert.verified_points = base.n_points();
    cert.digest = hex64(h);
    return ok;
}

CertifyResult certify_uniform(const Cocycle& a, const FiniteBase& base, const ConeGrid& grid, unsigned threads) {
    check_compatible(a, base);
    const Search s = search_grid(a.values(), grid, threads);
    CertifyResult r;
    r.candidates = s.candidates;
    if (s.found) {
        r.certified = true;
        r.certificate = certificate_from(s.best, grid);
        set_constants(r.certificate, finite_splitting_angle(a, base, r.certificate.cone), kIterations);
        if (!verify_certificate(a, base, r.certificate))
            throw ContractViolation("certify_uniform: certificate failed exhaustive re-verification");
        r.best_cone = r.certificate.cone;
        return r;
    }
    r.best_cone = {Dir(grid.center(s.worst_fail.i)), grid.width(s.worst_fail.j)};
    r.violating_point = s.worst_fail.fail_index;
    r.reason = s.worst_fail.reason;
    return r;
}

CertifyResult certify_uniform(const CircleCocycle& a, const CircleBase& base, const ConeGrid& grid,
                              long long samples, std::uint64_t seed, unsigned threads) {
    if (samples < 1) throw InvalidInput("certify_uniform: samples must be >= 1");
    Rng rng(seed);
    std::vector<double> xs(static_cast<std::size_t>(samples));
    std::vector<Mat2> mats(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.uniform();
        mats[i] = a(xs[i]);
    }
    const Search s = search_grid(mats, grid, threads);
    CertifyResult r;
    r.candidates = s.candidates;
    if (s.found) {
        r.certified = true;
        r.certificate = certificate_from(s.best, grid);
        set_constants(r.certificate, sampled_splitting_angle(a, base, xs, r.certificate.cone), kIterations);
        r.certificate.sampled = true;
        r.certificate.seed = seed;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const Mat2& m : mats) {
            const ConeCheck ch = check_cone(m, r.certificate.cone);
            fnv_mix(h, ch.t1);
            fnv_mix(h, ch.t2);
            fnv_mix(h, ch.min_expansion);
        }
        r.certificate.digest = hex64(h);
        r.certificate.verified_points = mats.size();
        r.best_cone = r.certificate.cone;
        return r;
    }
    r.best_cone = {Dir(grid.center(s.worst_fail.i)), grid.width(s.worst_fail.j)};
    r.violating_point = s.worst_fail.fail_index;
    r.violating_x = xs[std::min(s.worst_fail.fail_index, xs.size() - 1)];
    r.reason = s.worst_fail.reason;
    return r;
}

std::string to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::Uniform: return "UNIFORM";
        case VerdictKind::Perturbable: return "PERTURBABLE";
        case VerdictKind::Zero: return "ZERO";
        case VerdictKind::Undecided: return "UNDECIDED";
    }
    return "UNDECIDED";
}

Verdict dichotomy_report(const Cocycle& a, const FiniteBase& base, long long m, double delta, unsigned threads) {
    if (!(delta > 0.0)) throw InvalidInput("dichotomy: delta must be positive");
    if (m < 1) throw InvalidInput("dichotomy: m must be >= 1");
    Verdict v;
    v.m = m;
    v.delta = delta;
    v.le = integrated_le_exact(a, base).le;
    v.cone_search = certify_uniform(a, base, ConeGrid{}, threads);
    if (v.cone_search.certified) {
        v.kind = VerdictKind::Uniform;
        v.certificate = v.cone_search.certificate;
        v.reason = "constant invariant cone found and re-verified at every point";
        return v;
    }
    if (v.le <= delta) {
        v.kind = VerdictKind::Zero;
        v.reason = "exact integrated exponent is at most delta";
        return v;
    }
    const SplittingTable table(a, base);
    const IndicatorSet g = gamma_m(table, m);
    v.gamma_count = g.count();
    v.gamma_measure = g.measure();
    v.omega_measure = omega_m(table, m).measure();
    const auto pts = g.points();
    for (std::size_t k = 0; k < pts.size() && k < 16; ++k) v.gamma_witness.push_back(pts[k]);
    if (!g.empty()) {
        v.kind = VerdictKind::Perturbable;
        v.reason = "Gamma_m is nonempty";
        return v;
    }
    bool all_hyperbolic = true;
    for (const auto& c : table.cycle_info()) all_hyperbolic = all_hyperbolic && c.hyperbolic;
    if (all_hyperbolic) {
        const HmReport hm = h_m_diagnostics(table, m);
        v.hm = hm;
        if (hm.contraction_holds && hm.halving_holds && hm.tau1 < 1.0) {
            HyperbolicityCertificate cert;
            cert.method = "splitting";
            cert.c = std::max(1.0, hm.k1);
            cert.tau = hm.tau1;
            cert.lambda_exp = 1.0 / hm.tau1;
            cert.gap = hm.angle_floor;
            cert.splitting_angle = hm.angle_floor;
            cert.m0 = m0_from_constants(cert.c, cert.tau);
            cert.verified_points = base.n_points();
            v.certificate = cert;
            v.kind = VerdictKind::Uniform;
            v.reason = "Gamma_m empty on a fully hyperbolic base; splitting bounds verified at every point";
            return v;
        }
    }
    v.kind = VerdictKind::Undecided;
    v.reason = "no cone certificate, exponent above delta, Gamma_m empty but some cycle is not uniformly hyperbolic";
    return v;
}

}  // namespace cocycle_forge

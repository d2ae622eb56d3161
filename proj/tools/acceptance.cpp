// One PASS/FAIL line per acceptance criterion. Tolerances are pinned here.
// Exit status 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cocycle_forge/castles.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/hyperbolicity.hpp"
#include "cocycle_forge/lusin.hpp"
#include "cocycle_forge/perturbation.hpp"
#include "cocycle_forge/splitting.hpp"
#include "commands.hpp"

using namespace cocycle_forge;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Island, N = 20000, delta = 0.05, eps = 0.2
Outcome pipeline() {
    const double delta = 0.05, eps = 0.2;
    const auto t0 = std::chrono::steady_clock::now();
    const FiniteBase base = FiniteBase::cyclic(20000);
    const Cocycle a = elliptic_island(base, 7);
    TheoremBOptions opt;
    opt.m = 8;
    opt.threads = 1;
    const TheoremBResult res = theorem_b_perturb(a, base, delta, eps, opt);
    const double secs = seconds_since(t0);
    const PerturbReport& r = res.report;
    double worst = 0.0;
    for (const auto& [x, m] : res.cocycle.overrides()) worst = std::max(worst, distance(m, a(x)));
    const bool ok = r.verdict == "perturbed" && r.le_after < r.le_bound && worst <= eps && res.cocycle.override_count() > 0 &&
                    r.g_complement < 4.0 * delta && secs < 60.0;
    return {ok, fmt("LE %.6g -> %.6g < %.6g; max |A~-A| %.4g <= %.2g at %zu overrides; mu(G^C) %.4g < %.2g; %.1f s < 60 s",
                    r.le_before, r.le_after, r.le_bound, worst, eps, res.cocycle.override_count(), r.g_complement,
                    4.0 * delta, secs)};
}

// 2. ML2 contract over n in [N(x), 10 N(x)], 2000-point island
Outcome ml2_contract() {
    const FiniteBase base = FiniteBase::cyclic(2000);
    const Cocycle a = elliptic_island(base, 7, IslandParams{8, 4, 3.0});
    const Constants k = make_constants(a, 0.5, 0.3, 4);
    const PerturbationContext ctx(a, base, k, 4);
    const long long cap = 20000;
    const std::vector<long long> nx = ctx.compute_n_all(cap, 4);
    std::size_t finite = 0, fast_pairs = 0, fast_bad = 0;
    std::size_t lo_x = 0, hi_x = 0;
    for (std::size_t x = 0; x < nx.size(); ++x) {
        if (nx[x] < 0) continue;
        ++finite;
        if (nx[lo_x] < 0 || nx[x] < nx[lo_x]) lo_x = x;
        if (nx[x] > nx[hi_x]) hi_x = x;
        for (long long n = nx[x]; n <= 10 * nx[x]; ++n, ++fast_pairs)
            if (!ctx.ml2_ok(x, n)) ++fast_bad;
    }
    // Extended-precision products on a seeded subset plus the extremal N(x).
    std::vector<std::size_t> xs{lo_x, hi_x};
    Rng rng(2024);
    while (xs.size() < 34) {
        const std::size_t x = rng.below(base.n_points());
        if (nx[x] >= 0 && std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    }
    std::size_t hp_pairs = 0, hp_bad = 0, spliced = 0;
    double worst_margin = -INFINITY, worst_dist = 0.0;
    for (std::size_t x : xs) {
        const SweepResult s = ml2_sweep(ctx, x, nx[x], 10 * nx[x]);
        hp_pairs += s.points.size();
        hp_bad += s.violations;
        spliced += s.spliced;
        for (const SweepPoint& p : s.points) {
            worst_margin = std::max(worst_margin, p.log_norm - p.bound);
            worst_dist = std::max(worst_dist, p.max_distance);
        }
    }
    const bool ok = finite == base.n_points() && fast_bad == 0 && hp_bad == 0 && worst_dist < k.epsilon && spliced > 0;
    return {ok, fmt("N(x) finite at %zu/%zu points; framed sweep %zu pairs, %zu violations; extended sweep %zu pairs "
                    "(%zu spliced) on %zu points, %zu violations, max log|L| - n delta = %.4g, max |L_j - A| = %.4g < %.2g",
                    finite, base.n_points(), fast_pairs, fast_bad, hp_pairs, spliced, xs.size(), hp_bad, worst_margin,
                    worst_dist, k.epsilon)};
}

// 3. Alignment on dedicated instances of each case, case III telescope
Outcome alignment() {
    std::string detail;
    bool ok = true;
    // Case I: constant M diag(1.2, 1/1.2) M^-1 with M a shear; splitting angle atan(1/8).
    {
        const Mat2 sh{1.0, 8.0, 0.0, 1.0}, shi{1.0, -8.0, 0.0, 1.0};
        const FiniteBase base = FiniteBase::cyclic(20);
        const Cocycle a = constant_cocycle(20, sh * Mat2::diag(1.2, 1.0 / 1.2) * shi);
        const SplittingTable t(a, base);
        const Constants k = make_constants(a, 0.5, 0.05, 4);
        const CaseChoice c = choose_case(t, 0, k);
        const PerturbPlan p = build_case1(t, 0, k, c.j0);
        ok = ok && c.tag == CaseTag::I && p.alignment_error < 1e-8 && p.max_distance <= k.epsilon;
        detail += fmt("I: %.2e", p.alignment_error);
    }
    // Case II: 8 x diag(3, 1/3) then 2 x diag(1/4, 4) around one cycle.
    {
        std::vector<Mat2> v(8, Mat2::diag(3.0, 1.0 / 3.0));
        v.push_back(Mat2::diag(0.25, 4.0));
        v.push_back(Mat2::diag(0.25, 4.0));
        const FiniteBase base = FiniteBase::cyclic(10);
        const Cocycle a(v);
        const SplittingTable t(a, base);
        const Constants k = make_constants(a, 0.5, 0.05, 4);
        const CaseChoice c = choose_case(t, 8, k);
        const PerturbPlan p = build_case2(t, 8, k, c.j0, c.j1);
        ok = ok && c.tag == CaseTag::II && p.alignment_error < 1e-8 && p.max_distance <= k.epsilon;
        detail += fmt(", II: %.2e", p.alignment_error);
    }
    // Case III: usable Gamma_8 points of block islands (rotation runs).
    {
        std::size_t plans = 0;
        double worst_align = 0.0, worst_tel = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const FiniteBase base = FiniteBase::cyclic(1600);
            const Cocycle a = elliptic_island(base, seed);
            const SplittingTable t(a, base);
            const Constants k = make_constants(a, 0.2, 0.05, 8);
            const IndicatorSet g = gamma_m(t, k.m);
            for (std::size_t y : g.points()) {
                if (choose_case(t, y, k).tag != CaseTag::III) continue;
                PerturbPlan p;
                try {
                    p = build_case3(t, y, k);
                } catch (const Error&) {
                    continue;  // E bound or eps fails: not a case III point
                }
                ++plans;
                worst_align = std::max(worst_align, p.alignment_error);
                worst_tel = std::max(worst_tel, case3_telescope_error(t, p));
            }
        }
        ok = ok && plans > 0 && worst_align < 1e-8 && worst_tel < 1e-9;
        detail += fmt(", III: %.2e over %zu plans, telescope %.2e", worst_align, plans, worst_tel);
    }
    return {ok, detail + " (tol 1e-8, telescope 1e-9)"};
}

// 4. LE identities
Outcome le_identities() {
    double worst_diag = 0.0, worst_sub = -INFINITY, worst_gap = INFINITY, worst_mono = -INFINITY;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const std::size_t n = 200 + rng.below(800);
        std::vector<double> h(n);
        double sum = 0.0;
        for (double& v : h) sum += (v = rng.uniform(-1.0, 1.5));
        const double le = integrated_le_exact(diagonal_cocycle(h), FiniteBase::cyclic(n)).le;
        worst_diag = std::max(worst_diag, std::abs(le - std::abs(sum / static_cast<double>(n))));
    }
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::size_t n = 40 + seed;
        const FiniteBase base = FiniteBase::cyclic(n);
        const Cocycle a = random_cocycle(n, seed, 1.0);
        const std::vector<double> an = log_norm_means(a, base, 64);  // an[k-1] = a_k
        for (int p = 1; p <= 32; ++p)
            for (int q = 1; q <= 32; ++q) worst_sub = std::max(worst_sub, an[p + q - 1] - an[p - 1] - an[q - 1]);
        const double exact = integrated_le_exact(a, base).le;
        double prev = INFINITY;
        for (long long nm : {4, 8, 16, 32, 64}) {
            const double s = integrated_le_subadditive(a, base, nm).le;
            worst_gap = std::min(worst_gap, s - exact);
            worst_mono = std::max(worst_mono, s - prev);
            prev = s;
        }
    }
    const bool ok = worst_diag <= 1e-12 && worst_sub <= 1e-9 && worst_gap >= -1e-9 && worst_mono <= 0.0;
    return {ok, fmt("|LE - |int h|| max %.2e <= 1e-12; max a_{n+m} - a_n - a_m = %.3g <= 1e-9; min (sub - exact) = %.3g "
                    ">= -1e-9; max increase in n_max = %.3g <= 0",
                    worst_diag, worst_sub, worst_gap, worst_mono)};
}

// 5. Cocycle identity with negative indices
Outcome cocycle_identity() {
    Rng rng(55);
    std::vector<std::size_t> sigma(500);
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = i;
    for (std::size_t i = sigma.size() - 1; i > 0; --i) std::swap(sigma[i], sigma[rng.below(i + 1)]);
    const FiniteBase base(sigma);
    const Cocycle a = random_cocycle(500, 55, 0.7);
    double worst = 0.0;
    int negative = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t x = rng.below(500);
        const long long n = static_cast<long long>(rng.below(61)) - 30;
        const long long m = static_cast<long long>(rng.below(61)) - 30;
        if (n < 0 || m < 0 || n + m < 0) ++negative;
        const Mat2 lhs = product(a, base, x, n + m);
        const Mat2 l = product(a, base, base.iterate(x, m), n);
        const Mat2 r = product(a, base, x, m);
        const Mat2 rhs = l * r;
        const double scale = std::max(1.0, op_norm(l) * op_norm(r));
        const double err = std::max({std::abs(lhs.a - rhs.a), std::abs(lhs.b - rhs.b), std::abs(lhs.c - rhs.c),
                                     std::abs(lhs.d - rhs.d)}) / scale;
        worst = std::max(worst, err);
    }
    return {worst <= 1e-9, fmt("max entrywise error / max(1, |A^n||A^m|) = %.2e <= 1e-9 over 1000 triples (%d with a "
                               "negative index)", worst, negative)};
}

// 6. Castles
Outcome castles() {
    const FiniteBase b10 = FiniteBase::cyclic(10);
    const Castle c10 = kakutani_castle(b10, maximal_disjoint_base(b10, IndicatorSet(10, true), 3));
    const bool example = c10.towers.size() == 2 && c10.towers[0].height == 3 &&
                         c10.towers[0].base_points == std::vector<std::size_t>{0, 3} && c10.towers[1].height == 4 &&
                         c10.towers[1].base_points == std::vector<std::size_t>{6};
    int holds = 0, maximal = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const std::size_t h = 1 + rng.below(20);
        std::vector<std::size_t> lens;
        std::size_t total = 0;
        const std::size_t target = 100 + rng.below(9901);
        while (total < target) {
            const std::size_t len = 3 * h + 1 + rng.below(400);
            lens.push_back(len);
            total += len;
        }
        std::vector<std::size_t> sigma;
        std::size_t start = 0;
        for (std::size_t len : lens) {
            for (std::size_t i = 0; i < len; ++i) sigma.push_back(start + (i + 1) % len);
            start += len;
        }
        const FiniteBase base(sigma);
        IndicatorSet p(total);
        const double density = rng.uniform(0.5, 1.0);
        for (std::size_t x = 0; x < total; ++x)
            if (rng.uniform() < density) p.insert(x);
        const IndicatorSet b = maximal_disjoint_base(base, p, h);
        if (verify_maximal_base(base, p, b, h)) ++maximal;
        const Castle q_hat = kakutani_castle(base, b);
        const Castle q = truncate_castle(q_hat, 3 * h);
        if (verify_3delta2(base, total - p.count(), q_hat, q, h).holds) ++holds;
    }
    return {example && holds == 100 && maximal == 100,
            fmt("N=10/H=3 towers %s; 3delta2 holds on %d/100, maximal base on %d/100", example ? "match" : "DIFFER", holds,
                maximal)};
}

// 7. Recurrence guarantee
Outcome recurrence() {
    std::size_t checks = 0, failures = 0;
    long long max_n0 = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(1000 + seed);
        const std::size_t n = 50 + rng.below(450);
        const FiniteBase base = FiniteBase::cyclic(n);
        IndicatorSet g(n);
        const double density = rng.uniform(0.2, 0.7);
        for (std::size_t x = 0; x < n; ++x)
            if (rng.uniform() < density) g.insert(x);
        if (g.empty()) g.insert(rng.below(n));
        const std::size_t x = rng.below(n);
        const double gamma = rng.uniform(0.25, 0.5);
        const long long n0 = recurrence_threshold(base, g, x, gamma).value;
        max_n0 = std::max(max_n0, n0);
        for (long long m = n0; m <= 10 * n0; ++m)
            for (int k = 1; k < 20; ++k, ++checks)
                if (recurrence_find(base, g, x, m, 0.05 * k, gamma) < 0) ++failures;
    }
    return {failures == 0, fmt("%zu (n, t) checks on 50 instances (N0 up to %lld), %zu failures", checks, max_n0, failures)};
}

// 8. Certificates
Outcome certificates() {
    const FiniteBase base = FiniteBase::cyclic(40);
    const Cocycle d = constant_cocycle(40, Mat2::diag(2.0, 0.5));
    const CertifyResult cd = certify_uniform(d, base);
    const double le = integrated_le_exact(d, base).le;
    const bool diag_ok = cd.certified && cd.certificate.tau <= 0.5 + 1e-9 && -std::log(cd.certificate.tau) <= le + 1e-9;
    const CertifyResult cr = certify_uniform(rotation_cocycle(40, 0.7), base);
    // Gamma_m empty for m >= m0 on every certified instance.
    std::vector<Cocycle> certified_inputs{d, constant_cocycle(40, Mat2{2.0, 1.0, 1.0, 1.0})};
    {
        std::vector<double> h(40);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = 0.3 + 0.2 * std::sin(0.5 * static_cast<double>(i));
        certified_inputs.push_back(diagonal_cocycle(h));
    }
    int certified = 0, empty_ok = 0;
    for (const Cocycle& a : certified_inputs) {
        const CertifyResult r = certify_uniform(a, base);
        if (!r.certified) continue;
        ++certified;
        const SplittingTable t(a, base);
        bool empty = true;
        for (long long m = r.certificate.m0; m <= r.certificate.m0 + 20; ++m) empty = empty && gamma_m(t, m).empty();
        if (empty) ++empty_ok;
    }
    const bool ok = diag_ok && !cr.certified && certified == 3 && empty_ok == certified;
    return {ok, fmt("diag(2,1/2): tau %.12g <= 0.5 + 1e-9, -log tau %.12g <= LE %.12g + 1e-9; rotation %s; Gamma_m empty "
                    "for m in [m0, m0 + 20] on %d/%d certified instances",
                    cd.certificate.tau, -std::log(cd.certificate.tau), le, cr.certified ? "ACCEPTED" : "rejected", empty_ok,
                    certified)};
}

// 9. Lusin bridge
Outcome lusin() {
    int good = 0;
    double worst_det = 0.0, worst_j11_ratio = 0.0, worst_le_ratio = 0.0;
    std::string seeds;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const FiniteBase base = FiniteBase::cyclic(2400);
        const Cocycle a = elliptic_island(base, seed);
        TheoremBOptions opt;
        opt.m = 8;
        const TheoremBResult res = theorem_b_perturb(a, base, 0.4, 0.2, opt);
        const GridCocycle grid(a, 1e-3);
        LusinOptions lo;
        lo.epsilon = 0.3;
        lo.delta = 0.4;
        lo.n_horizon = std::max<long long>(1, res.report.g_n);
        lo.samples = 256;
        lo.seed = 100 + seed;
        const LusinReport r = lusin_bridge(grid, res.cocycle, lo).report;
        worst_det = std::max(worst_det, r.max_det_error);
        worst_j11_ratio = std::max(worst_j11_ratio, r.max_j11 / r.j11_bound);
        worst_le_ratio = std::max(worst_le_ratio, r.sampled_le / r.le_target);
        if (r.max_det_error <= 1e-12 && r.max_j11 < r.j11_bound && r.sampled_le < r.le_target && r.seed == lo.seed) ++good;
    }
    return {good == 20, fmt("%d/20 runs (sampling seeds 101..120): max |det(I+J'') - 1| = %.2e <= 1e-12, "
                            "max |J''_11| / 2 eps = %.3g < 1, max sampled LE(B) / (1 + log C) delta = %.3g < 1",
                            good, worst_det, worst_j11_ratio, worst_le_ratio)};
}

// 10. CLI determinism
std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "cocycle_forge_acceptance";
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"le", R"({"base": "cyclic", "n_points": 500, "cocycle": "elliptic-island", "seed": 3, "n_max": 32})"},
        {"le", R"({"base": "circle", "cocycle": "diagonal-h", "h_kind": "cosine", "seed": 9, "n_max": 32, "samples": 64})"},
        {"dichotomy", R"({"base": "cyclic", "n_points": 800, "cocycle": "elliptic-island", "seed": 4, "m": 8})"},
        {"perturb", R"({"base": "cyclic", "n_points": 2400, "cocycle": "elliptic-island", "seed": 3, "delta": 0.4,
                        "epsilon": 0.2, "m": 8, "lusin": true})"},
        {"castle", R"({"base": "cyclic", "n_points": 3000, "horizon": 7, "castle_set": "random", "seed": 11})"},
        {"demo-discontinuity", R"({"base": "cycles", "cycle_lengths": [30, 40], "cocycle": "diagonal-h",
                                   "h_kind": "demo", "h_mean": 1.0})"},
    };
    std::size_t files = 0, mismatches = 0, failures = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const cli::ExperimentConfig cfg = cli::config_from_json(Json::parse(runs[i].second));
        std::map<std::string, std::string> first;
        for (unsigned threads : {1u, 2u, 8u}) {
            cli::RunOptions opt;
            opt.threads = threads;
            opt.out_dir = (root / (std::to_string(i) + "_" + std::to_string(threads))).string();
            std::ostringstream log;
            if (cli::run_command(runs[i].first, cfg, opt, log) != 0) ++failures;
            for (const auto& e : fs::directory_iterator(opt.out_dir)) {
                if (e.path().extension() != ".json") continue;
                const std::string body = read_all(e.path());
                const std::string name = e.path().filename().string();
                if (threads == 1) {
                    first[name] = body;
                    ++files;
                } else if (first.count(name) == 0 || first[name] != body) {
                    ++mismatches;
                }
            }
        }
    }
    fs::remove_all(root);
    return {failures == 0 && mismatches == 0 && files > 0,
            fmt("%zu commands x {1,2,8} threads, %zu JSON files compared, %zu differ, %zu runs failed", runs.size(), files,
                mismatches, failures)};
}

}  // namespace

// Optional arguments: criterion numbers to run (default all).
int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"perturbation pipeline", pipeline},   {"ml2 contract", ml2_contract},
        {"eu-to-es alignment", alignment},   {"le identities", le_identities},
        {"cocycle identity", cocycle_identity}, {"castles", castles},
        {"recurrence guarantee", recurrence}, {"certificates", certificates},
        {"lusin bridge", lusin},             {"determinism", determinism},
    };
    int failed = 0;
    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
            return 2;
        }
        selected[k - 1] = true;
    }
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2zu %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

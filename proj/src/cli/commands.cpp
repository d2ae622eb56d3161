#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "cocycle_forge/castles.hpp"
#include "cocycle_forge/discontinuity.hpp"
#include "cocycle_forge/hyperbolicity.hpp"
#include "cocycle_forge/lusin.hpp"
#include "cocycle_forge/parallel.hpp"
#include "cocycle_forge/perturbation.hpp"
#include "cocycle_forge/precise.hpp"

namespace cocycle_forge::cli {

namespace {

std::string path_in(const RunOptions& opt, const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
}

Json header(const std::string& command, const ExperimentConfig& c) {
    return {{"command", command}, {"config", to_json(c)}};
}

void require_seed(const ExperimentConfig& c, const std::string& what) {
    if (!c.seed_given) throw ConfigError(what + " is sampled: give 'seed' in the config or --seed");
}

void require_seed_for_cocycle(const ExperimentConfig& c) {
    if (c.cocycle == "random" || c.cocycle == "elliptic-island") require_seed(c, "cocycle '" + c.cocycle + "'");
}

std::vector<std::size_t> stride_points(std::size_t n, long long count) {
    std::vector<std::size_t> pts;
    const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < k; ++i) pts.push_back(i * n / k);
    return pts;
}

std::string series_csv(const std::vector<double>& series) {
    std::ostringstream out;
    out << "n,a_n_over_n,running_inf\n";
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < series.size(); ++i) {
        best = std::min(best, series[i]);
        out << i + 1 << ',' << csv_number(series[i]) << ',' << csv_number(best) << '\n';
    }
    return out.str();
}

}  // namespace

int cmd_le(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log) {
    Json out = header("le", c);
    if (c.circle()) {
        require_seed(c, "the exponent over a circle base");
        const CircleBase base = build_circle_base(c);
        const CircleCocycle a = build_circle_cocycle(c);
        const ExponentReport r = integrated_le_subadditive(a, base, c.n_max, c.samples, c.seed, opt.threads);
        out["exponent"] = json_of(r);
        write_text_file(path_in(opt, "le_vs_n.csv"), series_csv(r.series));
        log << "le (subadditive, sampled) = " << csv_number(r.le) << '\n';
    } else {
        require_seed_for_cocycle(c);
        FiniteBase base = build_base(c);
        const Cocycle a = build_cocycle(c, base);
        const ExponentReport exact = integrated_le_exact(a, base);
        const ExponentReport sub = integrated_le_subadditive(a, base, c.n_max, opt.threads);
        out["exponent"] = json_of(exact);
        out["subadditive"] = json_of(sub);
        Json ft = {{"window", c.window}};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
        const auto pts = stride_points(base.n_points(), c.samples);
        for (std::size_t x : pts) {
            const double v = finite_time_le(a, base, x, c.window);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        ft["points"] = pts.size();
        ft["min"] = lo;
        ft["max"] = hi;
        ft["mean"] = sum / static_cast<double>(pts.size());
        out["finite_time"] = ft;
        write_text_file(path_in(opt, "le_vs_n.csv"), series_csv(sub.series));
        log << "le (exact) = " << csv_number(exact.le) << ", inf_n a_n/n (n <= " << c.n_max << ") = " << csv_number(sub.le) << '\n';
    }
    write_json_file(path_in(opt, "report.json"), out);
    return kOk;
}

int cmd_dichotomy(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log) {
    require_seed_for_cocycle(c);
    FiniteBase base = build_base(c);
    const Cocycle a = build_cocycle(c, base);
    const Verdict v = dichotomy_report(a, base, c.m, c.delta, opt.threads);
    Json out = header("dichotomy", c);
    out["verdict"] = json_of(v);
    write_json_file(path_in(opt, "verdict.json"), out);
    log << "verdict: " << to_string(v.kind) << " (" << v.reason << ")\n";
    return kOk;
}

namespace {

std::string before_after_csv(const ExperimentConfig& c, const FiniteBase& base, const PerturbedCocycle& at,
                             const Constants& k) {
    const long long n_max = c.before_after_n;
    const auto pts = stride_points(base.n_points(), c.before_after_samples);
    const unsigned bits = bits_for_cancellation(2.0 * k.c_log * static_cast<double>(n_max), 128);
    std::vector<double> before(n_max, 0.0), after(n_max, 0.0);
    {
        PrecisionScope scope(bits);
        for (std::size_t x : pts) {
            HMat2 p = HMat2::identity(), q = HMat2::identity();
            std::size_t z = x;
            for (long long n = 0; n < n_max; ++n, z = base.forward(z)) {
                p = lift_sl2(at.original()(z)) * p;
                q = at.hp_value(z) * q;
                before[n] += log_op_norm(p);
                after[n] += log_op_norm(q);
            }
        }
    }
    std::ostringstream out;
    out << "n,le_before,le_after\n";
    const double cnt = static_cast<double>(pts.size());
    for (long long n = 0; n < n_max; ++n) {
        const double d = cnt * static_cast<double>(n + 1);
        out << n + 1 << ',' << csv_number(before[n] / d) << ',' << csv_number(after[n] / d) << '\n';
    }
    return out.str();
}

std::string p_curve_csv(const PerturbReport& r) {
    std::ostringstream out;
    out << "h,p_complement\n";
    for (const auto& [h, p] : r.p_curve) out << h << ',' << csv_number(p) << '\n';
    return out.str();
}

}  // namespace

int cmd_perturb(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log) {
    require_seed_for_cocycle(c);
    FiniteBase base = build_base(c);
    const Cocycle a = build_cocycle(c, base);
    if (c.lusin) {
        require_seed(c, "the Lusin bridge exponent");
        if (c.base != "cyclic" || c.shift != 1) throw ConfigError("lusin needs a cyclic grid base with shift 1");
    }
    TheoremBOptions o;
    o.m = c.m;
    o.n_cap = c.n_cap;
    o.h_max = c.h_max;
    o.threads = opt.threads;
    o.seed = c.seed;
    Json out = header("perturb", c);
    const auto t0 = std::chrono::steady_clock::now();
    TheoremBResult res{PerturbedCocycle(a), {}};
    try {
        res = theorem_b_perturb(a, base, c.delta, c.epsilon, o);
    } catch (const PipelineInfeasible& e) {
        out["perturb"] = json_of(e.report());
        write_json_file(path_in(opt, "report.json"), out);
        write_text_file(path_in(opt, "p_curve.csv"), p_curve_csv(e.report()));
        log << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    }
    const PerturbReport& r = res.report;
    out["perturb"] = json_of(r);
    log << "verdict " << r.verdict << ": le " << csv_number(r.le_before) << " -> " << csv_number(r.le_after)
        << " (bound " << csv_number(r.le_bound) << ", H = " << r.h << ", " << r.overrides << " overrides)\n";
    write_json_file(path_in(opt, "perturbed_cocycle.json"), json_of(res.cocycle.materialize(), base));
    write_text_file(path_in(opt, "before_after.csv"), before_after_csv(c, base, res.cocycle, r.constants));
    if (!r.p_curve.empty()) write_text_file(path_in(opt, "p_curve.csv"), p_curve_csv(r));

    if (c.lusin) {
        const GridCocycle grid(a, c.lusin_collar);
        LusinOptions lo;
        lo.epsilon = c.lusin_epsilon;
        lo.delta = c.delta;
        lo.n_horizon = std::max<long long>(1, r.g_n);
        lo.samples = static_cast<int>(c.lusin_samples);
        lo.seed = c.seed;
        const LusinResult lr = lusin_bridge(grid, res.cocycle, lo);
        out["lusin"] = json_of(lr.report);
        std::ostringstream t;
        t << "cell,s,det_i_plus_j,det_b,j11\n";
        for (const DetCheck& d : lr.transcript)
            t << d.cell << ',' << csv_number(d.s) << ',' << csv_number(d.det_i_plus_j) << ',' << csv_number(d.det_b)
              << ',' << csv_number(d.j11) << '\n';
        write_text_file(path_in(opt, "det_transcript.csv"), t.str());
        Json jb = {{"cells", grid.cells()}, {"collar_a", grid.collar()}, {"collar_j", lr.b.collar_j()}};
        Json am = Json::array(), jm = Json::array();
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const Mat2& m = a(i);
            am.push_back(Json::array({m.a, m.b, m.c, m.d}));
            const Mat2 j = lr.b.j_prime(i, 0.0);
            jm.push_back(Json::array({j.a, j.b, j.c, j.d}));
        }
        jb["matrices"] = am;
        jb["j"] = jm;
        write_json_file(path_in(opt, "bridged_cocycle.json"), jb);
        log << "lusin: max |det(I+J'') - 1| = " << csv_number(lr.report.max_det_error) << ", sampled le(B) = "
            << csv_number(lr.report.sampled_le) << " < " << csv_number(lr.report.le_target) << '\n';
    }
    write_json_file(path_in(opt, "report.json"), out);
    log << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    return kOk;
}

int cmd_castle(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log) {
    FiniteBase base = build_base(c);
    const std::size_t n = base.n_points();
    const std::size_t h = static_cast<std::size_t>(c.horizon);
    if (!base.effectively_aperiodic(h))
        throw Infeasible("a cycle of length <= 3H = " + std::to_string(3 * h) + " defeats the castle");
    IndicatorSet s(n, c.castle_set == "all");
    if (c.castle_set == "random") {
        require_seed(c, "castle_set 'random'");
        Rng rng(c.seed);
        for (std::size_t x = 0; x < n; ++x)
            if (rng.uniform() < c.castle_density) s.insert(x);
    } else if (c.castle_set == "points") {
        for (std::size_t x : c.castle_points) {
            if (x >= n) throw ConfigError("castle point " + std::to_string(x) + " is outside the base");
            s.insert(x);
        }
    }
    const IndicatorSet b = maximal_disjoint_base(base, s, h);
    const bool maximal = verify_maximal_base(base, s, b, h);
    const Castle q_hat = kakutani_castle(base, b);
    const Castle q = truncate_castle(q_hat, 3 * h);
    const ThreeDeltaCheck three = verify_3delta2(base, n - s.count(), q_hat, q, h);
    Json out = header("castle", c);
    out["horizon"] = h;
    out["set_points"] = s.count();
    out["base_points"] = b.points();
    out["maximal"] = maximal;
    out["q_hat"] = json_of(q_hat);
    out["q"] = json_of(q);
    out["three_delta"] = json_of(three);
    write_json_file(path_in(opt, "castle.json"), out);
    std::ostringstream csv;
    csv << "height,towers,points\n";
    for (const Tower& t : q_hat.towers)
        csv << t.height << ',' << t.base_points.size() << ',' << t.height * t.base_points.size() << '\n';
    write_text_file(path_in(opt, "tower_heights.csv"), csv.str());
    log << q_hat.towers.size() << " tower heights, |B| = " << b.count() << ", 3delta2 "
        << (three.holds ? "holds" : "FAILS") << '\n';
    if (!maximal || !three.holds) throw ContractViolation("castle checks failed");
    return kOk;
}

int cmd_demo_discontinuity(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log) {
    const FiniteBase base = build_base(c);
    const std::vector<double> h = build_h(c, base);
    const DiscontinuityReport r = discontinuity_demo(h, base, c.demo_epsilon, opt.threads);
    Json out = header("demo-discontinuity", c);
    out["discontinuity"] = json_of(r);
    write_json_file(path_in(opt, "discontinuity.json"), out);
    log << "status " << r.status << ": le = " << csv_number(r.le) << ", |int h| = " << csv_number(std::abs(r.integral_h))
        << ", uniform certificate " << (r.uniform_certified ? "found" : "refused") << '\n';
    return kOk;
}

int run_command(const std::string& name, const ExperimentConfig& config, const RunOptions& opt, std::ostream& log) {
    try {
        std::filesystem::create_directories(opt.out_dir);
        if (name == "le") return cmd_le(config, opt, log);
        if (name == "dichotomy") return cmd_dichotomy(config, opt, log);
        if (name == "perturb") return cmd_perturb(config, opt, log);
        if (name == "castle") return cmd_castle(config, opt, log);
        if (name == "demo-discontinuity") return cmd_demo_discontinuity(config, opt, log);
        log << "error: unknown command '" << name << "'\n";
        return kConfigError;
    } catch (const InvalidInput& e) {
        log << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidBase& e) {
        log << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const PreconditionError& e) {
        log << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Infeasible& e) {
        log << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const NTooSmall& e) {
        log << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        log << "contract violation: " << e.what() << '\n';
        return kContractViolation;
    }
}

}  // namespace cocycle_forge::cli

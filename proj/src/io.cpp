#include "cocycle_forge/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

namespace {

Json mat(const Mat2& m) { return Json::array({m.a, m.b, m.c, m.d}); }

Json cone(const Cone& c) {
    return {{"center", c.center.angle()}, {"half_width", c.half_width}};
}

}  // namespace

Json json_of(const FiniteBase& base) {
    return {{"n_points", base.n_points()}, {"sigma", base.sigma()}};
}

FiniteBase base_from_json(const Json& j) {
    try {
        std::vector<std::size_t> sigma = j.at("sigma").get<std::vector<std::size_t>>();
        if (j.contains("n_points") && j.at("n_points").get<std::size_t>() != sigma.size())
            throw InvalidInput("base: n_points does not match sigma");
        return FiniteBase(std::move(sigma));
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("base: ") + e.what());
    }
}

Json json_of(const Cocycle& a, const FiniteBase& base) {
    Json m = Json::array();
    for (const Mat2& v : a.values()) m.push_back(mat(v));
    return {{"base", json_of(base)}, {"matrices", std::move(m)}};
}

std::pair<FiniteBase, Cocycle> cocycle_from_json(const Json& j) {
    try {
        FiniteBase base = base_from_json(j.at("base"));
        std::vector<Mat2> values;
        for (const Json& e : j.at("matrices")) {
            const auto v = e.get<std::vector<double>>();
            if (v.size() != 4) throw InvalidInput("cocycle: every matrix needs 4 entries");
            values.push_back(Mat2{v[0], v[1], v[2], v[3]});
        }
        Cocycle a(std::move(values));
        check_compatible(a, base);
        return {std::move(base), std::move(a)};
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("cocycle: ") + e.what());
    }
}

Json json_of(const ExponentReport& r) {
    Json cycles = Json::array();
    for (const CycleExponent& c : r.cycles)
        cycles.push_back({{"cycle", c.cycle},
                          {"length", c.length},
                          {"lambda", c.lambda},
                          {"log_abs_trace", c.log_abs_trace},
                          {"hyperbolic", c.hyperbolic}});
    return {{"le", r.le},          {"method", to_string(r.method)}, {"n_used", r.n_used},
            {"samples", r.samples}, {"seed", r.seed},               {"series", r.series},
            {"cycles", cycles}};
}

Json json_of(const HyperbolicityCertificate& c) {
    return {{"method", c.method},         {"cone", cone(c.cone)}, {"lambda_exp", c.lambda_exp},
            {"c", c.c},                   {"tau", c.tau},         {"gap", c.gap},
            {"splitting_angle", c.splitting_angle},               {"iterations", c.iterations},
            {"m0", c.m0},                 {"verified_points", c.verified_points},
            {"sampled", c.sampled},       {"seed", c.seed},       {"digest", c.digest}};
}

Json json_of(const CertifyResult& r) {
    Json j = {{"certified", r.certified}, {"reason", r.reason}, {"candidates", r.candidates}};
    if (r.certified) {
        j["certificate"] = json_of(r.certificate);
    } else {
        j["best_cone"] = cone(r.best_cone);
        j["violating_point"] = r.violating_point;
        j["violating_x"] = r.violating_x;
    }
    return j;
}

Json json_of(const HmReport& r) {
    return {{"m", r.m},
            {"h_points", r.h_points},
            {"h_measure", r.h_measure},
            {"empty", r.empty},
            {"tau", r.tau},
            {"k", r.k},
            {"angle_floor", r.angle_floor},
            {"k1", r.k1},
            {"tau1", r.tau1},
            {"checked_horizon", r.checked_horizon},
            {"halving_holds", r.halving_holds},
            {"contraction_holds", r.contraction_holds},
            {"worst_log_margin", r.worst_log_margin}};
}

Json json_of(const Verdict& v) {
    Json j = {{"verdict", to_string(v.kind)},
              {"m", v.m},
              {"delta", v.delta},
              {"le", v.le},
              {"gamma_count", v.gamma_count},
              {"gamma_measure", v.gamma_measure},
              {"omega_measure", v.omega_measure},
              {"gamma_witness", v.gamma_witness},
              {"reason", v.reason},
              {"cone_search", json_of(v.cone_search)}};
    j["certificate"] = v.certificate ? json_of(*v.certificate) : Json(nullptr);
    j["hm"] = v.hm ? json_of(*v.hm) : Json(nullptr);
    return j;
}

Json json_of(const Castle& c) {
    Json towers = Json::array();
    for (const Tower& t : c.towers) towers.push_back({{"height", t.height}, {"base_points", t.base_points}});
    return {{"n_points", c.n_points},
            {"towers", towers},
            {"uncovered", c.uncovered},
            {"point_count", c.point_count()},
            {"measure", c.measure()},
            {"max_height", c.max_height()}};
}

Json json_of(const ThreeDeltaCheck& c) {
    return {{"lhs_points", c.lhs_points}, {"rhs_points", c.rhs_points}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}};
}

Json json_of(const Constants& k) {
    return {{"epsilon", k.epsilon},   {"delta", k.delta},   {"c_mat", k.c_mat},   {"c_big", k.c_big},
            {"c_log", k.c_log},       {"theta_max", k.theta_max}, {"alpha1", k.alpha1}, {"alpha2", k.alpha2},
            {"clamped", k.clamped},   {"c", k.c},           {"c_hat", k.c_hat},   {"e_bound", k.e_bound},
            {"beta", k.beta},         {"m_theory", k.m_theory}, {"m", k.m},       {"gamma", k.gamma}};
}

Json json_of(const PerturbReport& r) {
    Json curve = Json::array();
    for (const auto& [h, p] : r.p_curve) curve.push_back({{"h", h}, {"p_complement", p}});
    Json nh = Json::array();
    for (const auto& [n, c] : r.n_histogram) nh.push_back({{"n", n}, {"count", c}});
    Json towers = Json::array();
    for (const TowerRecord& t : r.towers)
        towers.push_back({{"base_point", t.base_point},
                          {"height", t.height},
                          {"case", to_string(t.tag)},
                          {"splice_offset", t.splice_offset},
                          {"entries", t.entries},
                          {"log_norm", t.log_norm},
                          {"fast_log_norm", t.fast_log_norm},
                          {"bound", t.bound},
                          {"bits", t.bits}});
    return {{"verdict", r.verdict},
            {"reason", r.reason},
            {"constants", json_of(r.constants)},
            {"le_before", r.le_before},
            {"le_after", r.le_after},
            {"le_after_rounded", r.le_after_rounded},
            {"le_bound", r.le_bound},
            {"le_bound_holds", r.le_after < r.le_bound},
            {"max_perturbation", r.max_perturbation},
            {"max_det_error", r.max_det_error},
            {"h", r.h},
            {"h_max", r.h_max},
            {"n_cap", r.n_cap},
            {"p_complement", r.p_complement},
            {"p_curve", curve},
            {"gamma_points", r.gamma_points},
            {"unusable_points", r.unusable_points},
            {"case_histogram", r.case_histogram},
            {"n_histogram", nh},
            {"q_hat_measure", r.q_hat_measure},
            {"q_measure", r.q_measure},
            {"q_complement", r.q_complement},
            {"three_delta", json_of(r.three_delta)},
            {"g_complement", r.g_complement},
            {"g_chain_bound", r.g_chain_bound},
            {"g_n", r.g_n},
            {"towers", towers},
            {"max_bits", r.max_bits},
            {"sampled_le", r.sampled_le},
            {"sampled_n", r.sampled_n},
            {"seed", r.seed},
            {"overrides", r.overrides}};
}

Json json_of(const LusinReport& r) {
    return {{"cells", r.cells},
            {"epsilon", r.epsilon},
            {"delta", r.delta},
            {"n_horizon", r.n_horizon},
            {"gamma", r.gamma},
            {"collar_a", r.collar_a},
            {"collar_j", r.collar_j},
            {"a_jumps", r.a_jumps},
            {"j_jumps", r.j_jumps},
            {"collar_measure", r.collar_measure},
            {"retries", r.retries},
            {"max_j", r.max_j},
            {"max_det_error", r.max_det_error},
            {"max_det_error_b", r.max_det_error_b},
            {"max_j11", r.max_j11},
            {"j11_bound", r.j11_bound},
            {"k_constant", r.k_constant},
            {"sup_norm_a", r.sup_norm_a},
            {"max_b_minus_a", r.max_b_minus_a},
            {"b_minus_a_bound", r.b_minus_a_bound},
            {"c", r.c},
            {"boundary_jump", r.boundary_jump},
            {"max_node_jump", r.max_node_jump},
            {"node_spacing", r.node_spacing},
            {"lipschitz", r.lipschitz},
            {"nodes", r.nodes},
            {"bits", r.bits},
            {"le_plateau", r.le_plateau},
            {"le_collar_max", r.le_collar_max},
            {"le_quadrature", r.le_quadrature},
            {"le_bound_collar", r.le_bound_collar},
            {"sampled_le", r.sampled_le},
            {"samples", r.samples},
            {"collar_samples", r.collar_samples},
            {"seed", r.seed},
            {"le_target", r.le_target},
            {"le_target_holds", r.sampled_le < r.le_target}};
}

Json json_of(const DiscontinuityReport& r) {
    Json cycles = Json::array();
    for (const CycleMean& c : r.cycles)
        cycles.push_back({{"cycle", c.cycle}, {"length", c.length}, {"weight", c.weight}, {"mean_h", c.mean_h}, {"lambda", c.lambda}});
    return {{"status", r.status},
            {"points", r.points},
            {"cycles", cycles},
            {"integral_h", r.integral_h},
            {"abs_integral_h", std::abs(r.integral_h)},
            {"le", r.le},
            {"le_formula", r.le_formula},
            {"zero_cycle", r.zero_cycle},
            {"zero_cycle_measure", r.zero_cycle_measure},
            {"epsilon", r.epsilon},
            {"max_partial_sum", r.max_partial_sum},
            {"n_eps", r.n_eps},
            {"n_checked", r.n_checked},
            {"uniform_certified", r.uniform_certified},
            {"cone_search", json_of(r.cone_search)}};
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text;
    if (!out) throw InvalidInput("write failed for " + path);
}

}  // namespace cocycle_forge

#include "config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "cocycle_forge/generators.hpp"

namespace cocycle_forge::cli {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

template <class T>
void take(const Json& v, const std::string& key, T& out) {
    try {
        out = v.get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
    }
}

// Literals built in C++ are signed even when non-negative.
bool non_negative_integer(const Json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

void take_count(const Json& v, const std::string& key, std::size_t& out) {
    if (!non_negative_integer(v)) throw ConfigError("config key '" + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
}

void take_counts(const Json& v, const std::string& key, std::vector<std::size_t>& out) {
    if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    out.clear();
    for (const Json& e : v) {
        if (!non_negative_integer(e)) throw ConfigError("config key '" + key + "' must hold non-negative integers");
        out.push_back(e.get<std::size_t>());
    }
}

void take_int(const Json& v, const std::string& key, long long& out) {
    if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
    out = v.get<long long>();
}

void take_real(const Json& v, const std::string& key, double& out) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    out = v.get<double>();
}

void one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ConfigError("config key '" + key + "' must be one of " + list + ", got '" + v + "'");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
    ExperimentConfig c;
    using Setter = std::function<void(const Json&, const std::string&)>;
    const std::map<std::string, Setter> keys = {
        {"base", [&](const Json& v, const std::string& k) { take(v, k, c.base); }},
        {"n_points", [&](const Json& v, const std::string& k) { take_count(v, k, c.n_points); }},
        {"shift", [&](const Json& v, const std::string& k) { take_count(v, k, c.shift); }},
        {"cycle_lengths", [&](const Json& v, const std::string& k) { take_counts(v, k, c.cycle_lengths); }},
        {"sigma", [&](const Json& v, const std::string& k) { take_counts(v, k, c.sigma); }},
        {"base_file", [&](const Json& v, const std::string& k) { take(v, k, c.base_file); }},
        {"alpha", [&](const Json& v, const std::string& k) { take_real(v, k, c.alpha); }},
        {"cocycle", [&](const Json& v, const std::string& k) { take(v, k, c.cocycle); }},
        {"matrix", [&](const Json& v, const std::string& k) { take(v, k, c.matrix); }},
        {"theta", [&](const Json& v, const std::string& k) { take_real(v, k, c.theta); }},
        {"h_kind", [&](const Json& v, const std::string& k) { take(v, k, c.h_kind); }},
        {"h_mean", [&](const Json& v, const std::string& k) { take_real(v, k, c.h_mean); }},
        {"h_amplitude", [&](const Json& v, const std::string& k) { take_real(v, k, c.h_amplitude); }},
        {"h_values", [&](const Json& v, const std::string& k) { take(v, k, c.h_values); }},
        {"island_block", [&](const Json& v, const std::string& k) { take_count(v, k, c.island_block); }},
        {"island_rotations", [&](const Json& v, const std::string& k) { take_count(v, k, c.island_rotations); }},
        {"island_hyperbolic", [&](const Json& v, const std::string& k) { take_real(v, k, c.island_hyperbolic); }},
        {"random_spread", [&](const Json& v, const std::string& k) { take_real(v, k, c.random_spread); }},
        {"cocycle_file", [&](const Json& v, const std::string& k) { take(v, k, c.cocycle_file); }},
        {"delta", [&](const Json& v, const std::string& k) { take_real(v, k, c.delta); }},
        {"epsilon", [&](const Json& v, const std::string& k) { take_real(v, k, c.epsilon); }},
        {"m", [&](const Json& v, const std::string& k) { take_int(v, k, c.m); }},
        {"n_max", [&](const Json& v, const std::string& k) { take_int(v, k, c.n_max); }},
        {"window", [&](const Json& v, const std::string& k) { take_int(v, k, c.window); }},
        {"seed",
         [&](const Json& v, const std::string& k) {
             if (!non_negative_integer(v)) throw ConfigError("config key '" + k + "' must be a non-negative integer");
             c.seed = v.get<std::uint64_t>();
             c.seed_given = true;
         }},
        {"samples", [&](const Json& v, const std::string& k) { take_int(v, k, c.samples); }},
        {"n_cap", [&](const Json& v, const std::string& k) { take_int(v, k, c.n_cap); }},
        {"h_max", [&](const Json& v, const std::string& k) { take_int(v, k, c.h_max); }},
        {"before_after_n", [&](const Json& v, const std::string& k) { take_int(v, k, c.before_after_n); }},
        {"before_after_samples", [&](const Json& v, const std::string& k) { take_int(v, k, c.before_after_samples); }},
        {"lusin", [&](const Json& v, const std::string& k) {
             if (!v.is_boolean()) throw ConfigError("config key '" + k + "' must be true or false");
             c.lusin = v.get<bool>();
         }},
        {"lusin_epsilon", [&](const Json& v, const std::string& k) { take_real(v, k, c.lusin_epsilon); }},
        {"lusin_collar", [&](const Json& v, const std::string& k) { take_real(v, k, c.lusin_collar); }},
        {"lusin_samples", [&](const Json& v, const std::string& k) { take_int(v, k, c.lusin_samples); }},
        {"horizon", [&](const Json& v, const std::string& k) { take_int(v, k, c.horizon); }},
        {"castle_set", [&](const Json& v, const std::string& k) { take(v, k, c.castle_set); }},
        {"castle_density", [&](const Json& v, const std::string& k) { take_real(v, k, c.castle_density); }},
        {"castle_points", [&](const Json& v, const std::string& k) { take_counts(v, k, c.castle_points); }},
        {"demo_epsilon", [&](const Json& v, const std::string& k) { take_real(v, k, c.demo_epsilon); }},
    };
    for (const auto& [k, v] : j.items()) {
        const auto it = keys.find(k);
        if (it == keys.end()) throw ConfigError("unknown config key '" + k + "'");
        if (v.is_object()) throw ConfigError("config is flat: key '" + k + "' holds an object");
        it->second(v, k);
    }

    one_of("base", c.base, {"cyclic", "cycles", "permutation", "circle"});
    one_of("cocycle", c.cocycle, {"constant", "diagonal-h", "elliptic-island", "rotation", "random", "file"});
    one_of("h_kind", c.h_kind, {"constant", "cosine", "demo", "values"});
    one_of("castle_set", c.castle_set, {"all", "random", "points"});
    if (c.matrix.size() != 4) throw ConfigError("config key 'matrix' needs 4 entries [a, b, c, d]");
    if (c.n_max < 1 || c.window < 1 || c.samples < 1) throw ConfigError("n_max, window and samples must be >= 1");
    if (c.before_after_n < 1 || c.before_after_samples < 1 || c.lusin_samples < 1)
        throw ConfigError("before_after_n, before_after_samples and lusin_samples must be >= 1");
    if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
    for (double v : {c.delta, c.epsilon, c.alpha, c.theta, c.h_mean, c.h_amplitude, c.island_hyperbolic,
                     c.random_spread, c.lusin_epsilon, c.lusin_collar, c.castle_density, c.demo_epsilon})
        if (!std::isfinite(v)) throw ConfigError("config holds a non-finite number");
    return c;
}

Json to_json(const ExperimentConfig& c) {
    return {{"base", c.base},
            {"n_points", c.n_points},
            {"shift", c.shift},
            {"cycle_lengths", c.cycle_lengths},
            {"sigma", c.sigma},
            {"base_file", c.base_file},
            {"alpha", c.alpha},
            {"cocycle", c.cocycle},
            {"matrix", c.matrix},
            {"theta", c.theta},
            {"h_kind", c.h_kind},
            {"h_mean", c.h_mean},
            {"h_amplitude", c.h_amplitude},
            {"h_values", c.h_values},
            {"island_block", c.island_block},
            {"island_rotations", c.island_rotations},
            {"island_hyperbolic", c.island_hyperbolic},
            {"random_spread", c.random_spread},
            {"cocycle_file", c.cocycle_file},
            {"delta", c.delta},
            {"epsilon", c.epsilon},
            {"m", c.m},
            {"n_max", c.n_max},
            {"window", c.window},
            {"seed", c.seed},
            {"samples", c.samples},
            {"n_cap", c.n_cap},
            {"h_max", c.h_max},
            {"before_after_n", c.before_after_n},
            {"before_after_samples", c.before_after_samples},
            {"lusin", c.lusin},
            {"lusin_epsilon", c.lusin_epsilon},
            {"lusin_collar", c.lusin_collar},
            {"lusin_samples", c.lusin_samples},
            {"horizon", c.horizon},
            {"castle_set", c.castle_set},
            {"castle_density", c.castle_density},
            {"castle_points", c.castle_points},
            {"demo_epsilon", c.demo_epsilon}};
}

ExperimentConfig load_config(const std::string& path) {
    Json j;
    try {
        j = read_json_file(path);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j);
}

FiniteBase build_base(const ExperimentConfig& c) {
    if (c.base == "circle") throw ConfigError("this command needs a finite base");
    if (c.base == "cyclic") {
        if (c.n_points < 1) throw ConfigError("n_points must be >= 1");
        return FiniteBase::cyclic(c.n_points, c.shift);
    }
    if (c.base == "cycles") {
        if (c.cycle_lengths.empty()) throw ConfigError("base 'cycles' needs cycle_lengths");
        std::vector<std::size_t> sigma;
        std::size_t start = 0;
        for (std::size_t len : c.cycle_lengths) {
            if (len < 1) throw ConfigError("cycle lengths must be >= 1");
            for (std::size_t i = 0; i < len; ++i) sigma.push_back(start + (i + 1) % len);
            start += len;
        }
        return FiniteBase(std::move(sigma));
    }
    if (!c.base_file.empty()) {
        if (!c.sigma.empty()) throw ConfigError("give either sigma or base_file, not both");
        try {
            return base_from_json(read_json_file(c.base_file));
        } catch (const InvalidBase& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        return FiniteBase(c.sigma);
    } catch (const InvalidBase& e) {
        throw ConfigError(e.what());
    }
}

CircleBase build_circle_base(const ExperimentConfig& c) {
    if (c.base != "circle") throw ConfigError("this command needs base 'circle'");
    return CircleBase(c.alpha);
}

std::vector<double> build_h(const ExperimentConfig& c, const FiniteBase& base) {
    const std::size_t n = base.n_points();
    std::vector<double> h(n, c.h_mean);
    if (c.h_kind == "cosine") {
        for (std::size_t x = 0; x < n; ++x)
            h[x] = c.h_mean + c.h_amplitude * std::cos(kTwoPi * static_cast<double>(x) / static_cast<double>(n));
    } else if (c.h_kind == "demo") {
        // h_mean on the first cycle, +-h_amplitude alternating on the others
        const auto& cyc = base.cycles();
        for (std::size_t k = 0; k < cyc.size(); ++k)
            for (std::size_t i = 0; i < cyc[k].size(); ++i)
                h[cyc[k][i]] = k == 0 ? c.h_mean : (i % 2 == 0 ? c.h_amplitude : -c.h_amplitude);
    } else if (c.h_kind == "values") {
        if (c.h_values.size() != n) throw ConfigError("h_values must have one entry per base point");
        h = c.h_values;
    }
    return h;
}

Cocycle build_cocycle(const ExperimentConfig& c, FiniteBase& base) {
    const std::size_t n = base.n_points();
    const Mat2 m{c.matrix[0], c.matrix[1], c.matrix[2], c.matrix[3]};
    if (c.cocycle == "constant") return constant_cocycle(n, m);
    if (c.cocycle == "rotation") return rotation_cocycle(n, c.theta);
    if (c.cocycle == "diagonal-h") return diagonal_cocycle(build_h(c, base));
    if (c.cocycle == "random") return random_cocycle(n, c.seed, c.random_spread);
    if (c.cocycle == "elliptic-island")
        return elliptic_island(base, c.seed, IslandParams{c.island_block, c.island_rotations, c.island_hyperbolic});
    if (c.cocycle_file.empty()) throw ConfigError("cocycle 'file' needs cocycle_file");
    auto [b, a] = cocycle_from_json(read_json_file(c.cocycle_file));
    base = std::move(b);
    return std::move(a);
}

CircleCocycle build_circle_cocycle(const ExperimentConfig& c) {
    const Mat2 m{c.matrix[0], c.matrix[1], c.matrix[2], c.matrix[3]};
    if (c.cocycle == "constant") return CircleCocycle([m](double) { return m; });
    if (c.cocycle == "rotation") {
        const Mat2 r = rotation(c.theta);
        return CircleCocycle([r](double) { return r; });
    }
    if (c.cocycle == "diagonal-h") {
        if (c.h_kind != "constant" && c.h_kind != "cosine") throw ConfigError("circle bases support h_kind constant or cosine");
        const double mean = c.h_mean, amp = c.h_kind == "cosine" ? c.h_amplitude : 0.0;
        return CircleCocycle([mean, amp](double x) {
            const double h = mean + amp * std::cos(kTwoPi * x);
            return Mat2::diag(std::exp(h), std::exp(-h));
        });
    }
    throw ConfigError("cocycle '" + c.cocycle + "' is not available over a circle base");
}

}  // namespace cocycle_forge::cli

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/io.hpp"

namespace cocycle_forge::cli {

class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Flat experiment description. Every key is optional; to_json writes the
// resolved values back, defaults included.
struct ExperimentConfig {
    // base: cyclic | cycles | permutation | circle
    std::string base = "cyclic";
    std::size_t n_points = 1000;
    std::size_t shift = 1;
    std::vector<std::size_t> cycle_lengths;
    std::vector<std::size_t> sigma;
    std::string base_file;
    double alpha = 0.61803398874989484820;

    // cocycle: constant | diagonal-h | elliptic-island | rotation | random | file
    std::string cocycle = "elliptic-island";
    std::vector<double> matrix{2.0, 0.0, 0.0, 0.5};
    double theta = 1.0;
    // h for diagonal-h: constant | cosine | demo | values
    std::string h_kind = "cosine";
    double h_mean = 0.5;
    double h_amplitude = 1.0;
    std::vector<double> h_values;
    std::size_t island_block = 16;
    std::size_t island_rotations = 0;
    double island_hyperbolic = 4.0;
    double random_spread = 1.0;
    std::string cocycle_file;

    double delta = 0.05;
    double epsilon = 0.2;
    long long m = 8;
    long long n_max = 64;
    long long window = 256;
    std::uint64_t seed = 1;
    bool seed_given = false;
    long long samples = 64;

    long long n_cap = 0;
    long long h_max = 0;
    long long before_after_n = 128;
    long long before_after_samples = 16;
    bool lusin = false;
    double lusin_epsilon = 0.3;
    double lusin_collar = 1e-3;
    long long lusin_samples = 256;

    long long horizon = 3;
    // castle_set: all | random | points
    std::string castle_set = "all";
    double castle_density = 0.5;
    std::vector<std::size_t> castle_points;

    double demo_epsilon = 0.1;

    bool circle() const { return base == "circle"; }
};

ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

FiniteBase build_base(const ExperimentConfig& c);
CircleBase build_circle_base(const ExperimentConfig& c);
std::vector<double> build_h(const ExperimentConfig& c, const FiniteBase& base);
// Finite bases only; a "file" cocycle brings its own base, which replaces `base`.
Cocycle build_cocycle(const ExperimentConfig& c, FiniteBase& base);
CircleCocycle build_circle_cocycle(const ExperimentConfig& c);

}  // namespace cocycle_forge::cli

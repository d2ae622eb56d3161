#include "cocycle_forge/parallel.hpp"

#include <cstdlib>
#include <string>

#include "cocycle_forge/errors.hpp"

namespace cocycle_forge {

unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag) {
        if (*flag == 0) throw InvalidInput("--threads must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("COCYCLE_FORGE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw InvalidInput(std::string("COCYCLE_FORGE_THREADS is not a positive integer: ") + env);
    }
    return 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over seed ^ stream-multiple
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace cocycle_forge

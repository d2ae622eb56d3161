#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "cocycle_forge/base.hpp"
#include "cocycle_forge/castles.hpp"
#include "cocycle_forge/cocycle.hpp"
#include "cocycle_forge/discontinuity.hpp"
#include "cocycle_forge/hyperbolicity.hpp"
#include "cocycle_forge/lusin.hpp"
#include "cocycle_forge/perturbation.hpp"

namespace cocycle_forge {

using Json = nlohmann::json;

// {"n_points": N, "sigma": [...]}
Json json_of(const FiniteBase& base);
FiniteBase base_from_json(const Json& j);

// {"base": {...}, "matrices": [[a, b, c, d], ...]}
Json json_of(const Cocycle& a, const FiniteBase& base);
std::pair<FiniteBase, Cocycle> cocycle_from_json(const Json& j);

Json json_of(const ExponentReport& r);
Json json_of(const HyperbolicityCertificate& c);
Json json_of(const CertifyResult& r);
Json json_of(const HmReport& r);
Json json_of(const Verdict& v);
Json json_of(const Castle& c);
Json json_of(const ThreeDeltaCheck& c);
Json json_of(const Constants& k);
// Wall-clock time is left out so that reports are reproducible byte for byte.
Json json_of(const PerturbReport& r);
Json json_of(const LusinReport& r);
Json json_of(const DiscontinuityReport& r);

// Locale-independent, 12 significant digits; "inf", "-inf", "nan" otherwise.
std::string csv_number(double v);

Json read_json_file(const std::string& path);
// Two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cocycle_forge

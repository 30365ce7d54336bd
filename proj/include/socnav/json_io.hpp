#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

namespace socnav {

using json = nlohmann::json;

/// Canonical text: keys sorted (std::map backed objects), compact separators,
/// shortest round-trip doubles, trailing newline.
inline std::string canonical_dump(const json& j) { return j.dump() + "\n"; }

/// JSON has no infinities; they travel as the strings "Infinity"/"-Infinity"
/// and NaN as null.
inline json number_to_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

inline double number_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}

}  // namespace socnav

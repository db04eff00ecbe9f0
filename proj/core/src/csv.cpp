#include "fsgen/csv.hpp"

#include <cstdio>

namespace fsgen {

std::string format_g9(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

std::string format_optional(const std::optional<double>& value, const std::string& marker) {
    return value ? format_g9(*value) : marker;
}

} // namespace fsgen

#pragma once

#include <optional>
#include <string>

namespace fsgen {

// All CSV numbers use 9 significant digits (printf %.9g) so outputs diff
// cleanly across runs.
std::string format_g9(double value);

// Undefined ratios render as the literal marker, never as 0.
std::string format_optional(const std::optional<double>& value,
                            const std::string& marker = "undefined");

} // namespace fsgen

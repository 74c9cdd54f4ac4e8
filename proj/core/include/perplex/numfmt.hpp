#pragma once

#include <string>

namespace perplex {

// 17 significant digits; enough for every double to round-trip bit-exactly.
std::string format_exact(double value);

// Shortest decimal that round-trips (used for map keys such as FPR budgets).
std::string format_short(double value);

// Fixed-point rendering for human-readable tables.
std::string format_fixed(double value, int decimals);

// JSON string literal with escaping.
std::string json_quote(const std::string& text);

}  // namespace perplex

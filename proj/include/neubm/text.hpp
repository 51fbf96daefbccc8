#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace neubm {

// Locale-independent number <-> text helpers used by every on-disk format.

std::optional<double> parse_real(std::string_view text);
std::optional<std::int64_t> parse_integer(std::string_view text);

/// Shortest representation that round-trips to the same double.
std::string format_real(double value);

/// Fixed-point with the given number of decimals.
std::string format_fixed(double value, int decimals);

/// "0.7115 ± 0.0023"
std::string format_mean_std(double mean, double std_dev, int decimals = 4);

}  // namespace neubm

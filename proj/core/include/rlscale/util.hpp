#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlscale {

/// Median with the conventional even-count rule (mean of the two middle values).
/// Throws ArgumentError on empty input.
double median(std::vector<double> values);

double mean(std::span<const double> values);

/// Population standard deviation (divides by n).
double stddev(std::span<const double> values);

/// exp(mean(log v)); all values must be positive.
double log_space_mean(std::span<const double> values);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

/// Strip spaces, tabs and a trailing carriage return.
std::string_view trim(std::string_view s);

/// Split on every comma; no quoting.
std::vector<std::string_view> split_commas(std::string_view line);

/// 64-bit FNV-1a digest rendered as "fnv1a64:<16 hex digits>".
std::string fnv1a_digest(std::string_view bytes);

/// `count` log-uniformly spaced values from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t count);

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace rlscale

#pragma once

// Locale-independent number formatting shared by checkpoints, configs and reports.

#include <string>
#include <string_view>
#include <vector>

namespace sslcal {

/// Shortest round-trip representation ("nan"/"inf" for non-finite values).
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// 64-bit FNV-1a.
unsigned long long fnv1a(std::string_view s);

}  // namespace sslcal

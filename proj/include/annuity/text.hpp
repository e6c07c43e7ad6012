#pragma once

#include <string>
#include <string_view>

namespace annuity::text {

// Shortest representation that parses back to the same double.
std::string format_double(double x);
// Whole-string parse; throws ConfigError naming `what` on trailing junk or overflow.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);
unsigned long long parse_u64(std::string_view s, std::string_view what);

std::string_view trim(std::string_view s);

}  // namespace annuity::text

#include "annuity/text.hpp"

#include <charconv>

#include "annuity/error.hpp"

namespace annuity::text {

namespace {

template <class T>
T parse_whole(std::string_view s, std::string_view what, const char* kind) {
    s = trim(s);
    T v{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last)
        throw ConfigError(std::string(what) + ": expected " + kind + ", got '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view s, std::string_view what) { return parse_whole<double>(s, what, "a number"); }

long long parse_int(std::string_view s, std::string_view what) { return parse_whole<long long>(s, what, "an integer"); }

unsigned long long parse_u64(std::string_view s, std::string_view what) {
    return parse_whole<unsigned long long>(s, what, "an unsigned integer");
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace annuity::text

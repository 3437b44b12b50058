#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

namespace sagnac {

// Locale-independent, deterministic number formatting for the text formats.
// 17 significant digits round-trip any binary64 value exactly.

inline std::string format_double(double value) {
    char buf[48];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Strict parse: the whole token must be consumed. Returns false on failure
/// (including empty tokens and trailing junk); NaN/inf tokens parse and are
/// rejected by callers that require finite values.
inline bool parse_double(std::string_view token, double& out) {
    const char* begin = token.data();
    const char* end = token.data() + token.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_u64(std::string_view token, std::uint64_t& out) {
    const char* begin = token.data();
    const char* end = token.data() + token.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

} // namespace sagnac

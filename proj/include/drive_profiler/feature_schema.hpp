#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace drive_profiler {

/// FNV-1a over the newline-joined names, as 16 hex digits.
inline std::string feature_ordering_hash(std::span<const std::string> names) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    };
    for (const auto& n : names) {
        for (unsigned char c : n) mix(c);
        mix('\n');
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace drive_profiler

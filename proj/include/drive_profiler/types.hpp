#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace drive_profiler {

/// Raised for bad user input (malformed files, invalid configs). The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an internal invariant does not hold. The CLI maps it to exit code 2.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class WeatherType : std::uint8_t { Sunny, SoftRain, Foggy, Stormy };

/// Driver behavior classes. Codes 0-3 are the "P.C" codes of the per-window report.
enum class BehaviorClass : std::uint8_t { Normal = 0, Intermediate = 1, Aggressive = 2, Dangerous = 3 };

inline constexpr int kNumClasses = 4;

inline constexpr std::array<WeatherType, 4> kAllWeather = {
    WeatherType::Sunny, WeatherType::SoftRain, WeatherType::Foggy, WeatherType::Stormy};

inline constexpr std::array<BehaviorClass, 4> kAllClasses = {
    BehaviorClass::Normal, BehaviorClass::Intermediate, BehaviorClass::Aggressive,
    BehaviorClass::Dangerous};

constexpr int to_code(BehaviorClass c) { return static_cast<int>(c); }

inline BehaviorClass class_from_code(int code) {
    if (code < 0 || code >= kNumClasses) {
        throw InputError("behavior class code out of range: " + std::to_string(code));
    }
    return static_cast<BehaviorClass>(code);
}

constexpr BehaviorClass max_class(BehaviorClass a, BehaviorClass b) {
    return to_code(a) >= to_code(b) ? a : b;
}

constexpr std::string_view to_string(BehaviorClass c) {
    switch (c) {
    case BehaviorClass::Normal: return "Normal";
    case BehaviorClass::Intermediate: return "Intermediate";
    case BehaviorClass::Aggressive: return "Aggressive";
    case BehaviorClass::Dangerous: return "Dangerous";
    }
    return "?";
}

constexpr std::string_view to_string(WeatherType w) {
    switch (w) {
    case WeatherType::Sunny: return "Sunny";
    case WeatherType::SoftRain: return "SoftRain";
    case WeatherType::Foggy: return "Foggy";
    case WeatherType::Stormy: return "Stormy";
    }
    return "?";
}

inline WeatherType weather_from_string(std::string_view s) {
    for (auto w : kAllWeather) {
        if (to_string(w) == s) return w;
    }
    throw InputError("unknown weather type: " + std::string(s));
}

inline BehaviorClass class_from_string(std::string_view s) {
    for (auto c : kAllClasses) {
        if (to_string(c) == s) return c;
    }
    throw InputError("unknown behavior class: " + std::string(s));
}

/// Road context a window is judged against.
struct TripContext {
    double posted_limit = 0.0;  // km/h
    WeatherType weather = WeatherType::Sunny;
};

}  // namespace drive_profiler

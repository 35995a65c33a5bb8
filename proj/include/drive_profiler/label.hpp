#pragma once

// Rule engine turning one minute of telemetry into a behavior class.
//
// Speed rules: the posted limit is reduced by a weather factor, then the
// overspeed percentage o = 100 * (v - limit) / limit is banded:
//   o <= 10 Normal, (10, 33] Intermediate, (33, 66] Aggressive, > 66 Dangerous.
// Steering rules: weave count per minute and peak impulse are banded
// separately and the more severe band wins:
//   count 0 Normal, 1-4 Intermediate, 5-10 Aggressive, > 10 Dangerous
//   impulse < 0.15 Intermediate, [0.15, 0.45] Aggressive, > 0.45 Dangerous
// A window's label is the more severe of its speed and steering classes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "drive_profiler/frame.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::label {

inline constexpr double kDefaultDeadBand = 0.05;
inline constexpr double kSustainedPercentile = 0.95;

/// Speed reduction factor per weather type.
constexpr double reduction_factor(WeatherType w) {
    switch (w) {
    case WeatherType::Sunny: return 0.00;
    case WeatherType::SoftRain: return 0.15;
    case WeatherType::Foggy: return 0.30;
    case WeatherType::Stormy: return 0.40;
    }
    return 0.0;
}

// Upper edges of the overspeed bands, in percent.
inline constexpr double kNormalOverspeedMax = 10.0;
inline constexpr double kIntermediateOverspeedMax = 33.0;
inline constexpr double kAggressiveOverspeedMax = 66.0;

inline constexpr int kIntermediateWeaveMax = 4;
inline constexpr int kAggressiveWeaveMax = 10;
inline constexpr double kIntermediateImpulseMax = 0.15;  // exclusive
inline constexpr double kAggressiveImpulseMax = 0.45;    // inclusive

inline double effective_speed_limit(double posted_limit, WeatherType weather) {
    if (!(posted_limit > 0.0)) {
        throw InputError("posted speed limit must be positive");
    }
    return posted_limit * (1.0 - reduction_factor(weather));
}

inline double overspeed_pct(double speed, double effective_limit) {
    return 100.0 * (speed - effective_limit) / effective_limit;
}

inline BehaviorClass overspeed_severity(double overspeed) {
    if (overspeed <= kNormalOverspeedMax) return BehaviorClass::Normal;
    if (overspeed <= kIntermediateOverspeedMax) return BehaviorClass::Intermediate;
    if (overspeed <= kAggressiveOverspeedMax) return BehaviorClass::Aggressive;
    return BehaviorClass::Dangerous;
}

inline BehaviorClass speed_severity(double speed, double effective_limit) {
    if (!(effective_limit > 0.0)) {
        throw InputError("effective speed limit must be positive");
    }
    if (speed < 0.0) {
        throw InputError("speed must be non-negative");
    }
    return overspeed_severity(overspeed_pct(speed, effective_limit));
}

struct SteeringEvents {
    int weave_count = 0;
    double max_impulse = 0.0;

    friend bool operator==(const SteeringEvents&, const SteeringEvents&) = default;
};

/// Counts weaves in a steering series: maximal runs with |value| > dead_band
/// and a constant sign. The first run counts, later runs count only when
/// their sign differs from the previous run. max_impulse is the peak |value|
/// over all runs.
inline SteeringEvents detect_steering_events(std::span<const double> steering,
                                             double dead_band = kDefaultDeadBand) {
    if (steering.empty()) {
        throw InputError("steering series is empty");
    }
    SteeringEvents events;
    int previous_sign = 0;  // sign of the last excursion, 0 before the first
    int current_sign = 0;   // sign of the run in progress, 0 inside the dead band
    for (double v : steering) {
        const int sign = v > dead_band ? 1 : (v < -dead_band ? -1 : 0);
        if (sign != 0) {
            events.max_impulse = std::max(events.max_impulse, std::abs(v));
            if (sign != current_sign && sign != previous_sign) {
                ++events.weave_count;
            }
            previous_sign = sign;
        }
        current_sign = sign;
    }
    return events;
}

inline BehaviorClass weave_count_severity(int weave_count) {
    if (weave_count <= 0) return BehaviorClass::Normal;
    if (weave_count <= kIntermediateWeaveMax) return BehaviorClass::Intermediate;
    if (weave_count <= kAggressiveWeaveMax) return BehaviorClass::Aggressive;
    return BehaviorClass::Dangerous;
}

inline BehaviorClass impulse_severity(const SteeringEvents& events) {
    if (events.weave_count == 0) return BehaviorClass::Normal;
    if (events.max_impulse < kIntermediateImpulseMax) return BehaviorClass::Intermediate;
    if (events.max_impulse <= kAggressiveImpulseMax) return BehaviorClass::Aggressive;
    return BehaviorClass::Dangerous;
}

inline BehaviorClass steering_severity(const SteeringEvents& events) {
    return max_class(weave_count_severity(events.weave_count), impulse_severity(events));
}

/// Linear-interpolated quantile (q in [0, 1]) of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InputError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

/// 95th percentile of per-frame speed, the window's sustained speed.
inline double sustained_speed(std::span<const Frame> frames) {
    std::vector<double> speeds;
    speeds.reserve(frames.size());
    for (const auto& f : frames) speeds.push_back(f.speed);
    return quantile(std::move(speeds), kSustainedPercentile);
}

inline SteeringEvents window_steering_events(std::span<const Frame> frames,
                                             double dead_band = kDefaultDeadBand) {
    std::vector<double> steering;
    steering.reserve(frames.size());
    for (const auto& f : frames) steering.push_back(f.steering);
    return detect_steering_events(steering, dead_band);
}

inline BehaviorClass window_label(std::span<const Frame> frames,
                                  const std::optional<TripContext>& context) {
    if (!context) {
        throw InputError("window label requires a road context");
    }
    if (frames.empty()) {
        throw InputError("window has no frames");
    }
    const double limit = effective_speed_limit(context->posted_limit, context->weather);
    const auto by_speed = speed_severity(sustained_speed(frames), limit);
    const auto by_steering = steering_severity(window_steering_events(frames));
    return max_class(by_speed, by_steering);
}

inline BehaviorClass window_label(const Window& window, const std::optional<TripContext>& context) {
    return window_label(std::span<const Frame>(window.frames), context);
}

/// The fixed rule tables as a read-only JSON document.
inline nlohmann::ordered_json rules_json() {
    using nlohmann::ordered_json;
    ordered_json weather = ordered_json::object();
    for (auto w : kAllWeather) weather[std::string(to_string(w))] = reduction_factor(w);

    ordered_json speed = ordered_json::array({
        {{"class", "Normal"}, {"overspeed_pct_max", kNormalOverspeedMax}},
        {{"class", "Intermediate"}, {"overspeed_pct_min_exclusive", kNormalOverspeedMax},
         {"overspeed_pct_max", kIntermediateOverspeedMax}},
        {{"class", "Aggressive"}, {"overspeed_pct_min_exclusive", kIntermediateOverspeedMax},
         {"overspeed_pct_max", kAggressiveOverspeedMax}},
        {{"class", "Dangerous"}, {"overspeed_pct_min_exclusive", kAggressiveOverspeedMax}},
    });
    ordered_json steering = ordered_json::array({
        {{"class", "Normal"}, {"weave_count", "0"}, {"impulse", "none"}},
        {{"class", "Intermediate"}, {"weave_count", "1-4"}, {"impulse", "< 0.15"}},
        {{"class", "Aggressive"}, {"weave_count", "5-10"}, {"impulse", "0.15-0.45"}},
        {{"class", "Dangerous"}, {"weave_count", "> 10"}, {"impulse", "> 0.45"}},
    });
    return ordered_json{
        {"weather_reduction_factor", weather},
        {"speed_severity", speed},
        {"steering_severity", steering},
        {"steering_dead_band", kDefaultDeadBand},
        {"sustained_speed_percentile", kSustainedPercentile},
        {"combination", "max(speed severity, weave-count severity, impulse severity)"},
    };
}

}  // namespace drive_profiler::label

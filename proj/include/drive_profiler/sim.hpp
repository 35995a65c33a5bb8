#pragma once

// Synthetic trip telemetry. Each trip is a highway drive split into
// equal-length segments, each segment driven in one intended behavior class.
// Speed holds a class-specific overspeed level relative to the weather-reduced
// limit; steering weaves with a class-specific rate and amplitude. Sensor
// channels are derived from the true speed/steering profile plus Gaussian
// noise, sampled at jittered intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "drive_profiler/label.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::sim {

struct SensorSample {
    double t = 0.0;
    double ax = 0.0, ay = 0.0, az = 0.0;  // longitudinal, lateral, vertical (m/s^2)
    double gx = 0.0, gy = 0.0, gz = 0.0;  // yaw, pitch, roll rates (rad/s)
    double lat = 0.0, lon = 0.0;
    double speed = 0.0;  // km/h
    double steering = 0.0;
    double throttle = 0.0;
};

struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    BehaviorClass intended = BehaviorClass::Normal;
};

struct Trip {
    std::vector<SensorSample> samples;
    WeatherType weather = WeatherType::Sunny;
    double speed_limit = 0.0;  // posted, km/h
    std::vector<Segment> segments;
    std::uint64_t seed = 0;

    double duration() const { return segments.empty() ? 0.0 : segments.back().end_s; }
    TripContext context() const { return {speed_limit, weather}; }
};

struct NoiseStd {
    double accel = 0.3;      // m/s^2
    double gyro = 0.02;      // rad/s
    double speed = 0.5;      // km/h
    double steering = 0.005;
    double throttle = 0.01;
    double gps = 0.0;        // degrees
};

struct SimConfig {
    std::uint64_t seed = 0;
    double duration_s = 60.0;
    double speed_limit = 100.0;
    WeatherType weather = WeatherType::Sunny;
    std::vector<BehaviorClass> segment_plan;
    NoiseStd noise;
    double mean_period = 0.2;  // seconds between raw samples
    double jitter = 0.5;       // gaps uniform in mean_period * [1 - jitter, 1 + jitter]
};

inline constexpr double kMinGap = 0.05;
inline constexpr double kMaxGap = 0.5;
// Lateral acceleration proxy: ay = k * speed[m/s] * steering.
inline constexpr double kLateralGain = 0.15;
inline constexpr double kYawGain = 0.02;
inline constexpr double kGravity = 9.81;
inline constexpr double kMetersPerDegree = 111320.0;

namespace detail {

struct ClassProfile {
    double ratio_lo, ratio_hi;          // speed / effective limit
    double weaves_per_minute;           // 0 = no weaving
    double amplitude_lo, amplitude_hi;  // peak |steering| per weave
    double pulse_s;                     // weave duration
};

inline constexpr ClassProfile profile_for(BehaviorClass c) {
    switch (c) {
    case BehaviorClass::Normal: return {0.80, 0.90, 0.0, 0.0, 0.0, 0.0};
    case BehaviorClass::Intermediate: return {1.18, 1.26, 2.0, 0.08, 0.12, 2.5};
    case BehaviorClass::Aggressive: return {1.45, 1.56, 7.0, 0.22, 0.38, 2.0};
    case BehaviorClass::Dangerous: return {1.80, 1.95, 15.0, 0.55, 0.85, 1.6};
    }
    return {};
}

struct Pulse {
    double start, duration, amplitude;  // signed amplitude
};

struct Ramp {
    double begin, end, from, to;
};

// Noise-free speed and steering as functions of time.
class TruthProfile {
public:
    std::vector<Segment> segments;
    std::vector<double> base_speed;  // per segment, km/h
    std::vector<Ramp> ramps;
    std::vector<Pulse> pulses;
    double wobble_period = 20.0;
    double wobble_phase = 0.0;

    double base(double t) const {
        for (const auto& r : ramps) {
            if (t >= r.begin && t <= r.end) {
                const double u = (t - r.begin) / (r.end - r.begin);
                return r.from + (r.to - r.from) * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
            }
        }
        return base_speed[segment_index(t)];
    }

    double speed(double t) const {
        return base(t) * (1.0 + 0.01 * std::sin(2.0 * std::numbers::pi * t / wobble_period + wobble_phase));
    }

    /// Longitudinal acceleration in m/s^2.
    double accel(double t) const {
        constexpr double h = 1e-3;
        return (speed(t + h) - speed(t - h)) / (2.0 * h) / 3.6;
    }

    double steering(double t) const {
        double s = 0.01 * std::sin(2.0 * std::numbers::pi * t / 7.0);
        for (const auto& p : pulses) {
            if (t >= p.start && t <= p.start + p.duration) {
                s += p.amplitude * std::sin(std::numbers::pi * (t - p.start) / p.duration);
            }
        }
        return s;
    }

private:
    std::size_t segment_index(double t) const {
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (t < segments[i].end_s) return i;
        }
        return segments.size() - 1;
    }
};

inline TruthProfile build_profile(const SimConfig& config, std::mt19937_64& rng) {
    TruthProfile truth;
    const double limit = label::effective_speed_limit(config.speed_limit, config.weather);
    const double seg_len = config.duration_s / static_cast<double>(config.segment_plan.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t i = 0; i < config.segment_plan.size(); ++i) {
        const auto cls = config.segment_plan[i];
        const double start = seg_len * static_cast<double>(i);
        const double end = i + 1 == config.segment_plan.size() ? config.duration_s : start + seg_len;
        truth.segments.push_back({start, end, cls});

        const auto prof = profile_for(cls);
        truth.base_speed.push_back(limit * (prof.ratio_lo + (prof.ratio_hi - prof.ratio_lo) * unit(rng)));

        if (prof.weaves_per_minute > 0.0) {
            const double period = 60.0 / prof.weaves_per_minute;
            double t = start + 0.5 * period * unit(rng);
            double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            while (t + prof.pulse_s < end) {
                const double amp = prof.amplitude_lo + (prof.amplitude_hi - prof.amplitude_lo) * unit(rng);
                truth.pulses.push_back({t, prof.pulse_s, sign * amp});
                sign = -sign;
                t += period * (0.9 + 0.2 * unit(rng));
            }
        }
    }

    // Speed changes happen inside the faster of two adjacent segments so the
    // slower one never carries the other's overspeed.
    for (std::size_t i = 0; i + 1 < truth.segments.size(); ++i) {
        const double from = truth.base_speed[i];
        const double to = truth.base_speed[i + 1];
        const double boundary = truth.segments[i].end_s;
        const double shorter = std::min(truth.segments[i].end_s - truth.segments[i].start_s,
                                        truth.segments[i + 1].end_s - truth.segments[i + 1].start_s);
        const double ramp = std::clamp(std::abs(to - from) / 3.6 / 3.0, 2.0, 0.15 * shorter);
        if (to > from) {
            truth.ramps.push_back({boundary, boundary + ramp, from, to});
        } else {
            truth.ramps.push_back({boundary - ramp, boundary, from, to});
        }
    }

    truth.wobble_period = 15.0 + 15.0 * unit(rng);
    truth.wobble_phase = 2.0 * std::numbers::pi * unit(rng);
    return truth;
}

inline std::vector<double> sample_times(const SimConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> gap(config.mean_period * (1.0 - config.jitter),
                                               config.mean_period * (1.0 + config.jitter));
    std::vector<double> times{0.0};
    while (true) {
        const double next = times.back() + gap(rng);
        if (next >= config.duration_s) break;
        times.push_back(next);
    }
    // End exactly at the trip duration without breaking the gap bounds.
    if (config.duration_s - times.back() >= kMinGap) {
        times.push_back(config.duration_s);
    } else {
        times.back() = config.duration_s;
    }
    return times;
}

}  // namespace detail

inline void validate(const SimConfig& config) {
    if (!(config.duration_s >= 60.0)) {
        throw InputError("trip duration must be at least 60 s, got " + std::to_string(config.duration_s));
    }
    if (config.segment_plan.empty()) {
        throw InputError("segment plan is empty");
    }
    if (!(config.speed_limit > 0.0)) {
        throw InputError("speed limit must be positive");
    }
    if (!(config.jitter >= 0.0 && config.jitter < 1.0)) {
        throw InputError("jitter fraction must lie in [0, 1)");
    }
    const double lo = config.mean_period * (1.0 - config.jitter);
    const double hi = config.mean_period * (1.0 + config.jitter);
    if (lo < kMinGap || hi > kMaxGap - kMinGap) {
        throw InputError("sampling gaps must stay within [0.05, 0.45] s");
    }
    const auto& n = config.noise;
    if (n.accel < 0 || n.gyro < 0 || n.speed < 0 || n.steering < 0 || n.throttle < 0 || n.gps < 0) {
        throw InputError("noise standard deviations must be non-negative");
    }
}

inline Trip generate_trip(const SimConfig& config) {
    validate(config);
    std::mt19937_64 rng(config.seed);
    const auto truth = detail::build_profile(config, rng);
    const auto times = detail::sample_times(config, rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& noise = config.noise;
    const double limit = label::effective_speed_limit(config.speed_limit, config.weather);

    Trip trip;
    trip.weather = config.weather;
    trip.speed_limit = config.speed_limit;
    trip.segments = truth.segments;
    trip.seed = config.seed;
    trip.samples.reserve(times.size());

    double lat = 40.0 + 10.0 * unit(rng);
    double lon = -5.0 + 10.0 * unit(rng);
    double heading = 2.0 * std::numbers::pi * unit(rng);
    double prev_t = 0.0;
    double prev_yaw = 0.0;
    double prev_mps = truth.speed(0.0) / 3.6;

    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double v = truth.speed(t);
        const double mps = v / 3.6;
        const double steer = std::clamp(truth.steering(t), -1.0, 1.0);
        const double ax = truth.accel(t);
        const double ay = kLateralGain * mps * steer;
        const double yaw = kYawGain * steer * mps;

        if (i > 0) {
            const double dt = t - prev_t;
            heading += 0.5 * (yaw + prev_yaw) * dt;
            const double dist = 0.5 * (mps + prev_mps) * dt;
            lat += dist * std::cos(heading) / kMetersPerDegree;
            lon += dist * std::sin(heading) / (kMetersPerDegree * std::cos(lat * std::numbers::pi / 180.0));
        }
        prev_t = t;
        prev_yaw = yaw;
        prev_mps = mps;

        SensorSample s;
        s.t = t;
        s.ax = ax + noise.accel * gauss(rng);
        s.ay = ay + noise.accel * gauss(rng);
        s.az = kGravity + noise.accel * gauss(rng);
        s.gx = yaw + noise.gyro * gauss(rng);
        s.gy = -0.01 * ax + noise.gyro * gauss(rng);
        s.gz = 0.02 * ay + noise.gyro * gauss(rng);
        s.lat = lat + noise.gps * gauss(rng);
        s.lon = lon + noise.gps * gauss(rng);
        s.speed = std::max(0.0, v + noise.speed * gauss(rng));
        s.steering = std::clamp(steer + noise.steering * gauss(rng), -1.0, 1.0);
        const double throttle = 0.15 + 0.35 * v / limit + 0.08 * ax;
        s.throttle = std::clamp(throttle + noise.throttle * gauss(rng), 0.0, 1.0);
        trip.samples.push_back(s);
    }
    return trip;
}

inline std::vector<Trip> generate_dataset(const std::vector<SimConfig>& configs) {
    if (configs.empty()) {
        throw InputError("dataset needs at least one trip config");
    }
    std::vector<Trip> trips;
    trips.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        try {
            trips.push_back(generate_trip(configs[i]));
        } catch (const InputError& e) {
            throw InputError("trip config " + std::to_string(i) + ": " + e.what());
        }
    }
    return trips;
}

inline double total_minutes(const std::vector<Trip>& trips) {
    double seconds = 0.0;
    for (const auto& t : trips) seconds += t.duration();
    return seconds / 60.0;
}

/// Number of intended segments per class across all trips.
inline std::array<int, kNumClasses> intended_histogram(const std::vector<Trip>& trips) {
    std::array<int, kNumClasses> counts{};
    for (const auto& t : trips) {
        for (const auto& s : t.segments) ++counts[to_code(s.intended)];
    }
    return counts;
}

struct DatasetPlan {
    int trips = 125;
    double trip_duration_s = 240.0;
    int segments_per_trip = 2;
    std::uint64_t seed = 0;
};

/// Configs whose intended segments are balanced across classes (counts differ
/// by at most one), with weather and posted limit varied per trip.
inline std::vector<SimConfig> balanced_configs(const DatasetPlan& plan) {
    if (plan.trips < 1) {
        throw InputError("at least one trip is required");
    }
    if (plan.segments_per_trip < 1) {
        throw InputError("at least one segment per trip is required");
    }
    std::mt19937_64 rng(plan.seed);
    const std::size_t n_segments = static_cast<std::size_t>(plan.trips) * plan.segments_per_trip;
    std::vector<BehaviorClass> pool;
    pool.reserve(n_segments);
    for (std::size_t i = 0; i < n_segments; ++i) pool.push_back(class_from_code(static_cast<int>(i % kNumClasses)));
    std::shuffle(pool.begin(), pool.end(), rng);

    constexpr std::array<double, 4> limits = {80.0, 90.0, 110.0, 120.0};
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<SimConfig> configs;
    configs.reserve(plan.trips);
    for (int i = 0; i < plan.trips; ++i) {
        SimConfig c;
        c.seed = rng();
        c.duration_s = plan.trip_duration_s;
        c.weather = kAllWeather[pick(rng)];
        c.speed_limit = limits[pick(rng)];
        const auto first = pool.begin() + static_cast<std::ptrdiff_t>(i) * plan.segments_per_trip;
        c.segment_plan.assign(first, first + plan.segments_per_trip);
        configs.push_back(std::move(c));
    }
    return configs;
}

}  // namespace drive_profiler::sim

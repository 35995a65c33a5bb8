#pragma once

// Raw trip -> grid-aligned frames -> labeled windows -> feature vectors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drive_profiler/feature_schema.hpp"
#include "drive_profiler/frame.hpp"
#include "drive_profiler/label.hpp"
#include "drive_profiler/normalize.hpp"
#include "drive_profiler/sim.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::pipeline {

inline constexpr double kMaxRawGap = 2.0;  // seconds; longer gaps reject the trip

/// Linear interpolation of every raw channel onto t = k * 0.25 s, covering
/// the raw time range without extrapolation.
inline std::vector<Frame> resample(const sim::Trip& trip) {
    const auto& raw = trip.samples;
    if (raw.size() < 2) {
        throw InputError("resampling needs at least 2 samples, got " + std::to_string(raw.size()));
    }
    for (std::size_t i = 1; i < raw.size(); ++i) {
        const double gap = raw[i].t - raw[i - 1].t;
        if (!(gap > 0.0)) {
            throw InputError("sample timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
        }
        if (gap > kMaxRawGap) {
            throw InputError("sensor dropout: " + std::to_string(gap) + " s gap before t = " +
                             std::to_string(raw[i].t));
        }
    }

    const auto first_k = static_cast<std::int64_t>(std::ceil(raw.front().t / kFramePeriod));
    const auto last_k = static_cast<std::int64_t>(std::floor(raw.back().t / kFramePeriod));
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, last_k - first_k + 1)));

    std::size_t j = 0;  // raw[j].t <= t <= raw[j + 1].t
    for (auto k = first_k; k <= last_k; ++k) {
        const double t = static_cast<double>(k) * kFramePeriod;
        while (j + 2 < raw.size() && raw[j + 1].t < t) ++j;
        const auto& a = raw[j];
        const auto& b = raw[j + 1];
        const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
        auto mix = [u](double x, double y) { return std::lerp(x, y, u); };

        Frame f;
        f.t = t;
        f.accel_x = mix(a.ax, b.ax);
        f.accel_y = mix(a.ay, b.ay);
        f.accel_z = mix(a.az, b.az);
        f.yaw_rate = mix(a.gx, b.gx);
        f.pitch_rate = mix(a.gy, b.gy);
        f.roll_rate = mix(a.gz, b.gz);
        f.lat = mix(a.lat, b.lat);
        f.lon = mix(a.lon, b.lon);
        f.speed = mix(a.speed, b.speed);
        f.steering = mix(a.steering, b.steering);
        f.throttle = mix(a.throttle, b.throttle);
        f.accel_magnitude = accel_norm(f.accel_x, f.accel_y, f.accel_z);
        frames.push_back(f);
    }
    return frames;
}

inline std::size_t expected_window_count(std::size_t frame_count, std::size_t stride = kWindowStride) {
    if (frame_count < static_cast<std::size_t>(kWindowFrames)) return 0;
    return (frame_count - kWindowFrames) / stride + 1;
}

struct Segmentation {
    std::vector<Window> windows;
    bool too_short = false;  // fewer frames than one window
};

/// Cuts frames into 240-frame windows starting every `stride` frames and
/// labels each one. A trailing partial window is dropped.
inline Segmentation segment(std::span<const Frame> frames, const TripContext& context,
                            const std::string& trip_id, std::size_t stride = kWindowStride) {
    if (stride == 0) {
        throw InputError("window stride must be positive");
    }
    Segmentation out;
    if (frames.size() < static_cast<std::size_t>(kWindowFrames)) {
        out.too_short = true;
        return out;
    }
    const std::size_t count = expected_window_count(frames.size(), stride);
    out.windows.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const auto first = frames.subspan(w * stride, kWindowFrames);
        Window window;
        window.frames.assign(first.begin(), first.end());
        window.start_t = first.front().t;
        window.trip_id = trip_id;
        window.label = label::window_label(first, context);
        out.windows.push_back(std::move(window));
    }
    return out;
}

// Feature layout: ten channels x {mean, std, min, max}, then four domain features.
inline constexpr std::array<std::string_view, 10> kChannelNames = {
    "speed", "accel_x", "accel_y", "accel_z", "accel_mag",
    "yaw_rate", "pitch_rate", "roll_rate", "steering", "throttle"};
inline constexpr std::array<std::string_view, 4> kStatNames = {"mean", "std", "min", "max"};
inline constexpr std::array<std::string_view, 4> kDomainNames = {
    "overspeed_p95_pct", "weave_count", "max_impulse", "mean_abs_jerk"};
inline constexpr std::size_t kNumFeatures =
    kChannelNames.size() * kStatNames.size() + kDomainNames.size();

using FeatureVector = std::array<double, kNumFeatures>;

inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (auto c : kChannelNames) {
            for (auto s : kStatNames) n.push_back(std::string(c) + "_" + std::string(s));
        }
        for (auto d : kDomainNames) n.emplace_back(d);
        return n;
    }();
    return names;
}

inline std::size_t feature_index(std::string_view name) {
    const auto& names = feature_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown feature: " + std::string(name));
    return static_cast<std::size_t>(it - names.begin());
}

inline const std::string& pipeline_feature_hash() {
    static const std::string hash = feature_ordering_hash(feature_names());
    return hash;
}

namespace detail {

inline double channel(const Frame& f, std::size_t c) {
    switch (c) {
    case 0: return f.speed;
    case 1: return f.accel_x;
    case 2: return f.accel_y;
    case 3: return f.accel_z;
    case 4: return f.accel_magnitude;
    case 5: return f.yaw_rate;
    case 6: return f.pitch_rate;
    case 7: return f.roll_rate;
    case 8: return f.steering;
    case 9: return f.throttle;
    }
    throw InvariantError("channel index out of range");
}

}  // namespace detail

inline FeatureVector extract_features(std::span<const Frame> frames, const TripContext& context) {
    if (frames.size() < 2) {
        throw InvariantError("feature extraction needs at least two frames");
    }
    FeatureVector fv{};
    const double n = static_cast<double>(frames.size());
    std::size_t k = 0;
    for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& f : frames) {
            const double v = detail::channel(f, c);
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& f : frames) {
            const double d = detail::channel(f, c) - mean;
            ss += d * d;
        }
        fv[k++] = mean;
        fv[k++] = std::sqrt(ss / n);
        fv[k++] = lo;
        fv[k++] = hi;
    }

    const double limit = label::effective_speed_limit(context.posted_limit, context.weather);
    const auto events = label::window_steering_events(frames);
    double jerk = 0.0;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        jerk += std::abs(frames[i].accel_magnitude - frames[i - 1].accel_magnitude) /
                (frames[i].t - frames[i - 1].t);
    }
    fv[k++] = label::overspeed_pct(label::sustained_speed(frames), limit);
    fv[k++] = static_cast<double>(events.weave_count);
    fv[k++] = events.max_impulse;
    fv[k++] = jerk / static_cast<double>(frames.size() - 1);
    return fv;
}

inline FeatureVector extract_features(const Window& window, const TripContext& context) {
    return extract_features(std::span<const Frame>(window.frames), context);
}

/// One labeled feature row, as persisted in the features CSV.
struct LabeledFeatures {
    std::string trip_id;
    double start_t = 0.0;
    BehaviorClass label = BehaviorClass::Normal;
    FeatureVector features{};
};

/// resample -> segment -> label -> extract for one trip.
inline std::vector<LabeledFeatures> process_trip(const sim::Trip& trip, const std::string& trip_id,
                                                 std::size_t stride = kWindowStride) {
    const auto frames = resample(trip);
    const auto seg = segment(frames, trip.context(), trip_id, stride);
    std::vector<LabeledFeatures> rows;
    rows.reserve(seg.windows.size());
    for (const auto& w : seg.windows) {
        rows.push_back({w.trip_id, w.start_t, w.label, extract_features(w, trip.context())});
    }
    return rows;
}

}  // namespace drive_profiler::pipeline

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drive_profiler/types.hpp"

namespace drive_profiler {

inline constexpr double kFramePeriod = 0.25;  // seconds, 4 Hz grid
inline constexpr int kWindowFrames = 240;     // 60 s
inline constexpr int kWindowStride = 120;     // 50% overlap

/// One fused, grid-aligned reading. t is always k * kFramePeriod.
struct Frame {
    double t = 0.0;
    double accel_x = 0.0, accel_y = 0.0, accel_z = 0.0;        // m/s^2
    double yaw_rate = 0.0, pitch_rate = 0.0, roll_rate = 0.0;  // rad/s
    double lat = 0.0, lon = 0.0;
    double speed = 0.0;  // km/h
    double steering = 0.0;
    double throttle = 0.0;
    double accel_magnitude = 0.0;
};

inline double accel_norm(double ax, double ay, double az) {
    return std::sqrt(ax * ax + ay * ay + az * az);
}

struct Window {
    std::vector<Frame> frames;
    double start_t = 0.0;
    BehaviorClass label = BehaviorClass::Normal;
    std::string trip_id;
};

}  // namespace drive_profiler

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "drive_profiler/label.hpp"

using namespace drive_profiler;
using namespace drive_profiler::label;

namespace {

std::vector<Frame> flat_window(double speed, double steering = 0.0) {
    std::vector<Frame> frames(kWindowFrames);
    for (int i = 0; i < kWindowFrames; ++i) {
        frames[i].t = i * kFramePeriod;
        frames[i].speed = speed;
        frames[i].steering = steering;
    }
    return frames;
}

// Alternating +amp / -amp blocks of `block` samples each, `excursions` blocks in total.
std::vector<double> square_wave(double amp, int excursions, int block) {
    std::vector<double> s;
    for (int e = 0; e < excursions; ++e) {
        for (int i = 0; i < block; ++i) s.push_back(e % 2 == 0 ? amp : -amp);
    }
    return s;
}

}  // namespace

TEST(EffectiveSpeedLimit, WeatherFactors) {
    EXPECT_DOUBLE_EQ(effective_speed_limit(100, WeatherType::Sunny), 100.0);
    EXPECT_DOUBLE_EQ(effective_speed_limit(100, WeatherType::Foggy), 70.0);
    EXPECT_DOUBLE_EQ(effective_speed_limit(120, WeatherType::Stormy), 72.0);
    EXPECT_DOUBLE_EQ(effective_speed_limit(100, WeatherType::SoftRain), 85.0);
}

TEST(EffectiveSpeedLimit, RejectsNonPositiveLimit) {
    EXPECT_THROW(effective_speed_limit(0.0, WeatherType::Sunny), InputError);
    EXPECT_THROW(effective_speed_limit(-5.0, WeatherType::Foggy), InputError);
}

TEST(EffectiveSpeedLimit, LinearInPostedLimit) {
    for (auto w : kAllWeather) {
        const double a = effective_speed_limit(50, w);
        const double b = effective_speed_limit(130, w);
        EXPECT_NEAR(effective_speed_limit(90, w), 0.5 * (a + b), 1e-12);
    }
}

TEST(SpeedSeverity, Examples) {
    EXPECT_EQ(speed_severity(90, 100), BehaviorClass::Normal);
    EXPECT_EQ(speed_severity(150, 100), BehaviorClass::Aggressive);
    EXPECT_EQ(speed_severity(100, 100), BehaviorClass::Normal);
}

TEST(SpeedSeverity, BandEdges) {
    EXPECT_EQ(speed_severity(110, 100), BehaviorClass::Normal);
    EXPECT_EQ(speed_severity(110.01, 100), BehaviorClass::Intermediate);
    EXPECT_EQ(speed_severity(133, 100), BehaviorClass::Intermediate);
    EXPECT_EQ(speed_severity(133.01, 100), BehaviorClass::Aggressive);
    EXPECT_EQ(speed_severity(166, 100), BehaviorClass::Aggressive);
    EXPECT_EQ(speed_severity(166.01, 100), BehaviorClass::Dangerous);
    EXPECT_EQ(speed_severity(0, 100), BehaviorClass::Normal);
}

TEST(SpeedSeverity, RejectsInvalidInputs) {
    EXPECT_THROW(speed_severity(10, 0), InputError);
    EXPECT_THROW(speed_severity(-1, 100), InputError);
}

TEST(SpeedSeverity, MonotoneInSpeed) {
    BehaviorClass prev = BehaviorClass::Normal;
    for (double v = 0.0; v <= 250.0; v += 0.37) {
        const auto c = speed_severity(v, 87.5);
        EXPECT_GE(to_code(c), to_code(prev)) << "speed " << v;
        prev = c;
    }
}

TEST(SteeringEvents, ConstantZero) {
    const std::vector<double> s(240, 0.0);
    EXPECT_EQ(detect_steering_events(s), (SteeringEvents{0, 0.0}));
}

TEST(SteeringEvents, SquareWaveSixExcursions) {
    // Six alternating excursions: the first one plus five sign reversals.
    const auto s = square_wave(0.5, 6, 20);
    EXPECT_EQ(detect_steering_events(s), (SteeringEvents{6, 0.5}));
}

TEST(SteeringEvents, SingleExcursion) {
    std::vector<double> s(240, 0.0);
    for (int i = 100; i < 110; ++i) s[i] = 0.2;
    EXPECT_EQ(detect_steering_events(s), (SteeringEvents{1, 0.2}));
}

TEST(SteeringEvents, SameSignExcursionsCountOnce) {
    std::vector<double> s(240, 0.0);
    for (int i = 10; i < 20; ++i) s[i] = 0.3;
    for (int i = 50; i < 60; ++i) s[i] = 0.4;
    EXPECT_EQ(detect_steering_events(s), (SteeringEvents{1, 0.4}));
    for (int i = 90; i < 95; ++i) s[i] = -0.1;
    EXPECT_EQ(detect_steering_events(s), (SteeringEvents{2, 0.4}));
}

TEST(SteeringEvents, EmptySeriesIsAnError) {
    EXPECT_THROW(detect_steering_events(std::vector<double>{}), InputError);
}

TEST(SteeringEvents, ZeroImpulseIffNoWeaves) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(240);
        const double scale = trial % 4 == 0 ? 0.04 : 1.0;
        for (auto& v : s) v = scale * u(rng);
        const auto e = detect_steering_events(s);
        EXPECT_EQ(e.weave_count == 0, e.max_impulse == 0.0);
    }
}

TEST(SteeringEvents, LoweringDeadBandNeverLosesWeaves) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(240);
        double v = 0.0;
        for (auto& x : s) {
            v = std::clamp(0.8 * v + g(rng), -1.0, 1.0);
            x = v;
        }
        int prev = detect_steering_events(s, 0.3).weave_count;
        for (double band : {0.2, 0.1, 0.05, 0.01, 0.0}) {
            const int count = detect_steering_events(s, band).weave_count;
            EXPECT_GE(count, prev) << "band " << band;
            prev = count;
        }
    }
}

TEST(SteeringSeverity, Examples) {
    EXPECT_EQ(steering_severity({0, 0.0}), BehaviorClass::Normal);
    EXPECT_EQ(steering_severity({7, 0.30}), BehaviorClass::Aggressive);
    EXPECT_EQ(steering_severity({3, 0.60}), BehaviorClass::Dangerous);
}

TEST(SteeringSeverity, BandEdges) {
    EXPECT_EQ(steering_severity({1, 0.10}), BehaviorClass::Intermediate);
    EXPECT_EQ(steering_severity({4, 0.1499}), BehaviorClass::Intermediate);
    EXPECT_EQ(steering_severity({4, 0.15}), BehaviorClass::Aggressive);
    EXPECT_EQ(steering_severity({5, 0.10}), BehaviorClass::Aggressive);
    EXPECT_EQ(steering_severity({10, 0.45}), BehaviorClass::Aggressive);
    EXPECT_EQ(steering_severity({10, 0.4501}), BehaviorClass::Dangerous);
    EXPECT_EQ(steering_severity({11, 0.10}), BehaviorClass::Dangerous);
}

TEST(SteeringSeverity, MonotoneInCountAndImpulse) {
    for (int c = 1; c < 20; ++c) {
        for (double imp = 0.06; imp < 1.0; imp += 0.01) {
            const int base = to_code(steering_severity({c, imp}));
            EXPECT_GE(to_code(steering_severity({c + 1, imp})), base);
            EXPECT_GE(to_code(steering_severity({c, imp + 0.01})), base);
        }
    }
}

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.95), 9.5);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.95), 7.0);
    EXPECT_THROW(quantile({}, 0.5), InputError);
}

TEST(WindowLabel, Examples) {
    const TripContext ctx{100, WeatherType::Sunny};
    EXPECT_EQ(window_label(flat_window(90), ctx), BehaviorClass::Normal);
    EXPECT_EQ(window_label(flat_window(170), ctx), BehaviorClass::Dangerous);

    auto weaving = flat_window(90);
    // 12 alternating excursions of 0.5, 10 frames each with 10-frame gaps.
    for (int e = 0; e < 12; ++e) {
        for (int i = 0; i < 10; ++i) weaving[e * 20 + i].steering = e % 2 == 0 ? 0.5 : -0.5;
    }
    EXPECT_EQ(window_steering_events(weaving), (SteeringEvents{12, 0.5}));
    EXPECT_EQ(window_label(weaving, ctx), BehaviorClass::Dangerous);
}

TEST(WindowLabel, SustainedSpeedIgnoresBriefSpikes) {
    auto frames = flat_window(95);
    for (int i = 0; i < 5; ++i) frames[i * 40].speed = 200;  // 5 of 240 frames, about 2%
    EXPECT_EQ(window_label(frames, TripContext{100, WeatherType::Sunny}), BehaviorClass::Normal);
}

TEST(WindowLabel, WeatherLowersTheLimit) {
    EXPECT_EQ(window_label(flat_window(90), TripContext{100, WeatherType::Stormy}), BehaviorClass::Aggressive);
}

TEST(WindowLabel, MissingContextIsAnError) {
    EXPECT_THROW(window_label(flat_window(90), std::nullopt), InputError);
}

TEST(WindowLabel, AtLeastEachComponentSeverity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> speed(40, 200);
    std::uniform_real_distribution<double> steer(-0.9, 0.9);
    std::bernoulli_distribution flip(0.1);
    for (int trial = 0; trial < 100; ++trial) {
        auto frames = flat_window(speed(rng));
        double s = 0;
        for (auto& f : frames) {
            if (flip(rng)) s = steer(rng);
            f.steering = s;
        }
        const TripContext ctx{100, kAllWeather[trial % 4]};
        const auto label = window_label(frames, ctx);
        const double limit = effective_speed_limit(ctx.posted_limit, ctx.weather);
        EXPECT_GE(to_code(label), to_code(speed_severity(sustained_speed(frames), limit)));
        EXPECT_GE(to_code(label), to_code(steering_severity(window_steering_events(frames))));
    }
}

TEST(RulesJson, ExposesTables) {
    const auto j = rules_json();
    EXPECT_DOUBLE_EQ(j["weather_reduction_factor"]["Stormy"].get<double>(), 0.40);
    EXPECT_DOUBLE_EQ(j["weather_reduction_factor"]["SoftRain"].get<double>(), 0.15);
    EXPECT_EQ(j["speed_severity"].size(), 4u);
    EXPECT_EQ(j["steering_severity"].size(), 4u);
}

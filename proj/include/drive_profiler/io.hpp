#pragma once

// File formats: trips as line-delimited JSON (header line, then one sample per
// line) and labeled feature windows as CSV.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "drive_profiler/pipeline.hpp"
#include "drive_profiler/sim.hpp"
#include "drive_profiler/types.hpp"

namespace drive_profiler::io {

namespace fs = std::filesystem;

/// Writes via a temporary sibling file and renames it into place.
inline void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path() && !fs::exists(path.parent_path())) {
        throw InputError("output directory does not exist: " + path.parent_path().string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw InputError("write failed: " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw InputError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InputError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

// ---------------------------------------------------------------- trips

inline nlohmann::ordered_json trip_header(const sim::Trip& trip) {
    nlohmann::ordered_json segments = nlohmann::ordered_json::array();
    for (const auto& s : trip.segments) {
        segments.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"class", to_string(s.intended)}});
    }
    return {{"weather", to_string(trip.weather)},
            {"speed_limit", trip.speed_limit},
            {"segments", segments},
            {"seed", trip.seed}};
}

inline std::string trip_to_jsonl(const sim::Trip& trip) {
    std::string out = trip_header(trip).dump();
    out += '\n';
    for (const auto& s : trip.samples) {
        const nlohmann::ordered_json j = {{"t", s.t},     {"ax", s.ax},   {"ay", s.ay},       {"az", s.az},
                                          {"gx", s.gx},   {"gy", s.gy},   {"gz", s.gz},       {"lat", s.lat},
                                          {"lon", s.lon}, {"speed", s.speed}, {"steering", s.steering},
                                          {"throttle", s.throttle}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline sim::Trip trip_from_jsonl(std::string_view text, const std::string& source = "trip") {
    sim::Trip trip;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!have_header) {
                trip.weather = weather_from_string(j.at("weather").get<std::string>());
                trip.speed_limit = j.at("speed_limit").get<double>();
                trip.seed = j.value("seed", std::uint64_t{0});
                for (const auto& s : j.at("segments")) {
                    trip.segments.push_back({s.at("start_s").get<double>(), s.at("end_s").get<double>(),
                                             class_from_string(s.at("class").get<std::string>())});
                }
                if (!(trip.speed_limit > 0.0)) throw InputError("speed_limit must be positive");
                have_header = true;
                continue;
            }
            sim::SensorSample s;
            s.t = j.at("t").get<double>();
            s.ax = j.at("ax").get<double>();
            s.ay = j.at("ay").get<double>();
            s.az = j.at("az").get<double>();
            s.gx = j.at("gx").get<double>();
            s.gy = j.at("gy").get<double>();
            s.gz = j.at("gz").get<double>();
            s.lat = j.at("lat").get<double>();
            s.lon = j.at("lon").get<double>();
            s.speed = j.at("speed").get<double>();
            s.steering = j.at("steering").get<double>();
            s.throttle = j.at("throttle").get<double>();
            if (!trip.samples.empty() && !(s.t > trip.samples.back().t)) {
                throw InputError("timestamp does not increase");
            }
            trip.samples.push_back(s);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw InputError(source + ": missing trip header");
    if (trip.samples.empty()) throw InputError(source + ": trip has no samples");
    return trip;
}

inline void write_trip(const fs::path& path, const sim::Trip& trip) { write_file_atomic(path, trip_to_jsonl(trip)); }

inline sim::Trip read_trip(const fs::path& path) { return trip_from_jsonl(read_file(path), path.string()); }

/// *.jsonl files of a directory, sorted by name.
inline std::vector<fs::path> list_trip_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// ---------------------------------------------------------------- features CSV

inline std::string features_csv_header() {
    std::string h = "trip_id,start_t,label";
    for (const auto& n : pipeline::feature_names()) {
        h += ',';
        h += n;
    }
    return h;
}

inline std::string features_to_csv(const std::vector<pipeline::LabeledFeatures>& rows) {
    std::string out = features_csv_header();
    out += '\n';
    for (const auto& r : rows) {
        out += r.trip_id;
        out += ',';
        out += format_double(r.start_t);
        out += ',';
        out += std::to_string(to_code(r.label));
        for (double v : r.features) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<pipeline::LabeledFeatures> features_from_csv(std::string_view text,
                                                                const std::string& source = "features") {
    std::vector<pipeline::LabeledFeatures> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!have_header) {
            if (line != features_csv_header()) {
                throw InputError(source + ": line 1: header does not match the feature layout");
            }
            have_header = true;
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 3 + pipeline::kNumFeatures) {
            throw InputError(source + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(3 + pipeline::kNumFeatures) + " columns, got " +
                             std::to_string(cells.size()));
        }
        try {
            pipeline::LabeledFeatures r;
            r.trip_id = std::string(cells[0]);
            r.start_t = parse_double(cells[1]);
            const double code = parse_double(cells[2]);
            if (code != std::floor(code)) throw InputError("label must be an integer code");
            r.label = class_from_code(static_cast<int>(code));
            for (std::size_t j = 0; j < pipeline::kNumFeatures; ++j) r.features[j] = parse_double(cells[3 + j]);
            rows.push_back(std::move(r));
        } catch (const InputError& e) {
            throw InputError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw InputError(source + ": empty features file");
    return rows;
}

}  // namespace drive_profiler::io

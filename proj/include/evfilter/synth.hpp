#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>

#include "json.hpp"

#include "evfilter/error.hpp"
#include "evfilter/event.hpp"
#include "evfilter/rng.hpp"

namespace evf {

enum class SceneObject { Disk, VerticalEdge };

/// Parametric moving-object scene. A disk emits one ON event when its rim
/// first covers a pixel and one OFF event when it uncovers it; a vertical
/// edge emits one ON event per pixel it sweeps. Crossing instants are
/// exact kinematics rounded to microseconds with uniform +-jitter; events
/// falling outside the matrix or the duration are dropped.
struct SceneSpec {
    SensorGeometry geometry{128, 128};
    SceneObject object = SceneObject::Disk;
    double radius = 8.0;       // disk radius, pixels
    double edge_height = -1.0; // vertical extent of the edge; < 0 means full height
    double vx_px_s = 0.0;
    double vy_px_s = 0.0;
    double x0 = 0.0;
    double y0 = 0.0;
    std::int64_t duration_us = 0;
    std::int64_t jitter_us = 50;
    int events_per_pixel_crossing = 1;
    std::uint64_t seed = 0;
};

namespace detail {

inline void emit_crossing(std::vector<LabeledEvent>& out, SplitMix64& rng, const SceneSpec& spec,
                          std::uint16_t px, std::uint16_t py, double t_seconds, std::uint8_t polarity) {
    for (int k = 0; k < spec.events_per_pixel_crossing; ++k) {
        std::int64_t t = std::llround(t_seconds * 1e6);
        if (spec.jitter_us > 0) {
            t += std::int64_t(rng.below(std::uint64_t(2 * spec.jitter_us + 1))) - spec.jitter_us;
        }
        if (t < 0 || t >= spec.duration_us) continue;
        out.push_back(LabeledEvent{Event{t, px, py, polarity}, Label::Signal});
    }
}

} // namespace detail

inline EventStream render_scene(const SceneSpec& spec) {
    const double speed2 = spec.vx_px_s * spec.vx_px_s + spec.vy_px_s * spec.vy_px_s;
    if (speed2 <= 0.0) {
        throw Error(ErrorCode::DegenerateScene, "object velocity must be nonzero");
    }
    EventStream out;
    out.geometry = spec.geometry;
    SplitMix64 rng(spec.seed);
    const double dur_s = double(spec.duration_us) * 1e-6;

    if (spec.object == SceneObject::Disk) {
        // per pixel: solve |p - c(t)|^2 = r^2 for the cover/uncover instants
        for (std::uint16_t py = 0; py < spec.geometry.height; ++py) {
            for (std::uint16_t px = 0; px < spec.geometry.width; ++px) {
                const double rx = double(px) - spec.x0;
                const double ry = double(py) - spec.y0;
                const double b = -2.0 * (rx * spec.vx_px_s + ry * spec.vy_px_s);
                const double c = rx * rx + ry * ry - spec.radius * spec.radius;
                const double disc = b * b - 4.0 * speed2 * c;
                if (disc < 0.0) continue;
                const double sq = std::sqrt(disc);
                const double t_on = (-b - sq) / (2.0 * speed2);
                const double t_off = (-b + sq) / (2.0 * speed2);
                if (t_off < 0.0 || t_on >= dur_s) continue;
                detail::emit_crossing(out.events, rng, spec, px, py, t_on, 1);
                detail::emit_crossing(out.events, rng, spec, px, py, t_off, 0);
            }
        }
    } else {
        if (spec.vx_px_s != 0.0) {
            const double height = spec.edge_height < 0 ? double(spec.geometry.height) : spec.edge_height;
            for (std::uint16_t px = 0; px < spec.geometry.width; ++px) {
                const double t_cross = (double(px) - spec.x0) / spec.vx_px_s;
                if (t_cross < 0.0 || t_cross >= dur_s) continue;
                const double edge_top = spec.y0 + spec.vy_px_s * t_cross;
                for (std::uint16_t py = 0; py < spec.geometry.height; ++py) {
                    if (double(py) < edge_top || double(py) >= edge_top + height) continue;
                    detail::emit_crossing(out.events, rng, spec, px, py, t_cross, 1);
                }
            }
        }
        // vx == 0 sweeps no columns: a vertical edge sliding along its own
        // axis covers nothing new, so no events
    }
    canonical_sort(out.events);
    return out;
}

/// Scene description file: JSON object with keys width, height, object
/// ("disk" | "vertical_edge"), radius, edge_height (optional), vx_px_s,
/// vy_px_s, x0, y0, duration_us, jitter_us, seed,
/// events_per_pixel_crossing (optional).
inline SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    nlohmann::json j;
    try {
        file >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, "bad scene spec JSON: " + std::string(e.what()));
    }
    SceneSpec spec;
    try {
        spec.geometry.width = j.at("width").get<std::uint16_t>();
        spec.geometry.height = j.at("height").get<std::uint16_t>();
        const std::string object = j.at("object").get<std::string>();
        if (object == "disk") spec.object = SceneObject::Disk;
        else if (object == "vertical_edge") spec.object = SceneObject::VerticalEdge;
        else throw Error(ErrorCode::MalformedRecord, "unknown scene object: " + object);
        spec.radius = j.value("radius", 0.0);
        spec.edge_height = j.value("edge_height", -1.0);
        spec.vx_px_s = j.at("vx_px_s").get<double>();
        spec.vy_px_s = j.at("vy_px_s").get<double>();
        spec.x0 = j.at("x0").get<double>();
        spec.y0 = j.at("y0").get<double>();
        spec.duration_us = j.at("duration_us").get<std::int64_t>();
        spec.jitter_us = j.value("jitter_us", std::int64_t(50));
        spec.seed = j.value("seed", std::uint64_t(0));
        spec.events_per_pixel_crossing = j.value("events_per_pixel_crossing", 1);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, "bad scene spec field: " + std::string(e.what()));
    }
    return spec;
}

struct BoundaryCrossingCounts {
    std::uint64_t rejected_in_band = 0;
    std::uint64_t rejected_total = 0;
    std::uint64_t signal_total = 0;
};

namespace detail {

/// Distance from a pixel coordinate to the nearest interior region
/// boundary line (multiples of `scale` strictly inside the axis extent).
inline double boundary_distance(int v, int scale, int extent) {
    double best = std::numeric_limits<double>::infinity();
    const int k0 = v / scale;
    for (int k = k0; k <= k0 + 1; ++k) {
        const int line = k * scale;
        if (k >= 1 && line < extent) best = std::min(best, std::abs(double(v - line)));
    }
    return best;
}

} // namespace detail

/// Counts how many rejected events sit within `band` pixels of a region
/// boundary line; concentrations there are the signature of valid events
/// lost when an object moves into a not-yet-active region.
inline BoundaryCrossingCounts boundary_crossing_report(const EventStream& stream,
                                                       const EventStream& rejected, int scale,
                                                       double band) {
    if (!(stream.geometry == rejected.geometry)) {
        throw Error(ErrorCode::GeometryMismatch, "streams have different sensor geometry");
    }
    BoundaryCrossingCounts counts;
    for (const auto& ev : stream.events) {
        if (ev.label == Label::Signal) counts.signal_total++;
    }
    counts.rejected_total = rejected.events.size();
    for (const auto& ev : rejected.events) {
        const double dx = detail::boundary_distance(ev.event.x, scale, stream.geometry.width);
        const double dy = detail::boundary_distance(ev.event.y, scale, stream.geometry.height);
        if (std::min(dx, dy) <= band) counts.rejected_in_band++;
    }
    return counts;
}

} // namespace evf

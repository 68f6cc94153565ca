#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "evfilter/error.hpp"

namespace evf {

/// Ground-truth tag carried by every event through generators, mergers and
/// filters. Filters never change labels; they only route events.
enum class Label : std::uint8_t { Signal = 0, Noise = 1, Unknown = 2 };

inline char label_char(Label label) {
    switch (label) {
    case Label::Signal: return 'S';
    case Label::Noise: return 'N';
    case Label::Unknown: return 'U';
    }
    return 'U';
}

inline bool label_from_char(char c, Label& out) {
    switch (c) {
    case 'S': out = Label::Signal; return true;
    case 'N': out = Label::Noise; return true;
    case 'U': out = Label::Unknown; return true;
    default: return false;
    }
}

/// One sensor event: integer microseconds since stream start, pixel
/// coordinates and brightness-change polarity (1 = increase).
struct Event {
    std::int64_t t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint8_t polarity = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    std::uint16_t width = 1280;
    std::uint16_t height = 720;

    bool contains(std::uint32_t x, std::uint32_t y) const { return x < width && y < height; }
    std::uint64_t pixel_count() const { return std::uint64_t(width) * height; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

struct LabeledEvent {
    Event event;
    Label label = Label::Unknown;

    friend bool operator==(const LabeledEvent&, const LabeledEvent&) = default;
};

/// Ordered event sequence; timestamps are nondecreasing.
struct EventStream {
    SensorGeometry geometry;
    std::vector<LabeledEvent> events;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
    std::int64_t span_us() const { return events.empty() ? 0 : events.back().event.t; }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Canonical ordering used wherever ties on t must resolve deterministically.
inline bool event_order_before(const Event& a, const Event& b) {
    return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
}

inline void canonical_sort(std::vector<LabeledEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const LabeledEvent& a, const LabeledEvent& b) {
        return event_order_before(a.event, b.event);
    });
}

inline bool is_time_sorted(const EventStream& stream) {
    for (std::size_t i = 1; i < stream.events.size(); ++i) {
        if (stream.events[i].event.t < stream.events[i - 1].event.t) return false;
    }
    return true;
}

/// Checks bounds and timestamp order; throws with the offending record index.
inline void validate_stream(const EventStream& stream) {
    std::int64_t prev_t = 0;
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i].event;
        if (e.t < 0) {
            throw Error(ErrorCode::MalformedRecord, "negative timestamp", std::int64_t(i));
        }
        if (!stream.geometry.contains(e.x, e.y)) {
            throw Error(ErrorCode::OutOfBounds, "pixel outside geometry", std::int64_t(i));
        }
        if (i > 0 && e.t < prev_t) {
            throw Error(ErrorCode::NonMonotonic, "timestamp regression", std::int64_t(i));
        }
        prev_t = e.t;
    }
}

/// Merges two sorted streams. Ties resolve by (t, y, x, polarity), then
/// events of `a` before events of `b`; order of equal events within one
/// input is kept.
inline EventStream merge_streams(const EventStream& a, const EventStream& b) {
    if (!(a.geometry == b.geometry)) {
        throw Error(ErrorCode::GeometryMismatch, "streams have different sensor geometry");
    }
    EventStream out;
    out.geometry = a.geometry;
    out.events.reserve(a.events.size() + b.events.size());
    out.events.insert(out.events.end(), a.events.begin(), a.events.end());
    out.events.insert(out.events.end(), b.events.begin(), b.events.end());
    canonical_sort(out.events);
    return out;
}

inline EventStream relabeled(EventStream stream, Label label) {
    for (auto& ev : stream.events) ev.label = label;
    return stream;
}

} // namespace evf

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "evfilter/error.hpp"
#include "evfilter/event.hpp"
#include "evfilter/rng.hpp"

namespace evf {

/// Uniform background-activity model: `rate` events per pixel per second,
/// spread uniformly over the matrix and the duration.
struct NoiseSpec {
    double rate_hz_per_pix = 0.0;
    SensorGeometry geometry;
    std::int64_t duration_us = 0;
    std::uint64_t seed = 0;
};

/// Generates exactly round(rate * pixels * seconds) noise events with
/// uniform timestamps, positions and polarities. The count is exact rather
/// than Poisson-distributed so retention percentages have a fixed
/// denominator. Deterministic for a given seed.
inline EventStream generate_noise(const NoiseSpec& spec) {
    if (spec.rate_hz_per_pix < 0 || spec.duration_us < 0) {
        throw Error(ErrorCode::MalformedRecord, "noise rate and duration must be >= 0");
    }
    EventStream out;
    out.geometry = spec.geometry;
    const double expected = spec.rate_hz_per_pix * double(spec.geometry.pixel_count()) *
                            (double(spec.duration_us) * 1e-6);
    const std::uint64_t count = std::uint64_t(std::llround(expected));
    if (count == 0 || spec.duration_us == 0) return out;

    SplitMix64 rng(spec.seed);
    out.events.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Event e;
        e.t = std::int64_t(rng.below(std::uint64_t(spec.duration_us)));
        e.x = std::uint16_t(rng.below(spec.geometry.width));
        e.y = std::uint16_t(rng.below(spec.geometry.height));
        e.polarity = std::uint8_t(rng.below(2));
        out.events.push_back(LabeledEvent{e, Label::Noise});
    }
    canonical_sort(out.events);
    return out;
}

/// Relabels `clean` as signal, generates noise per `spec` (duration 0
/// defaults to the clean stream's span) and merges the two.
inline EventStream inject_noise(const EventStream& clean, NoiseSpec spec) {
    if (!(spec.geometry == clean.geometry)) {
        throw Error(ErrorCode::GeometryMismatch, "noise spec geometry differs from stream");
    }
    if (spec.duration_us == 0) spec.duration_us = clean.span_us();
    return merge_streams(relabeled(clean, Label::Signal), generate_noise(spec));
}

struct NoiseEstimate {
    double mean_events_per_bin = 0.0;
    double noise_rate_hz_per_pix = 0.0;
    double min_noise_fraction = 0.0;
    std::int64_t bin_width_us = 0;
    int trimmed = 0;
};

/// Histogram-based background rate estimate: bins events into fixed
/// windows from t = 0, drops the `trim` fullest and `trim` emptiest bins
/// (moving objects inflate bins; dropouts deflate them) and averages the
/// rest. min_noise_fraction extrapolates that static-scene mean across the
/// whole recording.
inline NoiseEstimate estimate_noise(const EventStream& stream, std::int64_t bin_width_us, int trim) {
    if (bin_width_us <= 0) throw Error(ErrorCode::MalformedRecord, "bin width must be positive");
    if (trim < 0) throw Error(ErrorCode::MalformedRecord, "trim must be >= 0");
    // no order assumption: binning only looks at each event's timestamp
    std::int64_t max_t = -1;
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const std::int64_t t = stream.events[i].event.t;
        if (t < 0) throw Error(ErrorCode::MalformedRecord, "negative timestamp", std::int64_t(i));
        max_t = std::max(max_t, t);
    }
    const std::int64_t total_bins = stream.empty() ? 0 : max_t / bin_width_us + 1;
    if (total_bins < 2 * std::int64_t(trim) + 1) {
        throw Error(ErrorCode::InsufficientBins, "stream spans fewer than 2*trim+1 bins");
    }

    std::vector<std::uint64_t> counts(std::size_t(total_bins), 0);
    for (const auto& ev : stream.events) counts[std::size_t(ev.event.t / bin_width_us)]++;

    std::sort(counts.begin(), counts.end());
    const auto first = counts.begin() + trim;
    const auto last = counts.end() - trim;
    const double kept = double(last - first);
    const double sum = double(std::accumulate(first, last, std::uint64_t(0)));

    NoiseEstimate est;
    est.bin_width_us = bin_width_us;
    est.trimmed = trim;
    est.mean_events_per_bin = sum / kept;
    est.noise_rate_hz_per_pix = est.mean_events_per_bin /
                                (double(bin_width_us) * 1e-6 * double(stream.geometry.pixel_count()));
    est.min_noise_fraction = std::min(
        1.0, est.mean_events_per_bin * double(total_bins) / double(stream.events.size()));
    return est;
}

/// Adjusts a recorded noise stream to a target intensity. Thinning keeps a
/// uniform random subset; raising the rate tiles time-shifted copies of
/// the recording and thins the concatenation to the exact target count.
inline EventStream rescale_noise(const EventStream& noise, double target_rate_hz_per_pix,
                                 std::uint64_t seed) {
    if (target_rate_hz_per_pix < 0) {
        throw Error(ErrorCode::MalformedRecord, "target rate must be >= 0");
    }
    const std::int64_t span = noise.span_us();
    EventStream out;
    out.geometry = noise.geometry;
    if (noise.empty() || span == 0) return out;

    const double seconds = double(span) * 1e-6;
    const std::uint64_t target =
        std::uint64_t(std::llround(target_rate_hz_per_pix * double(noise.geometry.pixel_count()) * seconds));

    std::vector<LabeledEvent> pool;
    if (target <= noise.events.size()) {
        pool = noise.events;
    } else {
        const std::uint64_t copies = (target + noise.events.size() - 1) / noise.events.size();
        pool.reserve(copies * noise.events.size());
        for (std::uint64_t k = 0; k < copies; ++k) {
            for (const auto& ev : noise.events) {
                LabeledEvent shifted = ev;
                shifted.event.t += std::int64_t(k) * span;
                pool.push_back(shifted);
            }
        }
    }

    // uniform subset of `target` elements: partial Fisher-Yates, then
    // restore order by index
    std::vector<std::uint64_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    const std::uint64_t take = std::min<std::uint64_t>(target, pool.size());
    for (std::uint64_t i = 0; i < take; ++i) {
        const std::uint64_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());

    out.events.reserve(take);
    for (std::uint64_t i : idx) out.events.push_back(pool[i]);
    canonical_sort(out.events);
    return out;
}

} // namespace evf

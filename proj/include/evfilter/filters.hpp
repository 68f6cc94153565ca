#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "evfilter/algorithm.hpp"
#include "evfilter/error.hpp"
#include "evfilter/event.hpp"
#include "evfilter/region_grid.hpp"

namespace evf {

/// refresh_period_us left at this sentinel resolves to filter_length_us;
/// 0 disables the periodic refresh entirely.
inline constexpr std::int64_t kRefreshFollowsFilterLength = -1;

struct FilterConfig {
    Algorithm algorithm = Algorithm::DIF;
    std::int64_t filter_length_us = 1000;
    int scale = 16;
    double update_factor = 0.25;
    std::int64_t refresh_period_us = kRefreshFollowsFilterLength;
    std::int64_t nnb_window_us = 2500;
    int nnb_radius = 1;

    std::int64_t effective_refresh_period() const {
        return refresh_period_us == kRefreshFollowsFilterLength ? filter_length_us
                                                                : refresh_period_us;
    }

    void validate() const {
        if (filter_length_us < 0) throw Error(ErrorCode::MalformedRecord, "filter length must be >= 0");
        if (scale < 1) throw Error(ErrorCode::MalformedRecord, "scale must be >= 1");
        if (!(update_factor > 0.0 && update_factor <= 1.0)) {
            throw Error(ErrorCode::MalformedRecord, "update factor must be in (0, 1]");
        }
        if (nnb_window_us < 0) throw Error(ErrorCode::MalformedRecord, "nnb window must be >= 0");
        if (nnb_radius < 1) throw Error(ErrorCode::MalformedRecord, "nnb radius must be >= 1");
    }
};

struct FilterOutcome {
    bool passed = false;
    /// Combined neighbourhood timestamp the decision compared against;
    /// absent for NNB, which has no such quantity.
    std::optional<double> threshold_ts;
};

/// Combines the bracketing regions' filtered timestamps into the decision
/// threshold T. In degraded modes every formula collapses to the available
/// axis or cell.
inline double interpolate_threshold(const NeighborContext& ctx, Algorithm algorithm) {
    if (algorithm == Algorithm::IIR) return ctx.owner_ts;

    const double scale = ctx.dx1 + ctx.dx2 > 0 ? ctx.dx1 + ctx.dx2 : ctx.dy1 + ctx.dy2;
    switch (ctx.mode) {
    case NeighborMode::Four:
        switch (algorithm) {
        case Algorithm::TM:
            return std::max(std::max(ctx.t11, ctx.t12), std::max(ctx.t21, ctx.t22));
        case Algorithm::BI: {
            const double t_top = (ctx.t11 * ctx.dx2 + ctx.t12 * ctx.dx1) / scale;
            const double t_bot = (ctx.t21 * ctx.dx2 + ctx.t22 * ctx.dx1) / scale;
            return (t_top * ctx.dy2 + t_bot * ctx.dy1) / scale;
        }
        case Algorithm::BIF: {
            const double t_top = (ctx.t11 * ctx.i12 * ctx.dx2 + ctx.t12 * ctx.i11 * ctx.dx1) /
                                 (ctx.i12 * ctx.dx2 + ctx.i11 * ctx.dx1);
            const double t_bot = (ctx.t21 * ctx.i22 * ctx.dx2 + ctx.t22 * ctx.i21 * ctx.dx1) /
                                 (ctx.i22 * ctx.dx2 + ctx.i21 * ctx.dx1);
            return (t_top * ctx.i21 * ctx.i22 * ctx.dy2 + t_bot * ctx.i11 * ctx.i12 * ctx.dy1) /
                   (ctx.i21 * ctx.i22 * ctx.dy2 + ctx.i11 * ctx.i12 * ctx.dy1);
        }
        default: { // DIF
            const double c11 = 1.0 / (ctx.i11 * ctx.d11);
            const double c12 = 1.0 / (ctx.i12 * ctx.d12);
            const double c21 = 1.0 / (ctx.i21 * ctx.d21);
            const double c22 = 1.0 / (ctx.i22 * ctx.d22);
            return (ctx.t11 * c11 + ctx.t12 * c12 + ctx.t21 * c21 + ctx.t22 * c22) /
                   (c11 + c12 + c21 + c22);
        }
        }
    case NeighborMode::TwoHorizontal:
        switch (algorithm) {
        case Algorithm::TM: return std::max(ctx.t11, ctx.t12);
        case Algorithm::BI: return (ctx.t11 * ctx.dx2 + ctx.t12 * ctx.dx1) / scale;
        case Algorithm::BIF:
            return (ctx.t11 * ctx.i12 * ctx.dx2 + ctx.t12 * ctx.i11 * ctx.dx1) /
                   (ctx.i12 * ctx.dx2 + ctx.i11 * ctx.dx1);
        default: {
            const double c11 = 1.0 / (ctx.i11 * ctx.d11);
            const double c12 = 1.0 / (ctx.i12 * ctx.d12);
            return (ctx.t11 * c11 + ctx.t12 * c12) / (c11 + c12);
        }
        }
    case NeighborMode::TwoVertical:
        switch (algorithm) {
        case Algorithm::TM: return std::max(ctx.t11, ctx.t21);
        case Algorithm::BI: return (ctx.t11 * ctx.dy2 + ctx.t21 * ctx.dy1) / scale;
        case Algorithm::BIF:
            return (ctx.t11 * ctx.i21 * ctx.dy2 + ctx.t21 * ctx.i11 * ctx.dy1) /
                   (ctx.i21 * ctx.dy2 + ctx.i11 * ctx.dy1);
        default: {
            const double c11 = 1.0 / (ctx.i11 * ctx.d11);
            const double c21 = 1.0 / (ctx.i21 * ctx.d21);
            return (ctx.t11 * c11 + ctx.t21 * c21) / (c11 + c21);
        }
        }
    case NeighborMode::One:
        return ctx.t11;
    }
    return ctx.t11;
}

/// Per-pixel timestamp map backing the NNB reference filter.
class NnbState {
public:
    static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min();

    explicit NnbState(SensorGeometry geometry)
        : geometry_(geometry), last_ts_(geometry.pixel_count(), kNever) {}

    const SensorGeometry& geometry() const { return geometry_; }

    std::int64_t last(int x, int y) const { return last_ts_[std::size_t(y) * geometry_.width + x]; }
    void record(int x, int y, std::int64_t t) { last_ts_[std::size_t(y) * geometry_.width + x] = t; }

private:
    SensorGeometry geometry_;
    std::vector<std::int64_t> last_ts_;
};

/// Pass/reject decision for the region-grid algorithms. Pure: no state is
/// touched. An event passes while the combined neighbourhood timestamp
/// plus the filter length strictly exceeds the event timestamp; ties
/// resolve toward removal.
inline FilterOutcome classify_event(const RegionGrid& grid, const Event& e, const FilterConfig& cfg) {
    const NeighborContext ctx = grid.neighbor_context(e.x, e.y);
    const double threshold = interpolate_threshold(ctx, cfg.algorithm);
    return FilterOutcome{threshold + double(cfg.filter_length_us) > double(e.t), threshold};
}

/// NNB decision: passes when some *other* pixel within the radius saw an
/// event no older than the window. The reporting pixel itself never
/// supports its own events.
inline FilterOutcome classify_event(const NnbState& state, const Event& e, const FilterConfig& cfg) {
    const int width = state.geometry().width;
    const int height = state.geometry().height;
    for (int dy = -cfg.nnb_radius; dy <= cfg.nnb_radius; ++dy) {
        for (int dx = -cfg.nnb_radius; dx <= cfg.nnb_radius; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = int(e.x) + dx;
            const int ny = int(e.y) + dy;
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
            const std::int64_t last = state.last(nx, ny);
            if (last != NnbState::kNever && e.t - last <= cfg.nnb_window_us) {
                return FilterOutcome{true, std::nullopt};
            }
        }
    }
    return FilterOutcome{false, std::nullopt};
}

/// Streaming driver: feeds events one at a time through refresh,
/// classification and the unconditional state update. State trajectories
/// do not depend on filter_length (or nnb_window), only on scale, update
/// factor and refresh period — threshold sweeps rely on that.
class FilterEngine {
public:
    FilterEngine(SensorGeometry geometry, const FilterConfig& cfg)
        : cfg_(cfg), refresh_period_(cfg.effective_refresh_period()) {
        cfg_.validate();
        if (algorithm_uses_region_grid(cfg_.algorithm)) {
            grid_.emplace(geometry, cfg_.scale);
        } else {
            nnb_.emplace(geometry);
        }
        next_refresh_ = refresh_period_;
    }

    const FilterConfig& config() const { return cfg_; }
    const RegionGrid* grid() const { return grid_ ? &*grid_ : nullptr; }
    const NnbState* nnb() const { return nnb_ ? &*nnb_ : nullptr; }
    std::int64_t processed() const { return processed_; }

    /// Classify-then-update for one event. Events must arrive in
    /// nondecreasing timestamp order.
    FilterOutcome process(const Event& e) {
        if (e.t < last_t_) {
            throw Error(ErrorCode::NonMonotonic, "timestamp regression", processed_);
        }
        FilterOutcome outcome;
        if (grid_) {
            // refresh fires once per period boundary the event time has
            // reached, each pass decaying stale regions toward the last
            // processed timestamp
            if (refresh_period_ > 0) {
                while (e.t >= next_refresh_) {
                    grid_->global_refresh(last_t_, cfg_.update_factor);
                    next_refresh_ += refresh_period_;
                }
            }
            outcome = classify_event(*grid_, e, cfg_);
            grid_->update_region(e, cfg_.update_factor);
        } else {
            outcome = classify_event(*nnb_, e, cfg_);
            nnb_->record(e.x, e.y, e.t);
        }
        last_t_ = e.t;
        ++processed_;
        return outcome;
    }

private:
    FilterConfig cfg_;
    std::optional<RegionGrid> grid_;
    std::optional<NnbState> nnb_;
    std::int64_t refresh_period_;
    std::int64_t next_refresh_ = 0;
    std::int64_t last_t_ = 0;
    std::int64_t processed_ = 0;
};

struct FilterResult {
    EventStream passed;
    EventStream rejected;
};

/// Partitions a stream into passed and rejected events, preserving order
/// and labels. `decisions`, when given, receives one byte per input event
/// (1 = passed) — useful for sweeps and cross-checks.
inline FilterResult run_filter(const EventStream& stream, const FilterConfig& cfg,
                               std::vector<std::uint8_t>* decisions = nullptr) {
    FilterEngine engine(stream.geometry, cfg);
    FilterResult result;
    result.passed.geometry = stream.geometry;
    result.rejected.geometry = stream.geometry;
    if (decisions) {
        decisions->clear();
        decisions->reserve(stream.events.size());
    }
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const LabeledEvent& ev = stream.events[i];
        if (!stream.geometry.contains(ev.event.x, ev.event.y)) {
            throw Error(ErrorCode::OutOfBounds, "pixel outside geometry", std::int64_t(i));
        }
        const FilterOutcome outcome = engine.process(ev.event);
        (outcome.passed ? result.passed : result.rejected).events.push_back(ev);
        if (decisions) decisions->push_back(outcome.passed ? 1 : 0);
    }
    return result;
}

} // namespace evf

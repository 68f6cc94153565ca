#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "evfilter/algorithm.hpp"
#include "evfilter/event.hpp"

namespace evf {

/// Clamp applied to the filtered inter-event interval; keeps the
/// frequency-weighted combiners away from division by zero when a region
/// saturates with same-timestamp events.
inline constexpr double kIntervalFloorUs = 1.0;

/// Clamp applied to event-to-region-centre distances, for the same reason
/// when an event lands exactly on a centre.
inline constexpr double kDistanceFloorPx = 0.5;

/// Cold-start interval. Large so untouched regions carry almost no weight
/// in the frequency-weighted combiners until real events arrive.
inline constexpr double kIntervalInitUs = 1.0e6;

/// Per-region filter state: exponentially filtered event timestamp,
/// exponentially filtered inter-event interval, and the activity flag used
/// by the periodic refresh.
struct RegionState {
    double ts = 0.0;
    double interval = kIntervalInitUs;
    bool active = false;
};

enum class NeighborMode { Four, TwoHorizontal, TwoVertical, One };

/// Snapshot of the up-to-four regions whose centres bracket an event pixel,
/// plus the geometry needed by the combiners. Slot convention:
///   Four:          11 = top-left, 12 = top-right, 21 = bottom-left, 22 = bottom-right
///   TwoHorizontal: 11 = left, 12 = right (single row)
///   TwoVertical:   11 = top, 21 = bottom (single column)
///   One:           11 only
/// dx1/dy1 measure to the first bracketing centre, dx2/dy2 to the second;
/// on a bracketed axis dx1 + dx2 == scale exactly. d** are Euclidean
/// distances to the slot centres, clamped to kDistanceFloorPx.
struct NeighborContext {
    NeighborMode mode = NeighborMode::One;
    double t11 = 0, t12 = 0, t21 = 0, t22 = 0;
    double i11 = 0, i12 = 0, i21 = 0, i22 = 0;
    double dx1 = 0, dx2 = 0, dy1 = 0, dy2 = 0;
    double d11 = 0, d12 = 0, d21 = 0, d22 = 0;
    double owner_ts = 0; // filtered timestamp of the cell containing the pixel
};

/// The matrix of per-region filters. Cell (c, r) owns pixels
/// [c*scale, (c+1)*scale) x [r*scale, (r+1)*scale); its centre sits at
/// (c*scale + (scale-1)/2, r*scale + (scale-1)/2) so that centres fall on
/// the midpoint of the pixel lattice. Edge cells of non-divisible
/// geometries are ordinary cells whose centre may lie past the last pixel.
class RegionGrid {
public:
    RegionGrid(SensorGeometry geometry, int scale, double interval_init = kIntervalInitUs)
        : geometry_(geometry),
          scale_(scale),
          cols_((geometry.width + scale - 1) / scale),
          rows_((geometry.height + scale - 1) / scale) {
        assert(scale >= 1);
        cells_.assign(std::size_t(cols_) * rows_, RegionState{0.0, interval_init, false});
    }

    const SensorGeometry& geometry() const { return geometry_; }
    int scale() const { return scale_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }

    RegionState& cell(int col, int row) { return cells_[std::size_t(row) * cols_ + col]; }
    const RegionState& cell(int col, int row) const { return cells_[std::size_t(row) * cols_ + col]; }
    const std::vector<RegionState>& cells() const { return cells_; }

    static double center_coord(int cell_index, int scale) {
        return cell_index * scale + (scale - 1) / 2.0;
    }

    /// Filters the owning cell's timestamp and interval toward the event
    /// and marks the cell active. The interval update sees the pre-update
    /// timestamp.
    void update_region(const Event& e, double update_factor) {
        RegionState& cell_ref = cell(e.x / scale_, e.y / scale_);
        apply_update(cell_ref, double(e.t), update_factor);
        cell_ref.active = true;
    }

    /// Periodic decay of stale regions: every cell that saw no event since
    /// the previous refresh is filtered toward `now_us` as if an event had
    /// occurred there; every activity flag is then cleared.
    void global_refresh(std::int64_t now_us, double update_factor) {
        const double now = double(now_us);
        for (RegionState& c : cells_) {
            if (!c.active) apply_update(c, now, update_factor);
            c.active = false;
        }
    }

    /// Locates the regions whose centres bracket pixel (x, y). Pixels in
    /// the half-scale border strips have no bracketing centre on one axis
    /// (matrix corners: on both) and the mode degrades accordingly. A pixel
    /// exactly on a centre line brackets toward the higher index.
    NeighborContext neighbor_context(std::uint16_t x, std::uint16_t y) const {
        const int col = x / scale_;
        const int row = y / scale_;

        int c1 = col, c2 = col;
        bool two_cols = false;
        if (double(x) >= center_coord(col, scale_)) {
            if (col + 1 < cols_) { c2 = col + 1; two_cols = true; }
        } else if (col >= 1) {
            c1 = col - 1;
            two_cols = true;
        }

        int r1 = row, r2 = row;
        bool two_rows = false;
        if (double(y) >= center_coord(row, scale_)) {
            if (row + 1 < rows_) { r2 = row + 1; two_rows = true; }
        } else if (row >= 1) {
            r1 = row - 1;
            two_rows = true;
        }

        NeighborContext ctx;
        ctx.owner_ts = cell(col, row).ts;

        const double off_x1 = double(x) - center_coord(c1, scale_);
        const double off_x2 = center_coord(c2, scale_) - double(x);
        const double off_y1 = double(y) - center_coord(r1, scale_);
        const double off_y2 = center_coord(r2, scale_) - double(y);

        auto dist = [](double dx, double dy) {
            double d = std::sqrt(dx * dx + dy * dy);
            return d < kDistanceFloorPx ? kDistanceFloorPx : d;
        };

        if (two_cols && two_rows) {
            ctx.mode = NeighborMode::Four;
            ctx.dx1 = off_x1; ctx.dx2 = off_x2;
            ctx.dy1 = off_y1; ctx.dy2 = off_y2;
            assign(ctx.t11, ctx.i11, cell(c1, r1));
            assign(ctx.t12, ctx.i12, cell(c2, r1));
            assign(ctx.t21, ctx.i21, cell(c1, r2));
            assign(ctx.t22, ctx.i22, cell(c2, r2));
            ctx.d11 = dist(off_x1, off_y1);
            ctx.d12 = dist(off_x2, off_y1);
            ctx.d21 = dist(off_x1, off_y2);
            ctx.d22 = dist(off_x2, off_y2);
        } else if (two_cols) {
            ctx.mode = NeighborMode::TwoHorizontal;
            ctx.dx1 = off_x1; ctx.dx2 = off_x2;
            const double off_y = std::abs(double(y) - center_coord(row, scale_));
            assign(ctx.t11, ctx.i11, cell(c1, row));
            assign(ctx.t12, ctx.i12, cell(c2, row));
            ctx.d11 = dist(off_x1, off_y);
            ctx.d12 = dist(off_x2, off_y);
        } else if (two_rows) {
            ctx.mode = NeighborMode::TwoVertical;
            ctx.dy1 = off_y1; ctx.dy2 = off_y2;
            const double off_x = std::abs(double(x) - center_coord(col, scale_));
            assign(ctx.t11, ctx.i11, cell(col, r1));
            assign(ctx.t21, ctx.i21, cell(col, r2));
            ctx.d11 = dist(off_x, off_y1);
            ctx.d21 = dist(off_x, off_y2);
        } else {
            ctx.mode = NeighborMode::One;
            assign(ctx.t11, ctx.i11, cell(col, row));
            ctx.d11 = dist(double(x) - center_coord(col, scale_),
                           double(y) - center_coord(row, scale_));
        }
        return ctx;
    }

private:
    static void assign(double& t, double& i, const RegionState& c) {
        t = c.ts;
        i = c.interval;
    }

    static void apply_update(RegionState& c, double t_event, double u) {
        const double prev_ts = c.ts;
        c.ts = prev_ts * (1.0 - u) + t_event * u;
        double iv = c.interval * (1.0 - u) + (t_event - prev_ts) * u;
        c.interval = iv < kIntervalFloorUs ? kIntervalFloorUs : iv;
    }

    SensorGeometry geometry_;
    int scale_;
    int cols_;
    int rows_;
    std::vector<RegionState> cells_;
};

/// Storage footprint of the filter state under the 32-bit hardware model:
/// region methods keep a 32-bit word per stored quantity plus one activity
/// bit per cell; the per-pixel NNB reference keeps a 32-bit timestamp per
/// pixel. (The in-memory implementation uses doubles; this reports the
/// deployable footprint.)
inline std::uint64_t state_memory_bits(const RegionGrid& grid, Algorithm algorithm) {
    if (algorithm == Algorithm::NNB) {
        return grid.geometry().pixel_count() * 32u;
    }
    const std::uint64_t cells = std::uint64_t(grid.cols()) * std::uint64_t(grid.rows());
    return algorithm_uses_intervals(algorithm) ? cells * 66u : cells * 33u;
}

} // namespace evf

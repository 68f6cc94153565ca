#pragma once

// Naive reference implementation of every filtering algorithm, kept
// deliberately dumb: plain 2-D vectors, inline geometry math, no sharing
// with the library implementation. The production path in
// evfilter/filters.hpp is checked event-for-event against this.

#include <cmath>
#include <cstdint>
#include <vector>

#include "evfilter/algorithm.hpp"
#include "evfilter/event.hpp"

namespace refimpl {

struct RefParams {
    evf::Algorithm algorithm = evf::Algorithm::DIF;
    std::int64_t filter_length_us = 1000;
    int scale = 16;
    double u = 0.25;
    std::int64_t refresh_period_us = 1000; // 0 disables
    std::int64_t nnb_window_us = 2500;
    int nnb_radius = 1;
};

// Pass/reject mask over the input stream, one byte per event (1 = passed).
inline std::vector<std::uint8_t> reference_filter_mask(const evf::EventStream& stream,
                                                       const RefParams& p) {
    const int width = stream.geometry.width;
    const int height = stream.geometry.height;
    std::vector<std::uint8_t> mask(stream.events.size(), 0);

    if (p.algorithm == evf::Algorithm::NNB) {
        const std::int64_t none = INT64_MIN;
        std::vector<std::vector<std::int64_t>> last(height, std::vector<std::int64_t>(width, none));
        for (std::size_t n = 0; n < stream.events.size(); ++n) {
            const evf::Event& e = stream.events[n].event;
            bool pass = false;
            for (int dy = -p.nnb_radius; dy <= p.nnb_radius && !pass; ++dy) {
                for (int dx = -p.nnb_radius; dx <= p.nnb_radius && !pass; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = int(e.x) + dx, ny = int(e.y) + dy;
                    if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
                    std::int64_t lt = last[std::size_t(ny)][std::size_t(nx)];
                    if (lt != none && e.t - lt <= p.nnb_window_us) pass = true;
                }
            }
            mask[n] = pass ? 1 : 0;
            last[e.y][e.x] = e.t;
        }
        return mask;
    }

    const int cols = (width + p.scale - 1) / p.scale;
    const int rows = (height + p.scale - 1) / p.scale;
    std::vector<std::vector<double>> Ts(rows, std::vector<double>(cols, 0.0));
    std::vector<std::vector<double>> Iv(rows, std::vector<double>(cols, 1.0e6));
    std::vector<std::vector<bool>> act(rows, std::vector<bool>(cols, false));

    auto center = [&](int idx) { return idx * p.scale + (p.scale - 1) / 2.0; };
    auto filt = [&](double& ts, double& iv, double te) {
        double ts_n = ts;
        ts = ts_n * (1.0 - p.u) + te * p.u;            // Ts_{n+1}
        iv = iv * (1.0 - p.u) + (te - ts_n) * p.u;     // I_{n+1}
        if (iv < 1.0) iv = 1.0;
    };

    std::int64_t next_refresh = p.refresh_period_us;
    std::int64_t last_t = 0;

    for (std::size_t n = 0; n < stream.events.size(); ++n) {
        const evf::Event& e = stream.events[n].event;

        if (p.refresh_period_us > 0) {
            while (e.t >= next_refresh) {
                for (int r = 0; r < rows; ++r) {
                    for (int c = 0; c < cols; ++c) {
                        if (!act[r][c]) filt(Ts[r][c], Iv[r][c], double(last_t));
                        act[r][c] = false;
                    }
                }
                next_refresh += p.refresh_period_us;
            }
        }

        const int col = e.x / p.scale;
        const int row = e.y / p.scale;

        // bracketing columns/rows (ties at a centre go to the higher index)
        int c1, c2, r1, r2;
        if (double(e.x) >= center(col)) { c1 = col; c2 = (col + 1 < cols) ? col + 1 : -1; }
        else { c1 = (col >= 1) ? col - 1 : -1; c2 = col; if (c1 < 0) { c1 = col; c2 = -1; } }
        if (double(e.y) >= center(row)) { r1 = row; r2 = (row + 1 < rows) ? row + 1 : -1; }
        else { r1 = (row >= 1) ? row - 1 : -1; r2 = row; if (r1 < 0) { r1 = row; r2 = -1; } }
        const bool two_c = c2 >= 0;
        const bool two_r = r2 >= 0;

        double T;
        if (p.algorithm == evf::Algorithm::IIR) {
            T = Ts[row][col];
        } else if (two_c && two_r) {
            double T11 = Ts[r1][c1], T12 = Ts[r1][c2], T21 = Ts[r2][c1], T22 = Ts[r2][c2];
            double I11 = Iv[r1][c1], I12 = Iv[r1][c2], I21 = Iv[r2][c1], I22 = Iv[r2][c2];
            double dx1 = e.x - center(c1), dx2 = center(c2) - e.x;
            double dy1 = e.y - center(r1), dy2 = center(r2) - e.y;
            switch (p.algorithm) {
            case evf::Algorithm::TM:
                T = std::max(std::max(T11, T12), std::max(T21, T22));
                break;
            case evf::Algorithm::BI: {
                double T1 = (T11 * dx2 + T12 * dx1) / p.scale;
                double T2 = (T21 * dx2 + T22 * dx1) / p.scale;
                T = (T1 * dy2 + T2 * dy1) / p.scale;
                break;
            }
            case evf::Algorithm::BIF: {
                double T1 = (T11 * I12 * dx2 + T12 * I11 * dx1) / (I12 * dx2 + I11 * dx1);
                double T2 = (T21 * I22 * dx2 + T22 * I21 * dx1) / (I22 * dx2 + I21 * dx1);
                T = (T1 * I21 * I22 * dy2 + T2 * I11 * I12 * dy1) / (I21 * I22 * dy2 + I11 * I12 * dy1);
                break;
            }
            default: { // DIF
                auto clampd = [](double d) { return d < 0.5 ? 0.5 : d; };
                double d11 = clampd(std::sqrt(dx1 * dx1 + dy1 * dy1));
                double d12 = clampd(std::sqrt(dx2 * dx2 + dy1 * dy1));
                double d21 = clampd(std::sqrt(dx1 * dx1 + dy2 * dy2));
                double d22 = clampd(std::sqrt(dx2 * dx2 + dy2 * dy2));
                double C11 = 1.0 / (I11 * d11), C12 = 1.0 / (I12 * d12);
                double C21 = 1.0 / (I21 * d21), C22 = 1.0 / (I22 * d22);
                T = (T11 * C11 + T12 * C12 + T21 * C21 + T22 * C22) / (C11 + C12 + C21 + C22);
                break;
            }
            }
        } else if (two_c || two_r) {
            // one bracketed axis: same formulas collapsed to two cells
            int ca = two_c ? c1 : col, cb = two_c ? c2 : col;
            int ra = two_c ? row : r1, rb = two_c ? row : r2;
            double Ta = Ts[ra][ca], Tb = Ts[rb][cb];
            double Ia = Iv[ra][ca], Ib = Iv[rb][cb];
            double da1 = two_c ? e.x - center(c1) : e.y - center(r1);
            double da2 = two_c ? center(c2) - e.x : center(r2) - e.y;
            double off = two_c ? std::abs(e.y - center(row)) : std::abs(e.x - center(col));
            switch (p.algorithm) {
            case evf::Algorithm::TM:
                T = std::max(Ta, Tb);
                break;
            case evf::Algorithm::BI:
                T = (Ta * da2 + Tb * da1) / p.scale;
                break;
            case evf::Algorithm::BIF:
                T = (Ta * Ib * da2 + Tb * Ia * da1) / (Ib * da2 + Ia * da1);
                break;
            default: { // DIF
                auto clampd = [](double d) { return d < 0.5 ? 0.5 : d; };
                double dA = clampd(std::sqrt(da1 * da1 + off * off));
                double dB = clampd(std::sqrt(da2 * da2 + off * off));
                double CA = 1.0 / (Ia * dA), CB = 1.0 / (Ib * dB);
                T = (Ta * CA + Tb * CB) / (CA + CB);
                break;
            }
            }
        } else {
            T = Ts[row][col]; // corner: single region, every method degenerates
        }

        mask[n] = (T + double(p.filter_length_us) > double(e.t)) ? 1 : 0;

        filt(Ts[row][col], Iv[row][col], double(e.t));
        act[row][col] = true;
        last_t = e.t;
    }
    return mask;
}

} // namespace refimpl

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "evfilter/error.hpp"
#include "evfilter/event.hpp"
#include "evfilter/filters.hpp"

namespace evf {

struct RetentionMetrics {
    std::uint64_t noise_total = 0;
    std::uint64_t noise_passed = 0;
    std::uint64_t signal_total = 0;
    std::uint64_t signal_passed = 0;
    double pct_noise_remaining = 0.0;
    double pct_signal_remaining = 0.0;
};

namespace detail {

inline double pct(std::uint64_t part, std::uint64_t total) {
    return total == 0 ? 0.0 : 100.0 * double(part) / double(total);
}

inline void require_labeled(const EventStream& stream) {
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        if (stream.events[i].label == Label::Unknown) {
            throw Error(ErrorCode::UnlabeledEvents, "event without signal/noise label", std::int64_t(i));
        }
    }
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads (0 = hardware
/// concurrency). Work items must write only to their own slots; the first
/// exception, if any, is rethrown on the caller.
inline void parallel_for_index(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 0) jobs = int(std::max(1u, std::thread::hardware_concurrency()));
    const int workers = int(std::min<std::size_t>(std::size_t(jobs), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct PassCounts {
    std::uint64_t signal_passed = 0;
    std::uint64_t noise_passed = 0;
};

/// Count-only filter run; avoids materialising output streams in sweeps.
inline PassCounts count_passes(const EventStream& stream, const FilterConfig& cfg) {
    FilterEngine engine(stream.geometry, cfg);
    PassCounts counts;
    for (const auto& ev : stream.events) {
        if (engine.process(ev.event).passed) {
            (ev.label == Label::Signal ? counts.signal_passed : counts.noise_passed)++;
        }
    }
    return counts;
}

} // namespace detail

/// Per-label retention of a filter run. `passed` must be the passed
/// partition of `input`.
inline RetentionMetrics compute_retention(const EventStream& input, const EventStream& passed) {
    detail::require_labeled(input);
    RetentionMetrics m;
    for (const auto& ev : input.events) {
        (ev.label == Label::Signal ? m.signal_total : m.noise_total)++;
    }
    for (const auto& ev : passed.events) {
        (ev.label == Label::Signal ? m.signal_passed : m.noise_passed)++;
    }
    m.pct_noise_remaining = detail::pct(m.noise_passed, m.noise_total);
    m.pct_signal_remaining = detail::pct(m.signal_passed, m.signal_total);
    return m;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    std::int64_t threshold_us = 0; // -1 marks the synthetic (0,0)/(1,1) anchors
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// 50 geometrically spaced thresholds, 10 us .. 100 ms: two orders of
/// magnitude around the usual operating points on each side.
inline std::vector<std::int64_t> default_threshold_sweep(int count = 50, std::int64_t lo = 10,
                                                         std::int64_t hi = 100000) {
    std::vector<std::int64_t> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : double(i) / double(count - 1);
        out.push_back(std::llround(double(lo) * std::pow(double(hi) / double(lo), f)));
    }
    return out;
}

/// Trapezoidal area under the (fpr, tpr) points; duplicate fpr values
/// collapse to their best tpr first.
inline double roc_auc(std::vector<RocPoint> points) {
    std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr;
    });
    std::vector<RocPoint> collapsed;
    for (const auto& p : points) {
        if (!collapsed.empty() && collapsed.back().fpr == p.fpr) {
            collapsed.back().tpr = std::max(collapsed.back().tpr, p.tpr);
        } else {
            collapsed.push_back(p);
        }
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < collapsed.size(); ++i) {
        auc += (collapsed[i].fpr - collapsed[i - 1].fpr) *
               (collapsed[i].tpr + collapsed[i - 1].tpr) * 0.5;
    }
    return auc;
}

/// Sweeps the discrimination threshold (filter length; the time window for
/// NNB) and traces TPR/FPR against the signal/noise labels. The refresh
/// period is resolved from the base config once and held fixed so that
/// state trajectories are identical across the sweep. Runs parallelise
/// across thresholds.
inline RocCurve roc_sweep(const EventStream& stream, const FilterConfig& cfg,
                          std::vector<std::int64_t> thresholds, int jobs = 0) {
    if (thresholds.empty()) throw Error(ErrorCode::MalformedRecord, "threshold list is empty");
    detail::require_labeled(stream);
    std::uint64_t signal_total = 0, noise_total = 0;
    for (const auto& ev : stream.events) {
        (ev.label == Label::Signal ? signal_total : noise_total)++;
    }

    FilterConfig base = cfg;
    base.refresh_period_us = cfg.effective_refresh_period();
    std::sort(thresholds.begin(), thresholds.end());

    std::vector<RocPoint> points(thresholds.size());
    detail::parallel_for_index(thresholds.size(), jobs, [&](std::size_t i) {
        FilterConfig run_cfg = base;
        if (run_cfg.algorithm == Algorithm::NNB) {
            run_cfg.nnb_window_us = thresholds[i];
        } else {
            run_cfg.filter_length_us = thresholds[i];
        }
        const detail::PassCounts counts = detail::count_passes(stream, run_cfg);
        points[i] =
            RocPoint{noise_total ? double(counts.noise_passed) / double(noise_total) : 0.0,
                     signal_total ? double(counts.signal_passed) / double(signal_total) : 0.0,
                     thresholds[i]};
    });

    points.push_back(RocPoint{0.0, 0.0, -1});
    points.push_back(RocPoint{1.0, 1.0, -1});
    std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        return std::tie(a.fpr, a.tpr) < std::tie(b.fpr, b.tpr);
    });

    RocCurve curve;
    curve.auc = roc_auc(points);
    curve.points = std::move(points);
    return curve;
}

struct AlgorithmReport {
    Algorithm algorithm = Algorithm::IIR;
    double auc = 0.0;
    RocCurve roc;
    RetentionMetrics retention; // at the base config's own thresholds
};

struct EvalReport {
    std::string dataset;
    SensorGeometry geometry;
    std::vector<AlgorithmReport> algorithms;
};

/// ROC/AUC plus base-config retention for each algorithm on one labeled
/// stream.
inline EvalReport compare_algorithms(const EventStream& stream, const FilterConfig& base_cfg,
                                     const std::vector<Algorithm>& algorithms,
                                     const std::vector<std::int64_t>& thresholds, int jobs = 0,
                                     const std::string& dataset = "") {
    EvalReport report;
    report.dataset = dataset;
    report.geometry = stream.geometry;
    for (Algorithm algo : algorithms) {
        FilterConfig cfg = base_cfg;
        cfg.algorithm = algo;
        AlgorithmReport entry;
        entry.algorithm = algo;
        entry.roc = roc_sweep(stream, cfg, thresholds, jobs);
        entry.auc = entry.roc.auc;
        std::vector<std::uint8_t> decisions;
        const FilterResult run = run_filter(stream, cfg, &decisions);
        entry.retention = compute_retention(stream, run.passed);
        report.algorithms.push_back(std::move(entry));
    }
    return report;
}

inline nlohmann::json retention_to_json(const RetentionMetrics& m) {
    return nlohmann::json{{"noise_total", m.noise_total},
                          {"noise_passed", m.noise_passed},
                          {"signal_total", m.signal_total},
                          {"signal_passed", m.signal_passed},
                          {"pct_noise_remaining", m.pct_noise_remaining},
                          {"pct_signal_remaining", m.pct_signal_remaining}};
}

inline nlohmann::json report_to_json(const EvalReport& report,
                                     const nlohmann::json& config = nlohmann::json::object()) {
    nlohmann::json algos = nlohmann::json::array();
    for (const auto& entry : report.algorithms) {
        nlohmann::json roc = nlohmann::json::array();
        for (const auto& p : entry.roc.points) {
            roc.push_back({{"threshold_us", p.threshold_us}, {"fpr", p.fpr}, {"tpr", p.tpr}});
        }
        algos.push_back({{"name", algorithm_name(entry.algorithm)},
                         {"auc", entry.auc},
                         {"roc", std::move(roc)},
                         {"retention", retention_to_json(entry.retention)}});
    }
    nlohmann::json j{{"dataset", report.dataset},
                     {"geometry", {{"width", report.geometry.width}, {"height", report.geometry.height}}},
                     {"algorithms", std::move(algos)}};
    if (!config.empty()) j["config"] = config;
    return j;
}

/// CSV mirror of the ROC points, one row per point, for plotting.
inline void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    file << "algorithm,threshold_us,fpr,tpr\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    for (const auto& entry : report.algorithms) {
        for (const auto& p : entry.roc.points) {
            file << algorithm_name(entry.algorithm) << ',' << p.threshold_us << ',' << fmt(p.fpr)
                 << ',' << fmt(p.tpr) << '\n';
        }
    }
    if (!file) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

} // namespace evf

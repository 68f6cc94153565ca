// evfilt - command-line toolkit for event-stream noise filtering:
// region-grid filters with neighbour interpolation, noise injection and
// estimation, synthetic scenes and ROC/AUC evaluation.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evfilter/evfilter.hpp"

using nlohmann::json;

namespace {

struct IoFlags {
    std::string in_format = "auto";
    std::string out_format = "auto";
    std::uint16_t width = 1280;
    std::uint16_t height = 720;
    bool sort = false;
};

struct FilterFlags {
    std::string algo = "dif";
    std::int64_t len_us = 1000;
    int scale = 16;
    double u = 0.25;
    std::int64_t refresh_us = evf::kRefreshFollowsFilterLength;
    std::int64_t window_us = 2500;
    int radius = 1;
};

void add_io_flags(CLI::App* cmd, IoFlags& io, bool with_output) {
    cmd->add_option("--in-format", io.in_format, "Input format (auto|csv|bin)")
        ->check(CLI::IsMember({"auto", "csv", "bin"}))
        ->capture_default_str();
    if (with_output) {
        cmd->add_option("--out-format", io.out_format, "Output format (auto|csv|bin)")
            ->check(CLI::IsMember({"auto", "csv", "bin"}))
            ->capture_default_str();
    }
    cmd->add_option("--width", io.width, "Sensor width for CSV inputs")->capture_default_str();
    cmd->add_option("--height", io.height, "Sensor height for CSV inputs")->capture_default_str();
    cmd->add_flag("--sort", io.sort, "Sort out-of-order input instead of rejecting it");
}

void add_filter_flags(CLI::App* cmd, FilterFlags& f) {
    cmd->add_option("--algo", f.algo, "Algorithm (iir|tm|bi|bif|dif|nnb)")
        ->check(CLI::IsMember({"iir", "tm", "bi", "bif", "dif", "nnb"}))
        ->capture_default_str();
    cmd->add_option("--len-us", f.len_us, "Filter length (threshold), microseconds")
        ->capture_default_str();
    cmd->add_option("--scale", f.scale, "Region size in pixels")->capture_default_str();
    cmd->add_option("--u", f.u, "Update factor in (0,1]")->capture_default_str();
    cmd->add_option("--refresh-us", f.refresh_us,
                    "Refresh period, microseconds (default: filter length; 0 disables)");
    cmd->add_option("--window-us", f.window_us, "NNB time window, microseconds")
        ->capture_default_str();
    cmd->add_option("--radius", f.radius, "NNB neighbourhood half-width, pixels")
        ->capture_default_str();
}

evf::FilterConfig to_config(const FilterFlags& f) {
    evf::FilterConfig cfg;
    if (!evf::algorithm_from_name(f.algo, cfg.algorithm)) {
        throw evf::Error(evf::ErrorCode::MalformedRecord, "unknown algorithm " + f.algo);
    }
    cfg.filter_length_us = f.len_us;
    cfg.scale = f.scale;
    cfg.update_factor = f.u;
    cfg.refresh_period_us = f.refresh_us;
    cfg.nnb_window_us = f.window_us;
    cfg.nnb_radius = f.radius;
    cfg.validate();
    return cfg;
}

json config_json(const evf::FilterConfig& cfg) {
    return json{{"algo", evf::algorithm_name(cfg.algorithm)},
                {"len_us", cfg.filter_length_us},
                {"scale", cfg.scale},
                {"u", cfg.update_factor},
                {"refresh_us", cfg.effective_refresh_period()},
                {"window_us", cfg.nnb_window_us},
                {"radius", cfg.nnb_radius}};
}

evf::StreamFormat pick_format(const std::string& path, const std::string& flag) {
    if (flag == "csv") return evf::StreamFormat::Csv;
    if (flag == "bin") return evf::StreamFormat::Bin;
    return evf::format_from_path(path);
}

evf::EventStream read_input(const std::string& path, const IoFlags& io) {
    return evf::read_stream(path, pick_format(path, io.in_format),
                            evf::SensorGeometry{io.width, io.height}, io.sort);
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
    if (opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("EVFILT_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_value;
}

std::vector<evf::Algorithm> parse_algos(const std::string& list) {
    std::vector<evf::Algorithm> algos;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        evf::Algorithm a;
        if (!evf::algorithm_from_name(item, a)) {
            throw evf::Error(evf::ErrorCode::MalformedRecord, "unknown algorithm " + item);
        }
        algos.push_back(a);
    }
    if (algos.empty()) throw evf::Error(evf::ErrorCode::MalformedRecord, "empty algorithm list");
    return algos;
}

std::vector<std::int64_t> parse_thresholds(const std::string& sweep, const std::string& list) {
    std::vector<std::int64_t> out;
    if (!list.empty()) {
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
    } else {
        long long lo = 10, hi = 100000;
        int count = 50;
        if (!sweep.empty() &&
            std::sscanf(sweep.c_str(), "%lld:%lld:%d", &lo, &hi, &count) != 3) {
            throw evf::Error(evf::ErrorCode::MalformedRecord,
                             "bad sweep spec (expected lo:hi:count): " + sweep);
        }
        out = evf::default_threshold_sweep(count, lo, hi);
    }
    if (out.empty()) throw evf::Error(evf::ErrorCode::MalformedRecord, "empty threshold list");
    return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------- filter --

struct FilterCmd {
    std::string input, output, rejected_out;
    IoFlags io;
    FilterFlags flags;
};

int run_filter_cmd(const FilterCmd& c) {
    const evf::FilterConfig cfg = to_config(c.flags);
    std::uint64_t passed = 0, rejected = 0;

    if (c.io.sort) {
        // sorting needs the whole stream in memory first
        evf::EventStream stream = read_input(c.input, c.io);
        evf::FilterResult result = evf::run_filter(stream, cfg);
        evf::write_stream(result.passed, c.output, pick_format(c.output, c.io.out_format));
        if (!c.rejected_out.empty()) {
            evf::write_stream(result.rejected, c.rejected_out,
                              pick_format(c.rejected_out, c.io.out_format));
        }
        passed = result.passed.size();
        rejected = result.rejected.size();
    } else {
        // constant-memory pipeline: event in, event out
        evf::StreamReader reader(c.input, pick_format(c.input, c.io.in_format),
                                 evf::SensorGeometry{c.io.width, c.io.height});
        evf::FilterEngine engine(reader.geometry(), cfg);
        evf::StreamWriter pass_writer(c.output, pick_format(c.output, c.io.out_format),
                                      reader.geometry());
        std::optional<evf::StreamWriter> reject_writer;
        if (!c.rejected_out.empty()) {
            reject_writer.emplace(c.rejected_out, pick_format(c.rejected_out, c.io.out_format),
                                  reader.geometry());
        }
        evf::LabeledEvent ev;
        while (reader.next(ev)) {
            if (engine.process(ev.event).passed) {
                pass_writer.write(ev);
                ++passed;
            } else {
                if (reject_writer) reject_writer->write(ev);
                ++rejected;
            }
        }
        pass_writer.finish();
        if (reject_writer) reject_writer->finish();
    }

    print_json(json{{"input", passed + rejected},
                    {"passed", passed},
                    {"rejected", rejected},
                    {"config", config_json(cfg)}});
    return 0;
}

// ---------------------------------------------------------- inject-noise --

struct InjectCmd {
    std::string input, output, noise_file;
    IoFlags io;
    double rate = 1.0;
    double target_rate = -1.0;
    std::int64_t duration_us = 0;
    std::uint64_t seed = 1;
    CLI::Option* seed_opt = nullptr;
};

int run_inject_cmd(const InjectCmd& c) {
    const std::uint64_t seed = resolve_seed(c.seed_opt, c.seed);
    evf::EventStream clean = read_input(c.input, c.io);
    evf::EventStream noisy;
    json cfg{{"seed", seed}, {"duration_us", c.duration_us}};

    if (!c.noise_file.empty()) {
        evf::EventStream noise =
            evf::relabeled(read_input(c.noise_file, c.io), evf::Label::Noise);
        if (c.target_rate >= 0) noise = evf::rescale_noise(noise, c.target_rate, seed);
        noisy = evf::merge_streams(evf::relabeled(std::move(clean), evf::Label::Signal), noise);
        cfg["noise_file"] = c.noise_file;
        cfg["target_rate"] = c.target_rate;
    } else {
        evf::NoiseSpec spec{c.rate, clean.geometry, c.duration_us, seed};
        noisy = evf::inject_noise(clean, spec);
        cfg["rate"] = c.rate;
    }

    evf::write_stream(noisy, c.output, pick_format(c.output, c.io.out_format));
    std::uint64_t noise_count = 0;
    for (const auto& ev : noisy.events) noise_count += ev.label == evf::Label::Noise;
    print_json(json{{"clean", noisy.events.size() - noise_count},
                    {"noise", noise_count},
                    {"total", noisy.events.size()},
                    {"config", cfg}});
    return 0;
}

// -------------------------------------------------------- estimate-noise --

struct EstimateCmd {
    std::string input;
    IoFlags io;
    std::int64_t bin_ms = 200;
    std::int64_t bin_us = 0; // overrides bin_ms when set
    int trim = 16;
};

int run_estimate_cmd(const EstimateCmd& c) {
    const std::int64_t bin_us = c.bin_us > 0 ? c.bin_us : c.bin_ms * 1000;
    evf::EventStream stream = read_input(c.input, c.io);
    evf::NoiseEstimate est = evf::estimate_noise(stream, bin_us, c.trim);
    print_json(json{{"mean_events_per_bin", est.mean_events_per_bin},
                    {"noise_rate_hz_per_pix", est.noise_rate_hz_per_pix},
                    {"min_noise_fraction", est.min_noise_fraction},
                    {"bin_width_us", est.bin_width_us},
                    {"trim", est.trimmed},
                    {"config", json{{"bin_width_us", bin_us},
                                    {"trim", c.trim},
                                    {"events", stream.events.size()}}}});
    return 0;
}

// ----------------------------------------------------------------- synth --

struct SynthCmd {
    std::string spec_path, output;
    IoFlags io;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

int run_synth_cmd(const SynthCmd& c) {
    evf::SceneSpec spec = evf::load_scene_spec(c.spec_path);
    if (c.seed_opt->count() > 0 || std::getenv("EVFILT_SEED")) {
        spec.seed = resolve_seed(c.seed_opt, c.seed);
    }
    evf::EventStream scene = evf::render_scene(spec);
    evf::write_stream(scene, c.output, pick_format(c.output, c.io.out_format));
    print_json(json{{"events", scene.events.size()},
                    {"config", json{{"spec", c.spec_path},
                                    {"seed", spec.seed},
                                    {"width", spec.geometry.width},
                                    {"height", spec.geometry.height},
                                    {"duration_us", spec.duration_us}}}});
    return 0;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateCmd {
    std::string input, json_out;
    IoFlags io;
    FilterFlags flags;
    double boundary_band = -1.0;
};

int run_evaluate_cmd(const EvaluateCmd& c) {
    const evf::FilterConfig cfg = to_config(c.flags);
    evf::EventStream stream = read_input(c.input, c.io);
    evf::FilterResult result = evf::run_filter(stream, cfg);
    evf::RetentionMetrics retention = evf::compute_retention(stream, result.passed);

    json j{{"dataset", c.input},
           {"retention", evf::retention_to_json(retention)},
           {"counts", json{{"input", stream.events.size()},
                           {"passed", result.passed.size()},
                           {"rejected", result.rejected.size()}}},
           {"config", config_json(cfg)}};
    if (c.boundary_band >= 0) {
        evf::BoundaryCrossingCounts b =
            evf::boundary_crossing_report(stream, result.rejected, cfg.scale, c.boundary_band);
        j["boundary"] = json{{"rejected_in_band", b.rejected_in_band},
                             {"rejected_total", b.rejected_total},
                             {"signal_total", b.signal_total},
                             {"band_px", c.boundary_band}};
    }
    if (c.json_out.empty()) {
        print_json(j);
    } else {
        std::ofstream out(c.json_out, std::ios::binary | std::ios::trunc);
        if (!out) throw evf::Error(evf::ErrorCode::IoFailure, "cannot open " + c.json_out);
        out << j.dump(2) << "\n";
        print_json(json{{"report", c.json_out}});
    }
    return 0;
}

// ------------------------------------------------------------------- roc --

struct RocCmd {
    std::string input, report_path, csv_path, dataset;
    IoFlags io;
    FilterFlags flags;
    std::string algos = "iir,tm,bi,bif,dif,nnb";
    std::string thresholds;      // lo:hi:count
    std::string thresholds_list; // comma-separated values
    int jobs = 0;
    bool low_mem = false;
};

// constant-memory variant: every run re-reads the input instead of keeping
// the stream resident
evf::EvalReport roc_low_mem(const RocCmd& c, const evf::FilterConfig& base_cfg,
                            const std::vector<evf::Algorithm>& algos,
                            std::vector<std::int64_t> thresholds) {
    std::sort(thresholds.begin(), thresholds.end());
    const evf::StreamFormat format = pick_format(c.input, c.io.in_format);
    const evf::SensorGeometry csv_geom{c.io.width, c.io.height};

    std::uint64_t signal_total = 0, noise_total = 0;
    evf::SensorGeometry geometry;
    {
        evf::StreamReader reader(c.input, format, csv_geom);
        geometry = reader.geometry();
        evf::LabeledEvent ev;
        std::int64_t index = 0;
        while (reader.next(ev)) {
            if (ev.label == evf::Label::Unknown) {
                throw evf::Error(evf::ErrorCode::UnlabeledEvents,
                                 "event without signal/noise label", index);
            }
            (ev.label == evf::Label::Signal ? signal_total : noise_total)++;
            ++index;
        }
    }

    auto count_file_passes = [&](const evf::FilterConfig& cfg) {
        evf::StreamReader reader(c.input, format, csv_geom);
        evf::FilterEngine engine(reader.geometry(), cfg);
        std::uint64_t sig = 0, noi = 0;
        evf::LabeledEvent ev;
        while (reader.next(ev)) {
            if (engine.process(ev.event).passed) {
                (ev.label == evf::Label::Signal ? sig : noi)++;
            }
        }
        return std::pair(sig, noi);
    };

    evf::EvalReport report;
    report.dataset = c.dataset;
    report.geometry = geometry;
    for (evf::Algorithm algo : algos) {
        evf::FilterConfig base = base_cfg;
        base.algorithm = algo;
        base.refresh_period_us = base_cfg.effective_refresh_period();

        evf::AlgorithmReport entry;
        entry.algorithm = algo;
        std::vector<evf::RocPoint> points(thresholds.size());
        evf::detail::parallel_for_index(thresholds.size(), c.jobs, [&](std::size_t i) {
            evf::FilterConfig run_cfg = base;
            if (algo == evf::Algorithm::NNB) run_cfg.nnb_window_us = thresholds[i];
            else run_cfg.filter_length_us = thresholds[i];
            const auto [sig, noi] = count_file_passes(run_cfg);
            points[i] = {noise_total ? double(noi) / double(noise_total) : 0.0,
                         signal_total ? double(sig) / double(signal_total) : 0.0, thresholds[i]};
        });
        points.push_back({0.0, 0.0, -1});
        points.push_back({1.0, 1.0, -1});
        std::sort(points.begin(), points.end(), [](const evf::RocPoint& a, const evf::RocPoint& b) {
            return std::tie(a.fpr, a.tpr) < std::tie(b.fpr, b.tpr);
        });
        entry.roc.points = points;
        entry.roc.auc = entry.auc = evf::roc_auc(points);

        const auto [sig, noi] = count_file_passes(base);
        entry.retention.signal_total = signal_total;
        entry.retention.noise_total = noise_total;
        entry.retention.signal_passed = sig;
        entry.retention.noise_passed = noi;
        entry.retention.pct_signal_remaining =
            signal_total ? 100.0 * double(sig) / double(signal_total) : 0.0;
        entry.retention.pct_noise_remaining =
            noise_total ? 100.0 * double(noi) / double(noise_total) : 0.0;
        report.algorithms.push_back(std::move(entry));
    }
    return report;
}

int run_roc_cmd(RocCmd& c) {
    const evf::FilterConfig base_cfg = to_config(c.flags);
    const std::vector<evf::Algorithm> algos = parse_algos(c.algos);
    const std::vector<std::int64_t> thresholds = parse_thresholds(c.thresholds, c.thresholds_list);
    if (c.dataset.empty()) c.dataset = c.input;

    evf::EvalReport report;
    if (c.low_mem) {
        report = roc_low_mem(c, base_cfg, algos, thresholds);
    } else {
        evf::EventStream stream = read_input(c.input, c.io);
        report = evf::compare_algorithms(stream, base_cfg, algos, thresholds, c.jobs, c.dataset);
    }

    json cfg = config_json(base_cfg);
    cfg["thresholds"] = thresholds;
    cfg["jobs"] = c.jobs;
    cfg["low_mem"] = c.low_mem;
    const json j = evf::report_to_json(report, cfg);

    std::ofstream out(c.report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw evf::Error(evf::ErrorCode::IoFailure, "cannot open " + c.report_path);
    out << j.dump(2) << "\n";
    if (!out) throw evf::Error(evf::ErrorCode::IoFailure, "write failed on " + c.report_path);
    if (!c.csv_path.empty()) evf::write_report_csv(report, c.csv_path);

    json summary{{"dataset", report.dataset}, {"report", c.report_path}};
    json aucs = json::array();
    for (const auto& entry : report.algorithms) {
        aucs.push_back({{"name", evf::algorithm_name(entry.algorithm)}, {"auc", entry.auc}});
    }
    summary["auc"] = aucs;
    print_json(summary);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-stream noise filtering toolkit"};
    app.require_subcommand(1);

    FilterCmd filter_cmd;
    CLI::App* filter_app = app.add_subcommand("filter", "Filter an event stream");
    filter_app->add_option("input", filter_cmd.input, "Input event file")->required();
    filter_app->add_option("output", filter_cmd.output, "Output file for passed events")->required();
    filter_app->add_option("--rejected-out", filter_cmd.rejected_out, "Also write rejected events");
    add_filter_flags(filter_app, filter_cmd.flags);
    add_io_flags(filter_app, filter_cmd.io, true);

    InjectCmd inject_cmd;
    CLI::App* inject_app = app.add_subcommand("inject-noise", "Add labeled noise to a clean stream");
    inject_app->add_option("input", inject_cmd.input, "Clean event file")->required();
    inject_app->add_option("output", inject_cmd.output, "Output file")->required();
    inject_app->add_option("--rate", inject_cmd.rate, "Uniform noise rate, Hz per pixel")
        ->capture_default_str();
    inject_app->add_option("--noise-file", inject_cmd.noise_file,
                           "Merge a recorded noise stream instead of generating one");
    inject_app->add_option("--target-rate", inject_cmd.target_rate,
                           "Rescale the recorded noise to this rate (Hz per pixel)");
    inject_app->add_option("--duration-us", inject_cmd.duration_us,
                           "Noise window (default: clean stream span)");
    inject_cmd.seed_opt =
        inject_app->add_option("--seed", inject_cmd.seed, "Random seed (or env EVFILT_SEED)");
    add_io_flags(inject_app, inject_cmd.io, true);

    EstimateCmd estimate_cmd;
    CLI::App* estimate_app =
        app.add_subcommand("estimate-noise", "Histogram-based background rate estimate");
    estimate_app->add_option("input", estimate_cmd.input, "Input event file")->required();
    estimate_app->add_option("--bin-ms", estimate_cmd.bin_ms, "Histogram bin width, milliseconds")
        ->capture_default_str();
    estimate_app->add_option("--bin-us", estimate_cmd.bin_us,
                             "Histogram bin width in microseconds (overrides --bin-ms)");
    estimate_app->add_option("--trim", estimate_cmd.trim, "Bins trimmed at each tail")
        ->capture_default_str();
    add_io_flags(estimate_app, estimate_cmd.io, false);

    SynthCmd synth_cmd;
    CLI::App* synth_app = app.add_subcommand("synth", "Render a synthetic labeled scene");
    synth_app->add_option("spec", synth_cmd.spec_path, "Scene spec JSON file")->required();
    synth_app->add_option("output", synth_cmd.output, "Output event file")->required();
    synth_cmd.seed_opt =
        synth_app->add_option("--seed", synth_cmd.seed, "Override the spec's seed");
    add_io_flags(synth_app, synth_cmd.io, true);

    EvaluateCmd evaluate_cmd;
    CLI::App* evaluate_app =
        app.add_subcommand("evaluate", "Retention metrics for one filter configuration");
    evaluate_app->add_option("input", evaluate_cmd.input, "Labeled event file")->required();
    evaluate_app->add_option("--json", evaluate_cmd.json_out, "Write the report here instead of stdout");
    evaluate_app->add_option("--boundary-band", evaluate_cmd.boundary_band,
                             "Also count rejected events within this many pixels of region lines");
    add_filter_flags(evaluate_app, evaluate_cmd.flags);
    add_io_flags(evaluate_app, evaluate_cmd.io, false);

    RocCmd roc_cmd;
    CLI::App* roc_app = app.add_subcommand("roc", "ROC/AUC threshold sweep across algorithms");
    roc_app->add_option("input", roc_cmd.input, "Labeled event file")->required();
    roc_app->add_option("report", roc_cmd.report_path, "Output JSON report")->required();
    roc_app->add_option("--algos", roc_cmd.algos, "Comma list of algorithms")->capture_default_str();
    roc_app->add_option("--thresholds", roc_cmd.thresholds,
                        "Geometric sweep lo:hi:count (default 10:100000:50)");
    roc_app->add_option("--thresholds-list", roc_cmd.thresholds_list,
                        "Explicit comma list of thresholds, microseconds");
    roc_app->add_option("--jobs", roc_cmd.jobs, "Worker threads (0 = all cores)")
        ->capture_default_str();
    roc_app->add_option("--csv", roc_cmd.csv_path, "Also write ROC points as CSV");
    roc_app->add_option("--dataset", roc_cmd.dataset, "Dataset name for the report");
    roc_app->add_flag("--low-mem", roc_cmd.low_mem, "Re-read the input per run instead of caching");
    add_filter_flags(roc_app, roc_cmd.flags);
    add_io_flags(roc_app, roc_cmd.io, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (filter_app->parsed()) return run_filter_cmd(filter_cmd);
        if (inject_app->parsed()) return run_inject_cmd(inject_cmd);
        if (estimate_app->parsed()) return run_estimate_cmd(estimate_cmd);
        if (synth_app->parsed()) return run_synth_cmd(synth_cmd);
        if (evaluate_app->parsed()) return run_evaluate_cmd(evaluate_cmd);
        if (roc_app->parsed()) return run_roc_cmd(roc_cmd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

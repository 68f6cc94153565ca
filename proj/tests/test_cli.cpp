#include "doctest.h"

#include <cstdlib>
#include <sys/wait.h>

#include "json.hpp"

#include "evfilter/noise.hpp"
#include "evfilter/stream_io.hpp"
#include "test_support.hpp"

using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const testsup::TempDir& dir, const std::string& args) {
    const std::string out_path = dir.file("stdout.txt");
    const std::string err_path = dir.file("stderr.txt");
    const std::string cmd =
        std::string(EVFILT_BIN_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testsup::read_bytes(out_path);
    result.err = testsup::read_bytes(err_path);
    return result;
}

const char* kSceneJson = R"({
    "width": 64, "height": 64, "object": "disk", "radius": 6.0,
    "vx_px_s": 0.0, "vy_px_s": 200.0, "x0": 32.0, "y0": -8.0,
    "duration_us": 500000, "jitter_us": 40, "seed": 5,
    "events_per_pixel_crossing": 2
})";

} // namespace

TEST_CASE("cli: synth is deterministic and filter reports counts") {
    testsup::TempDir dir("cli_synth");
    testsup::write_text(dir.file("scene.json"), kSceneJson);

    CliResult synth1 =
        run_cli(dir, "synth " + dir.file("scene.json") + " " + dir.file("a.csv"));
    REQUIRE(synth1.exit_code == 0);
    CliResult synth2 =
        run_cli(dir, "synth " + dir.file("scene.json") + " " + dir.file("b.csv"));
    REQUIRE(synth2.exit_code == 0);
    CHECK(testsup::read_bytes(dir.file("a.csv")) == testsup::read_bytes(dir.file("b.csv")));

    const json info = json::parse(synth1.out);
    CHECK(info["events"].get<std::uint64_t>() > 0);

    CliResult filt = run_cli(dir, "filter --algo dif --len-us 1000 --scale 16 --u 0.25 "
                                  "--width 64 --height 64 " +
                                      dir.file("a.csv") + " " + dir.file("passed.csv") +
                                      " --rejected-out " + dir.file("rejected.csv"));
    REQUIRE(filt.exit_code == 0);
    const json counts = json::parse(filt.out);
    CHECK(counts["input"] == info["events"]);
    CHECK(counts["passed"].get<std::uint64_t>() + counts["rejected"].get<std::uint64_t>() ==
          counts["input"].get<std::uint64_t>());
    CHECK(counts["config"]["algo"] == "dif");

    // outputs are valid streams that partition the input
    evf::EventStream passed =
        evf::read_stream(dir.file("passed.csv"), evf::StreamFormat::Csv, {64, 64});
    evf::EventStream rejected =
        evf::read_stream(dir.file("rejected.csv"), evf::StreamFormat::Csv, {64, 64});
    CHECK(passed.size() == counts["passed"].get<std::uint64_t>());
    CHECK(rejected.size() == counts["rejected"].get<std::uint64_t>());
}

TEST_CASE("cli: binary pipeline round-trips through filter") {
    testsup::TempDir dir("cli_bin");
    evf::EventStream s = testsup::make_random_stream({128, 128}, 3000, 400000, 3);
    evf::write_stream(s, dir.file("in.bin"), evf::StreamFormat::Bin);
    CliResult filt = run_cli(dir, "filter --algo tm " + dir.file("in.bin") + " " +
                                      dir.file("out.bin"));
    REQUIRE(filt.exit_code == 0);
    evf::EventStream out = evf::read_stream(dir.file("out.bin"), evf::StreamFormat::Bin);
    CHECK(out.geometry == s.geometry); // geometry travels inside the binary format
    CHECK(out.size() == json::parse(filt.out)["passed"].get<std::uint64_t>());
}

TEST_CASE("cli: validation failures exit 1 with a diagnostic") {
    testsup::TempDir dir("cli_bad");
    testsup::write_text(dir.file("in.csv"), "t_us,x,y,p,label\n1,1,1,1,S\n");

    CliResult bad_algo = run_cli(dir, "filter --algo wavelet " + dir.file("in.csv") + " " +
                                          dir.file("out.csv"));
    CHECK(bad_algo.exit_code == 1);
    CHECK(!bad_algo.err.empty());

    CliResult missing = run_cli(dir, "filter --algo dif " + dir.file("absent.csv") + " " +
                                         dir.file("out.csv"));
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("IO_FAILURE") != std::string::npos);

    CliResult no_cmd = run_cli(dir, "");
    CHECK(no_cmd.exit_code == 1);
}

TEST_CASE("cli: unsorted input needs --sort") {
    testsup::TempDir dir("cli_sort");
    testsup::write_text(dir.file("in.csv"), "t_us,x,y,p,label\n500,1,1,0,N\n400,2,2,1,N\n");

    CliResult strict = run_cli(dir, "filter --algo iir --width 16 --height 16 " +
                                        dir.file("in.csv") + " " + dir.file("out.csv"));
    CHECK(strict.exit_code == 1);
    CHECK(strict.err.find("NON_MONOTONIC") != std::string::npos);

    CliResult sorted = run_cli(dir, "filter --algo iir --width 16 --height 16 --sort " +
                                        dir.file("in.csv") + " " + dir.file("out.csv"));
    CHECK(sorted.exit_code == 0);
}

TEST_CASE("cli: inject-noise is reproducible per seed") {
    testsup::TempDir dir("cli_inject");
    evf::EventStream clean = testsup::make_random_stream({128, 128}, 1000, 900000, 4, 1.0);
    evf::write_stream(clean, dir.file("clean.csv"), evf::StreamFormat::Csv);

    const std::string args = "inject-noise --rate 1.0 --seed 7 --width 128 --height 128 " +
                             dir.file("clean.csv") + " ";
    CliResult a = run_cli(dir, args + dir.file("n1.csv"));
    REQUIRE(a.exit_code == 0);
    CliResult b = run_cli(dir, args + dir.file("n2.csv"));
    REQUIRE(b.exit_code == 0);
    CHECK(testsup::read_bytes(dir.file("n1.csv")) == testsup::read_bytes(dir.file("n2.csv")));

    const json info = json::parse(a.out);
    CHECK(info["clean"] == 1000);
    CHECK(info["noise"].get<std::uint64_t>() > 0);
}

TEST_CASE("cli: estimate-noise emits the estimate schema") {
    testsup::TempDir dir("cli_estimate");
    evf::EventStream s;
    s.geometry = {128, 128};
    for (int bin = 0; bin < 40; ++bin) {
        for (int j = 0; j < 25; ++j) {
            s.events.push_back({evf::Event{bin * 10000 + j * 10, 1, 1, 0}, evf::Label::Unknown});
        }
    }
    evf::write_stream(s, dir.file("seq.csv"), evf::StreamFormat::Csv);

    CliResult est = run_cli(dir, "estimate-noise --bin-us 10000 --trim 4 --width 128 --height 128 " +
                                     dir.file("seq.csv"));
    REQUIRE(est.exit_code == 0);
    const json j = json::parse(est.out);
    CHECK(j["mean_events_per_bin"] == 25.0);
    CHECK(j["bin_width_us"] == 10000);
    CHECK(j["trim"] == 4);
    CHECK(j["noise_rate_hz_per_pix"].get<double>() ==
          doctest::Approx(25.0 / (0.01 * 128 * 128)).epsilon(1e-9));
    CHECK(j.contains("min_noise_fraction"));
}

TEST_CASE("cli: roc writes a report and low-mem matches in-memory") {
    testsup::TempDir dir("cli_roc");
    evf::EventStream clean = testsup::make_random_stream({128, 128}, 4000, 1000000, 6, 1.0);
    evf::EventStream noisy = evf::inject_noise(clean, evf::NoiseSpec{0.5, {128, 128}, 0, 9});
    evf::write_stream(noisy, dir.file("noisy.csv"), evf::StreamFormat::Csv);

    const std::string common = "roc --algos dif,nnb --thresholds-list 400,1000,2500 "
                               "--len-us 1000 --width 128 --height 128 --jobs 2 " +
                               dir.file("noisy.csv") + " ";
    CliResult mem = run_cli(dir, common + dir.file("mem.json") + " --csv " + dir.file("roc.csv"));
    REQUIRE(mem.exit_code == 0);
    CliResult low = run_cli(dir, common + dir.file("low.json") + " --low-mem");
    REQUIRE(low.exit_code == 0);

    json mem_j = json::parse(testsup::read_bytes(dir.file("mem.json")));
    json low_j = json::parse(testsup::read_bytes(dir.file("low.json")));
    low_j["config"].erase("low_mem");
    mem_j["config"].erase("low_mem");
    CHECK(mem_j.dump() == low_j.dump());

    REQUIRE(mem_j["algorithms"].size() == 2);
    CHECK(mem_j["algorithms"][0]["roc"].size() == 5); // 3 thresholds + anchors
    const std::string csv = testsup::read_bytes(dir.file("roc.csv"));
    CHECK(csv.rfind("algorithm,threshold_us,fpr,tpr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11); // header + 2 x 5 points
}

TEST_CASE("cli: evaluate writes a json report on request") {
    testsup::TempDir dir("cli_eval");
    evf::EventStream clean = testsup::make_random_stream({64, 64}, 800, 700000, 8, 1.0);
    evf::EventStream noisy = evf::inject_noise(clean, evf::NoiseSpec{0.5, {64, 64}, 0, 2});
    evf::write_stream(noisy, dir.file("noisy.csv"), evf::StreamFormat::Csv);

    CliResult eval = run_cli(dir, "evaluate --algo bif --len-us 1000 --width 64 --height 64 "
                                  "--boundary-band 2 --json " +
                                      dir.file("report.json") + " " + dir.file("noisy.csv"));
    REQUIRE(eval.exit_code == 0);
    const json j = json::parse(testsup::read_bytes(dir.file("report.json")));
    CHECK(j["retention"].contains("pct_signal_remaining"));
    CHECK(j["boundary"]["band_px"] == 2.0);
    CHECK(j["config"]["algo"] == "bif");
}

TEST_CASE("cli: EVFILT_SEED provides the seed fallback") {
    testsup::TempDir dir("cli_env");
    evf::EventStream clean = testsup::make_random_stream({64, 64}, 300, 200000, 4, 1.0);
    evf::write_stream(clean, dir.file("clean.csv"), evf::StreamFormat::Csv);

    const std::string tail = " --rate 1.0 --width 64 --height 64 " + dir.file("clean.csv") + " ";
    CliResult env1 = run_cli(dir, "inject-noise" + tail + dir.file("e1.csv"));
    CliResult env2 = run_cli(dir, "inject-noise --seed 55" + tail + dir.file("e2.csv"));
    REQUIRE(env1.exit_code == 0);
    REQUIRE(env2.exit_code == 0);

    // the same seed given through the environment reproduces the flag run
    setenv("EVFILT_SEED", "55", 1);
    CliResult env3 = run_cli(dir, "inject-noise" + tail + dir.file("e3.csv"));
    unsetenv("EVFILT_SEED");
    REQUIRE(env3.exit_code == 0);
    CHECK(testsup::read_bytes(dir.file("e2.csv")) == testsup::read_bytes(dir.file("e3.csv")));
    CHECK(testsup::read_bytes(dir.file("e1.csv")) != testsup::read_bytes(dir.file("e3.csv")));
}

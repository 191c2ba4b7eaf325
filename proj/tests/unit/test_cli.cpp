#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "../support/oracle.hpp"
#include "gunloc/io.hpp"
#include "gunloc/pulse_detect.hpp"

using namespace gunloc;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GUNLOC_TEST_DATA;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(GUNLOC_SCRATCH) / "cli";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Run {
    int code = -1;
    std::string out, err;
};

// Runs the CLI with stdout and stderr captured to scratch files.
Run cli(const std::string& args) {
    static int counter = 0;
    const auto out = scratch("stdout" + std::to_string(counter)), err = scratch("stderr" + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string("\"") + GUNLOC_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

io::Json read_json(const fs::path& p) { return io::Json::parse(slurp(p)); }

std::vector<io::PulseRecord> read_csv_text(const std::string& text) {
    std::istringstream in(text);
    return io::read_pulse_csv(in);
}

// Three sensors, three shots each; onsets follow a straight-line model so the
// same fixture serves the detection and round-trip checks.
struct DetectFixture {
    std::map<std::string, std::vector<double>> onsets;
    std::vector<fs::path> wavs;
    fs::path sensors;
};

const DetectFixture& detect_fixture() {
    static const DetectFixture fx = [] {
        DetectFixture f;
        const double fs = 12000.0;
        const std::vector<std::pair<std::string, std::array<double, 2>>> sites = {
            {"north", {0.0, 300.0}}, {"east", {260.0, 0.0}}, {"west", {-240.0, -60.0}}};
        const std::array<double, 3> shot_times = {0.5, 1.7, 2.9};
        std::ofstream table(f.sensors = scratch("sensors.csv"));
        table << "sensor_id,x_m,y_m,z_m\n";
        std::uint64_t seed = 40;
        for (const auto& [id, xy] : sites) {
            table << id << "," << xy[0] << "," << xy[1] << ",2\n";
            std::vector<double> on;
            for (double t : shot_times) on.push_back(t + std::hypot(xy[0] - 20.0, xy[1] - 40.0) / 343.0);
            const auto seg = oracle::synth_blasts(fs, 4.5, on, {0.5, 0.35, 0.6}, 0.01, seed++);
            f.wavs.push_back(scratch(id + ".wav"));
            io::write_wav(f.wavs.back(), seg, io::WavEncoding::Pcm16);
            f.onsets[id] = on;
        }
        return f;
    }();
    return fx;
}

std::string wav_args(const DetectFixture& fx) {
    std::string s;
    for (const auto& w : fx.wavs) s += q(w) + " ";
    return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("detect writes the library's detections for every file") {
    const auto& fx = detect_fixture();
    const auto r = cli("detect " + wav_args(fx) + "--sensors " + q(fx.sensors) + " --start-epoch 100");
    REQUIRE(r.code == 0);
    const auto recs = read_csv_text(r.out);
    std::size_t expected = 0;
    for (const auto& w : fx.wavs) {
        const auto pulses = detect_pulses(io::read_wav(w, 100.0));
        CHECK(pulses.size() >= 3);
        for (const auto& p : pulses) {
            const auto it = std::find_if(recs.begin(), recs.end(), [&](const io::PulseRecord& rec) {
                return rec.observation.sensor_id == w.stem().string() && rec.observation.arrival_time == p.arrival_time;
            });
            REQUIRE(it != recs.end());
            CHECK(*it->observation.amplitude_dbspl == io::fixed(p.peak_amplitude_dbspl, 2));
            CHECK(it->observation.position.z == 2.0);
            CHECK(it->shot_id == "detected");
        }
        expected += pulses.size();
    }
    CHECK(recs.size() == expected);
}

TEST_CASE("detect finds the three synthesized shots within a millisecond") {
    const auto& fx = detect_fixture();
    const auto r = cli("detect " + wav_args(fx));
    REQUIRE(r.code == 0);
    const auto recs = read_csv_text(r.out);
    for (const auto& [id, onsets] : fx.onsets) {
        CAPTURE(id);
        for (double onset : onsets) {
            double best = 1e9;
            for (const auto& rec : recs)
                if (rec.observation.sensor_id == id) best = std::min(best, std::abs(rec.observation.arrival_time - onset));
            CAPTURE(onset);
            CHECK(best <= 0.001);
        }
    }
}

TEST_CASE("detect output parses back identically from CSV and JSON") {
    const auto& fx = detect_fixture();
    const auto csv = scratch("detect.csv"), json = scratch("detect.json");
    REQUIRE(cli("detect " + wav_args(fx) + "--sensors " + q(fx.sensors) + " -o " + q(csv)).code == 0);
    REQUIRE(cli("detect " + wav_args(fx) + "--sensors " + q(fx.sensors) + " -o " + q(json)).code == 0);
    const auto a = io::read_pulse_file(csv), b = io::read_pulse_file(json);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].shot_id == b[i].shot_id);
        CHECK(a[i].observation == b[i].observation);
    }
    std::ostringstream rewritten;
    io::write_pulse_csv(rewritten, a);
    CHECK(rewritten.str() == slurp(csv));
}

TEST_CASE("detect: silent WAV gives an empty pulse file, corrupt WAV exits 2 naming the file") {
    AudioSegment silent;
    silent.sample_rate = 16000;
    silent.samples.assign(32000, 0.0);
    io::write_wav(scratch("quiet.wav"), silent);
    const auto r = cli("detect " + q(scratch("quiet.wav")));
    CHECK(r.code == 0);
    CHECK(read_csv_text(r.out).empty());

    std::ofstream(scratch("broken.wav")) << "RIFF....WAVEjunk";
    const auto bad = cli("detect " + q(scratch("quiet.wav")) + " " + q(scratch("broken.wav")));
    CHECK(bad.code == 2);
    CHECK(bad.err.find("broken.wav") != std::string::npos);

    CHECK(cli("detect " + q(scratch("quiet.wav")) + " --start-epoch 1,2,3").code == 2);
}

TEST_CASE("locate reproduces the golden solutions byte for byte") {
    const auto out = scratch("golden_mlg.json");
    REQUIRE(cli("locate " + q(kData / "golden_pulses.csv") + " -o " + q(out)).code == 0);
    CHECK(slurp(out) == slurp(kData / "golden_locate_mlg.json"));

    const auto all = scratch("golden_all.json");
    const auto r = cli("locate " + q(kData / "golden_pulses.csv") + " --algorithm all -o " + q(all));
    REQUIRE(r.code == 0);
    CHECK(slurp(all) == slurp(kData / "golden_locate_all.json"));
    CHECK(r.out.find("Algorithm") == 0);
    for (const char* name : {"Reddi", "LeastSquares", "MLG", "IDT"}) {
        const auto line = r.out.find(std::string("\n") + name);
        REQUIRE(line != std::string::npos);
        CHECK(r.out.find("3/3", line) < r.out.find('\n', line + 1));
    }
}

TEST_CASE("golden solutions agree with the forward model used to make them") {
    // Sources behind golden_pulses.csv; arrival times carry millisecond rounding.
    const std::map<std::string, std::array<double, 2>> truth = {
        {"G1", {420.0, 515.0}}, {"G2", {610.0, 300.0}}, {"G3", {250.0, 760.0}}};
    const auto doc = read_json(kData / "golden_locate_all.json");
    for (const auto& [algorithm, section] : doc.at("algorithms").items()) {
        CAPTURE(algorithm);
        REQUIRE(section.at("solutions").size() == 3);
        for (const auto& s : section.at("solutions")) {
            const auto& t = truth.at(s.at("shot_id").get<std::string>());
            CHECK(std::hypot(s["position"]["x_m"].get<double>() - t[0], s["position"]["y_m"].get<double>() - t[1]) < 0.5);
        }
    }
}

TEST_CASE("locate: survey report, partial files and empty files") {
    const auto out = scratch("survey.json");
    REQUIRE(cli("locate " + q(kData / "golden_pulses.csv") + " --survey 420,515 -o " + q(out)).code == 0);
    const auto doc = read_json(out);
    CHECK(doc.at("accuracy").at("attempted") == 3);
    CHECK(doc.at("survey").at("x_m") == 420.0);

    const auto partial = scratch("partial.json");
    CHECK(cli("locate " + q(kData / "partial_pulses.csv") + " -o " + q(partial)).code == 1);
    const auto p = read_json(partial);
    CHECK(p.at("solutions").size() == 3);
    REQUIRE(p.at("failures").size() == 1);
    CHECK(p["failures"][0]["shot_id"] == "G4");
    CHECK(p["failures"][0]["error"] == "InsufficientSensors");

    std::ofstream(scratch("empty.csv")) << "shot_id,sensor_id,x_m,y_m,z_m,arrival_time_s\n";
    const auto e = cli("locate " + q(scratch("empty.csv")));
    CHECK(e.code == 0);
    CHECK(io::Json::parse(e.out).at("solutions").empty());
}

TEST_CASE("locate: schema errors exit 2 with a row number") {
    std::ofstream(scratch("bad.csv")) << "shot_id,sensor_id,x_m,y_m,z_m,arrival_time_s\nA,S1,0,0,0,1\nA,S2,0,x,0,1\n";
    const auto r = cli("locate " + q(scratch("bad.csv")));
    CHECK(r.code == 2);
    CHECK(r.err.find("bad.csv:3:") != std::string::npos);
    CHECK(cli("locate " + q(kData / "golden_pulses.csv") + " --algorithm simplex").code == 2);
    CHECK(cli("locate " + q(kData / "golden_pulses.csv") + " --temp-c -300").code == 2);
    CHECK(cli("locate").code == 2);
    CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("locate: wind and constraint options reach the solver") {
    const auto calm = read_json([&] {
        const auto p = scratch("calm.json");
        cli("locate " + q(kData / "golden_pulses.csv") + " -o " + q(p));
        return p;
    }());
    const auto windy = read_json([&] {
        const auto p = scratch("windy.json");
        cli("locate " + q(kData / "golden_pulses.csv") + " --wind 5,0 --constraint 2.5d:1.5 -o " + q(p));
        return p;
    }());
    CHECK(windy.at("constraint") == "2.5D:1.5");
    CHECK(windy["solutions"][0]["position"]["z_m"] == 1.5);
    CHECK(windy["solutions"][0]["position"]["x_m"] != calm["solutions"][0]["position"]["x_m"]);
}

TEST_CASE("select: echoes are dropped from a single-shot pool") {
    const auto pool = io::read_pulse_file(kData / "select_echoes.csv");
    std::map<std::string, double> first;
    for (const auto& r : pool) {
        auto [it, fresh] = first.emplace(r.observation.sensor_id, r.observation.arrival_time);
        if (!fresh) it->second = std::min(it->second, r.observation.arrival_time);
    }
    const auto r = cli("select " + q(kData / "select_echoes.csv"));
    REQUIRE(r.code == 0);
    const auto chosen = read_csv_text(r.out);
    CHECK(chosen.size() == first.size());
    for (const auto& c : chosen) {
        CHECK(c.shot_id == "c001-1");
        CHECK(c.observation.arrival_time == first.at(c.observation.sensor_id));
    }
}

TEST_CASE("select: two interleaved shots come out as two located shots") {
    const auto selected = scratch("two.csv"), solved = scratch("two.json");
    REQUIRE(cli("select " + q(kData / "select_two_shots.csv") + " -o " + q(selected)).code == 0);
    const auto shots = io::group_by_shot(io::read_pulse_file(selected));
    REQUIRE(shots.size() == 2);
    CHECK(shots[0].size() == 10);
    CHECK(shots[1].size() == 7);

    REQUIRE(cli("locate " + q(selected) + " -o " + q(solved)).code == 0);
    const auto truth = read_json(kData / "select_truth.json").at("select_two_shots");
    const auto sols = read_json(solved).at("solutions");
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::hypot(sols[i]["position"]["x_m"].get<double>() - truth[i][0].get<double>(),
                         sols[i]["position"]["y_m"].get<double>() - truth[i][1].get<double>()) < 1.0);
}

TEST_CASE("select: a noise pool is listed as NoConsistentSet and exits 1") {
    const auto report = scratch("noise_report.json");
    const auto r = cli("select " + q(kData / "select_noise.csv") + " --report " + q(report));
    CHECK(r.code == 1);
    CHECK(read_csv_text(r.out).empty());
    const auto doc = read_json(report);
    REQUIRE(doc.at("clusters").size() == 1);
    CHECK(doc["clusters"][0]["error"] == "NoConsistentSet");
    CHECK(doc["clusters"][0]["unassigned_pulses"] == 10);
}

TEST_CASE("simulate: full arrays reproduce the clean solve, an infinite gate locates nothing") {
    const auto clean = cli("simulate --config " + q(kData / "sim_clean.json") + " --k 9 --trials 1 --gate-dbspl 0");
    REQUIRE(clean.code == 0);
    const auto doc = io::Json::parse(clean.out);
    CHECK(doc["runs"][0]["fraction_within_15m"] == 1.0);
    const double eps = doc["runs"][0]["report"]["epsilon_rms_m"];
    CHECK(eps < 1e-3);

    const auto gated = cli("simulate --config " + q(kData / "sim_clean.json") + " --gate-dbspl inf");
    REQUIRE(gated.code == 0);
    CHECK(io::Json::parse(gated.out)["runs"][0]["report"]["located"] == 0);
}

TEST_CASE("simulate: more sensors per array locate more shots; CDF file and determinism") {
    const auto cdf = scratch("cdf.csv");
    const std::string args = "simulate --config " + q(kData / "sim_city.json") + " --k 4,6 --k 8 --cdf " + q(cdf);
    const auto a = cli(args);
    REQUIRE(a.code == 0);
    const auto doc = io::Json::parse(a.out);
    REQUIRE(doc["runs"].size() == 3);
    const double f4 = doc["runs"][0]["fraction_within_15m"];
    const double f6 = doc["runs"][1]["fraction_within_15m"];
    const double f8 = doc["runs"][2]["fraction_within_15m"];
    CHECK(f6 >= f4);
    CHECK(f8 >= f6);

    const auto lines = slurp(cdf);
    CHECK(lines.find("k,threshold_m,fraction\n") == 0);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 1 + 3 * 25);
    CHECK(lines.find("\n6,15,") != std::string::npos);

    const auto b = cli(args);
    CHECK(a.out == b.out);
    CHECK(cli("simulate --config " + q(kData / "golden_pulses.csv")).code == 2);
}

}  // TEST_SUITE

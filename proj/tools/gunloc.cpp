// gunloc: acoustic gunshot location from the command line.
//
//   gunloc detect   a.wav b.wav --sensors sensors.csv     -> pulse file
//   gunloc locate   pulses.csv --algorithm mlg --survey x,y -> solutions JSON
//   gunloc select   pool.csv --tolerance-ms 40              -> pulse file of chosen sets
//   gunloc simulate --config scenario.json --k 6           -> report JSON + CDF CSV
//
// Exit status: 0 success, 1 partial (some shots could not be solved), 2 input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gunloc/atmosphere.hpp"
#include "gunloc/error.hpp"
#include "gunloc/io.hpp"
#include "gunloc/pipeline.hpp"
#include "gunloc/pulse_detect.hpp"
#include "gunloc/sim.hpp"

namespace {

using namespace gunloc;
using io::Json;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInput = 2;

std::vector<double> parse_list(const std::string& text, std::size_t min, std::size_t max, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidInput, std::string(what) + ": '" + text + "' is not a number list");
        }
    }
    if (out.size() < min || out.size() > max)
        throw Error(ErrorKind::InvalidInput, std::string(what) + ": expected " + std::to_string(min) +
                                                 (min == max ? "" : "-" + std::to_string(max)) + " values");
    return out;
}

// Writes to `path`, or stdout for "" and "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidInput, path + ": cannot open for writing");
    out << text;
}

std::string records_text(const std::vector<io::PulseRecord>& records, const std::string& path, const std::string& format) {
    const bool json = format == "json" || (format == "auto" && path.size() > 5 && path.ends_with(".json"));
    if (json) return io::pulses_to_json(records).dump(2) + "\n";
    std::ostringstream out;
    io::write_pulse_csv(out, records);
    return out.str();
}

// --- detect -----------------------------------------------------------------

struct DetectOptions {
    std::vector<std::string> wavs;
    double tau = kDefaultTau;
    double threshold = kDefaultDetectThreshold;
    std::vector<double> start_epoch;
    std::string sensors;
    std::string shot_id = "detected";
    std::string output;
    std::string format = "auto";
};

std::map<std::string, Position> read_sensor_table(const std::string& path) {
    // Reuse the pulse reader's number handling by shaping rows as pulses.
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, path + ": cannot open");
    std::string header;
    std::getline(in, header);
    if (header.find("sensor_id") == std::string::npos)
        throw Error(ErrorKind::InvalidInput, path + ":1: expected header sensor_id,x_m,y_m,z_m");
    std::ostringstream shaped;
    shaped << "shot_id,sensor_id,x_m,y_m,z_m,arrival_time_s\n";
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) shaped << "s," << line << ",0\n";
    std::istringstream rows(shaped.str());
    std::map<std::string, Position> out;
    for (const auto& r : io::read_pulse_csv(rows, path)) out[r.observation.sensor_id] = r.observation.position;
    return out;
}

int run_detect(const DetectOptions& o) {
    if (!o.start_epoch.empty() && o.start_epoch.size() != 1 && o.start_epoch.size() != o.wavs.size())
        throw Error(ErrorKind::InvalidInput, "--start-epoch takes one value or one per WAV file");
    std::map<std::string, Position> sensors;
    if (!o.sensors.empty()) sensors = read_sensor_table(o.sensors);

    std::vector<io::PulseRecord> records;
    for (std::size_t i = 0; i < o.wavs.size(); ++i) {
        const std::filesystem::path path(o.wavs[i]);
        const double start = o.start_epoch.empty() ? 0.0 : o.start_epoch[o.start_epoch.size() == 1 ? 0 : i];
        const AudioSegment seg = io::read_wav(path, start);
        const std::string id = path.stem().string();
        Position where;
        if (!o.sensors.empty()) {
            auto it = sensors.find(id);
            if (it == sensors.end()) throw Error(ErrorKind::InvalidInput, path.string() + ": sensor '" + id + "' not in " + o.sensors);
            where = it->second;
        }
        std::vector<DetectedPulse> pulses;
        try {
            pulses = detect_pulses(seg, o.tau, o.threshold);
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ": " + e.what());
        }
        for (const auto& p : pulses) {
            SensorObservation obs{id, {io::fixed(where.x, 3), io::fixed(where.y, 3), io::fixed(where.z, 3)},
                                  p.arrival_time, p.peak_amplitude_dbspl, std::nullopt};
            records.push_back({o.shot_id, std::move(obs)});
        }
    }
    emit(o.output, records_text(records, o.output, o.format));
    return kExitOk;
}

// --- locate -----------------------------------------------------------------

struct LocateOptions {
    std::string input;
    std::string format = "auto";
    std::string algorithm = "mlg";
    std::string constraint = "2d";
    double temp_c = 20.0;
    std::string wind;
    std::string survey;
    std::string output;
};

struct AlgorithmRun {
    Algorithm algorithm;
    std::vector<ShotSolution> solutions;
    Json failures = Json::array();
};

AlgorithmRun run_algorithm(Algorithm algorithm, const std::vector<PulseSet>& shots, const SolverConfig& base,
                           const Environment& env) {
    AlgorithmRun run{algorithm, {}, Json::array()};
    SolverConfig cfg = base;
    cfg.algorithm = algorithm;
    for (const auto& shot : shots) {
        try {
            run.solutions.push_back(locate(shot, cfg, env));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidInput) throw;
            run.failures.push_back(Json{{"shot_id", shot.shot_id()}, {"error", std::string(to_string(e.kind()))},
                                        {"message", e.what()}});
        }
    }
    return run;
}

std::string format_optional(const std::optional<double>& v, int decimals) {
    return v ? fmt::format("{:.{}f}", *v, decimals) : "-";
}

int run_locate(const LocateOptions& o) {
    const auto records = io::read_pulse_file(o.input, io::parse_pulse_format(o.format));
    const auto shots = io::group_by_shot(records);

    Environment env;
    env.temperature_c = o.temp_c;
    if (!o.wind.empty()) {
        const auto w = parse_list(o.wind, 2, 2, "--wind");
        env.wind_x = w[0];
        env.wind_y = w[1];
    }
    env.validate();
    SolverConfig cfg;
    cfg.constraint = parse_constraint(o.constraint);
    std::optional<Position> survey;
    if (!o.survey.empty()) {
        const auto s = parse_list(o.survey, 2, 3, "--survey");
        survey = Position{s[0], s[1], s.size() > 2 ? s[2] : 0.0};
    }

    std::vector<Algorithm> algorithms;
    if (o.algorithm == "all")
        algorithms = {Algorithm::Reddi, Algorithm::LeastSquares, Algorithm::MLG, Algorithm::IDT};
    else
        algorithms = {parse_algorithm(o.algorithm)};

    Json doc;
    doc["input"] = std::filesystem::path(o.input).filename().string();
    doc["constraint"] = to_string(cfg.constraint);
    doc["temperature_c"] = env.temperature_c;
    doc["speed_of_sound_mps"] = io::fixed(env.speed_of_sound(), 4);
    doc["wind_mps"] = Json::array({env.wind_x, env.wind_y});
    if (survey) doc["survey"] = io::to_json(*survey);

    std::vector<AlgorithmRun> runs;
    bool partial = false;
    for (Algorithm a : algorithms) {
        runs.push_back(run_algorithm(a, shots, cfg, env));
        partial = partial || !runs.back().failures.empty();
    }
    auto section = [&](const AlgorithmRun& run) {
        Json j;
        Json sols = Json::array();
        for (const auto& s : run.solutions) sols.push_back(io::to_json(s));
        j["solutions"] = std::move(sols);
        j["failures"] = run.failures;
        if (survey && !run.solutions.empty()) j["accuracy"] = io::to_json(accuracy_report(run.solutions, *survey, shots.size()));
        return j;
    };

    if (runs.size() == 1) {
        doc["algorithm"] = std::string(to_string(runs[0].algorithm));
        const Json body = section(runs[0]);
        for (const auto& [k, v] : body.items()) doc[k] = v;
        emit(o.output, doc.dump(2) + "\n");
        return partial ? kExitPartial : kExitOk;
    }

    Json per = Json::object();
    std::string table = fmt::format("{:<14}{:>8}{:>12}{:>12}{:>10}{:>10}{:>10}\n", "Algorithm", "N", "rms_res_ms",
                                    "eps_m", "eps_c_m", "sigma1_m", "sigma2_m");
    for (const auto& run : runs) {
        per[std::string(to_string(run.algorithm))] = section(run);
        double mean_rms = 0.0;
        for (const auto& s : run.solutions) mean_rms += s.rms_residual;
        if (!run.solutions.empty()) mean_rms /= static_cast<double>(run.solutions.size());
        std::optional<AccuracyReport> rep;
        if (survey && !run.solutions.empty()) rep = accuracy_report(run.solutions, *survey, shots.size());
        table += fmt::format("{:<14}{:>8}{:>12}{:>12}{:>10}{:>10}{:>10}\n", to_string(run.algorithm),
                             fmt::format("{}/{}", run.solutions.size(), shots.size()),
                             run.solutions.empty() ? "-" : fmt::format("{:.3f}", mean_rms * 1e3),
                             format_optional(rep ? rep->epsilon_rms : std::nullopt, 2),
                             format_optional(rep ? rep->epsilon_centroid : std::nullopt, 2),
                             format_optional(rep ? rep->sigma1 : std::nullopt, 2),
                             format_optional(rep ? rep->sigma2 : std::nullopt, 2));
    }
    doc["algorithms"] = std::move(per);
    std::cout << table;
    if (!o.output.empty()) emit(o.output, doc.dump(2) + "\n");
    return partial ? kExitPartial : kExitOk;
}

// --- select -----------------------------------------------------------------

struct SelectOptions {
    std::string input;
    std::string format = "auto";
    double tolerance_ms = 40.0;
    double gap = 1.0;
    std::string algorithm = "mlg";
    std::string constraint = "2d";
    double temp_c = 20.0;
    int min_sensors = 0;
    std::uint64_t seed = ConsistencyParams{}.seed;
    std::string output;
    std::string report;
    std::string output_format = "auto";
};

int run_select(const SelectOptions& o) {
    const auto records = io::read_pulse_file(o.input, io::parse_pulse_format(o.format));
    std::vector<CandidatePulse> candidates;
    for (const auto& r : records) {
        const auto& ob = r.observation;
        candidates.push_back({ob.sensor_id, ob.position, ob.arrival_time, 1.0, ob.amplitude_dbspl, ob.snr_db});
    }
    SolverConfig cfg;
    cfg.algorithm = parse_algorithm(o.algorithm);
    cfg.constraint = parse_constraint(o.constraint);
    cfg.speed_of_sound = speed_of_sound(o.temp_c);
    ConsistencyParams params;
    params.residual_tolerance = o.tolerance_ms / 1000.0;
    params.seed = o.seed;
    if (o.min_sensors > 0) params.min_sensors = static_cast<std::size_t>(o.min_sensors);

    std::vector<io::PulseRecord> chosen;
    Json clusters = Json::array();
    bool partial = false;
    const auto pools = cluster_by_time(std::move(candidates), o.gap);
    for (std::size_t c = 0; c < pools.size(); ++c) {
        const std::string prefix = fmt::format("c{:03d}", c + 1);
        Json entry;
        entry["cluster"] = prefix;
        entry["t_min_s"] = io::fixed(pools[c].t_min, 3);
        entry["t_max_s"] = io::fixed(pools[c].t_max, 3);
        entry["pulses"] = pools[c].size();
        try {
            pools[c].validate(params.max_pulses_per_sensor);
            const auto shots = extract_shots(pools[c], params, cfg, prefix);
            Json ids = Json::array();
            std::size_t used = 0;
            for (const auto& s : shots) {
                ids.push_back(s.pulses.shot_id());
                used += s.members.size();
                for (auto& r : io::to_records(s.pulses)) chosen.push_back(std::move(r));
            }
            entry["shots"] = std::move(ids);
            entry["unassigned_pulses"] = pools[c].size() - used;
            if (shots.empty()) {
                entry["error"] = std::string(to_string(ErrorKind::NoConsistentSet));
                partial = true;
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidInput) throw;
            entry["error"] = std::string(to_string(e.kind()));
            entry["message"] = e.what();
            partial = true;
        }
        clusters.push_back(std::move(entry));
    }
    emit(o.output, records_text(chosen, o.output, o.output_format));
    Json report;
    report["input"] = std::filesystem::path(o.input).filename().string();
    report["tolerance_ms"] = o.tolerance_ms;
    report["clusters"] = std::move(clusters);
    if (!o.report.empty()) emit(o.report, report.dump(2) + "\n");
    else if (partial) std::cerr << report.dump(2) << "\n";
    return partial ? kExitPartial : kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
    std::string config;
    std::vector<std::size_t> k{6};
    std::size_t trials = 25;
    std::size_t shots = 10;
    double gate_dbspl = 73.0;
    std::uint64_t seed = ReducedDensityOptions{}.seed;
    std::string output;
    std::string cdf;
};

int run_simulate(const SimulateOptions& o) {
    std::ifstream in(o.config);
    if (!in) throw Error(ErrorKind::InvalidInput, o.config + ": cannot open");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::InvalidInput, o.config + ": " + e.what());
    }
    ScenarioConfig cfg;
    try {
        cfg = io::scenario_from_json(j);
    } catch (const Error& e) {
        throw Error(e.kind(), o.config + ": " + e.what());
    }
    if (o.shots < 1) throw Error(ErrorKind::InvalidInput, "--shots must be at least 1");

    // One deployment, repeated shots from the same point with fresh noise.
    cfg.fixed_sensors = place_sensors(cfg);
    std::vector<PulseSet> shots;
    for (std::size_t s = 0; s < o.shots; ++s) {
        ScenarioConfig shot_cfg = cfg;
        shot_cfg.seed = cfg.seed + s;
        shots.push_back(generate_scenario(shot_cfg, fmt::format("shot{:03d}", s + 1)).direct);
    }
    SolverConfig solver;
    solver.speed_of_sound = speed_of_sound(cfg.temperature_c);

    Json doc;
    doc["config"] = std::filesystem::path(o.config).filename().string();
    doc["sensors"] = cfg.fixed_sensors.size();
    doc["shots"] = o.shots;
    doc["trials"] = o.trials;
    doc["gate_dbspl"] = o.gate_dbspl;
    doc["source"] = io::to_json(cfg.source);
    Json runs = Json::array();
    std::string csv = "k,threshold_m,fraction\n";
    for (std::size_t k : o.k) {
        ReducedDensityOptions rd;
        rd.k = k;
        rd.trials = o.trials;
        rd.gate_dbspl = o.gate_dbspl;
        rd.seed = o.seed;
        const auto report = reduced_density_trial(shots, cfg.source, rd, solver);
        runs.push_back(Json{{"k", k}, {"fraction_within_15m", io::fixed(report.fraction_within(15.0), 6)},
                            {"report", io::to_json(report)}});
        for (const auto& p : report.cdf) csv += fmt::format("{},{:.0f},{:.6f}\n", k, p.threshold, p.fraction);
    }
    doc["runs"] = std::move(runs);
    emit(o.output, doc.dump(2) + "\n");
    if (!o.cdf.empty()) emit(o.cdf, csv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acoustic gunshot location: pulse detection, selection, multilateration and simulation"};
    app.require_subcommand(1);

    DetectOptions det;
    auto* detect = app.add_subcommand("detect", "Detect impulses in WAV files and write a pulse file");
    detect->add_option("wav", det.wavs, "WAV files, one per sensor (file stem = sensor id)")->required();
    detect->add_option("--tau", det.tau, "Kernel length scale, seconds");
    detect->add_option("--threshold", det.threshold, "Detection threshold, response units");
    detect->add_option("--start-epoch", det.start_epoch, "Epoch of the first sample, seconds (one, or one per file)")
        ->delimiter(',');
    detect->add_option("--sensors", det.sensors, "CSV with sensor_id,x_m,y_m,z_m");
    detect->add_option("--shot-id", det.shot_id, "shot_id written on every row");
    detect->add_option("-o,--output", det.output, "Output path (default stdout)");
    detect->add_option("--output-format", det.format, "csv, json or auto (by extension)");

    LocateOptions loc;
    auto* locate_cmd = app.add_subcommand("locate", "Solve every shot in a pulse file");
    locate_cmd->add_option("pulses", loc.input, "Pulse file (CSV or JSON)")->required();
    locate_cmd->add_option("--format", loc.format, "auto, csv, json or supplemental");
    locate_cmd->add_option("--algorithm", loc.algorithm, "reddi, mlg, ls, idt or all");
    locate_cmd->add_option("--constraint", loc.constraint, "2d, 2.5d:<z> or 3d");
    locate_cmd->add_option("--temp-c", loc.temp_c, "Air temperature, Celsius");
    locate_cmd->add_option("--wind", loc.wind, "Wind vector wx,wy in m/s");
    locate_cmd->add_option("--survey", loc.survey, "Surveyed firing position x,y[,z]; adds an accuracy report");
    locate_cmd->add_option("-o,--output", loc.output, "Solutions JSON path (default stdout)");

    SelectOptions sel;
    auto* select_cmd = app.add_subcommand("select", "Choose mutually consistent pulse sets from raw detections");
    select_cmd->add_option("pool", sel.input, "Pulse file of candidate detections")->required();
    select_cmd->add_option("--format", sel.format, "auto, csv, json or supplemental");
    select_cmd->add_option("--tolerance-ms", sel.tolerance_ms, "Consistency tolerance, milliseconds");
    select_cmd->add_option("--gap", sel.gap, "Silence that separates clusters, seconds");
    select_cmd->add_option("--algorithm", sel.algorithm, "Solver used for hypotheses");
    select_cmd->add_option("--constraint", sel.constraint, "2d, 2.5d:<z> or 3d");
    select_cmd->add_option("--temp-c", sel.temp_c, "Air temperature, Celsius");
    select_cmd->add_option("--min-sensors", sel.min_sensors, "Smallest accepted set (default d+2)");
    select_cmd->add_option("--seed", sel.seed, "Sample-consensus seed");
    select_cmd->add_option("-o,--output", sel.output, "Pulse file of selected sets (default stdout)");
    select_cmd->add_option("--output-format", sel.output_format, "csv, json or auto (by extension)");
    select_cmd->add_option("--report", sel.report, "Sidecar JSON listing clusters and failures");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Reduced-density Monte-Carlo on a synthetic scenario");
    simulate->add_option("--config", sim.config, "Scenario JSON")->required();
    simulate->add_option("--k", sim.k, "Participating sensors per random array (repeatable)")->delimiter(',');
    simulate->add_option("--trials", sim.trials, "Random arrays per shot");
    simulate->add_option("--shots", sim.shots, "Shots fired from the source position");
    simulate->add_option("--gate-dbspl", sim.gate_dbspl, "Strongest-sensor amplitude gate");
    simulate->add_option("--seed", sim.seed, "Array-drawing seed");
    simulate->add_option("-o,--output", sim.output, "Report JSON path (default stdout)");
    simulate->add_option("--cdf", sim.cdf, "CDF CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*detect) return run_detect(det);
        if (*locate_cmd) return run_locate(loc);
        if (*select_cmd) return run_select(sel);
        if (*simulate) return run_simulate(sim);
    } catch (const Error& e) {
        std::cerr << "gunloc: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::InvalidInput || e.kind() == ErrorKind::DomainError ? kExitInput : kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "gunloc: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

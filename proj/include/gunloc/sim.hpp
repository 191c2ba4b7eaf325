#pragma once

// Synthetic scenarios (forward model with noise, non-line-of-sight delays and
// echoes), reduced-density Monte-Carlo trials, and accuracy metrics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gunloc/consistency.hpp"
#include "gunloc/geo.hpp"
#include "gunloc/solvers.hpp"

namespace gunloc {

struct UniformRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Positive-only extra path delay on a direct arrival.
struct NlosSpec {
    double probability = 0.2;
    UniformRange delay{0.005, 0.040};  // seconds
};

/// Late copies of direct arrivals (specular reflections). The count is per
/// scenario; each echo follows a uniformly chosen reporting sensor.
struct EchoSpec {
    int min_count = 0;
    int max_count = 0;
    UniformRange delay{0.080, 0.300};  // seconds after the direct arrival
    double level_drop_db = 6.0;
};

struct SensorSite {
    std::string id;
    Position position;
};

struct ScenarioConfig {
    std::optional<int> sensor_count;
    std::optional<double> sensor_density;  // sensors per km^2, used when sensor_count is absent
    double width = 1000.0;                 // meters, sensors placed on [0, width] x [0, height]
    double height = 1000.0;
    UniformRange sensor_z{0.0, 0.0};
    std::vector<SensorSite> fixed_sensors;  // overrides random placement when non-empty
    Position source{500.0, 500.0, 0.0};
    double source_time = 100.0;             // true discharge time, seconds
    double temperature_c = 20.0;
    double wind_x = 0.0;
    double wind_y = 0.0;
    double timing_noise_sigma = 100e-6;     // seconds
    NlosSpec nlos;
    EchoSpec echoes;
    double source_level_dbspl = 140.0;      // at 1 m
    UniformRange excess_attenuation_db{0.0, 20.0};
    std::optional<double> max_range;        // sensors farther than this do not report
    std::uint64_t seed = 1;

    /// Throws Error(InvalidInput); density mode must stay within 2-12 sensors/km^2.
    void validate() const;
    int resolved_sensor_count() const;
};

/// One synthetic event. `direct` holds the first arrival on every reporting
/// sensor (including its noise and any NLOS delay); `pool` adds the echoes.
struct Scenario {
    std::vector<SensorSite> sensors;
    Position truth;
    double truth_time = 0.0;
    double speed_of_sound = 0.0;
    PulseSet direct;
    CandidatePool pool;
    std::vector<bool> pool_is_direct;  // parallel to pool.pulses
    std::vector<double> nlos_delay;    // parallel to direct, seconds (0 if clear path)
};

/// Places sensors uniformly on the area (unless fixed) at the configured z range.
std::vector<SensorSite> place_sensors(const ScenarioConfig& cfg);

/// Deterministic given cfg.seed.
Scenario generate_scenario(const ScenarioConfig& cfg, const std::string& shot_id = "shot");

/// Travel time from source to sensor through air moving at (wind_x, wind_y, 0):
/// the tau solving |sensor - source - tau v| = c tau.
double advected_travel_time(const Position& source, const Position& sensor, double c, double wind_x, double wind_y);

struct CdfPoint {
    double threshold = 0.0;  // meters
    double fraction = 0.0;
};

struct ShotError {
    std::string shot_id;
    double error = 0.0;  // 2D meters
};

struct AccuracyReport {
    std::size_t attempted = 0;
    std::size_t located = 0;
    std::optional<double> epsilon_rms;       // 2D RMS distance of each solution to the survey point
    std::optional<double> epsilon_centroid;  // 2D distance of the solution centroid to the survey point
    std::optional<double> epsilon_z;         // RMS elevation difference
    std::optional<double> sigma1;            // principal spreads of the 2D scatter
    std::optional<double> sigma2;
    std::optional<double> cep50;             // median 2D error
    std::vector<CdfPoint> cdf;               // thresholds 1..25 m, fraction of attempted shots
    std::vector<ShotError> per_shot;

    double detection_rate() const;
    /// Fraction of attempted shots located within `meters` of the survey point.
    double fraction_within(double meters) const;
};

/// Metrics for solutions of repeated shots at one surveyed point. `attempted`
/// defaults to the number of solutions. Throws InsufficientSolutions when empty.
AccuracyReport accuracy_report(const std::vector<ShotSolution>& solutions, const Position& survey,
                               std::optional<std::size_t> attempted = std::nullopt);

struct ReducedDensityOptions {
    std::size_t k = 6;              // participating sensors per random array
    std::size_t trials = 25;        // random arrays per shot
    double gate_dbspl = 73.0;       // strongest-sensor amplitude gate
    std::uint64_t seed = 0xA11A7ull;
};

/// For each trial and each shot, draws min(k, n) participating sensors without
/// replacement, re-solves, drops solutions whose strongest sensor is below the
/// gate, and scores the rest against the survey point.
AccuracyReport reduced_density_trial(const std::vector<PulseSet>& shots, const Position& survey,
                                     const ReducedDensityOptions& options, const SolverConfig& cfg);

}  // namespace gunloc

#pragma once

// Pulse selection: from all impulses heard around an event (direct paths,
// echoes, unrelated noise) find the largest set consistent with one source
// under straight-line propagation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gunloc/geo.hpp"
#include "gunloc/solvers.hpp"

namespace gunloc {

struct CandidatePulse {
    std::string sensor_id;
    Position position;
    double arrival_time = 0.0;
    double score = 0.0;
    std::optional<double> amplitude_dbspl;
    std::optional<double> snr_db;

    SensorObservation observation() const;
};

inline constexpr std::size_t kDefaultMaxPulsesPerSensor = 8;
inline constexpr double kMaxPoolWindow = 10.0;  // seconds

struct CandidatePool {
    std::vector<CandidatePulse> pulses;
    double t_min = 0.0;
    double t_max = 0.0;

    /// Pool spanning exactly its pulses' arrival times.
    static CandidatePool from_pulses(std::vector<CandidatePulse> pulses);
    /// Throws Error(InvalidInput) when the window exceeds 10 s, a pulse falls
    /// outside it, or a sensor carries more than `max_per_sensor` pulses.
    void validate(std::size_t max_per_sensor = kDefaultMaxPulsesPerSensor) const;
    std::size_t size() const { return pulses.size(); }
    bool empty() const { return pulses.empty(); }
};

struct ConsistencyParams {
    double residual_tolerance = 0.040;      // seconds
    std::optional<std::size_t> min_sensors; // default: d + 2 for the solver constraint
    std::size_t max_exhaustive = 12;        // total pulses for exhaustive search
    std::size_t ransac_trials = 500;
    std::uint64_t seed = 0x5EEDull;
    std::size_t max_pulses_per_sensor = kDefaultMaxPulsesPerSensor;
    int max_refine_rounds = 10;

    std::size_t effective_min_sensors(const SolverConfig& cfg) const;
};

/// discharge_time + distance / c, with the distance measured under `constraint`.
double predict_arrival(const Position& source, double discharge_time, const Position& sensor,
                       double speed_of_sound,
                       const GeometricConstraint& constraint = GeometricConstraint::three_d());

/// Indices of pool pulses within tolerance of the hypothesis, at most one per
/// sensor (smallest |residual| wins), in pool order.
std::vector<std::size_t> consistent_indices(const CandidatePool& pool, const ShotSolution& hypothesis,
                                            const ConsistencyParams& params, double speed_of_sound);

CandidatePool consistency_filter(const CandidatePool& pool, const ShotSolution& hypothesis,
                                 const ConsistencyParams& params, double speed_of_sound);

struct Selection {
    PulseSet pulses;
    ShotSolution solution;
    std::vector<std::size_t> members;  // indices into the pool, ascending
};

/// Largest mutually consistent pulse set. Exhaustive over per-sensor pulse
/// assignments when the pool holds at most max_exhaustive pulses, otherwise
/// sample consensus over minimal subsets; either way followed by a
/// solve -> filter -> re-solve refinement. Throws Error(NoConsistentSet).
Selection select_pulse_set(const CandidatePool& pool, const ConsistencyParams& params, const SolverConfig& cfg,
                           const std::string& shot_id = "shot");

/// Repeats select_pulse_set on what remains after removing each selected set,
/// until nothing consistent is left.
std::vector<Selection> extract_shots(const CandidatePool& pool, const ConsistencyParams& params,
                                     const SolverConfig& cfg, const std::string& shot_prefix = "shot");

}  // namespace gunloc

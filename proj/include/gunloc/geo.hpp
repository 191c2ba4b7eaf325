#pragma once

// Core domain types shared by every module. All positions are local Cartesian
// meters (x east, y north, z up) relative to a scenario-specific origin; times
// are seconds on a shared epoch.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gunloc {

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

Position operator+(const Position& a, const Position& b);
Position operator-(const Position& a, const Position& b);
double horizontal_distance(const Position& a, const Position& b);
double distance(const Position& a, const Position& b);
bool is_finite(const Position& p);

/// Amplitude of a full-scale sinusoid peak (93 dB SPL at 1.0) with sqrt(2) headroom.
inline constexpr double kFullScaleDbSpl = 93.0;
inline constexpr double kMaxAmplitudeDbSpl = 96.01029995663981;  // 93 + 20 log10(sqrt 2)

struct SensorObservation {
    std::string sensor_id;
    Position position;
    double arrival_time = 0.0;
    std::optional<double> amplitude_dbspl;
    std::optional<double> snr_db;

    friend bool operator==(const SensorObservation&, const SensorObservation&) = default;
};

/// Observations attributed to one shot, held in canonical order (ascending
/// arrival time, ties broken by insertion order). Sensor ids are unique.
class PulseSet {
public:
    PulseSet() = default;
    /// Sorts into canonical order; throws Error(InvalidInput) on duplicate ids,
    /// non-finite values or amplitudes above the full-scale bound.
    PulseSet(std::string shot_id, std::vector<SensorObservation> observations);

    const std::string& shot_id() const noexcept { return shot_id_; }
    const std::vector<SensorObservation>& observations() const noexcept { return observations_; }
    std::size_t size() const noexcept { return observations_.size(); }
    bool empty() const noexcept { return observations_.empty(); }
    const SensorObservation& operator[](std::size_t i) const { return observations_[i]; }
    auto begin() const noexcept { return observations_.begin(); }
    auto end() const noexcept { return observations_.end(); }

    /// Earliest arrival time (first observation in canonical order).
    double first_arrival() const;
    const SensorObservation* find(std::string_view sensor_id) const;

    friend bool operator==(const PulseSet&, const PulseSet&) = default;

private:
    std::string shot_id_;
    std::vector<SensorObservation> observations_;
};

struct GeometricConstraint {
    enum class Kind { TwoD, TwoPointFiveD, ThreeD };

    Kind kind = Kind::TwoD;
    double z_star = 0.0;  // plane elevation, meaningful for TwoPointFiveD only

    static GeometricConstraint two_d() { return {Kind::TwoD, 0.0}; }
    static GeometricConstraint two_point_five_d(double z_star) { return {Kind::TwoPointFiveD, z_star}; }
    static GeometricConstraint three_d() { return {Kind::ThreeD, 0.0}; }

    /// Dimension of the unknown position: 2 for TwoD and TwoPointFiveD, 3 for ThreeD.
    int dimension() const noexcept { return kind == Kind::ThreeD ? 3 : 2; }
    /// Fewest observations for which a solution is unique (d + 2).
    std::size_t min_sensors() const noexcept { return static_cast<std::size_t>(dimension()) + 2; }
    /// Elevation every solution under this constraint is pinned to, if any.
    std::optional<double> plane_elevation() const;

    friend bool operator==(const GeometricConstraint&, const GeometricConstraint&) = default;
};

/// "2D", "3D" or "2.5D:<z_star>"; accepted back by parse_constraint.
std::string to_string(const GeometricConstraint& c);
/// Parses "2d", "2.5d[:z]", "3d" (case-insensitive).
GeometricConstraint parse_constraint(std::string_view text, double default_z_star = 0.0);

enum class Algorithm { Reddi, MLG, LeastSquares, IDT };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct SolverDiagnostics {
    std::optional<double> error_term;  // MLG v, in the solver's centered frame
    int iterations = 0;                // IDT outer iterations
    bool range_bound_active = false;   // IDT solution sits on a range bound
    double plane_offset = 0.0;         // raw z - z_star before pinning (2.5D)
    int rank = 0;                      // effective rank of the solved system

    friend bool operator==(const SolverDiagnostics&, const SolverDiagnostics&) = default;
};

struct ShotSolution {
    std::string shot_id;
    Position position;
    double discharge_time = 0.0;
    std::map<std::string, double> residuals;  // sensor_id -> seconds
    Algorithm solver = Algorithm::MLG;
    GeometricConstraint constraint;
    double rms_residual = 0.0;
    double condition_estimate = 0.0;
    SolverDiagnostics diagnostics;

    friend bool operator==(const ShotSolution&, const ShotSolution&) = default;
};

/// Source-to-sensor distance under the constraint: horizontal for TwoD, 3D otherwise.
double constrained_distance(const Position& source, const Position& sensor,
                            const GeometricConstraint& constraint);

/// Straight-line arrival prediction: discharge_time + distance / c.
double predicted_arrival(const Position& source, double discharge_time, const Position& sensor,
                         double speed_of_sound, const GeometricConstraint& constraint);

/// Residual r_i = t_i - predicted_arrival(...) for every observation.
std::map<std::string, double> compute_residuals(const PulseSet& pulses, const Position& source,
                                                double discharge_time, double speed_of_sound,
                                                const GeometricConstraint& constraint);

double rms(const std::map<std::string, double>& residuals);

/// Drops z: every sensor moved onto the z = 0 plane.
PulseSet project_to_plane(const PulseSet& pulses);

inline constexpr std::string_view kMirrorSuffix = "#mirror";

/// Doubles the set with each sensor mirrored through the horizontal plane z = z_star.
/// Mirror rows keep the arrival time and get kMirrorSuffix appended to their id.
PulseSet reflect_through_plane(const PulseSet& pulses, double z_star);

}  // namespace gunloc

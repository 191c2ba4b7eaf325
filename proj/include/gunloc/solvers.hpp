#pragma once

// Multilateration under straight-line propagation in a homogeneous, stationary
// medium. Wind must be removed upstream (see atmosphere.hpp).

#include <optional>
#include <utility>

#include "gunloc/geo.hpp"

namespace gunloc {

struct SolverConfig {
    Algorithm algorithm = Algorithm::MLG;
    GeometricConstraint constraint = GeometricConstraint::two_d();
    double speed_of_sound = 343.0;           // m/s
    double idt_initial_offset = 1.0;         // seconds before the first arrival
    std::optional<std::pair<double, double>> idt_range_bounds;  // (min, max) meters from first sensor
    double convergence_tol = 1e-4;           // meters
    int max_iterations = 200;                // IDT outer iterations
    double svd_cutoff = 1e-10;               // relative singular-value cutoff (MLG)
    double max_condition = 1e8;              // DegenerateGeometry above this

    /// Throws Error(InvalidInput) for c outside (300, 360) or non-positive tolerances.
    void validate() const;
};

/// Dispatches on cfg.algorithm and cfg.constraint. Requires at least d + 2
/// observations. TwoD solves on horizontal positions; TwoPointFiveD feeds the
/// mirrored array to the 3D solver and pins z to the plane; ThreeD is free.
ShotSolution solve(const PulseSet& pulses, const SolverConfig& cfg);

/// Reference-sensor solver: the earliest sensor is the origin and the range to
/// it closes a quadratic. Accepts n = d + 1 sensors when called directly, in
/// which case two residual-equivalent roots raise AmbiguousSolution.
ShotSolution solve_reddi(const PulseSet& pulses, const SolverConfig& cfg);

/// Pseudoinverse of the receiver matrix, solving for (x, y, [z], ct, v/c).
ShotSolution solve_mlg(const PulseSet& pulses, const SolverConfig& cfg);

/// Normal equations of consecutive-pair differences over canonical order.
ShotSolution solve_least_squares(const PulseSet& pulses, const SolverConfig& cfg);

/// Iterative discharge time: 1-D simplex over t* wrapped around a linear
/// intersecting-circles solve with t* fixed.
ShotSolution solve_idt(const PulseSet& pulses, const SolverConfig& cfg);

/// Position only, for a known discharge time (intersection of circles/spheres of
/// radius c (t_i - t*)). Returned position is in the input frame; z follows the
/// constraint.
Position locate_known_discharge(const PulseSet& pulses, double discharge_time, const SolverConfig& cfg);

}  // namespace gunloc

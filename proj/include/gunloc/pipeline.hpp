#pragma once

// Orchestration shared by the command-line tool: environment-aware location and
// time clustering of raw detections.

#include <vector>

#include "gunloc/atmosphere.hpp"
#include "gunloc/consistency.hpp"
#include "gunloc/solvers.hpp"

namespace gunloc {

/// Solves with c taken from the environment's temperature. With nonzero wind,
/// a first solve estimates the discharge time, the positions are wind-corrected
/// against it, and the corrected set is solved again. Returned residuals refer
/// to the corrected positions.
ShotSolution locate(const PulseSet& pulses, SolverConfig cfg, const Environment& env);

/// Splits time-sorted candidates wherever consecutive arrivals are more than
/// `gap` seconds apart, and additionally so that no cluster spans more than
/// kMaxPoolWindow.
std::vector<CandidatePool> cluster_by_time(std::vector<CandidatePulse> pulses, double gap);

}  // namespace gunloc

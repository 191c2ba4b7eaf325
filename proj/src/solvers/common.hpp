#pragma once

// Machinery shared by the four solvers: the constraint-specific working array,
// the local frame that keeps the linear systems well scaled, and conditioning.

#include <Eigen/Dense>

#include <vector>

#include "gunloc/geo.hpp"
#include "gunloc/solvers.hpp"

namespace gunloc::detail {

/// Working array in a local frame: positions relative to `origin`, times
/// relative to `t0` (the first arrival). `dim` columns of each position are used.
struct WorkingArray {
    int dim = 2;
    Position origin;
    double t0 = 0.0;
    std::vector<Eigen::Vector3d> pos;
    std::vector<double> time;

    std::size_t size() const { return time.size(); }
    Eigen::VectorXd at(std::size_t i) const { return pos[i].head(dim); }
};

/// Applies the constraint (projection, reflection or none), then centres the
/// array. Throws InsufficientSensors when fewer than `min_count` observations.
WorkingArray prepare(const PulseSet& pulses, const SolverConfig& cfg, std::size_t min_count);

/// Condition number and numerical rank of A after scaling columns to unit norm.
struct Conditioning {
    double condition = 0.0;
    int rank = 0;
};
Conditioning condition_of(const Eigen::MatrixXd& a, double rank_cutoff);

/// Diagonal scaling that brings every column of A to unit norm (zero columns stay 1).
Eigen::VectorXd column_scales(const Eigen::MatrixXd& a);

/// Throws DegenerateGeometry when the conditioning fails the configured bounds.
void require_well_posed(const Conditioning& c, int required_rank, const SolverConfig& cfg,
                        std::string_view what);

/// RMS of tau_i - t_local - |s_i - p| / c over the working array.
double working_rms(const WorkingArray& w, const Eigen::VectorXd& p, double t_local, double c);

/// Maps a local solution back into the input frame and fills residuals.
ShotSolution finish(Algorithm algorithm, const PulseSet& pulses, const SolverConfig& cfg, const WorkingArray& w,
                    const Eigen::VectorXd& p_local, double t_local, const Conditioning& cond,
                    SolverDiagnostics diag = {});

}  // namespace gunloc::detail

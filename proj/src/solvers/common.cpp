#include "common.hpp"

#include <cmath>
#include <string>

#include "gunloc/error.hpp"

namespace gunloc {

void SolverConfig::validate() const {
    if (!(speed_of_sound > 300.0 && speed_of_sound < 360.0))
        throw Error(ErrorKind::InvalidInput, "speed of sound outside (300, 360) m/s");
    if (!(convergence_tol > 0) || !(svd_cutoff > 0) || !(max_condition > 0) || max_iterations <= 0)
        throw Error(ErrorKind::InvalidInput, "solver tolerances must be positive");
    if (!std::isfinite(idt_initial_offset))
        throw Error(ErrorKind::InvalidInput, "IDT initial offset must be finite");
    if (idt_range_bounds) {
        const auto [lo, hi] = *idt_range_bounds;
        if (!(lo >= 0) || !(hi > lo)) throw Error(ErrorKind::InvalidInput, "IDT range bounds must satisfy 0 <= min < max");
    }
    if (constraint.kind == GeometricConstraint::Kind::TwoPointFiveD && !std::isfinite(constraint.z_star))
        throw Error(ErrorKind::InvalidInput, "plane elevation must be finite");
}

}  // namespace gunloc

namespace gunloc::detail {

namespace {

// Sensors closer than this to the 2.5D plane leave the z column empty.
constexpr double kPlanarTolerance = 1e-9;

}  // namespace

WorkingArray prepare(const PulseSet& pulses, const SolverConfig& cfg, std::size_t min_count) {
    cfg.validate();
    if (pulses.size() < min_count)
        throw Error(ErrorKind::InsufficientSensors,
                    "shot '" + pulses.shot_id() + "' has " + std::to_string(pulses.size()) +
                        " observations; at least " + std::to_string(min_count) + " required under " +
                        to_string(cfg.constraint));

    WorkingArray w;
    PulseSet working;
    switch (cfg.constraint.kind) {
        case GeometricConstraint::Kind::TwoD:
            working = project_to_plane(pulses);
            w.dim = 2;
            break;
        case GeometricConstraint::Kind::ThreeD:
            working = pulses;
            w.dim = 3;
            break;
        case GeometricConstraint::Kind::TwoPointFiveD: {
            const double z_star = cfg.constraint.z_star;
            bool planar = true;
            for (const auto& o : pulses) planar = planar && std::abs(o.position.z - z_star) <= kPlanarTolerance;
            if (planar) {
                // The mirrored array would duplicate every row; solve in the plane directly.
                std::vector<SensorObservation> rows(pulses.begin(), pulses.end());
                for (auto& o : rows) o.position.z = z_star;
                working = PulseSet(pulses.shot_id(), std::move(rows));
                w.dim = 2;
            } else {
                working = reflect_through_plane(pulses, z_star);
                w.dim = 3;
            }
            break;
        }
    }

    const std::size_t n = working.size();
    Position centroid;
    for (const auto& o : working) {
        centroid.x += o.position.x;
        centroid.y += o.position.y;
        centroid.z += o.position.z;
    }
    centroid.x /= static_cast<double>(n);
    centroid.y /= static_cast<double>(n);
    centroid.z /= static_cast<double>(n);
    if (auto plane = cfg.constraint.plane_elevation()) centroid.z = *plane;
    w.origin = centroid;
    w.t0 = working.first_arrival();
    w.pos.reserve(n);
    w.time.reserve(n);
    for (const auto& o : working) {
        w.pos.emplace_back(o.position.x - centroid.x, o.position.y - centroid.y, o.position.z - centroid.z);
        w.time.push_back(o.arrival_time - w.t0);
    }
    return w;
}

Eigen::VectorXd column_scales(const Eigen::MatrixXd& a) {
    Eigen::VectorXd s(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double norm = a.col(j).norm();
        s(j) = norm > 0 ? 1.0 / norm : 1.0;
    }
    return s;
}

Conditioning condition_of(const Eigen::MatrixXd& a, double rank_cutoff) {
    Conditioning out;
    if (a.rows() == 0 || a.cols() == 0) return out;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (a.col(j).norm() == 0.0) {
            out.condition = std::numeric_limits<double>::infinity();
        }
    const Eigen::MatrixXd scaled = a * column_scales(a).asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rank_cutoff * smax) ++out.rank;
    if (out.condition == 0.0)
        out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (a.rows() < a.cols()) out.condition = std::numeric_limits<double>::infinity();
    return out;
}

void require_well_posed(const Conditioning& c, int required_rank, const SolverConfig& cfg,
                        std::string_view what) {
    if (c.rank < required_rank)
        throw Error(ErrorKind::DegenerateGeometry,
                    std::string(what) + ": effective rank " + std::to_string(c.rank) + " below " +
                        std::to_string(required_rank));
    if (!(c.condition <= cfg.max_condition))
        throw Error(ErrorKind::DegenerateGeometry,
                    std::string(what) + ": condition estimate " + std::to_string(c.condition) +
                        " exceeds bound");
}

double working_rms(const WorkingArray& w, const Eigen::VectorXd& p, double t_local, double c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double r = w.time[i] - t_local - (w.at(i) - p).norm() / c;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(w.size()));
}

ShotSolution finish(Algorithm algorithm, const PulseSet& pulses, const SolverConfig& cfg, const WorkingArray& w,
                    const Eigen::VectorXd& p_local, double t_local, const Conditioning& cond,
                    SolverDiagnostics diag) {
    ShotSolution s;
    s.shot_id = pulses.shot_id();
    s.solver = algorithm;
    s.constraint = cfg.constraint;
    s.position.x = p_local(0) + w.origin.x;
    s.position.y = p_local(1) + w.origin.y;
    s.position.z = w.dim == 3 ? p_local(2) + w.origin.z : w.origin.z;
    if (auto plane = cfg.constraint.plane_elevation()) {
        diag.plane_offset = s.position.z - *plane;
        s.position.z = *plane;
    }
    s.discharge_time = w.t0 + t_local;
    s.residuals = compute_residuals(pulses, s.position, s.discharge_time, cfg.speed_of_sound, cfg.constraint);
    s.rms_residual = rms(s.residuals);
    s.condition_estimate = cond.condition;
    diag.rank = cond.rank;
    s.diagnostics = diag;
    return s;
}

}  // namespace gunloc::detail

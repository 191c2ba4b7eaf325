#include <Eigen/Dense>

#include <algorithm>

#include "common.hpp"
#include "gunloc/error.hpp"

namespace gunloc {

// Consecutive differences (i, i+1) over canonical order:
//   a x + b y + c z + d (ct) = e,   a = dx, ..., d = -c dt,
//   e = (|s_{i+1}|^2 + c^2 t_i^2 - |s_i|^2 - c^2 t_{i+1}^2) / 2,
// solved through the normal equations. Simultaneous arrivals leave the ct
// column empty; the position is then the equidistant point and t* follows
// from the mean travel-time offset.
ShotSolution solve_least_squares(const PulseSet& pulses, const SolverConfig& cfg) {
    const auto w = detail::prepare(pulses, cfg, cfg.constraint.min_sensors());
    const double c = cfg.speed_of_sound;
    const int d = w.dim;
    const auto m = static_cast<Eigen::Index>(w.size()) - 1;
    const bool simultaneous = std::all_of(w.time.begin(), w.time.end(), [](double t) { return t == 0.0; });
    const int cols = simultaneous ? d : d + 1;

    Eigen::MatrixXd design(m, cols);
    Eigen::VectorXd e(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const auto s0 = w.at(k);
        const auto s1 = w.at(k + 1);
        const double ct0 = c * w.time[k];
        const double ct1 = c * w.time[k + 1];
        design.block(i, 0, 1, d) = (s1 - s0).transpose();
        if (!simultaneous) design(i, d) = -(ct1 - ct0);
        e(i) = 0.5 * (s1.squaredNorm() + ct0 * ct0 - s0.squaredNorm() - ct1 * ct1);
    }

    const auto cond = detail::condition_of(design, cfg.svd_cutoff);
    detail::require_well_posed(cond, cols, cfg, "LeastSquares difference system");

    const Eigen::VectorXd scales = detail::column_scales(design);
    const Eigen::MatrixXd scaled = design * scales.asDiagonal();
    const Eigen::MatrixXd normal = scaled.transpose() * scaled;
    const Eigen::VectorXd rhs = scaled.transpose() * e;
    const auto ldlt = normal.ldlt();
    if (ldlt.info() != Eigen::Success)
        throw Error(ErrorKind::DegenerateGeometry, "LeastSquares normal matrix is singular");
    const Eigen::VectorXd sol = scales.asDiagonal() * ldlt.solve(rhs);

    const Eigen::VectorXd p = sol.head(d);
    double t_local = 0.0;
    if (simultaneous) {
        for (std::size_t i = 0; i < w.size(); ++i) t_local -= (w.at(i) - p).norm() / c;
        t_local /= static_cast<double>(w.size());
    } else {
        t_local = sol(d) / c;
    }
    return detail::finish(Algorithm::LeastSquares, pulses, cfg, w, p, t_local, cond);
}

}  // namespace gunloc

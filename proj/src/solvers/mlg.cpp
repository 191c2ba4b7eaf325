#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "gunloc/error.hpp"

namespace gunloc {

// Receiver matrix rows (x_i, y_i, [z_i], -c t_i, -c/2) against
// b_i = (|s_i|^2 - (c t_i)^2) / 2; the pseudoinverse solution is
// (x, y, [z], c t*, v/c) with v = |p|^2 - (c t*)^2 in the local frame.
//
// When every arrival is simultaneous the source is equidistant from all
// sensors and the time column vanishes. Position and v are still determined,
// and c t* = -sqrt(|p|^2 - v) follows from the definition of v.
ShotSolution solve_mlg(const PulseSet& pulses, const SolverConfig& cfg) {
    const auto w = detail::prepare(pulses, cfg, cfg.constraint.min_sensors());
    const double c = cfg.speed_of_sound;
    const int d = w.dim;
    const auto n = static_cast<Eigen::Index>(w.size());
    const bool simultaneous = std::all_of(w.time.begin(), w.time.end(), [](double t) { return t == 0.0; });
    const int cols = simultaneous ? d + 1 : d + 2;

    Eigen::MatrixXd r(n, cols);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = w.at(static_cast<std::size_t>(i));
        const double ct = c * w.time[static_cast<std::size_t>(i)];
        r.block(i, 0, 1, d) = s.transpose();
        if (!simultaneous) r(i, d) = -ct;
        r(i, cols - 1) = -c / 2.0;
        b(i) = 0.5 * (s.squaredNorm() - ct * ct);
    }

    const Eigen::VectorXd scales = detail::column_scales(r);
    const Eigen::MatrixXd scaled = r * scales.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = cfg.svd_cutoff * sv(0);

    detail::Conditioning cond;
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) {
            inv_sv(i) = 1.0 / sv(i);
            ++cond.rank;
        }
    cond.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (n < cols) cond.condition = std::numeric_limits<double>::infinity();
    detail::require_well_posed(cond, cols, cfg, "MLG receiver matrix");

    const Eigen::VectorXd y = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() * b;
    const Eigen::VectorXd sol = scales.asDiagonal() * y;
    const Eigen::VectorXd p = sol.head(d);
    const double v = sol(cols - 1) * c;
    const double ct_star = simultaneous ? -std::sqrt(std::max(0.0, p.squaredNorm() - v)) : sol(d);

    SolverDiagnostics diag;
    diag.error_term = v;
    return detail::finish(Algorithm::MLG, pulses, cfg, w, p, ct_star / c, cond, diag);
}

}  // namespace gunloc

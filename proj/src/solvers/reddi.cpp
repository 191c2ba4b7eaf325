#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "common.hpp"
#include "gunloc/error.hpp"

namespace gunloc {

namespace {

// Two roots whose RMS residuals are this close are indistinguishable.
constexpr double kAmbiguityRatio = 0.10;
constexpr double kAmbiguityFloor = 1e-9;  // seconds

struct Candidate {
    Eigen::VectorXd p;  // local frame
    double t_local = 0.0;
    double rms = 0.0;
};

}  // namespace

// With the reference sensor q_0 at the origin and R = |p - q_0|, each other
// sensor gives q_i . p + c dt_i R = (|q_i|^2 - c^2 dt_i^2) / 2. Least squares
// yields p = a + b R, and |a + b R|^2 = R^2 closes the quadratic in R.
ShotSolution solve_reddi(const PulseSet& pulses, const SolverConfig& cfg) {
    const std::size_t direct_min = static_cast<std::size_t>(cfg.constraint.dimension()) + 1;
    const auto w = detail::prepare(pulses, cfg, direct_min);
    const double c = cfg.speed_of_sound;
    const int d = w.dim;
    const auto m = static_cast<Eigen::Index>(w.size()) - 1;

    const Eigen::VectorXd ref = w.at(0);
    Eigen::MatrixXd a_mat(m, d);
    Eigen::VectorXd k(m), g(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto idx = static_cast<std::size_t>(i) + 1;
        const Eigen::VectorXd q = w.at(idx) - ref;
        const double cdt = c * (w.time[idx] - w.time[0]);
        a_mat.row(i) = q.transpose();
        k(i) = 0.5 * (q.squaredNorm() - cdt * cdt);
        g(i) = cdt;
    }

    const auto cond = detail::condition_of(a_mat, cfg.svd_cutoff);
    detail::require_well_posed(cond, d, cfg, "Reddi reference system");

    const Eigen::VectorXd scales = detail::column_scales(a_mat);
    const auto qr = (a_mat * scales.asDiagonal()).colPivHouseholderQr();
    const Eigen::VectorXd a = scales.asDiagonal() * qr.solve(k);
    const Eigen::VectorXd b = -(scales.asDiagonal() * qr.solve(g));

    const double alpha = b.squaredNorm() - 1.0;
    const double beta = 2.0 * a.dot(b);
    const double gamma = a.squaredNorm();

    std::vector<double> ranges;
    if (std::abs(alpha) <= 1e-12 * (std::abs(beta) + 1.0)) {
        if (beta == 0.0) throw Error(ErrorKind::DegenerateGeometry, "Reddi range equation is degenerate");
        ranges.push_back(-gamma / beta);
    } else {
        double disc = beta * beta - 4.0 * alpha * gamma;
        if (disc < 0.0) {
            if (disc < -1e-9 * beta * beta)
                throw Error(ErrorKind::DegenerateGeometry, "Reddi range quadratic has no real root");
            disc = 0.0;
        }
        const double q = -0.5 * (beta + std::copysign(std::sqrt(disc), beta));
        ranges.push_back(q / alpha);
        if (q != 0.0) ranges.push_back(gamma / q);
    }

    std::vector<Candidate> candidates;
    for (double range : ranges) {
        if (!std::isfinite(range) || range < 0.0) continue;
        Candidate cand;
        cand.p = ref + a + b * range;
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) sum += w.time[i] - (w.at(i) - cand.p).norm() / c;
        cand.t_local = sum / static_cast<double>(w.size());
        cand.rms = detail::working_rms(w, cand.p, cand.t_local, c);
        candidates.push_back(std::move(cand));
    }
    if (candidates.empty())
        throw Error(ErrorKind::DegenerateGeometry, "Reddi quadratic has no non-negative range root");

    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].rms < candidates[best].rms) best = i;

    if (candidates.size() == 2 && pulses.size() == direct_min) {
        const double r0 = candidates[0].rms;
        const double r1 = candidates[1].rms;
        if (std::abs(r0 - r1) <= kAmbiguityRatio * std::max(r0, r1) + kAmbiguityFloor &&
            (candidates[0].p - candidates[1].p).norm() > cfg.convergence_tol)
            throw Error(ErrorKind::AmbiguousSolution,
                        "shot '" + pulses.shot_id() + "': two range roots fit the arrivals equally well");
    }

    return detail::finish(Algorithm::Reddi, pulses, cfg, w, candidates[best].p, candidates[best].t_local, cond);
}

}  // namespace gunloc

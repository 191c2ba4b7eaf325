#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>

#include "common.hpp"
#include "gunloc/error.hpp"

namespace gunloc {

namespace {

/// Linear intersection of circles (spheres) of radius c (t_i - t*) about each
/// sensor: consecutive differences cancel the quadratic terms, and the design
/// matrix does not depend on t*, so it is factored once.
class CircleIntersector {
public:
    CircleIntersector(const detail::WorkingArray& w, const SolverConfig& cfg) : w_(w), c_(cfg.speed_of_sound) {
        const int d = w.dim;
        const auto m = static_cast<Eigen::Index>(w.size()) - 1;
        Eigen::MatrixXd design(m, d);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto k = static_cast<std::size_t>(i);
            design.row(i) = (w.at(k + 1) - w.at(k)).transpose();
        }
        cond_ = detail::condition_of(design, cfg.svd_cutoff);
        detail::require_well_posed(cond_, d, cfg, "IDT circle system");
        scales_ = detail::column_scales(design);
        qr_ = (design * scales_.asDiagonal()).colPivHouseholderQr();
    }

    Eigen::VectorXd position(double t_local) const {
        const auto m = static_cast<Eigen::Index>(w_.size()) - 1;
        Eigen::VectorXd rhs(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double r0 = c_ * (w_.time[k] - t_local);
            const double r1 = c_ * (w_.time[k + 1] - t_local);
            rhs(i) = 0.5 * (w_.at(k + 1).squaredNorm() - w_.at(k).squaredNorm() - r1 * r1 + r0 * r0);
        }
        return scales_.asDiagonal() * qr_.solve(rhs);
    }

    double objective(double t_local) const { return detail::working_rms(w_, position(t_local), t_local, c_); }

    const detail::Conditioning& conditioning() const { return cond_; }

private:
    const detail::WorkingArray& w_;
    double c_;
    detail::Conditioning cond_;
    Eigen::VectorXd scales_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

struct SimplexResult {
    double best = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// One-dimensional Nelder-Mead on [lo, hi] (either may be infinite).
template <typename F>
SimplexResult simplex_1d(F&& f, double start, double step, double lo, double hi, double tol, int max_iter) {
    auto clamp = [&](double v) { return std::clamp(v, lo, hi); };
    // Open the simplex from the clamped start so a start outside the bounds
    // does not collapse both vertices onto the same bound.
    double xb = clamp(start);
    double xw = clamp(xb + step);
    if (xw == xb) xw = clamp(xb - step);
    double fb = f(xb);
    double fw = f(xw);

    SimplexResult out;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        if (fw < fb) {
            std::swap(xb, xw);
            std::swap(fb, fw);
        }
        if (std::abs(xw - xb) < tol) {
            out.converged = true;
            break;
        }
        const double xr = clamp(xb + (xb - xw));
        const double fr = f(xr);
        if (fr < fb) {
            const double xe = clamp(xb + 2.0 * (xb - xw));
            const double fe = f(xe);
            if (fe < fr) {
                xw = xe;
                fw = fe;
            } else {
                xw = xr;
                fw = fr;
            }
            continue;
        }
        if (fr < fw) {
            const double xc = xb + 0.5 * (xr - xb);
            const double fc = f(xc);
            if (fc <= fr) {
                xw = xc;
                fw = fc;
                continue;
            }
        }
        // Inside contraction; in one dimension this is also the shrink step.
        xw = xb + 0.5 * (xw - xb);
        fw = f(xw);
    }
    out.best = fw < fb ? xw : xb;
    return out;
}

}  // namespace

ShotSolution solve_idt(const PulseSet& pulses, const SolverConfig& cfg) {
    const auto w = detail::prepare(pulses, cfg, cfg.constraint.min_sensors());
    const double c = cfg.speed_of_sound;
    const CircleIntersector circles(w, cfg);

    // First arrival is local time 0, so a range r from it means t* = -r / c.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    if (cfg.idt_range_bounds) {
        lo = -cfg.idt_range_bounds->second / c;
        hi = -cfg.idt_range_bounds->first / c;
    }
    const double tol = cfg.convergence_tol / c;
    const double start = -cfg.idt_initial_offset;
    const double step = std::max(0.1 * std::abs(cfg.idt_initial_offset), 1e-3);

    auto objective = [&](double t) { return circles.objective(t); };
    auto result = simplex_1d(objective, start, step, lo, hi, tol, cfg.max_iterations);

    // In 3D with few sensors the RMS residual over t* can have a second basin,
    // so a coarse scan from the first arrival back past the start seeds a
    // second descent; the lower of the two wins.
    double extent = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i + 1; j < w.size(); ++j) extent = std::max(extent, (w.at(i) - w.at(j)).norm());
    const double scan_hi = std::min(hi, 0.0);
    const double scan_lo = std::max(lo, std::min(2.0 * start, -2.0 * extent / c));
    if (scan_lo < scan_hi) {
        constexpr int kScan = 128;
        const double spacing = (scan_hi - scan_lo) / kScan;
        double seed = scan_hi, seed_value = objective(scan_hi);
        for (int i = 0; i < kScan; ++i) {
            const double t = scan_lo + i * spacing;
            const double v = objective(t);
            if (v < seed_value) seed = t, seed_value = v;
        }
        const auto rescan = simplex_1d(objective, seed, spacing, lo, hi, tol, cfg.max_iterations);
        if (rescan.converged && (!result.converged || objective(rescan.best) < objective(result.best))) result = rescan;
    }
    if (!result.converged)
        throw Error(ErrorKind::NoConvergence, "IDT did not converge on shot '" + pulses.shot_id() + "' within " +
                                                  std::to_string(cfg.max_iterations) + " iterations");

    SolverDiagnostics diag;
    diag.iterations = result.iterations;
    if (cfg.idt_range_bounds)
        diag.range_bound_active = std::abs(result.best - lo) <= tol || std::abs(result.best - hi) <= tol;
    return detail::finish(Algorithm::IDT, pulses, cfg, w, circles.position(result.best), result.best,
                          circles.conditioning(), diag);
}

Position locate_known_discharge(const PulseSet& pulses, double discharge_time, const SolverConfig& cfg) {
    const auto w = detail::prepare(pulses, cfg, static_cast<std::size_t>(cfg.constraint.dimension()) + 1);
    const CircleIntersector circles(w, cfg);
    const Eigen::VectorXd p = circles.position(discharge_time - w.t0);
    Position out{p(0) + w.origin.x, p(1) + w.origin.y, w.dim == 3 ? p(2) + w.origin.z : w.origin.z};
    if (auto plane = cfg.constraint.plane_elevation()) out.z = *plane;
    return out;
}

}  // namespace gunloc

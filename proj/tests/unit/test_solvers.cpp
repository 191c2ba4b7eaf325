#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/check.hpp"
#include "../support/oracle.hpp"
#include "gunloc/solvers.hpp"

using namespace gunloc;

namespace {

constexpr Algorithm kAll[] = {Algorithm::Reddi, Algorithm::MLG, Algorithm::LeastSquares, Algorithm::IDT};

SolverConfig config(Algorithm a, double c, GeometricConstraint k = GeometricConstraint::two_d()) {
    SolverConfig cfg;
    cfg.algorithm = a;
    cfg.speed_of_sound = c;
    cfg.constraint = k;
    return cfg;
}

double position_tolerance(Algorithm a) { return a == Algorithm::IDT ? 1e-2 : 1e-3; }

void check_solution_invariants(const ShotSolution& s, const PulseSet& pulses, const SolverConfig& cfg) {
    CHECK(s.discharge_time < pulses.first_arrival());
    CHECK(s.rms_residual == doctest::Approx(rms(s.residuals)).epsilon(1e-12));
    const auto recomputed = compute_residuals(pulses, s.position, s.discharge_time, cfg.speed_of_sound, cfg.constraint);
    CHECK(recomputed == s.residuals);  // bit-for-bit
    if (const auto z = cfg.constraint.plane_elevation()) CHECK(s.position.z == *z);
}

// Local refinement by shrinking grid from a seed point.
oracle::Point refine(const oracle::Instance& in, oracle::Point p, double cell) {
    double best = oracle::rms_at(in, p);
    while (cell > 1e-9) {
        const oracle::Point centre = p;
        for (int i = -5; i <= 5; ++i)
            for (int j = -5; j <= 5; ++j) {
                const oracle::Point q{centre.x + i * cell / 2.5, centre.y + j * cell / 2.5, 0.0};
                const double r = oracle::rms_at(in, q);
                if (r < best) best = r, p = q;
            }
        cell /= 2.0;
    }
    return p;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("square array with a centred source: every solver returns the centre") {
    oracle::Instance in;
    in.sensors = {{0, 0, 0}, {1000, 0, 0}, {1000, 1000, 0}, {0, 1000, 0}};
    in.source = {500, 500, 0};
    in.t_star = 10.0;
    in.c = 343.0;
    in.times.assign(4, 10.0 + 707.107 / 343.0);
    const auto pulses = in.pulses();
    for (Algorithm a : kAll) {
        CAPTURE(to_string(a));
        const auto cfg = config(a, 343.0);
        const auto s = solve(pulses, cfg);
        CHECK(std::hypot(s.position.x - 500.0, s.position.y - 500.0) < 1e-3);
        // 707.107 is rounded; the recovered t* absorbs the rounding. IDT locates
        // t* only to its convergence tolerance.
        const double t_tol = a == Algorithm::IDT ? cfg.convergence_tol / cfg.speed_of_sound : 1e-9;
        CHECK(std::abs(s.discharge_time - (10.0 + (707.107 - std::hypot(500.0, 500.0)) / 343.0)) < t_tol);
        for (const auto& [id, r] : s.residuals) CHECK(std::abs(r) < t_tol);
        check_solution_invariants(s, pulses, cfg);
    }
}

TEST_CASE("noise-free random 8-sensor scenarios: all solvers recover truth") {
    std::mt19937_64 gen(101);
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = oracle::random_instance(gen, 8, false);
        const auto pulses = in.pulses();
        for (Algorithm a : kAll) {
            CAPTURE(trial);
            CAPTURE(to_string(a));
            const auto cfg = config(a, in.c);
            const auto s = solve(pulses, cfg);
            CHECK(std::hypot(s.position.x - in.source.x, s.position.y - in.source.y) < position_tolerance(a));
            CHECK(std::abs(s.discharge_time - in.t_star) < 1e-6);
            check_solution_invariants(s, pulses, cfg);
        }
    }
}

TEST_CASE("3D noise-free scenarios: all solvers recover truth") {
    std::mt19937_64 gen(202);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = oracle::random_instance(gen, 10, true, 1000.0, 150.0);
        const auto pulses = in.pulses();
        for (Algorithm a : kAll) {
            CAPTURE(trial);
            CAPTURE(to_string(a));
            const auto cfg = config(a, in.c, GeometricConstraint::three_d());
            const auto s = solve(pulses, cfg);
            CHECK(oracle::dist(oracle::Point{s.position.x, s.position.y, s.position.z}, in.source, false) <
                  position_tolerance(a));
            CHECK(std::abs(s.discharge_time - in.t_star) < 1e-5);
            check_solution_invariants(s, pulses, cfg);
        }
    }
}

TEST_CASE("Reddi: equilateral triangle plus centre, source outside near a vertex, matches grid oracle") {
    oracle::Instance in;
    const double side = 400.0, h = side * std::sqrt(3.0) / 2.0;
    in.sensors = {{0, 0, 0}, {side, 0, 0}, {side / 2, h, 0}, {side / 2, h / 3, 0}};
    in.source = {side / 2 + 60.0, h + 110.0, 0};
    in.t_star = 50.0;
    in.c = 340.0;
    oracle::fill_times(in);
    const auto expected = oracle::grid_minimum(in, -200.0, 800.0, 5.0);
    const auto s = solve_reddi(in.pulses(), config(Algorithm::Reddi, in.c));
    CHECK(std::hypot(s.position.x - expected.x, s.position.y - expected.y) < 1e-3);
    CHECK(std::hypot(s.position.x - in.source.x, s.position.y - in.source.y) < 1e-3);
}

TEST_CASE("Reddi: three sensors with two exact-fit sources raise AmbiguousSolution") {
    oracle::Instance in;
    in.sensors = {{0, 0, 0}, {100, 0, 0}, {0, 100, 0}};
    in.source = {-400, -300, 0};
    in.c = 343.0;
    in.t_star = 5.0;
    oracle::fill_times(in);

    // Oracle: every local minimum of the RMS surface on a 2.5 m grid is refined;
    // exact fits (RMS ~ 0) more than 1 m apart are distinct solutions.
    const double h = 2.5, lo = -1500.0;
    const int cells = 1200;
    std::vector<double> grid(static_cast<std::size_t>(cells * cells));
    auto at = [&](int i, int j) -> double& { return grid[static_cast<std::size_t>(i * cells + j)]; };
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j) at(i, j) = oracle::rms_at(in, {lo + i * h, lo + j * h, 0});
    std::vector<oracle::Point> exact;
    for (int i = 1; i + 1 < cells; ++i)
        for (int j = 1; j + 1 < cells; ++j) {
            bool minimum = true;
            for (int di = -1; di <= 1 && minimum; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && at(i + di, j + dj) < at(i, j)) minimum = false;
            if (!minimum) continue;
            const auto p = refine(in, {lo + i * h, lo + j * h, 0}, h);
            if (oracle::rms_at(in, p) > 1e-7) continue;
            bool fresh = true;
            for (const auto& q : exact) fresh = fresh && std::hypot(p.x - q.x, p.y - q.y) > 1.0;
            if (fresh) exact.push_back(p);
        }
    CHECK(exact.size() == 2);

    CHECK_ERROR_KIND(solve_reddi(in.pulses(), config(Algorithm::Reddi, in.c)), ErrorKind::AmbiguousSolution);
    // The dispatcher insists on d + 2 observations.
    CHECK_ERROR_KIND(solve(in.pulses(), config(Algorithm::Reddi, in.c)), ErrorKind::InsufficientSensors);
}

TEST_CASE("Reddi: permuting non-reference sensors changes nothing") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = oracle::random_instance(gen, 7, false);
        const auto base = solve_reddi(in.pulses(), config(Algorithm::Reddi, in.c));
        // Relabel sensors: canonical order is by time, so ids change but geometry does not.
        oracle::Instance shuffled = in;
        std::vector<std::size_t> idx(in.sensors.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), gen);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            shuffled.sensors[i] = in.sensors[idx[i]];
            shuffled.times[i] = in.times[idx[i]];
        }
        const auto s = solve_reddi(shuffled.pulses(), config(Algorithm::Reddi, in.c));
        CHECK(std::hypot(s.position.x - base.position.x, s.position.y - base.position.y) < 1e-9);
    }
}

TEST_CASE("MLG: permutation invariance, translation equivariance and diagnostics") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> noise(0.0, 2e-4);
    std::uniform_real_distribution<double> shift(-5000.0, 5000.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto in = oracle::random_instance(gen, 9, false);
        for (auto& t : in.times) t += noise(gen);
        const auto cfg = config(Algorithm::MLG, in.c);
        const auto base = solve_mlg(in.pulses(), cfg);
        REQUIRE(base.diagnostics.error_term.has_value());
        CHECK(base.diagnostics.rank == 4);

        // Row order: feed sensors in reverse; canonical ordering makes this a relabeling only.
        oracle::Instance rev = in;
        std::reverse(rev.sensors.begin(), rev.sensors.end());
        std::reverse(rev.times.begin(), rev.times.end());
        const auto r = solve_mlg(rev.pulses(), cfg);
        CHECK(std::hypot(r.position.x - base.position.x, r.position.y - base.position.y) < 1e-9);

        oracle::Instance moved = in;
        const double dx = shift(gen), dy = shift(gen);
        for (auto& s : moved.sensors) s.x += dx, s.y += dy;
        const auto m = solve_mlg(moved.pulses(), cfg);
        CHECK(m.position.x - dx == doctest::Approx(base.position.x).epsilon(1e-9));
        CHECK(m.position.y - dy == doctest::Approx(base.position.y).epsilon(1e-9));
    }
}

TEST_CASE("MLG: noise-free random 6-sensor scenario") {
    std::mt19937_64 gen(606);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = oracle::random_instance(gen, 6, false);
        const auto s = solve_mlg(in.pulses(), config(Algorithm::MLG, in.c));
        CHECK(std::hypot(s.position.x - in.source.x, s.position.y - in.source.y) < 1e-3);
    }
}

TEST_CASE("all solvers are equivariant under rotation about z and translation") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> noise(0.0, 1e-4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto in = oracle::random_instance(gen, 8, false);
        for (auto& t : in.times) t += noise(gen);
        const double th = 2.0 * oracle::kPi * u(gen), tx = 3000.0 * u(gen), ty = -2000.0 * u(gen);
        auto map = [&](const oracle::Point& p) {
            return oracle::Point{std::cos(th) * p.x - std::sin(th) * p.y + tx, std::sin(th) * p.x + std::cos(th) * p.y + ty,
                                 p.z};
        };
        oracle::Instance moved = in;
        for (auto& s : moved.sensors) s = map(s);
        for (Algorithm a : kAll) {
            CAPTURE(to_string(a));
            const auto cfg = config(a, in.c);
            const auto base = solve(in.pulses(), cfg);
            const auto m = solve(moved.pulses(), cfg);
            const auto expected = map({base.position.x, base.position.y, 0.0});
            // IDT stops on a t* tolerance, so its optimum is only located to that precision.
            const double tol = a == Algorithm::IDT ? 1e-3 : 1e-6;
            CHECK(std::hypot(m.position.x - expected.x, m.position.y - expected.y) < tol);
        }
    }
}

TEST_CASE("LeastSquares: agrees with MLG on exact data and depends on canonical order only") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = oracle::random_instance(gen, 7, false);
        const auto ls = solve_least_squares(in.pulses(), config(Algorithm::LeastSquares, in.c));
        const auto mlg = solve_mlg(in.pulses(), config(Algorithm::MLG, in.c));
        CHECK(std::hypot(ls.position.x - mlg.position.x, ls.position.y - mlg.position.y) < 1e-3);
    }
    // Whatever order observations are supplied in, the set is held in arrival order.
    std::vector<SensorObservation> obs{{"late", {0, 0, 0}, 3.0, {}, {}}, {"early", {1, 1, 0}, 1.0, {}, {}}};
    const PulseSet set("s", obs);
    CHECK(set[0].sensor_id == "early");
}

TEST_CASE("IDT: sparse 3D arrays whose residual has a second basin in t*") {
    // Several of these instances trap a descent started at t0 - 1 s in a
    // local minimum hundreds of meters away.
    std::mt19937_64 gen(20240501);
    for (int trial = 0; trial < 120; ++trial) {
        CAPTURE(trial);
        const auto in = oracle::random_instance(gen, 6 + trial % 3, true, 1000.0, 200.0);
        const auto s = solve(in.pulses(), config(Algorithm::IDT, in.c, GeometricConstraint::three_d()));
        CHECK(oracle::dist({s.position.x, s.position.y, s.position.z}, in.source, false) < 1e-2);
        CHECK(std::abs(s.discharge_time - in.t_star) < 1e-5);
    }
}

TEST_CASE("IDT: far initial offset, inactive range bounds and flagged active bounds") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = oracle::random_instance(gen, 8, false);
        auto cfg = config(Algorithm::IDT, in.c);
        cfg.idt_initial_offset = 5.0;
        const auto s = solve_idt(in.pulses(), cfg);
        CHECK(std::hypot(s.position.x - in.source.x, s.position.y - in.source.y) < 1e-2);
        CHECK(std::abs(s.discharge_time - in.t_star) < 1e-5);
    }

    oracle::Instance in;
    in.sensors = {{0, 0, 0}, {400, 0, 0}, {400, 400, 0}, {0, 400, 0}, {200, -50, 0}, {-80, 250, 0}};
    in.source = {90, 120, 0};  // 150 m from the sensor at the origin, which hears it first
    in.c = 343.0;
    in.t_star = 20.0;
    oracle::fill_times(in);
    auto cfg = config(Algorithm::IDT, in.c);
    const auto free = solve_idt(in.pulses(), cfg);
    cfg.idt_range_bounds = std::make_pair(0.0, 200.0);
    const auto bounded = solve_idt(in.pulses(), cfg);
    // Both runs stop on the same t* tolerance from different starting simplices.
    CHECK(std::hypot(bounded.position.x - free.position.x, bounded.position.y - free.position.y) < cfg.convergence_tol);
    CHECK(!bounded.diagnostics.range_bound_active);

    cfg.idt_range_bounds = std::make_pair(0.0, 100.0);
    const auto clamped = solve_idt(in.pulses(), cfg);
    CHECK(clamped.diagnostics.range_bound_active);
}

TEST_CASE("2.5D pins z to the plane and recovers the horizontal position") {
    std::mt19937_64 gen(25);
    for (int trial = 0; trial < 30; ++trial) {
        auto in = oracle::random_instance(gen, 8, true, 1000.0, 60.0);
        const double z_star = 1.5;
        in.source.z = z_star;
        oracle::fill_times(in);
        for (Algorithm a : kAll) {
            CAPTURE(to_string(a));
            const auto cfg = config(a, in.c, GeometricConstraint::two_point_five_d(z_star));
            const auto s = solve(in.pulses(), cfg);
            CHECK(std::abs(s.position.z - z_star) < 1e-6);
            CHECK(std::hypot(s.position.x - in.source.x, s.position.y - in.source.y) < position_tolerance(a));
            check_solution_invariants(s, in.pulses(), cfg);
        }
    }
}

TEST_CASE("solver errors") {
    std::mt19937_64 gen(1);
    const auto in = oracle::random_instance(gen, 3, false);
    for (Algorithm a : kAll) CHECK_ERROR_KIND(solve(in.pulses(), config(a, in.c)), ErrorKind::InsufficientSensors);

    oracle::Instance line;
    line.sensors = {{0, 0, 0}, {100, 0, 0}, {250, 0, 0}, {400, 0, 0}, {700, 0, 0}};
    line.source = {300, 200, 0};
    line.c = 343.0;
    oracle::fill_times(line);
    for (Algorithm a : kAll) {
        CAPTURE(to_string(a));
        CHECK_ERROR_KIND(solve(line.pulses(), config(a, line.c)), ErrorKind::DegenerateGeometry);
    }

    auto cfg = config(Algorithm::MLG, 400.0);
    CHECK_ERROR_KIND(solve(in.pulses(), cfg), ErrorKind::InvalidInput);
    cfg = config(Algorithm::MLG, 343.0);
    cfg.convergence_tol = 0.0;
    CHECK_ERROR_KIND(solve(in.pulses(), cfg), ErrorKind::InvalidInput);
}

TEST_CASE("known discharge time reduces to intersecting circles") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = oracle::random_instance(gen, 6, false);
        const auto p = locate_known_discharge(in.pulses(), in.t_star, config(Algorithm::IDT, in.c));
        CHECK(std::hypot(p.x - in.source.x, p.y - in.source.y) < 1e-6);
        CHECK(p.z == 0.0);
    }
}

}  // TEST_SUITE

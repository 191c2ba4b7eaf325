#include "gunloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "gunloc/atmosphere.hpp"
#include "gunloc/error.hpp"
#include "gunloc/rng.hpp"

namespace gunloc {

namespace {

// Stream indices split off the scenario seed.
constexpr std::uint64_t kPlacementStream = 0;
constexpr std::uint64_t kArrivalStream = 1;

std::string sensor_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03zu", i + 1);
    return buf;
}

double draw(Rng& rng, const UniformRange& r) { return r.hi > r.lo ? rng.uniform(r.lo, r.hi) : r.lo; }

AccuracyReport build_report(const std::vector<ShotSolution>& solutions, const Position& survey, std::size_t attempted) {
    AccuracyReport out;
    out.attempted = attempted;
    out.located = solutions.size();
    const std::size_t n = solutions.size();

    std::vector<double> errors;
    errors.reserve(n);
    double sum_sq = 0.0, sum_z = 0.0, cx = 0.0, cy = 0.0;
    for (const auto& s : solutions) {
        const double e = horizontal_distance(s.position, survey);
        errors.push_back(e);
        out.per_shot.push_back({s.shot_id, e});
        sum_sq += e * e;
        const double dz = s.position.z - survey.z;
        sum_z += dz * dz;
        cx += s.position.x;
        cy += s.position.y;
    }
    if (n > 0) {
        const double nd = static_cast<double>(n);
        cx /= nd;
        cy /= nd;
        out.epsilon_rms = std::sqrt(sum_sq / nd);
        out.epsilon_centroid = std::hypot(cx - survey.x, cy - survey.y);
        out.epsilon_z = std::sqrt(sum_z / nd);
        std::vector<double> sorted = errors;
        std::sort(sorted.begin(), sorted.end());
        out.cep50 = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    if (n >= 2) {
        // Population covariance of the 2D scatter; closed-form eigenvalues.
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (const auto& s : solutions) {
            const double dx = s.position.x - cx;
            const double dy = s.position.y - cy;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        const double nd = static_cast<double>(n);
        sxx /= nd;
        syy /= nd;
        sxy /= nd;
        const double mean = 0.5 * (sxx + syy);
        const double radius = std::hypot(0.5 * (sxx - syy), sxy);
        out.sigma1 = std::sqrt(std::max(mean + radius, 0.0));
        out.sigma2 = std::sqrt(std::max(mean - radius, 0.0));
    }
    for (int m = 1; m <= 25; ++m) out.cdf.push_back({static_cast<double>(m), out.fraction_within(m)});
    return out;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (fixed_sensors.empty()) {
        if (!(width > 0) || !(height > 0)) throw Error(ErrorKind::InvalidInput, "scenario area must be positive");
        if (!sensor_count && !sensor_density)
            throw Error(ErrorKind::InvalidInput, "scenario needs a sensor count or a sensor density");
        if (sensor_count && *sensor_count < 1) throw Error(ErrorKind::InvalidInput, "sensor count must be positive");
        if (!sensor_count && !(*sensor_density >= 2.0 && *sensor_density <= 12.0))
            throw Error(ErrorKind::InvalidInput, "sensor density outside the 2-12 sensors/km^2 deployment envelope");
    }
    if (!(sensor_z.hi >= sensor_z.lo)) throw Error(ErrorKind::InvalidInput, "sensor z range is inverted");
    if (!is_finite(source) || !std::isfinite(source_time)) throw Error(ErrorKind::InvalidInput, "source must be finite");
    Environment{temperature_c, wind_x, wind_y}.validate();
    if (!(timing_noise_sigma >= 0)) throw Error(ErrorKind::InvalidInput, "timing noise must be non-negative");
    if (!(nlos.probability >= 0 && nlos.probability <= 1) || !(nlos.delay.lo >= 0) || !(nlos.delay.hi >= nlos.delay.lo))
        throw Error(ErrorKind::InvalidInput, "NLOS delays must be positive with probability in [0, 1]");
    if (echoes.min_count < 0 || echoes.max_count < echoes.min_count || !(echoes.delay.lo >= 0) ||
        !(echoes.delay.hi >= echoes.delay.lo))
        throw Error(ErrorKind::InvalidInput, "invalid echo specification");
    if (max_range && !(*max_range > 0)) throw Error(ErrorKind::InvalidInput, "max range must be positive");
}

int ScenarioConfig::resolved_sensor_count() const {
    if (!fixed_sensors.empty()) return static_cast<int>(fixed_sensors.size());
    if (sensor_count) return *sensor_count;
    return static_cast<int>(std::lround(*sensor_density * width * height / 1e6));
}

std::vector<SensorSite> place_sensors(const ScenarioConfig& cfg) {
    cfg.validate();
    if (!cfg.fixed_sensors.empty()) return cfg.fixed_sensors;
    Rng rng = Rng(cfg.seed).split(kPlacementStream);
    std::vector<SensorSite> out;
    const int n = cfg.resolved_sensor_count();
    for (int i = 0; i < n; ++i) {
        SensorSite s;
        s.id = sensor_name(static_cast<std::size_t>(i));
        s.position.x = rng.uniform(0.0, cfg.width);
        s.position.y = rng.uniform(0.0, cfg.height);
        s.position.z = draw(rng, cfg.sensor_z);
        out.push_back(std::move(s));
    }
    return out;
}

double advected_travel_time(const Position& source, const Position& sensor, double c, double wind_x, double wind_y) {
    const double dx = sensor.x - source.x;
    const double dy = sensor.y - source.y;
    const double dz = sensor.z - source.z;
    const double d2 = dx * dx + dy * dy + dz * dz;
    const double dv = dx * wind_x + dy * wind_y;
    const double a = c * c - (wind_x * wind_x + wind_y * wind_y);
    return (-dv + std::sqrt(dv * dv + a * d2)) / a;
}

Scenario generate_scenario(const ScenarioConfig& cfg, const std::string& shot_id) {
    cfg.validate();
    Scenario sc;
    sc.sensors = place_sensors(cfg);
    sc.truth = cfg.source;
    sc.truth_time = cfg.source_time;
    sc.speed_of_sound = speed_of_sound(cfg.temperature_c);

    Rng rng = Rng(cfg.seed).split(kArrivalStream);
    std::vector<SensorObservation> direct;
    std::vector<CandidatePulse> pool;
    for (const auto& site : sc.sensors) {
        // Every draw happens for every sensor so one sensor's range cut does not
        // reshuffle the others' noise.
        const double noise = rng.normal(0.0, 1.0) * cfg.timing_noise_sigma;
        const bool nlos = rng.bernoulli(cfg.nlos.probability);
        const double nlos_delay = draw(rng, cfg.nlos.delay);
        const double attenuation = draw(rng, cfg.excess_attenuation_db);
        if (cfg.max_range && horizontal_distance(site.position, cfg.source) > *cfg.max_range) continue;

        const double travel = advected_travel_time(cfg.source, site.position, sc.speed_of_sound, cfg.wind_x, cfg.wind_y);
        const double extra = nlos ? nlos_delay : 0.0;
        const double arrival = cfg.source_time + travel + noise + extra;
        const double range = std::max(distance(cfg.source, site.position), 1.0);
        const double level =
            std::min(cfg.source_level_dbspl - 20.0 * std::log10(range) - attenuation, kMaxAmplitudeDbSpl);

        direct.push_back({site.id, site.position, arrival, level, std::nullopt});
        sc.nlos_delay.push_back(extra);
        pool.push_back({site.id, site.position, arrival, 1.0, level, std::nullopt});
        sc.pool_is_direct.push_back(true);
    }
    // Echoes land on reporting sensors chosen uniformly, each a late copy of that
    // sensor's direct arrival.
    const int span = cfg.echoes.max_count - cfg.echoes.min_count;
    const int echo_count =
        cfg.echoes.min_count + (span > 0 ? static_cast<int>(rng.index(static_cast<std::uint64_t>(span) + 1)) : 0);
    const std::size_t reporting = direct.size();
    for (int e = 0; e < echo_count && reporting > 0; ++e) {
        const auto& d = direct[static_cast<std::size_t>(rng.index(reporting))];
        const double delay = draw(rng, cfg.echoes.delay);
        pool.push_back({d.sensor_id, d.position, d.arrival_time + delay, 0.5,
                        *d.amplitude_dbspl - cfg.echoes.level_drop_db, std::nullopt});
        sc.pool_is_direct.push_back(false);
    }
    // nlos_delay follows canonical (arrival) order of the direct set.
    std::vector<std::size_t> order(direct.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return direct[a].arrival_time < direct[b].arrival_time; });
    std::vector<double> delays;
    for (std::size_t i : order) delays.push_back(sc.nlos_delay[i]);
    sc.nlos_delay = std::move(delays);

    sc.direct = PulseSet(shot_id, std::move(direct));
    sc.pool = CandidatePool::from_pulses(std::move(pool));
    return sc;
}

double AccuracyReport::detection_rate() const {
    return attempted ? static_cast<double>(located) / static_cast<double>(attempted) : 0.0;
}

double AccuracyReport::fraction_within(double meters) const {
    if (attempted == 0) return 0.0;
    const auto hits = std::count_if(per_shot.begin(), per_shot.end(), [&](const ShotError& e) { return e.error <= meters; });
    return static_cast<double>(hits) / static_cast<double>(attempted);
}

AccuracyReport accuracy_report(const std::vector<ShotSolution>& solutions, const Position& survey,
                               std::optional<std::size_t> attempted) {
    if (solutions.empty()) throw Error(ErrorKind::InsufficientSolutions, "accuracy report needs at least one solution");
    const std::size_t total = attempted.value_or(solutions.size());
    if (total < solutions.size())
        throw Error(ErrorKind::InvalidInput, "attempted count is smaller than the number of solutions");
    return build_report(solutions, survey, total);
}

AccuracyReport reduced_density_trial(const std::vector<PulseSet>& shots, const Position& survey,
                                     const ReducedDensityOptions& options, const SolverConfig& cfg) {
    cfg.validate();
    if (options.k < cfg.constraint.min_sensors())
        throw Error(ErrorKind::InsufficientSensors, "reduced-density arrays need at least " +
                                                        std::to_string(cfg.constraint.min_sensors()) + " sensors");
    if (options.trials < 1) throw Error(ErrorKind::InvalidInput, "at least one trial is required");

    const Rng root(options.seed);
    std::vector<ShotSolution> located;
    std::size_t attempted = 0;
    for (std::size_t t = 0; t < options.trials; ++t) {
        const Rng trial_rng = root.split(t);
        for (std::size_t s = 0; s < shots.size(); ++s) {
            ++attempted;
            const auto& shot = shots[s];
            Rng rng = trial_rng.split(s);
            const std::size_t m = std::min(options.k, shot.size());
            if (m < cfg.constraint.min_sensors()) continue;

            std::vector<std::size_t> idx(shot.size());
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t j = 0; j < m; ++j)
                std::swap(idx[j], idx[j + static_cast<std::size_t>(rng.index(idx.size() - j))]);
            std::vector<SensorObservation> obs;
            double strongest = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
                obs.push_back(shot[idx[j]]);
                if (shot[idx[j]].amplitude_dbspl) strongest = std::max(strongest, *shot[idx[j]].amplitude_dbspl);
            }
            if (!(strongest >= options.gate_dbspl)) continue;
            try {
                located.push_back(solve(PulseSet(shot.shot_id(), std::move(obs)), cfg));
            } catch (const Error&) {
            }
        }
    }
    return build_report(located, survey, attempted);
}

}  // namespace gunloc

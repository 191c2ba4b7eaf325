#include "gunloc/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "gunloc/error.hpp"
#include "gunloc/rng.hpp"

namespace gunloc {

SensorObservation CandidatePulse::observation() const {
    return SensorObservation{sensor_id, position, arrival_time, amplitude_dbspl, snr_db};
}

CandidatePool CandidatePool::from_pulses(std::vector<CandidatePulse> pulses) {
    CandidatePool pool;
    pool.pulses = std::move(pulses);
    if (!pool.pulses.empty()) {
        const auto [lo, hi] = std::minmax_element(pool.pulses.begin(), pool.pulses.end(),
                                                  [](const auto& a, const auto& b) { return a.arrival_time < b.arrival_time; });
        pool.t_min = lo->arrival_time;
        pool.t_max = hi->arrival_time;
    }
    return pool;
}

void CandidatePool::validate(std::size_t max_per_sensor) const {
    if (!(t_max >= t_min) || t_max - t_min > kMaxPoolWindow)
        throw Error(ErrorKind::InvalidInput, "candidate pool window must be ordered and at most 10 s long");
    std::map<std::string, std::size_t> per_sensor;
    for (const auto& p : pulses) {
        if (!std::isfinite(p.arrival_time) || p.arrival_time < t_min || p.arrival_time > t_max)
            throw Error(ErrorKind::InvalidInput, "pulse on sensor '" + p.sensor_id + "' lies outside the pool window");
        if (!is_finite(p.position))
            throw Error(ErrorKind::InvalidInput, "non-finite position for sensor '" + p.sensor_id + "'");
        if (++per_sensor[p.sensor_id] > max_per_sensor)
            throw Error(ErrorKind::InvalidInput, "sensor '" + p.sensor_id + "' exceeds the per-sensor pulse limit");
    }
}

std::size_t ConsistencyParams::effective_min_sensors(const SolverConfig& cfg) const {
    return std::max(min_sensors.value_or(cfg.constraint.min_sensors()), cfg.constraint.min_sensors());
}

double predict_arrival(const Position& source, double discharge_time, const Position& sensor,
                       double speed_of_sound, const GeometricConstraint& constraint) {
    if (!(speed_of_sound > 0)) throw Error(ErrorKind::DomainError, "speed of sound must be positive");
    return predicted_arrival(source, discharge_time, sensor, speed_of_sound, constraint);
}

std::vector<std::size_t> consistent_indices(const CandidatePool& pool, const ShotSolution& hypothesis,
                                            const ConsistencyParams& params, double speed_of_sound) {
    std::map<std::string, std::pair<std::size_t, double>> best;  // sensor -> (index, |residual|)
    for (std::size_t i = 0; i < pool.pulses.size(); ++i) {
        const auto& p = pool.pulses[i];
        const double r = std::abs(p.arrival_time - predict_arrival(hypothesis.position, hypothesis.discharge_time,
                                                                   p.position, speed_of_sound, hypothesis.constraint));
        if (!(r <= params.residual_tolerance)) continue;
        auto [it, inserted] = best.try_emplace(p.sensor_id, i, r);
        if (!inserted && r < it->second.second) it->second = {i, r};
    }
    std::vector<std::size_t> out;
    out.reserve(best.size());
    for (const auto& [id, entry] : best) out.push_back(entry.first);
    std::sort(out.begin(), out.end());
    return out;
}

CandidatePool consistency_filter(const CandidatePool& pool, const ShotSolution& hypothesis,
                                 const ConsistencyParams& params, double speed_of_sound) {
    CandidatePool out;
    out.t_min = pool.t_min;
    out.t_max = pool.t_max;
    for (std::size_t i : consistent_indices(pool, hypothesis, params, speed_of_sound)) out.pulses.push_back(pool.pulses[i]);
    return out;
}

namespace {

using Members = std::vector<std::size_t>;

struct Scored {
    Members members;
    ShotSolution solution;
    bool valid = false;
};

/// Larger sets first, then smaller RMS residual.
bool better(const Scored& a, const Scored& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.solution.rms_residual < b.solution.rms_residual;
}

class Selector {
public:
    Selector(const CandidatePool& pool, const ConsistencyParams& params, const SolverConfig& cfg, std::string shot_id)
        : pool_(pool), params_(params), cfg_(cfg), shot_id_(std::move(shot_id)),
          min_(params.effective_min_sensors(cfg)) {
        for (std::size_t i = 0; i < pool.pulses.size(); ++i) by_sensor_[pool.pulses[i].sensor_id].push_back(i);
        for (auto& [id, idx] : by_sensor_) sensors_.push_back(&idx);
    }

    Selection run() {
        if (sensors_.size() < min_) fail();
        Scored seed;
        if (pool_.pulses.size() <= params_.max_exhaustive) seed = exhaustive();
        else seed = consensus();
        if (!seed.valid) fail();
        Scored refined = refine(std::move(seed.members));
        if (!refined.valid) fail();
        return Selection{make_set(refined.members), std::move(refined.solution), std::move(refined.members)};
    }

private:
    [[noreturn]] void fail() const {
        throw Error(ErrorKind::NoConsistentSet, "no set of " + std::to_string(min_) +
                                                    " or more mutually consistent pulses in the pool");
    }

    PulseSet make_set(const Members& members) const {
        std::vector<SensorObservation> obs;
        obs.reserve(members.size());
        for (std::size_t i : members) obs.push_back(pool_.pulses[i].observation());
        return PulseSet(shot_id_, std::move(obs));
    }

    std::optional<ShotSolution> try_solve(const Members& members) const {
        try {
            return solve(make_set(members), cfg_);
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    bool within_tolerance(const ShotSolution& s) const {
        return std::all_of(s.residuals.begin(), s.residuals.end(),
                           [&](const auto& kv) { return std::abs(kv.second) <= params_.residual_tolerance; });
    }

    Scored evaluate_closed(Members members) const {
        Scored out;
        auto sol = try_solve(members);
        if (!sol || !within_tolerance(*sol)) return out;
        std::sort(members.begin(), members.end());
        out.members = std::move(members);
        out.solution = std::move(*sol);
        out.valid = true;
        return out;
    }

    // Every per-sensor assignment (one pulse or none), pruned by cardinality.
    Scored exhaustive() const {
        Scored best;
        Members current;
        std::function<void(std::size_t)> visit = [&](std::size_t k) {
            const std::size_t remaining = sensors_.size() - k;
            const std::size_t reachable = current.size() + remaining;
            if (reachable < min_) return;
            if (best.valid && reachable < best.members.size()) return;
            if (k == sensors_.size()) {
                Scored s = evaluate_closed(current);
                if (better(s, best)) best = std::move(s);
                return;
            }
            for (std::size_t idx : *sensors_[k]) {
                current.push_back(idx);
                visit(k + 1);
                current.pop_back();
            }
            visit(k + 1);
        };
        visit(0);
        return best;
    }

    // Random minimal subsets on distinct sensors, scored by the size and RMS of
    // the set each hypothesis attracts. Trial t uses its own split stream so the
    // outcome does not depend on evaluation order.
    Scored consensus() const {
        const Rng root(params_.seed);
        Scored best;
        std::vector<std::size_t> order(sensors_.size());
        for (std::size_t t = 0; t < params_.ransac_trials; ++t) {
            Rng rng = root.split(t);
            std::iota(order.begin(), order.end(), 0);
            Members sample;
            for (std::size_t j = 0; j < min_; ++j) {
                const std::size_t pick = j + static_cast<std::size_t>(rng.index(order.size() - j));
                std::swap(order[j], order[pick]);
                const auto& options = *sensors_[order[j]];
                sample.push_back(options[static_cast<std::size_t>(rng.index(options.size()))]);
            }
            auto hypothesis = try_solve(sample);
            if (!hypothesis) continue;
            Members attracted = consistent_indices(pool_, *hypothesis, params_, cfg_.speed_of_sound);
            if (attracted.size() < min_) continue;
            Scored s;
            s.members = std::move(attracted);
            double sum = 0.0;
            for (std::size_t i : s.members) {
                const auto& p = pool_.pulses[i];
                const double r = p.arrival_time - predict_arrival(hypothesis->position, hypothesis->discharge_time,
                                                                  p.position, cfg_.speed_of_sound, hypothesis->constraint);
                sum += r * r;
            }
            s.solution = std::move(*hypothesis);
            s.solution.rms_residual = std::sqrt(sum / static_cast<double>(s.members.size()));
            s.valid = true;
            if (better(s, best)) best = std::move(s);
        }
        return best;
    }

    // solve -> filter -> re-solve until membership stops changing.
    Scored refine(Members members) const {
        std::vector<Scored> rounds;
        for (int round = 0; round < params_.max_refine_rounds && members.size() >= min_; ++round) {
            auto sol = try_solve(members);
            if (!sol) break;
            Members next = consistent_indices(pool_, *sol, params_, cfg_.speed_of_sound);
            Scored s{members, *sol, within_tolerance(*sol)};
            if (next == members) return s;
            rounds.push_back(std::move(s));
            members = std::move(next);
        }
        // No fixed point: keep the largest self-consistent round.
        Scored best;
        for (auto& s : rounds)
            if (better(s, best)) best = s;
        if (best.valid || rounds.empty()) return best;
        return trim(rounds.back().members);
    }

    // Leave-one-out trimming: drop the pulse whose removal fits the rest best.
    // A single delayed pulse biases the linear discharge-time estimate and can
    // hide behind a small residual of its own, so the largest residual is not a
    // reliable culprit.
    Scored trim(Members members) const {
        while (members.size() > min_) {
            Scored best;
            for (std::size_t j = 0; j < members.size(); ++j) {
                Members rest = members;
                rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
                auto sol = try_solve(rest);
                if (!sol) continue;
                Scored s{std::move(rest), std::move(*sol), true};
                if (!best.valid || s.solution.rms_residual < best.solution.rms_residual) best = std::move(s);
            }
            if (!best.valid) return {};
            if (within_tolerance(best.solution)) return best;
            members = std::move(best.members);
        }
        return {};
    }

    const CandidatePool& pool_;
    const ConsistencyParams& params_;
    const SolverConfig& cfg_;
    std::string shot_id_;
    std::size_t min_;
    std::map<std::string, std::vector<std::size_t>> by_sensor_;
    std::vector<const std::vector<std::size_t>*> sensors_;
};

}  // namespace

Selection select_pulse_set(const CandidatePool& pool, const ConsistencyParams& params, const SolverConfig& cfg,
                           const std::string& shot_id) {
    if (pool.empty()) throw Error(ErrorKind::InvalidInput, "candidate pool is empty");
    if (!(params.residual_tolerance > 0)) throw Error(ErrorKind::InvalidInput, "residual tolerance must be positive");
    pool.validate(params.max_pulses_per_sensor);
    cfg.validate();
    return Selector(pool, params, cfg, shot_id).run();
}

std::vector<Selection> extract_shots(const CandidatePool& pool, const ConsistencyParams& params,
                                     const SolverConfig& cfg, const std::string& shot_prefix) {
    std::vector<std::size_t> remaining(pool.pulses.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<Selection> out;
    while (!remaining.empty()) {
        CandidatePool sub;
        sub.t_min = pool.t_min;
        sub.t_max = pool.t_max;
        for (std::size_t i : remaining) sub.pulses.push_back(pool.pulses[i]);
        Selection sel;
        try {
            sel = select_pulse_set(sub, params, cfg, shot_prefix + "-" + std::to_string(out.size() + 1));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NoConsistentSet) break;
            throw;
        }
        std::vector<std::size_t> taken;
        for (std::size_t j : sel.members) taken.push_back(remaining[j]);
        sel.members = taken;
        std::vector<std::size_t> rest;
        std::set_difference(remaining.begin(), remaining.end(), taken.begin(), taken.end(), std::back_inserter(rest));
        remaining = std::move(rest);
        out.push_back(std::move(sel));
    }
    return out;
}

}  // namespace gunloc

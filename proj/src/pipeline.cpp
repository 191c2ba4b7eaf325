#include "gunloc/pipeline.hpp"

#include <algorithm>

#include "gunloc/error.hpp"

namespace gunloc {

ShotSolution locate(const PulseSet& pulses, SolverConfig cfg, const Environment& env) {
    env.validate();
    cfg.speed_of_sound = env.speed_of_sound();
    if (env.wind_x == 0.0 && env.wind_y == 0.0) return solve(pulses, cfg);
    const ShotSolution first = solve(pulses, cfg);
    // The uncorrected discharge time can land after the first arrival on bad
    // data; wind_correct needs t* <= t0, so fall back to its default lead.
    std::optional<double> t_star;
    if (first.discharge_time <= pulses.first_arrival()) t_star = first.discharge_time;
    return solve(wind_correct(pulses, env, t_star), cfg);
}

std::vector<CandidatePool> cluster_by_time(std::vector<CandidatePulse> pulses, double gap) {
    if (!(gap > 0)) throw Error(ErrorKind::InvalidInput, "cluster gap must be positive");
    std::stable_sort(pulses.begin(), pulses.end(),
                     [](const CandidatePulse& a, const CandidatePulse& b) { return a.arrival_time < b.arrival_time; });
    std::vector<CandidatePool> out;
    std::vector<CandidatePulse> current;
    for (auto& p : pulses) {
        if (!current.empty() && (p.arrival_time - current.back().arrival_time > gap ||
                                 p.arrival_time - current.front().arrival_time > kMaxPoolWindow)) {
            out.push_back(CandidatePool::from_pulses(std::move(current)));
            current.clear();
        }
        current.push_back(std::move(p));
    }
    if (!current.empty()) out.push_back(CandidatePool::from_pulses(std::move(current)));
    return out;
}

}  // namespace gunloc

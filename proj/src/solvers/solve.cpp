#include "gunloc/error.hpp"
#include "gunloc/solvers.hpp"

namespace gunloc {

ShotSolution solve(const PulseSet& pulses, const SolverConfig& cfg) {
    cfg.validate();
    const std::size_t need = cfg.constraint.min_sensors();
    if (pulses.size() < need)
        throw Error(ErrorKind::InsufficientSensors,
                    "shot '" + pulses.shot_id() + "' has " + std::to_string(pulses.size()) +
                        " observations; " + std::to_string(need) + " required for a unique " +
                        to_string(cfg.constraint) + " solution");
    switch (cfg.algorithm) {
        case Algorithm::Reddi: return solve_reddi(pulses, cfg);
        case Algorithm::MLG: return solve_mlg(pulses, cfg);
        case Algorithm::LeastSquares: return solve_least_squares(pulses, cfg);
        case Algorithm::IDT: return solve_idt(pulses, cfg);
    }
    throw Error(ErrorKind::InvalidInput, "unknown algorithm");
}

}  // namespace gunloc

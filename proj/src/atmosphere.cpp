#include "gunloc/atmosphere.hpp"

#include <cmath>
#include <string>

#include "gunloc/error.hpp"

namespace gunloc {

void Environment::validate() const {
    if (!(temperature_c > -273.15))
        throw Error(ErrorKind::DomainError, "temperature must be above absolute zero");
    if (!std::isfinite(wind_x) || !std::isfinite(wind_y))
        throw Error(ErrorKind::InvalidInput, "wind components must be finite");
    if (std::hypot(wind_x, wind_y) >= kMaxWindSpeed)
        throw Error(ErrorKind::InvalidInput, "wind speed outside the 100 m/s sanity bound");
}

double Environment::speed_of_sound() const { return gunloc::speed_of_sound(temperature_c); }

double speed_of_sound(double temperature_c) {
    if (!(temperature_c > -273.15) || !std::isfinite(temperature_c))
        throw Error(ErrorKind::DomainError,
                    "speed of sound undefined at " + std::to_string(temperature_c) + " C");
    return 20.03 * std::sqrt(temperature_c + 273.15);
}

PulseSet wind_correct(const PulseSet& pulses, const Environment& env,
                      std::optional<double> discharge_estimate) {
    env.validate();
    if (pulses.empty()) return pulses;
    const double t0 = pulses.first_arrival();
    const double t_star = discharge_estimate.value_or(t0 - kDefaultDischargeLead);
    if (!std::isfinite(t_star) || t_star > t0)
        throw Error(ErrorKind::InvalidInput, "discharge estimate is later than the first arrival");
    std::vector<SensorObservation> out(pulses.begin(), pulses.end());
    for (auto& o : out) {
        const double dt = o.arrival_time - t_star;
        o.position.x -= dt * env.wind_x;
        o.position.y -= dt * env.wind_y;
    }
    return PulseSet(pulses.shot_id(), std::move(out));
}

}  // namespace gunloc

#pragma once

#include <optional>

#include "gunloc/geo.hpp"

namespace gunloc {

/// Homogeneous atmosphere: air temperature and a horizontal wind vector.
struct Environment {
    double temperature_c = 20.0;
    double wind_x = 0.0;  // m/s toward +x (east)
    double wind_y = 0.0;  // m/s toward +y (north)

    /// Throws Error(DomainError) at or below absolute zero, Error(InvalidInput)
    /// for non-finite wind or |wind| >= 100 m/s.
    void validate() const;
    bool calm() const noexcept { return wind_x == 0.0 && wind_y == 0.0; }
    double speed_of_sound() const;
};

inline constexpr double kMaxWindSpeed = 100.0;

/// Default guess for (first arrival - discharge time) before a solve, in seconds.
inline constexpr double kDefaultDischargeLead = 1.0;

/// Dry-air speed of sound c = 20.03 sqrt(T + 273.15) m/s, T in Celsius.
double speed_of_sound(double temperature_c);

/// Shifts each sensor to the position that would have heard the shot in still air:
/// p_i' = p_i - (t_i - t*) v, horizontal components only. Without a discharge
/// estimate, t* = first arrival - 1.0 s.
PulseSet wind_correct(const PulseSet& pulses, const Environment& env,
                      std::optional<double> discharge_estimate = std::nullopt);

}  // namespace gunloc

#include "gunloc/geo.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <string>

#include "gunloc/error.hpp"

namespace gunloc {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::InsufficientSensors: return "InsufficientSensors";
        case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::AmbiguousSolution: return "AmbiguousSolution";
        case ErrorKind::NoConsistentSet: return "NoConsistentSet";
        case ErrorKind::InsufficientSolutions: return "InsufficientSolutions";
    }
    return "Unknown";
}

Position operator+(const Position& a, const Position& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Position operator-(const Position& a, const Position& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

double horizontal_distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double distance(const Position& a, const Position& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool is_finite(const Position& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

PulseSet::PulseSet(std::string shot_id, std::vector<SensorObservation> observations)
    : shot_id_(std::move(shot_id)), observations_(std::move(observations)) {
    std::set<std::string_view> seen;
    for (const auto& o : observations_) {
        if (!seen.insert(o.sensor_id).second)
            throw Error(ErrorKind::InvalidInput,
                        "duplicate sensor id '" + o.sensor_id + "' in shot '" + shot_id_ + "'");
        if (!is_finite(o.position) || !std::isfinite(o.arrival_time))
            throw Error(ErrorKind::InvalidInput, "non-finite observation for sensor '" + o.sensor_id + "'");
        if (o.amplitude_dbspl && !(*o.amplitude_dbspl <= kMaxAmplitudeDbSpl + 1e-9))
            throw Error(ErrorKind::InvalidInput,
                        "amplitude above full scale for sensor '" + o.sensor_id + "'");
    }
    std::stable_sort(observations_.begin(), observations_.end(),
                     [](const SensorObservation& a, const SensorObservation& b) {
                         return a.arrival_time < b.arrival_time;
                     });
}

double PulseSet::first_arrival() const {
    if (observations_.empty()) throw Error(ErrorKind::InsufficientSensors, "empty pulse set");
    return observations_.front().arrival_time;
}

const SensorObservation* PulseSet::find(std::string_view sensor_id) const {
    for (const auto& o : observations_)
        if (o.sensor_id == sensor_id) return &o;
    return nullptr;
}

std::optional<double> GeometricConstraint::plane_elevation() const {
    switch (kind) {
        case Kind::TwoD: return 0.0;
        case Kind::TwoPointFiveD: return z_star;
        case Kind::ThreeD: return std::nullopt;
    }
    return std::nullopt;
}

std::string to_string(const GeometricConstraint& c) {
    switch (c.kind) {
        case GeometricConstraint::Kind::TwoD: return "2D";
        case GeometricConstraint::Kind::TwoPointFiveD: {
            char buf[32];
            const auto end = std::to_chars(buf, buf + sizeof buf, c.z_star).ptr;  // shortest round-trip form
            return "2.5D:" + std::string(buf, end);
        }
        case GeometricConstraint::Kind::ThreeD: return "3D";
    }
    return "?";
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

}  // namespace

GeometricConstraint parse_constraint(std::string_view text, double default_z_star) {
    const std::string t = lower(text);
    if (t == "2d") return GeometricConstraint::two_d();
    if (t == "3d") return GeometricConstraint::three_d();
    if (t.rfind("2.5d", 0) == 0) {
        if (t.size() == 4) return GeometricConstraint::two_point_five_d(default_z_star);
        if (t[4] == ':') {
            try {
                std::size_t used = 0;
                const double z = std::stod(t.substr(5), &used);
                if (used == t.size() - 5 && std::isfinite(z))
                    return GeometricConstraint::two_point_five_d(z);
            } catch (const std::exception&) {
            }
        }
    }
    throw Error(ErrorKind::InvalidInput, "unknown constraint '" + std::string(text) + "'");
}

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Reddi: return "Reddi";
        case Algorithm::MLG: return "MLG";
        case Algorithm::LeastSquares: return "LeastSquares";
        case Algorithm::IDT: return "IDT";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view text) {
    const std::string t = lower(text);
    if (t == "reddi") return Algorithm::Reddi;
    if (t == "mlg") return Algorithm::MLG;
    if (t == "leastsquares" || t == "least_squares" || t == "ls") return Algorithm::LeastSquares;
    if (t == "idt") return Algorithm::IDT;
    throw Error(ErrorKind::InvalidInput, "unknown algorithm '" + std::string(text) + "'");
}

double constrained_distance(const Position& source, const Position& sensor,
                            const GeometricConstraint& constraint) {
    return constraint.kind == GeometricConstraint::Kind::TwoD ? horizontal_distance(source, sensor)
                                                              : distance(source, sensor);
}

double predicted_arrival(const Position& source, double discharge_time, const Position& sensor,
                         double speed_of_sound, const GeometricConstraint& constraint) {
    return discharge_time + constrained_distance(source, sensor, constraint) / speed_of_sound;
}

std::map<std::string, double> compute_residuals(const PulseSet& pulses, const Position& source,
                                                double discharge_time, double speed_of_sound,
                                                const GeometricConstraint& constraint) {
    std::map<std::string, double> out;
    for (const auto& o : pulses)
        out[o.sensor_id] = o.arrival_time - predicted_arrival(source, discharge_time, o.position,
                                                              speed_of_sound, constraint);
    return out;
}

double rms(const std::map<std::string, double>& residuals) {
    if (residuals.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [id, r] : residuals) sum += r * r;
    return std::sqrt(sum / static_cast<double>(residuals.size()));
}

PulseSet project_to_plane(const PulseSet& pulses) {
    std::vector<SensorObservation> out(pulses.begin(), pulses.end());
    for (auto& o : out) o.position.z = 0.0;
    return PulseSet(pulses.shot_id(), std::move(out));
}

PulseSet reflect_through_plane(const PulseSet& pulses, double z_star) {
    if (pulses.empty()) throw Error(ErrorKind::InsufficientSensors, "cannot reflect an empty pulse set");
    if (!std::isfinite(z_star)) throw Error(ErrorKind::InvalidInput, "plane elevation must be finite");
    std::vector<SensorObservation> out;
    out.reserve(2 * pulses.size());
    for (const auto& o : pulses) {
        out.push_back(o);
        SensorObservation mirror = o;
        mirror.sensor_id += kMirrorSuffix;
        mirror.position.z = 2.0 * z_star - o.position.z;
        out.push_back(std::move(mirror));
    }
    return PulseSet(pulses.shot_id(), std::move(out));
}

}  // namespace gunloc

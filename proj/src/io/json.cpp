#include <cmath>
#include <set>

#include "gunloc/error.hpp"
#include "gunloc/io.hpp"

namespace gunloc::io {

namespace {

// Six significant digits, for quantities whose low bits carry no meaning.
double significant(double value) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
    return fixed(value, 5 - exponent);
}

Json optional_number(const std::optional<double>& v, int decimals) {
    return v ? Json(fixed(*v, decimals)) : Json(nullptr);
}

UniformRange range_from(const Json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorKind::InvalidInput, std::string("scenario field ") + key + " must be [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Position position_from(const Json& j, const char* key) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidInput, std::string("scenario field ") + key + " must be an object");
    return {j.value("x_m", 0.0), j.value("y_m", 0.0), j.value("z_m", 0.0)};
}

void only_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw Error(ErrorKind::InvalidInput, where + ": unknown field '" + key + "'");
}

}  // namespace

double fixed(double value, int decimals) {
    if (!std::isfinite(value)) return value;
    const double scale = std::pow(10.0, decimals);
    const double r = std::round(value * scale) / scale;
    return r == 0.0 ? 0.0 : r;  // no negative zero in output
}

Json to_json(const Position& p) {
    Json j;
    j["x_m"] = fixed(p.x, 6);
    j["y_m"] = fixed(p.y, 6);
    j["z_m"] = fixed(p.z, 6);
    return j;
}

Json to_json(const ShotSolution& s) {
    Json j;
    j["shot_id"] = s.shot_id;
    j["solver"] = std::string(to_string(s.solver));
    j["constraint"] = to_string(s.constraint);
    j["position"] = to_json(s.position);
    j["discharge_time_s"] = fixed(s.discharge_time, 6);
    j["rms_residual_s"] = fixed(s.rms_residual, 6);
    j["condition_estimate"] = significant(s.condition_estimate);
    Json residuals = Json::object();
    for (const auto& [id, r] : s.residuals) residuals[id] = fixed(r, 6);
    j["residuals_s"] = std::move(residuals);
    Json diag;
    diag["error_term"] = s.diagnostics.error_term ? Json(significant(*s.diagnostics.error_term)) : Json(nullptr);
    diag["iterations"] = s.diagnostics.iterations;
    diag["range_bound_active"] = s.diagnostics.range_bound_active;
    diag["plane_offset_m"] = fixed(s.diagnostics.plane_offset, 6);
    diag["rank"] = s.diagnostics.rank;
    j["diagnostics"] = std::move(diag);
    return j;
}

Json to_json(const AccuracyReport& r) {
    Json j;
    j["attempted"] = r.attempted;
    j["located"] = r.located;
    j["detection_rate"] = fixed(r.detection_rate(), 6);
    j["epsilon_rms_m"] = optional_number(r.epsilon_rms, 4);
    j["epsilon_centroid_m"] = optional_number(r.epsilon_centroid, 4);
    j["epsilon_z_m"] = optional_number(r.epsilon_z, 4);
    j["sigma1_m"] = optional_number(r.sigma1, 4);
    j["sigma2_m"] = optional_number(r.sigma2, 4);
    j["cep50_m"] = optional_number(r.cep50, 4);
    Json cdf = Json::array();
    for (const auto& p : r.cdf) cdf.push_back(Json{{"threshold_m", p.threshold}, {"fraction", fixed(p.fraction, 6)}});
    j["cdf"] = std::move(cdf);
    Json shots = Json::array();
    for (const auto& e : r.per_shot) shots.push_back(Json{{"shot_id", e.shot_id}, {"error_m", fixed(e.error, 4)}});
    j["per_shot"] = std::move(shots);
    return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "scenario must be a JSON object");
    only_keys(j,
              {"sensor_count", "sensor_density", "width_m", "height_m", "sensor_z_m", "sensors", "source",
               "source_time_s", "temperature_c", "wind_mps", "timing_noise_sigma_s", "nlos", "echoes",
               "source_level_dbspl", "excess_attenuation_db", "max_range_m", "seed"},
              "scenario");
    ScenarioConfig cfg;
    try {
        if (j.contains("sensor_count")) cfg.sensor_count = j.at("sensor_count").get<int>();
        if (j.contains("sensor_density")) cfg.sensor_density = j.at("sensor_density").get<double>();
        cfg.width = j.value("width_m", cfg.width);
        cfg.height = j.value("height_m", cfg.height);
        if (j.contains("sensor_z_m")) cfg.sensor_z = range_from(j.at("sensor_z_m"), "sensor_z_m");
        if (j.contains("sensors")) {
            for (const auto& s : j.at("sensors")) {
                only_keys(s, {"id", "x_m", "y_m", "z_m"}, "scenario sensor");
                cfg.fixed_sensors.push_back({s.at("id").get<std::string>(), position_from(s, "sensors")});
            }
        }
        if (j.contains("source")) cfg.source = position_from(j.at("source"), "source");
        cfg.source_time = j.value("source_time_s", cfg.source_time);
        cfg.temperature_c = j.value("temperature_c", cfg.temperature_c);
        if (j.contains("wind_mps")) {
            const auto w = range_from(j.at("wind_mps"), "wind_mps");
            cfg.wind_x = w.lo;
            cfg.wind_y = w.hi;
        }
        cfg.timing_noise_sigma = j.value("timing_noise_sigma_s", cfg.timing_noise_sigma);
        if (j.contains("nlos")) {
            const auto& n = j.at("nlos");
            only_keys(n, {"probability", "delay_s"}, "scenario nlos");
            cfg.nlos.probability = n.value("probability", cfg.nlos.probability);
            if (n.contains("delay_s")) cfg.nlos.delay = range_from(n.at("delay_s"), "nlos.delay_s");
        }
        if (j.contains("echoes")) {
            const auto& e = j.at("echoes");
            only_keys(e, {"min_count", "max_count", "delay_s", "level_drop_db"}, "scenario echoes");
            cfg.echoes.min_count = e.value("min_count", cfg.echoes.min_count);
            cfg.echoes.max_count = e.value("max_count", cfg.echoes.max_count);
            if (e.contains("delay_s")) cfg.echoes.delay = range_from(e.at("delay_s"), "echoes.delay_s");
            cfg.echoes.level_drop_db = e.value("level_drop_db", cfg.echoes.level_drop_db);
        }
        cfg.source_level_dbspl = j.value("source_level_dbspl", cfg.source_level_dbspl);
        if (j.contains("excess_attenuation_db"))
            cfg.excess_attenuation_db = range_from(j.at("excess_attenuation_db"), "excess_attenuation_db");
        if (j.contains("max_range_m")) cfg.max_range = j.at("max_range_m").get<double>();
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("scenario: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace gunloc::io

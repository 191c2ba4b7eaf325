#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "gunloc/error.hpp"
#include "gunloc/io.hpp"

namespace gunloc::io {

namespace {

const std::vector<std::string> kColumns = {"shot_id", "sensor_id",       "x_m",   "y_m",
                                           "z_m",     "arrival_time_s", "amplitude_dbspl", "snr_db"};

constexpr double kEarthRadius = 6371008.8;  // mean radius, meters

[[noreturn]] void row_error(const std::string& source, std::size_t row, const std::string& what) {
    throw Error(ErrorKind::InvalidInput, source + ":" + std::to_string(row) + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one delimited line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(trim(field));
    return out;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const char* first = text.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

double require_number(const std::string& text, const std::string& column, const std::string& source, std::size_t row) {
    if (text.empty()) row_error(source, row, "missing value for " + column);
    auto v = parse_number(text);
    if (!v) row_error(source, row, "column " + column + ": '" + text + "' is not a decimal number");
    return *v;
}

std::optional<double> optional_number(const std::string& text, const std::string& column, const std::string& source,
                                      std::size_t row) {
    if (text.empty() || text == "NA" || text == "NaN" || text == "null") return std::nullopt;
    return require_number(text, column, source, row);
}

// Lower-case alphanumerics only, so "Arrival Time (s)" and "arrival_time_s" meet.
std::string normalize(std::string_view name) {
    std::string out;
    for (char ch : name)
        if (std::isalnum(static_cast<unsigned char>(ch))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

struct Lines {
    std::vector<std::pair<std::size_t, std::string>> rows;  // (1-based line number, text)
};

Lines read_lines(std::istream& in) {
    Lines out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        out.rows.emplace_back(number, line);
    }
    return out;
}

void verify_record(const SensorObservation& o, const std::string& source, std::size_t row) {
    if (o.sensor_id.empty()) row_error(source, row, "empty sensor_id");
    if (o.amplitude_dbspl && *o.amplitude_dbspl > kMaxAmplitudeDbSpl + 1e-9)
        row_error(source, row, "amplitude_dbspl exceeds the full-scale bound");
}

}  // namespace

PulseFormat parse_pulse_format(std::string_view text) {
    const std::string t = normalize(text);
    if (t == "auto") return PulseFormat::Auto;
    if (t == "csv") return PulseFormat::Csv;
    if (t == "json") return PulseFormat::Json;
    if (t == "supplemental") return PulseFormat::Supplemental;
    throw Error(ErrorKind::InvalidInput, "unknown pulse format '" + std::string(text) + "'");
}

std::vector<PulseRecord> read_pulse_csv(std::istream& in, const std::string& source) {
    const Lines lines = read_lines(in);
    if (lines.rows.empty()) throw Error(ErrorKind::InvalidInput, source + ": missing header");
    const auto header = split_row(lines.rows.front().second, ',');
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (std::find(kColumns.begin(), kColumns.end(), header[i]) == kColumns.end())
            row_error(source, lines.rows.front().first, "unknown column '" + header[i] + "'");
        if (!index.emplace(header[i], i).second)
            row_error(source, lines.rows.front().first, "duplicate column '" + header[i] + "'");
    }
    for (std::size_t i = 0; i < 6; ++i)
        if (!index.count(kColumns[i])) row_error(source, lines.rows.front().first, "missing column " + kColumns[i]);

    std::vector<PulseRecord> out;
    for (std::size_t r = 1; r < lines.rows.size(); ++r) {
        const auto& [row, text] = lines.rows[r];
        const auto fields = split_row(text, ',');
        if (fields.size() != header.size())
            row_error(source, row, "expected " + std::to_string(header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
        auto field = [&](const std::string& name) -> std::string {
            auto it = index.find(name);
            return it == index.end() ? std::string() : fields[it->second];
        };
        PulseRecord rec;
        rec.shot_id = field("shot_id");
        if (rec.shot_id.empty()) row_error(source, row, "empty shot_id");
        auto& o = rec.observation;
        o.sensor_id = field("sensor_id");
        o.position = {require_number(field("x_m"), "x_m", source, row), require_number(field("y_m"), "y_m", source, row),
                      require_number(field("z_m"), "z_m", source, row)};
        o.arrival_time = require_number(field("arrival_time_s"), "arrival_time_s", source, row);
        o.amplitude_dbspl = optional_number(field("amplitude_dbspl"), "amplitude_dbspl", source, row);
        o.snr_db = optional_number(field("snr_db"), "snr_db", source, row);
        verify_record(o, source, row);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<PulseRecord> read_pulse_json(std::istream& in, const std::string& source) {
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::InvalidInput, source + ": " + e.what());
    }
    const Json* list = &doc;
    if (doc.is_object() && doc.contains("pulses")) list = &doc.at("pulses");
    if (!list->is_array()) throw Error(ErrorKind::InvalidInput, source + ": expected an array of pulse records");

    std::vector<PulseRecord> out;
    std::size_t row = 0;
    for (const auto& item : *list) {
        ++row;
        if (!item.is_object()) row_error(source, row, "record is not an object");
        for (const auto& [key, value] : item.items())
            if (std::find(kColumns.begin(), kColumns.end(), key) == kColumns.end())
                row_error(source, row, "unknown field '" + key + "'");
        auto text = [&](const char* key) -> std::string {
            if (!item.contains(key) || !item.at(key).is_string()) row_error(source, row, std::string("missing string field ") + key);
            return item.at(key).get<std::string>();
        };
        auto number = [&](const char* key) -> double {
            if (!item.contains(key) || !item.at(key).is_number()) row_error(source, row, std::string("missing numeric field ") + key);
            return item.at(key).get<double>();
        };
        auto maybe = [&](const char* key) -> std::optional<double> {
            if (!item.contains(key) || item.at(key).is_null()) return std::nullopt;
            if (!item.at(key).is_number()) row_error(source, row, std::string("field ") + key + " is not a number");
            return item.at(key).get<double>();
        };
        PulseRecord rec;
        rec.shot_id = text("shot_id");
        if (rec.shot_id.empty()) row_error(source, row, "empty shot_id");
        auto& o = rec.observation;
        o.sensor_id = text("sensor_id");
        o.position = {number("x_m"), number("y_m"), number("z_m")};
        o.arrival_time = number("arrival_time_s");
        o.amplitude_dbspl = maybe("amplitude_dbspl");
        o.snr_db = maybe("snr_db");
        verify_record(o, source, row);
        out.push_back(std::move(rec));
    }
    return out;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& supplemental_aliases() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> aliases = {
        {"shot_id", {"shot_id", "shot", "shot_number", "shotid", "incident", "incident_id", "event", "event_id"}},
        {"sensor_id", {"sensor_id", "sensor", "sensorid", "sensor_name", "station", "receiver"}},
        {"x_m", {"x_m", "x", "easting", "east", "east_m"}},
        {"y_m", {"y_m", "y", "northing", "north", "north_m"}},
        {"z_m", {"z_m", "z", "elevation", "elev", "altitude", "alt", "height"}},
        {"latitude", {"latitude", "lat"}},
        {"longitude", {"longitude", "lon", "lng", "long"}},
        {"arrival_time_s", {"arrival_time_s", "arrival_time", "arrival", "toa", "time", "t", "pulse_time", "timestamp"}},
        {"amplitude_dbspl", {"amplitude_dbspl", "amplitude", "dbspl", "db_spl", "level", "peak_db"}},
        {"snr_db", {"snr_db", "snr"}},
    };
    return aliases;
}

std::vector<PulseRecord> read_supplemental(std::istream& in, const std::string& source) {
    const Lines lines = read_lines(in);
    if (lines.rows.empty()) throw Error(ErrorKind::InvalidInput, source + ": missing header");
    const std::string& head = lines.rows.front().second;
    const char delim = head.find('\t') != std::string::npos ? '\t' : head.find(';') != std::string::npos ? ';' : ',';
    const auto header = split_row(head, delim);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = normalize(header[i]);
        for (const auto& [canonical, spellings] : supplemental_aliases())
            for (const auto& s : spellings)
                if (normalize(s) == name) index.emplace(canonical, i);
    }
    const bool planar = index.count("x_m") && index.count("y_m");
    const bool geodetic = index.count("latitude") && index.count("longitude");
    if (!index.count("sensor_id") || !index.count("arrival_time_s") || (!planar && !geodetic))
        row_error(source, lines.rows.front().first,
                  "header lacks a sensor, arrival time or position column (see the supplemental aliases)");

    struct Raw {
        std::size_t row;
        PulseRecord rec;
        double lat = 0.0, lon = 0.0;
    };
    std::vector<Raw> raw;
    for (std::size_t r = 1; r < lines.rows.size(); ++r) {
        const auto& [row, text] = lines.rows[r];
        const auto fields = split_row(text, delim);
        auto field = [&](const std::string& name) -> std::string {
            auto it = index.find(name);
            return it == index.end() || it->second >= fields.size() ? std::string() : fields[it->second];
        };
        Raw item{row, {}};
        item.rec.shot_id = index.count("shot_id") ? field("shot_id") : std::filesystem::path(source).stem().string();
        if (item.rec.shot_id.empty()) row_error(source, row, "empty shot id");
        auto& o = item.rec.observation;
        o.sensor_id = field("sensor_id");
        if (planar) {
            o.position.x = require_number(field("x_m"), "x", source, row);
            o.position.y = require_number(field("y_m"), "y", source, row);
        } else {
            item.lat = require_number(field("latitude"), "latitude", source, row);
            item.lon = require_number(field("longitude"), "longitude", source, row);
        }
        o.position.z = index.count("z_m") ? require_number(field("z_m"), "z", source, row) : 0.0;
        o.arrival_time = require_number(field("arrival_time_s"), "arrival time", source, row);
        o.amplitude_dbspl = optional_number(field("amplitude_dbspl"), "amplitude", source, row);
        o.snr_db = optional_number(field("snr_db"), "snr", source, row);
        verify_record(o, source, row);
        raw.push_back(std::move(item));
    }

    if (!planar && !raw.empty()) {
        // Local tangent plane about the mean coordinate; adequate over a few km.
        double lat0 = 0.0, lon0 = 0.0;
        for (const auto& r : raw) {
            lat0 += r.lat;
            lon0 += r.lon;
        }
        lat0 /= static_cast<double>(raw.size());
        lon0 /= static_cast<double>(raw.size());
        const double k = std::numbers::pi / 180.0 * kEarthRadius;
        for (auto& r : raw) {
            r.rec.observation.position.x = (r.lon - lon0) * k * std::cos(lat0 * std::numbers::pi / 180.0);
            r.rec.observation.position.y = (r.lat - lat0) * k;
        }
    }
    std::vector<PulseRecord> out;
    out.reserve(raw.size());
    for (auto& r : raw) out.push_back(std::move(r.rec));
    return out;
}

std::vector<PulseRecord> read_pulse_file(const std::filesystem::path& path, PulseFormat format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, path.string() + ": cannot open");
    if (format == PulseFormat::Auto) format = path.extension() == ".json" ? PulseFormat::Json : PulseFormat::Csv;
    switch (format) {
        case PulseFormat::Json: return read_pulse_json(in, path.string());
        case PulseFormat::Supplemental: return read_supplemental(in, path.string());
        default: return read_pulse_csv(in, path.string());
    }
}

void write_pulse_csv(std::ostream& out, const std::vector<PulseRecord>& records) {
    out << "shot_id,sensor_id,x_m,y_m,z_m,arrival_time_s,amplitude_dbspl,snr_db\n";
    for (const auto& r : records) {
        const auto& o = r.observation;
        out << fmt::format("{},{},{:.3f},{:.3f},{:.3f},{:.3f},{},{}\n", r.shot_id, o.sensor_id, o.position.x,
                           o.position.y, o.position.z, o.arrival_time,
                           o.amplitude_dbspl ? fmt::format("{:.2f}", *o.amplitude_dbspl) : "",
                           o.snr_db ? fmt::format("{:.2f}", *o.snr_db) : "");
    }
}

Json pulses_to_json(const std::vector<PulseRecord>& records) {
    Json arr = Json::array();
    for (const auto& r : records) {
        const auto& o = r.observation;
        Json j;
        j["shot_id"] = r.shot_id;
        j["sensor_id"] = o.sensor_id;
        j["x_m"] = fixed(o.position.x, 3);
        j["y_m"] = fixed(o.position.y, 3);
        j["z_m"] = fixed(o.position.z, 3);
        j["arrival_time_s"] = fixed(o.arrival_time, 3);
        j["amplitude_dbspl"] = o.amplitude_dbspl ? Json(fixed(*o.amplitude_dbspl, 2)) : Json(nullptr);
        j["snr_db"] = o.snr_db ? Json(fixed(*o.snr_db, 2)) : Json(nullptr);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<PulseSet> group_by_shot(const std::vector<PulseRecord>& records) {
    std::map<std::string, std::vector<SensorObservation>> groups;
    for (const auto& r : records) groups[r.shot_id].push_back(r.observation);
    std::vector<PulseSet> out;
    for (auto& [id, obs] : groups) {
        try {
            out.emplace_back(id, std::move(obs));
        } catch (const Error& e) {
            throw Error(e.kind(), "shot '" + id + "': " + e.what());
        }
    }
    return out;
}

std::vector<PulseRecord> to_records(const PulseSet& pulses) {
    std::vector<PulseRecord> out;
    for (const auto& o : pulses) out.push_back({pulses.shot_id(), o});
    return out;
}

}  // namespace gunloc::io

#pragma once

// File formats: PCM WAV audio, pulse files (CSV/JSON, plus an adapter for the
// published supplemental tables), and JSON/CSV result documents.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gunloc/geo.hpp"
#include "gunloc/pulse_detect.hpp"
#include "gunloc/sim.hpp"

namespace gunloc::io {

using Json = nlohmann::ordered_json;

inline constexpr double kMinWavSampleRate = 12000.0;

/// Reads 16/24/32-bit integer or 32-bit float PCM. Integer samples are scaled so
/// that full scale is 1.0; multichannel files keep channel 0. Throws
/// Error(InvalidInput) naming the file on anything unreadable or unsupported.
AudioSegment read_wav(const std::filesystem::path& path, double start_time = 0.0);

enum class WavEncoding { Pcm16, Pcm24, Float32 };

/// Mono file. Integer encodings clip at full scale.
void write_wav(const std::filesystem::path& path, const AudioSegment& seg, WavEncoding encoding = WavEncoding::Float32);

struct PulseRecord {
    std::string shot_id;
    SensorObservation observation;
};

enum class PulseFormat { Auto, Csv, Json, Supplemental };

PulseFormat parse_pulse_format(std::string_view text);

/// Columns shot_id, sensor_id, x_m, y_m, z_m, arrival_time_s, amplitude_dbspl,
/// snr_db (the last two may be empty or absent). Errors carry `source:row`.
std::vector<PulseRecord> read_pulse_csv(std::istream& in, const std::string& source = "<input>");
/// An array of objects with the same field names, or {"pulses": [...]}.
std::vector<PulseRecord> read_pulse_json(std::istream& in, const std::string& source = "<input>");
/// Delimited tables using the supplemental repository's column names; see
/// `supplemental_aliases`. Latitude/longitude columns are projected onto a
/// local east/north plane when x/y are absent.
std::vector<PulseRecord> read_supplemental(std::istream& in, const std::string& source = "<input>");

/// Dispatches on the format (Auto: .json -> Json, anything else -> Csv).
std::vector<PulseRecord> read_pulse_file(const std::filesystem::path& path, PulseFormat format = PulseFormat::Auto);

/// Header plus one row per record. Times keep millisecond precision, amplitudes
/// two decimals.
void write_pulse_csv(std::ostream& out, const std::vector<PulseRecord>& records);
Json pulses_to_json(const std::vector<PulseRecord>& records);

/// Canonical field name -> accepted spellings (compared case-insensitively).
const std::vector<std::pair<std::string, std::vector<std::string>>>& supplemental_aliases();

/// Groups records by shot_id, in shot_id order. Invalid groups (duplicate
/// sensors and the like) throw Error(InvalidInput) naming the shot.
std::vector<PulseSet> group_by_shot(const std::vector<PulseRecord>& records);

std::vector<PulseRecord> to_records(const PulseSet& pulses);

/// Rounds to a fixed number of decimals so serialized numbers are stable.
double fixed(double value, int decimals);

Json to_json(const Position& p);
Json to_json(const ShotSolution& s);
Json to_json(const AccuracyReport& r);

/// Accepts the ScenarioConfig field names; unknown keys are rejected.
ScenarioConfig scenario_from_json(const Json& j);

}  // namespace gunloc::io

#pragma once

// File formats. All numbers are written in the C locale with the shortest
// representation that round-trips a double.
//
// Time tags, CSV:
//   # total_time_s=<seconds>
//   channel,timestamp_ps
//   0,12345
// Time tags, binary (little endian): magic "PSTT0001", u64 count,
// f64 total_time_s, then count records of (u8 channel, u64 timestamp_ps).
//
// Curves: CSV with header delay_ns,g2,sigma and a JSON sidecar holding the
// metadata. Spectra: CSV with header frequency_mhz,contrast_percent,sigma.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "photospin/correlator.hpp"
#include "photospin/fit_models.hpp"
#include "photospin/photon_stream.hpp"
#include "photospin/spinsim.hpp"

namespace photospin {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_double(double v);

void write_photon_stream_csv(const fs::path& path, const PhotonStream& stream);
void write_photon_stream_binary(const fs::path& path, const PhotonStream& stream);
/// Detects the format from the leading bytes.
PhotonStream read_photon_stream(const fs::path& path);

void write_curve_csv(const fs::path& path, const CorrelationCurve& curve);
json curve_metadata(const CorrelationCurve& curve);
/// Reads the CSV and, when present, the sidecar "<path>.json".
CorrelationCurve read_curve(const fs::path& path);

void write_spectrum_csv(const fs::path& path, const OdmrSpectrum& spectrum);
OdmrSpectrum read_spectrum_csv(const fs::path& path);

/// Columns intensity_kw_cm2,signal_cps,background_cps and optionally
/// signal_sigma,background_sigma.
void write_saturation_csv(const fs::path& path, const std::vector<SaturationPoint>& points);
std::vector<SaturationPoint> read_saturation_csv(const fs::path& path);

/// Non-finite numbers become null.
json to_json(const FitResult& fit);
json to_json(const InvariantReport& report);

struct SeriesEntry {
  fs::path file;  ///< resolved against the manifest's directory
  std::optional<double> intensity;   ///< kW/cm^2
  std::optional<double> rf_power_w;
  std::optional<double> signal_rate;      ///< counts/s
  std::optional<double> background_rate;  ///< counts/s
};

/// {"entries": [{"file": ..., "intensity": ..., "rf_power_w": ...}, ...]}
std::vector<SeriesEntry> read_series_manifest(const fs::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  json parameters = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;
  std::string tool_version = PHOTOSPIN_VERSION;
};

json to_json(const RunManifest& manifest);

/// Pretty-printed, newline terminated. Throws IoError.
void write_json(const fs::path& path, const json& value);
json read_json(const fs::path& path);

}  // namespace photospin

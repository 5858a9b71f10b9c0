#include "photospin/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace photospin {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'T', 'T', '0', '0', '0', '1'};

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, int line, int column, const fs::path& path) {
  T value{};
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                         ": cannot parse '" + std::string(field) + "' as a number",
                     line, column);
  }
  return value;
}

struct Table {
  std::map<std::string, std::string> header_values;  // from "# key=value" lines
  std::vector<std::vector<double>> rows;             // in the order of `columns`
  std::vector<bool> present;
};

// Reads a CSV with a named header. `required` columns must exist; optional
// ones are reported through `present`.
Table read_table(const fs::path& path, const std::vector<std::string>& required,
                 const std::vector<std::string>& optional = {}) {
  auto in = open_in(path);
  Table table;
  std::vector<std::string> wanted = required;
  wanted.insert(wanted.end(), optional.begin(), optional.end());
  std::vector<int> index(wanted.size(), -1);
  std::string raw;
  int line = 0;
  bool have_header = false;
  std::size_t header_width = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const std::string_view body = trim(text.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos) {
        table.header_values[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    const auto fields = split(text);
    if (!have_header) {
      have_header = true;
      header_width = fields.size();
      for (std::size_t w = 0; w < wanted.size(); ++w) {
        for (std::size_t f = 0; f < fields.size(); ++f) {
          if (fields[f] == wanted[w]) index[w] = static_cast<int>(f);
        }
        if (w < required.size() && index[w] < 0) {
          throw ParseError(path.string() + ":" + std::to_string(line) + ": missing column '" +
                               wanted[w] + "'",
                           line, static_cast<int>(fields.size()) + 1);
        }
      }
      continue;
    }
    if (fields.size() < header_width) {
      const int col = static_cast<int>(fields.size()) + 1;
      throw ParseError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                           ": row has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header_width),
                       line, col);
    }
    std::vector<double> row(wanted.size(), 0.0);
    for (std::size_t w = 0; w < wanted.size(); ++w) {
      if (index[w] < 0) continue;
      row[w] = parse_number<double>(fields[static_cast<std::size_t>(index[w])], line, index[w] + 1, path);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(path.string() + ": no header line", line, 0);
  for (std::size_t w = 0; w < wanted.size(); ++w) table.present.push_back(index[w] >= 0);
  return table;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_photon_stream_csv(const fs::path& path, const PhotonStream& stream) {
  auto out = open_out(path);
  out << "# total_time_s=" << format_double(stream.duration_s) << "\n";
  out << "channel,timestamp_ps\n";
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out << static_cast<int>(stream.channels[i]) << ',' << stream.timestamps_ps[i] << '\n';
  }
  finish(out, path);
}

void write_photon_stream_binary(const fs::path& path, const PhotonStream& stream) {
  static_assert(std::endian::native == std::endian::little, "binary time tags assume little endian");
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t n = stream.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&stream.duration_s), sizeof stream.duration_s);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out.put(static_cast<char>(stream.channels[i]));
    out.write(reinterpret_cast<const char*>(&stream.timestamps_ps[i]), sizeof(std::uint64_t));
  }
  finish(out, path);
}

PhotonStream read_photon_stream(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  char head[sizeof kMagic] = {};
  in.read(head, sizeof head);
  PhotonStream stream;
  if (in.gcount() == sizeof head && std::memcmp(head, kMagic, sizeof kMagic) == 0) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&stream.duration_s), sizeof stream.duration_s);
    if (!in) throw ParseError(path.string() + ": truncated binary header");
    stream.timestamps_ps.resize(n);
    stream.channels.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      char ch = 0;
      in.get(ch);
      in.read(reinterpret_cast<char*>(&stream.timestamps_ps[i]), sizeof(std::uint64_t));
      if (!in) throw ParseError(path.string() + ": truncated at record " + std::to_string(i));
      stream.channels[i] = static_cast<std::uint8_t>(ch);
    }
  } else {
    in.close();
    auto text = open_in(path);
    std::string raw;
    int line = 0;
    bool have_header = false, have_time = false;
    while (std::getline(text, raw)) {
      ++line;
      const std::string_view t = trim(raw);
      if (t.empty()) continue;
      if (t.front() == '#') {
        const std::string_view body = trim(t.substr(1));
        constexpr std::string_view key = "total_time_s=";
        if (body.substr(0, key.size()) == key) {
          stream.duration_s = parse_number<double>(trim(body.substr(key.size())), line, 1, path);
          have_time = true;
        }
        continue;
      }
      const auto fields = split(t);
      if (!have_header) {
        if (fields.size() < 2 || fields[0] != "channel" || fields[1] != "timestamp_ps") {
          throw ParseError(path.string() + ":" + std::to_string(line) +
                               ": expected header 'channel,timestamp_ps'",
                           line, 1);
        }
        have_header = true;
        continue;
      }
      if (fields.size() < 2) {
        throw ParseError(path.string() + ":" + std::to_string(line) + ":2: missing timestamp_ps",
                         line, 2);
      }
      const auto ch = parse_number<unsigned>(fields[0], line, 1, path);
      if (ch > 1) throw ParseError(path.string() + ":" + std::to_string(line) + ":1: channel must be 0 or 1", line, 1);
      stream.channels.push_back(static_cast<std::uint8_t>(ch));
      stream.timestamps_ps.push_back(parse_number<std::uint64_t>(fields[1], line, 2, path));
    }
    if (!have_time) throw ParseError(path.string() + ": missing '# total_time_s=' header", 1, 1);
  }
  try {
    stream.validate();
  } catch (const DomainError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return stream;
}

json curve_metadata(const CorrelationCurve& curve) {
  json j;
  j["bin_width_ps"] = curve.bin_width_ps;
  j["total_time_s"] = curve.total_time_s;
  j["rates_per_s"] = {curve.rates[0], curve.rates[1]};
  j["signal_fraction"] = curve.signal_fraction ? json(*curve.signal_fraction) : json(nullptr);
  j["background_corrected"] = curve.background_corrected;
  j["has_negative_values"] = curve.has_negative_values;
  j["tau0_ns"] = curve.tau0_ns ? json(*curve.tau0_ns) : json(nullptr);
  return j;
}

void write_curve_csv(const fs::path& path, const CorrelationCurve& curve) {
  auto out = open_out(path);
  out << "delay_ns,g2,sigma\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out << format_double(curve.delays_ns[k]) << ',' << format_double(curve.values[k]) << ','
        << format_double(k < curve.sigma.size() ? curve.sigma[k] : 0.0) << '\n';
  }
  finish(out, path);
  write_json(fs::path(path.string() + ".json"), curve_metadata(curve));
}

CorrelationCurve read_curve(const fs::path& path) {
  const Table t = read_table(path, {"delay_ns", "g2"}, {"sigma"});
  CorrelationCurve curve;
  for (const auto& row : t.rows) {
    curve.delays_ns.push_back(row[0]);
    curve.values.push_back(row[1]);
    curve.sigma.push_back(t.present[2] ? row[2] : 0.0);
  }
  if (curve.delays_ns.size() >= 2) {
    curve.bin_width_ps = (curve.delays_ns[1] - curve.delays_ns[0]) * 1e3;
  }
  const fs::path meta(path.string() + ".json");
  if (fs::exists(meta)) {
    const json j = read_json(meta);
    if (j.contains("bin_width_ps")) curve.bin_width_ps = j["bin_width_ps"].get<double>();
    if (j.contains("total_time_s")) curve.total_time_s = j["total_time_s"].get<double>();
    if (j.contains("rates_per_s")) curve.rates = {j["rates_per_s"][0].get<double>(), j["rates_per_s"][1].get<double>()};
    if (j.contains("signal_fraction") && !j["signal_fraction"].is_null()) {
      curve.signal_fraction = j["signal_fraction"].get<double>();
    }
    if (j.contains("background_corrected")) curve.background_corrected = j["background_corrected"].get<bool>();
    if (j.contains("has_negative_values")) curve.has_negative_values = j["has_negative_values"].get<bool>();
  }
  return curve;
}

void write_spectrum_csv(const fs::path& path, const OdmrSpectrum& spectrum) {
  auto out = open_out(path);
  out << "# rf_power_w=" << format_double(spectrum.rf_power_w) << "\n";
  out << "# laser_intensity_kw_cm2=" << format_double(spectrum.laser_intensity) << "\n";
  out << "frequency_mhz,contrast_percent,sigma\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out << format_double(spectrum.frequency_mhz[k]) << ',' << format_double(spectrum.contrast_percent[k])
        << ',' << format_double(k < spectrum.sigma.size() ? spectrum.sigma[k] : 0.0) << '\n';
  }
  finish(out, path);
}

OdmrSpectrum read_spectrum_csv(const fs::path& path) {
  const Table t = read_table(path, {"frequency_mhz", "contrast_percent"}, {"sigma"});
  OdmrSpectrum s;
  for (const auto& row : t.rows) {
    s.frequency_mhz.push_back(row[0]);
    s.contrast_percent.push_back(row[1]);
    if (t.present[2]) s.sigma.push_back(row[2]);
  }
  auto header = [&](const char* key, double& into) {
    const auto it = t.header_values.find(key);
    if (it != t.header_values.end()) into = parse_number<double>(it->second, 1, 1, path);
  };
  header("rf_power_w", s.rf_power_w);
  header("laser_intensity_kw_cm2", s.laser_intensity);
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return s;
}

void write_saturation_csv(const fs::path& path, const std::vector<SaturationPoint>& points) {
  auto out = open_out(path);
  out << "intensity_kw_cm2,signal_cps,background_cps,signal_sigma,background_sigma\n";
  for (const auto& p : points) {
    out << format_double(p.intensity) << ',' << format_double(p.signal) << ',' << format_double(p.background)
        << ',' << format_double(p.signal_sigma) << ',' << format_double(p.background_sigma) << '\n';
  }
  finish(out, path);
}

std::vector<SaturationPoint> read_saturation_csv(const fs::path& path) {
  const Table t = read_table(path, {"intensity_kw_cm2", "signal_cps", "background_cps"},
                             {"signal_sigma", "background_sigma"});
  std::vector<SaturationPoint> out;
  for (const auto& row : t.rows) out.push_back({row[0], row[1], row[2], row[3], row[4]});
  return out;
}

json to_json(const FitResult& fit) {
  json j;
  auto estimates = [](const std::vector<Estimate>& v) {
    json a = json::array();
    for (const auto& e : v) {
      a.push_back({{"name", e.name}, {"unit", e.unit}, {"value", number_or_null(e.value)},
                   {"uncertainty", number_or_null(e.uncertainty)}});
    }
    return a;
  };
  j["parameters"] = estimates(fit.parameters);
  j["derived"] = estimates(fit.derived);
  json cov = json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(number_or_null(fit.covariance(r, c)));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["residual_norm"] = number_or_null(fit.residual_norm);
  j["dof"] = fit.dof;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["uncertainty_model"] = fit.uncertainty_model;
  j["warnings"] = fit.warnings;
  return j;
}

json to_json(const InvariantReport& r) {
  return {{"max_trace_deviation", r.max_trace_deviation},
          {"max_hermiticity_deviation", r.max_hermiticity_deviation},
          {"min_eigenvalue", number_or_null(r.min_eigenvalue)},
          {"accepted_steps", r.accepted_steps}};
}

std::vector<SeriesEntry> read_series_manifest(const fs::path& path) {
  const json j = read_json(path);
  if (!j.contains("entries") || !j["entries"].is_array()) {
    throw ParseError(path.string() + ": expected an 'entries' array");
  }
  std::vector<SeriesEntry> out;
  const fs::path base = path.parent_path();
  for (const auto& e : j["entries"]) {
    if (!e.contains("file") || !e["file"].is_string()) {
      throw ParseError(path.string() + ": every entry needs a 'file' string");
    }
    SeriesEntry s;
    const fs::path f = e["file"].get<std::string>();
    s.file = f.is_absolute() ? f : base / f;
    auto opt = [&](const char* key) -> std::optional<double> {
      if (e.contains(key) && e[key].is_number()) return e[key].get<double>();
      return std::nullopt;
    };
    s.intensity = opt("intensity");
    s.rf_power_w = opt("rf_power_w");
    s.signal_rate = opt("signal_rate");
    s.background_rate = opt("background_rate");
    out.push_back(std::move(s));
  }
  return out;
}

json to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["inputs"] = m.inputs;
  j["parameters"] = m.parameters;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["outputs"] = m.outputs;
  j["tool_version"] = m.tool_version;
  return j;
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
  finish(out, path);
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace photospin

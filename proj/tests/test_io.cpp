#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "photospin/io.hpp"

using namespace photospin;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "photospin_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("time tags round-trip through CSV and binary") {
  const auto s = oracle::poisson_stream(1e4, 2e4, 0.01, 3);
  write_photon_stream_csv(scratch("tags.csv"), s);
  write_photon_stream_binary(scratch("tags.bin"), s);
  for (const char* name : {"tags.csv", "tags.bin"}) {
    const auto back = read_photon_stream(scratch(name));
    CHECK(back.timestamps_ps == s.timestamps_ps);
    CHECK(back.channels == s.channels);
    CHECK(back.duration_s == s.duration_s);
  }
}

TEST_CASE("time-tag parse errors name the line and column") {
  write_text(scratch("bad1.csv"), "# total_time_s=1\nchannel,timestamp_ps\n0,10\n1\n");
  try {
    read_photon_stream(scratch("bad1.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 2);
  }
  write_text(scratch("bad2.csv"), "channel,timestamp_ps\n0,10\n");
  CHECK_THROWS_AS(read_photon_stream(scratch("bad2.csv")), ParseError);
  write_text(scratch("bad3.csv"), "# total_time_s=1\nchannel,timestamp_ps\n0,20\n1,10\n");
  CHECK_THROWS_AS(read_photon_stream(scratch("bad3.csv")), ParseError);
  CHECK_THROWS_AS(read_photon_stream(scratch("does_not_exist.csv")), IoError);
}

TEST_CASE("curves keep values and metadata") {
  CorrelationCurve c;
  c.bin_width_ps = 972.0;
  c.total_time_s = 12.5;
  c.rates = {1234.5, 678.9};
  c.signal_fraction = 0.8;
  c.background_corrected = true;
  for (int k = -3; k <= 3; ++k) {
    c.delays_ns.push_back(k * 0.972);
    c.values.push_back(1.0 / 3.0 + k);
    c.sigma.push_back(0.1 * (k + 4));
  }
  write_curve_csv(scratch("curve.csv"), c);
  const auto back = read_curve(scratch("curve.csv"));
  CHECK(back.values == c.values);
  CHECK(back.delays_ns == c.delays_ns);
  CHECK(back.sigma == c.sigma);
  CHECK(back.bin_width_ps == 972.0);
  CHECK(back.rates == c.rates);
  CHECK(*back.signal_fraction == 0.8);
  CHECK(back.background_corrected);
}

TEST_CASE("spectra: round trip and missing columns") {
  OdmrSpectrum s;
  s.rf_power_w = 0.5;
  s.frequency_mhz = {20.0, 20.5, 21.0};
  s.contrast_percent = {0.1, 0.25, 0.1};
  s.sigma = {0.01, 0.01, 0.01};
  write_spectrum_csv(scratch("spec.csv"), s);
  const auto back = read_spectrum_csv(scratch("spec.csv"));
  CHECK(back.contrast_percent == s.contrast_percent);
  CHECK(back.rf_power_w == 0.5);

  write_text(scratch("spec_bad.csv"), "frequency_mhz,sigma\n20,0.1\n");
  try {
    read_spectrum_csv(scratch("spec_bad.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("contrast_percent") != std::string::npos);
  }
  write_text(scratch("spec_bad2.csv"), "frequency_mhz,contrast_percent\n20,0.1\n21,abc\n");
  try {
    read_spectrum_csv(scratch("spec_bad2.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 2);
  }
}

TEST_CASE("saturation tables") {
  const std::vector<SaturationPoint> pts = {{2.6, 430.0, 350.0, 13.0, 10.0}, {44.0, 3900.0, 1010.0, 0.0, 0.0}};
  write_saturation_csv(scratch("sat.csv"), pts);
  const auto back = read_saturation_csv(scratch("sat.csv"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].signal_sigma == 13.0);
  CHECK(back[1].background == 1010.0);
  write_text(scratch("sat_short.csv"), "intensity_kw_cm2,signal_cps,background_cps\n2.6,430,350\n44,3900\n");
  try {
    read_saturation_csv(scratch("sat_short.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
}

TEST_CASE("fit results serialize non-finite values as null") {
  FitResult f;
  f.parameters = {{"a", "ns", 1.5, std::numeric_limits<double>::infinity()}};
  f.covariance = Eigen::MatrixXd::Constant(1, 1, std::numeric_limits<double>::infinity());
  const json j = to_json(f);
  CHECK(j["parameters"][0]["value"].get<double>() == 1.5);
  CHECK(j["parameters"][0]["uncertainty"].is_null());
  CHECK(j["covariance"][0][0].is_null());
  CHECK(j["uncertainty_model"].get<std::string>().find("covariance") != std::string::npos);
}

TEST_CASE("series manifest resolves relative paths") {
  write_text(scratch("series.json"),
             R"({"entries": [{"file": "a.csv", "intensity": 10.0}, {"file": "/abs/b.csv", "rf_power_w": 0.5}]})");
  const auto e = read_series_manifest(scratch("series.json"));
  REQUIRE(e.size() == 2);
  CHECK(e[0].file == scratch("a.csv"));
  CHECK(*e[0].intensity == 10.0);
  CHECK(!e[0].rf_power_w);
  CHECK(e[1].file == fs::path("/abs/b.csv"));
  write_text(scratch("series_bad.json"), R"({"entries": [{"intensity": 1}]})");
  CHECK_THROWS_AS(read_series_manifest(scratch("series_bad.json")), ParseError);
  write_text(scratch("broken.json"), "{");
  CHECK_THROWS_AS(read_json(scratch("broken.json")), ParseError);
}

TEST_CASE("numbers are written in the C locale at full precision") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(1e-300) == "1e-300");
}

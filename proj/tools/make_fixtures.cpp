// Regenerates the synthetic replication datasets under data/:
//   g2_series/       g2 curves of the three-level emitter at five intensities
//   saturation.csv   PL signal and background versus laser intensity
//   odmr_series/     two-peak ODMR spectra versus RF power
// The g2 curves come from a dense matrix exponential of the rate generator,
// not from the library's closed form. Usage: photospin_fixtures <data-dir>

#include <cmath>
#include <cstdio>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "photospin/io.hpp"

using namespace photospin;

namespace {

double g2_expm(const RateCoefficients<double>& rc, double tau) {
  Eigen::Matrix3d m;
  m << -rc.k_ge, rc.k_eg, rc.k_sg, rc.k_ge, -rc.k_eg - rc.k_es, 0.0, 0.0, rc.k_es, -rc.k_sg;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  Eigen::Vector3d st = lu.kernel().col(0);
  st /= st.sum();
  return (m * std::abs(tau)).exp()(1, 0) / st(1);
}

void g2_series(const fs::path& dir, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  const auto truth = rates_from_limits_3level(7.5, 17.2, 6.0);
  const double kappa = cross_section(truth, 44.0, 785.0) * 1e3 / photon_energy_joule(785.0) * 1e-9;
  json entries = json::array();
  for (double I : {2.6, 20.0, 68.0, 135.0, 378.0}) {
    auto rc = truth;
    rc.k_ge = kappa * I;
    CorrelationCurve c;
    c.bin_width_ps = 972.0;
    c.total_time_s = 600.0;
    for (int k = -500; k <= 500; ++k) {
      const double t = 0.972 * k;
      c.delays_ns.push_back(t);
      c.values.push_back(g2_expm(rc, t) + 0.03 * n01(rng));
      c.sigma.push_back(0.03);
    }
    const std::string name = "g2_I" + format_double(I) + ".csv";
    write_curve_csv(dir / "g2_series" / name, c);
    entries.push_back({{"file", name}, {"intensity", I}});
  }
  write_json(dir / "g2_series" / "series.json", {{"entries", entries}});
}

void saturation(const fs::path& dir, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::vector<SaturationPoint> pts;
  for (double I : {2.6, 10.0, 20.0, 44.0, 68.0, 100.0, 135.0, 200.0, 300.0, 378.0}) {
    const double s = 7800.0 * I / (44.0 + I), b = 15.9 * I + 309.0;
    pts.push_back({I, s * (1 + 0.03 * n01(rng)), b * (1 + 0.03 * n01(rng)), 0.03 * s, 0.03 * b});
  }
  write_saturation_csv(dir / "saturation.csv", pts);
}

void odmr_series(const fs::path& dir, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  json entries = json::array();
  for (double P : {0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.3, 1.6}) {
    const double x = std::sqrt(P);
    const double a1 = 3.51 * x / (0.59 + x), w1 = 10.0 + 35.9 * x;
    const double a2 = 1.2 * P / (0.6 + P), w2 = 3.3 + 5.0 * x;
    OdmrSpectrum s;
    s.rf_power_w = P;
    s.laser_intensity = 68.0;
    for (double f = 15.0; f <= 90.0 + 1e-9; f += 0.5) {
      auto lor = [&](double c, double w, double a) { return a * (w * w / 4) / ((f - c) * (f - c) + w * w / 4); };
      s.frequency_mhz.push_back(f);
      s.contrast_percent.push_back(lor(72.0, w1, a1) + lor(36.0, w2, a2) + 0.03 * n01(rng));
      s.sigma.push_back(0.03);
    }
    const std::string name = "odmr_P" + format_double(P) + ".csv";
    write_spectrum_csv(dir / "odmr_series" / name, s);
    entries.push_back({{"file", name}, {"rf_power_w", P}});
  }
  write_json(dir / "odmr_series" / "series.json", {{"entries", entries}});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <data-dir>\n", argv[0]);
    return 2;
  }
  const fs::path dir = argv[1];
  std::mt19937_64 rng(20240607);
  g2_series(dir, rng);
  saturation(dir, rng);
  odmr_series(dir, rng);
  return 0;
}

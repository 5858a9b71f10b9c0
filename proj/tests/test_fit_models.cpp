#include <doctest.h>

#include <random>

#include "photospin/fit_models.hpp"

using namespace photospin;

namespace {

CorrelationCurve synthetic_curve(double tau1, double tau2, double c, double tau0, double noise,
                                 std::uint64_t seed, double vis = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  CorrelationCurve curve;
  curve.bin_width_ps = 972.0;
  for (int k = -200; k <= 200; ++k) {
    const double t = k * 0.972;
    const double a = std::abs(t - tau0);
    const double g = 1.0 - vis * ((1 + c) * std::exp(-a / tau1) - c * std::exp(-a / tau2));
    curve.delays_ns.push_back(t);
    curve.values.push_back(g + noise * n01(rng));
    curve.sigma.push_back(noise > 0 ? noise : 1.0);
  }
  return curve;
}

FitResult g2_result(const RateCoefficients<double>& rc, double rel_sigma) {
  const auto p = g2_parameters(rc);
  FitResult f;
  f.parameters = {{"tau1", "ns", p.tau1, rel_sigma * p.tau1},
                  {"tau2", "ns", p.tau2, rel_sigma * p.tau2},
                  {"c", "", p.c, rel_sigma * std::max(p.c, 0.05)},
                  {"tau0", "ns", 0.0, 0.1}};
  return f;
}

}  // namespace

TEST_CASE("g2 fit recovers noiseless parameters") {
  const auto curve = synthetic_curve(4.0, 60.0, 2.0, 0.4, 0.0, 1);
  const auto fit = fit_g2(curve);
  CHECK(fit["tau1"].value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(fit["tau2"].value == doctest::Approx(60.0).epsilon(1e-6));
  CHECK(fit["c"].value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit["tau0"].value == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(fit["g2_min"].value == 0.0);
}

TEST_CASE("g2 fit keeps tau1 below tau2 and reports visibility") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto curve = synthetic_curve(6.0, 30.0, 1.5, -0.2, 0.05, seed, 0.8);
    G2FitOptions opt;
    opt.fit_visibility = true;
    const auto fit = fit_g2(curve, opt);
    CHECK(fit["tau1"].value < fit["tau2"].value);
    CHECK(fit["g2_min"].value == doctest::Approx(0.2).epsilon(0.25));
    CHECK(std::abs(fit["tau1"].value - 6.0) < 4 * fit["tau1"].uncertainty + 0.01);
  }
}

TEST_CASE("g2 fit window restricts the bins") {
  const auto curve = synthetic_curve(4.0, 60.0, 2.0, 0.0, 0.0, 1);
  G2FitOptions opt;
  opt.max_abs_delay_ns = 100.0;
  const auto fit = fit_g2(curve, opt);
  CHECK(fit.dof == 205 - 4);
}

TEST_CASE("global three-level fit recovers the generating limits") {
  const auto truth = rates_from_limits_3level(7.5, 17.2, 6.0);
  const double kappa = 4.3e-4;
  std::vector<IntensityFit> series;
  for (double I : {5.0, 20.0, 60.0, 150.0, 400.0, 1000.0}) {
    auto rc = truth;
    rc.k_ge = kappa * I;
    series.push_back({I, g2_result(rc, 0.02)});
  }
  const auto fit = global_photophysics_fit(series, LevelModel::three_level);
  CHECK(fit["tau1_0"].value == doctest::Approx(7.5).epsilon(1e-6));
  CHECK(fit["tau2_inf"].value == doctest::Approx(17.2).epsilon(1e-6));
  CHECK(fit["c_inf"].value == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(fit["kappa"].value == doctest::Approx(kappa).epsilon(1e-6));
  CHECK(fit["inv_k_sg"].value == doctest::Approx(1.0 / truth.k_sg).epsilon(1e-6));
  CHECK(fit["sigma"].value == doctest::Approx(1.0955).epsilon(2e-3));
  CHECK(fit["inv_k_eg"].uncertainty > 0.0);
}

TEST_CASE("global four-level fit recovers the generating limits") {
  const auto dr = rates_from_limits_4level(6.7, 204.4, 14.9, 6.3);
  const double kappa = 3e-4;
  std::vector<IntensityFit> series;
  for (double I : {2.0, 10.0, 30.0, 80.0, 200.0, 600.0, 2000.0}) {
    auto rc = dr.rates;
    rc.k_ge = kappa * I;
    rc.k_sg = deshelving_rate(dr.d, dr.k_sg0, I, 44.0);
    series.push_back({I, g2_result(rc, 0.02)});
  }
  const auto fit = global_photophysics_fit(series, LevelModel::four_level);
  CHECK(fit["tau1_0"].value == doctest::Approx(6.7).epsilon(1e-5));
  CHECK(fit["tau2_0"].value == doctest::Approx(204.4).epsilon(1e-5));
  CHECK(fit["tau2_inf"].value == doctest::Approx(14.9).epsilon(1e-5));
  CHECK(fit["c_inf"].value == doctest::Approx(6.3).epsilon(1e-5));
  const auto lim = limits_from_fit(fit, LevelModel::four_level, 44.0);
  CHECK(*lim.d == doctest::Approx(dr.d).epsilon(1e-5));
}

TEST_CASE("global fit needs four intensities") {
  std::vector<IntensityFit> series;
  for (double I : {5.0, 50.0, 500.0}) {
    RateCoefficients<double> rc{4e-4 * I, 0.08, 0.05, 0.008};
    series.push_back({I, g2_result(rc, 0.02)});
  }
  CHECK_THROWS_AS(global_photophysics_fit(series, LevelModel::three_level), RankDeficiencyError);
}

TEST_CASE("saturation fit") {
  std::vector<SaturationPoint> pts;
  for (double I : {2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0}) {
    pts.push_back({I, 7800.0 * I / (44.0 + I), 15.9 * I + 309.0, 0.0, 0.0});
  }
  const auto fit = fit_saturation(pts);
  CHECK(fit["S_max"].value == doctest::Approx(7800.0).epsilon(1e-8));
  CHECK(fit["I0"].value == doctest::Approx(44.0).epsilon(1e-8));
  CHECK(fit["m"].value == doctest::Approx(15.9).epsilon(1e-8));
  CHECK(fit["b"].value == doctest::Approx(309.0).epsilon(1e-8));
  for (auto& p : pts) p.signal = 0.0;
  CHECK_THROWS_AS(fit_saturation(pts), RankDeficiencyError);
}

TEST_CASE("Lorentzian fits: sorting, single peak and warnings") {
  OdmrSpectrum s;
  for (double f = 15.0; f <= 90.0; f += 0.5) {
    auto lor = [&](double c, double w, double a) { return a * (w * w / 4) / ((f - c) * (f - c) + w * w / 4); };
    s.frequency_mhz.push_back(f);
    s.contrast_percent.push_back(lor(72.8, 12.0, 3.0) + lor(36.4, 6.0, 1.2));
  }
  const auto fit = fit_lorentzians(s, 2, {36.0, 72.0});
  CHECK(fit["center_1"].value == doctest::Approx(72.8).epsilon(1e-6));
  CHECK(fit["center_2"].value == doctest::Approx(36.4).epsilon(1e-6));
  CHECK(fit["fwhm_1"].value == doctest::Approx(12.0).epsilon(1e-6));
  CHECK(fit["amplitude_2"].value == doctest::Approx(1.2).epsilon(1e-6));

  OdmrSpectrum single = s;
  for (std::size_t i = 0; i < single.size(); ++i) {
    const double f = single.frequency_mhz[i];
    single.contrast_percent[i] = 3.0 * 36.0 / ((f - 72.0) * (f - 72.0) + 36.0);
  }
  const auto one = fit_lorentzians(single, 2);
  CHECK(std::abs(one["amplitude_2"].value) < 1e-6);
  const auto three = fit_lorentzians(single, 3);
  for (const char* c : {"center_1", "center_2", "center_3"}) {
    CHECK(three[c].value >= 15.0);
    CHECK(three[c].value <= 90.0);
  }
  CHECK_THROWS_AS(fit_lorentzians(single, 4), DomainError);
  OdmrSpectrum unsorted = s;
  std::swap(unsorted.frequency_mhz[0], unsorted.frequency_mhz[1]);
  CHECK_THROWS_AS(fit_lorentzians(unsorted, 2), DomainError);
}

TEST_CASE("power-law fits") {
  std::vector<PowerPoint> amp, lw;
  for (double P : {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5}) {
    amp.push_back({P, 3.51 * std::sqrt(P) / (0.59 + std::sqrt(P)), 0.0});
    lw.push_back({P, 10.0 + 35.9 * std::sqrt(P), 0.0});
  }
  const auto a = fit_amplitude_vs_power(amp, 1);
  CHECK(a["S_max"].value == doctest::Approx(3.51).epsilon(1e-8));
  CHECK(a["Lambda0"].value == doctest::Approx(0.59).epsilon(1e-8));
  const auto l = fit_linewidth_vs_power(lw);
  CHECK(l["LW0"].value == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(l["a"].value == doctest::Approx(35.9).epsilon(1e-10));
  CHECK(l["T2star"].value == doctest::Approx(31.83).epsilon(1e-3));
  CHECK(dephasing_time_ns(10.0) == doctest::Approx(31.831).epsilon(1e-4));
  CHECK_THROWS_AS(dephasing_time_ns(0.0), DomainError);
  CHECK_THROWS_AS(fit_amplitude_vs_power(amp, 3), DomainError);

  std::vector<PowerPoint> neg;
  for (double P : {0.1, 0.5, 1.0, 1.5}) neg.push_back({P, -1.0 + 20.0 * std::sqrt(P) + 0.3 * std::sin(7 * P), 0.0});
  const auto n = fit_linewidth_vs_power(neg);
  CHECK(!n.has("T2star"));
  CHECK(n.has("LW0_low"));
  CHECK(!n.warnings.empty());
}

#include "photospin/fit_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace photospin {

void OdmrSpectrum::validate() const {
  if (frequency_mhz.size() != contrast_percent.size()) {
    throw DomainError("spectrum frequency and contrast columns differ in length");
  }
  if (!sigma.empty() && sigma.size() != frequency_mhz.size()) {
    throw DomainError("spectrum sigma column has the wrong length");
  }
  for (std::size_t i = 1; i < frequency_mhz.size(); ++i) {
    if (!(frequency_mhz[i] > frequency_mhz[i - 1])) {
      throw DomainError("spectrum frequencies must be strictly increasing");
    }
  }
}

namespace {

// Weights from a sigma column; empty when any entry is unusable.
Eigen::VectorXd usable_sigma(const std::vector<double>& sigma, std::size_t n) {
  if (sigma.size() != n) return {};
  Eigen::VectorXd s(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) return {};
    s(static_cast<Eigen::Index>(i)) = sigma[i];
  }
  return s;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> moving_average(const std::vector<double>& v, int half) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t hi = std::min(v.size() - 1, i + half);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += v[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

void warn_on_high_correlation(FitResult& fit, double threshold = 0.95) {
  const auto& c = fit.covariance;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
      const double denom = std::sqrt(c(i, i) * c(j, j));
      if (!std::isfinite(denom) || denom <= 0.0) continue;
      const double r = c(i, j) / denom;
      if (std::abs(r) > threshold) {
        fit.warnings.push_back("high covariance between " + fit.parameters[static_cast<std::size_t>(i)].name +
                               " and " + fit.parameters[static_cast<std::size_t>(j)].name +
                               " (r = " + std::to_string(r) + "); peaks may be unresolved");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// g2

struct G2Internal {
  G2Model model;

  template <typename S>
  static VectorX<S> to_external(const VectorX<S>& u) {
    using std::exp;
    VectorX<S> p = u;
    p(0) = exp(u(0));
    p(1) = exp(u(0)) + exp(u(1));
    return p;
  }
  template <typename S>
  VectorX<S> operator()(const VectorX<S>& u) const {
    return model(to_external(u));
  }
};

}  // namespace

FitResult fit_g2(const CorrelationCurve& curve, const G2FitOptions& options) {
  std::vector<double> x, y, s;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (options.max_abs_delay_ns > 0.0 && std::abs(curve.delays_ns[k]) > options.max_abs_delay_ns) continue;
    x.push_back(curve.delays_ns[k]);
    y.push_back(curve.values[k]);
    s.push_back(k < curve.sigma.size() ? curve.sigma[k] : 0.0);
  }
  const std::size_t n_par = options.fit_visibility ? 5 : 4;
  if (x.size() < n_par + 2) throw DomainError("g2 fit needs more bins than parameters");

  // Starting point from the curve shape.
  const auto smooth = moving_average(y, 2);
  std::size_t i_min = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) <= 30.0 && smooth[i] < best) {
      best = smooth[i];
      i_min = i;
    }
  }
  const double tau0 = x[i_min];
  const double vis = std::clamp(1.0 - best, 0.1, 1.0);
  const double c0 = std::clamp(*std::max_element(smooth.begin(), smooth.end()) - 1.0, 0.02, 20.0);
  double t_half = 2.0;
  for (std::size_t i = i_min; i < x.size(); ++i) {
    if (smooth[i] >= 1.0 - 0.5 * (options.fit_visibility ? vis : 1.0)) {
      t_half = std::max(x[i] - tau0, 0.2);
      break;
    }
  }
  const double tau1 = std::clamp(t_half / std::numbers::ln2, 0.3, 100.0);

  auto start = [&](double tau2_factor) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(n_par));
    u(0) = std::log(tau1);
    u(1) = std::log(tau1 * (tau2_factor - 1.0));
    u(2) = c0;
    u(3) = tau0;
    if (options.fit_visibility) u(4) = vis;
    return u;
  };

  G2Internal internal{G2Model{x, options.fit_visibility}};
  std::vector<ParameterSpec> internal_specs = {
      {"log_tau1", ""}, {"log_tau2_minus_tau1", ""}, {"c", ""}, {"tau0", "ns"}};
  std::vector<ParameterSpec> specs = {{"tau1", "ns"}, {"tau2", "ns"}, {"c", ""}, {"tau0", "ns"}};
  if (options.fit_visibility) {
    internal_specs.push_back({"visibility", ""});
    specs.push_back({"visibility", ""});
  }
  FitOptions engine = options.engine;
  if (engine.extra_starts.empty()) engine.extra_starts = {start(15.0), start(60.0)};
  const FitResult raw = least_squares(internal, start(4.0), internal_specs, to_eigen(y),
                                      usable_sigma(s, s.size()), engine);
  FitResult fit = reparametrize(raw, [](const auto& u) { return G2Internal::to_external(u); }, specs);
  if (options.fit_visibility) {
    fit.derived.push_back(propagate(fit, "g2_min", "", [](const auto& p) { return 1.0 - p(4); }));
  } else {
    fit.derived.push_back({"g2_min", "", 0.0, 0.0});
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Global photophysics

namespace {

struct PhotophysicsModel {
  std::vector<double> intensity;
  std::vector<int> observed;  // index into (tau1, tau2, c) x intensity, in order
  LevelModel level = LevelModel::three_level;
  double I0_sat = 44.0;
  bool free_I0 = false;

  // External parameters from logarithms.
  template <typename S>
  static VectorX<S> to_external(const VectorX<S>& u) {
    using std::exp;
    VectorX<S> p(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) p(i) = exp(u(i));
    return p;
  }

  template <typename S>
  RateCoefficients<S> rates_at(const VectorX<S>& p, double I) const {
    RateCoefficients<S> rc;
    if (level == LevelModel::three_level) {
      rc = rates_from_limits_3level(p(0), p(1), p(2));
      rc.k_ge = p(3) * S(I);
    } else {
      const auto dr = rates_from_limits_4level(p(0), p(1), p(2), p(3));
      rc = dr.rates;
      rc.k_ge = p(4) * S(I);
      const S i0 = free_I0 ? p(5) : S(I0_sat);
      rc.k_sg = deshelving_rate(dr.d, dr.k_sg0, S(I), i0);
    }
    return rc;
  }

  template <typename S>
  VectorX<S> predict_external(const VectorX<S>& p) const {
    VectorX<S> all(static_cast<Eigen::Index>(3 * intensity.size()));
    for (std::size_t i = 0; i < intensity.size(); ++i) {
      const auto g = g2_parameters(rates_at(p, intensity[i]));
      all(static_cast<Eigen::Index>(3 * i)) = g.tau1;
      all(static_cast<Eigen::Index>(3 * i + 1)) = g.tau2;
      all(static_cast<Eigen::Index>(3 * i + 2)) = g.c;
    }
    VectorX<S> out(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t k = 0; k < observed.size(); ++k) out(static_cast<Eigen::Index>(k)) = all(observed[k]);
    return out;
  }

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& u) const {
    return predict_external(to_external(u));
  }
};

}  // namespace

FitResult global_photophysics_fit(const std::vector<IntensityFit>& series, LevelModel model,
                                  const GlobalFitOptions& options) {
  std::vector<IntensityFit> sorted = series;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.intensity < b.intensity; });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i].intensity != sorted[i - 1].intensity) ++distinct;
  }
  if (distinct < 4) {
    throw RankDeficiencyError(
        "global photophysics fit needs at least 4 distinct intensities (got " +
            std::to_string(distinct) + "); the asymptotic limits are not identifiable",
        "intensity");
  }

  PhotophysicsModel pm;
  pm.level = model;
  pm.I0_sat = options.I0_sat;
  pm.free_I0 = options.free_I0 && model == LevelModel::four_level;
  std::vector<double> data, sigma;
  const char* names[3] = {"tau1", "tau2", "c"};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].intensity > 0.0)) throw DomainError("intensities must be positive");
    pm.intensity.push_back(sorted[i].intensity);
    for (int q = 0; q < 3; ++q) {
      const auto& e = sorted[i].g2[names[q]];
      if (!(e.uncertainty > 0.0) || !std::isfinite(e.uncertainty) || !std::isfinite(e.value)) continue;
      pm.observed.push_back(static_cast<int>(3 * i + q));
      data.push_back(e.value);
      sigma.push_back(e.uncertainty);
    }
  }

  // Starting point from the extreme intensities.
  const auto& lo = sorted.front().g2;
  const auto& hi = sorted.back().g2;
  const double i_lo = sorted.front().intensity, i_hi = sorted.back().intensity;
  const double tau1_0 = lo["tau1"].value;
  const double tau2_inf = hi["tau2"].value;
  const double c_inf = std::max(hi["c"].value * 1.1, 0.1);
  const double kappa = std::max((1.0 / hi["tau1"].value - 1.0 / lo["tau1"].value) / (i_hi - i_lo), 1e-7);
  const double tau2_0 = std::max(lo["tau2"].value, 2.0 * tau2_inf);

  std::vector<ParameterSpec> specs;
  Eigen::VectorXd u0;
  if (model == LevelModel::three_level) {
    specs = {{"tau1_0", "ns"}, {"tau2_inf", "ns"}, {"c_inf", ""}, {"kappa", "ns^-1 cm^2/kW"}};
    u0 = Eigen::Vector4d(tau1_0, tau2_inf, c_inf, kappa).array().log();
  } else {
    specs = {{"tau1_0", "ns"}, {"tau2_0", "ns"}, {"tau2_inf", "ns"}, {"c_inf", ""}, {"kappa", "ns^-1 cm^2/kW"}};
    u0.resize(pm.free_I0 ? 6 : 5);
    u0.head<5>() << tau1_0, tau2_0, tau2_inf, c_inf, kappa;
    if (pm.free_I0) {
      specs.push_back({"I0_sat", "kW/cm^2"});
      u0(5) = options.I0_sat;
    }
    u0 = u0.array().log().matrix();
  }
  std::vector<ParameterSpec> internal_specs;
  for (const auto& sp : specs) internal_specs.push_back({"log_" + sp.name, ""});

  FitOptions engine = options.engine;
  if (engine.extra_starts.empty()) {
    const Eigen::Index k_idx = model == LevelModel::three_level ? 3 : 4;
    for (double f : {0.3, 3.0}) {
      Eigen::VectorXd u = u0;
      u(k_idx) += std::log(f);
      engine.extra_starts.push_back(u);
    }
  }
  const FitResult raw =
      least_squares(pm, u0, internal_specs, to_eigen(data), to_eigen(sigma), engine);
  FitResult fit =
      reparametrize(raw, [](const auto& u) { return PhotophysicsModel::to_external(u); }, specs);

  // Derived rates, inverse rates and cross section.
  const double wl = options.wavelength_nm;
  const double i0_fixed = options.I0_sat;
  auto cs_scale = [wl, i0_fixed](double i0) {
    return photon_energy_joule(wl) * 1e9 / (i0 * 1e3) / 1e-16;  // ns^-1 -> 1e-16 cm^2
  };
  if (model == LevelModel::three_level) {
    auto r = [](const auto& p) { return rates_from_limits_3level(p(0), p(1), p(2)); };
    fit.derived.push_back(propagate(fit, "k_eg", "ns^-1", [&](const auto& p) { return r(p).k_eg; }));
    fit.derived.push_back(propagate(fit, "k_es", "ns^-1", [&](const auto& p) { return r(p).k_es; }));
    fit.derived.push_back(propagate(fit, "k_sg", "ns^-1", [&](const auto& p) { return r(p).k_sg; }));
    fit.derived.push_back(propagate(fit, "inv_k_eg", "ns", [&](const auto& p) { return 1.0 / r(p).k_eg; }));
    fit.derived.push_back(propagate(fit, "inv_k_es", "ns", [&](const auto& p) { return 1.0 / r(p).k_es; }));
    fit.derived.push_back(propagate(fit, "inv_k_sg", "ns", [&](const auto& p) { return 1.0 / r(p).k_sg; }));
    const double scale = cs_scale(i0_fixed);
    fit.derived.push_back(propagate(fit, "sigma", "1e-16 cm^2", [&](const auto& p) {
      const auto rc = r(p);
      return rc.k_sg * (rc.k_eg + rc.k_es) / (rc.k_sg + rc.k_es) * scale;
    }));
  } else {
    auto r = [](const auto& p) { return rates_from_limits_4level(p(0), p(1), p(2), p(3)); };
    fit.derived.push_back(propagate(fit, "k_eg", "ns^-1", [&](const auto& p) { return r(p).rates.k_eg; }));
    fit.derived.push_back(propagate(fit, "k_es", "ns^-1", [&](const auto& p) { return r(p).rates.k_es; }));
    fit.derived.push_back(propagate(fit, "k_sg0", "ns^-1", [&](const auto& p) { return r(p).k_sg0; }));
    fit.derived.push_back(propagate(fit, "k_sg_inf", "ns^-1", [&](const auto& p) { return r(p).k_sg_inf; }));
    fit.derived.push_back(propagate(fit, "d", "ns^-1", [&](const auto& p) { return r(p).d; }));
    fit.derived.push_back(propagate(fit, "inv_k_eg", "ns", [&](const auto& p) { return 1.0 / r(p).rates.k_eg; }));
    fit.derived.push_back(propagate(fit, "inv_k_es", "ns", [&](const auto& p) { return 1.0 / r(p).rates.k_es; }));
    fit.derived.push_back(propagate(fit, "inv_k_sg0", "ns", [&](const auto& p) { return 1.0 / r(p).k_sg0; }));
    fit.derived.push_back(propagate(fit, "inv_k_sg_inf", "ns", [&](const auto& p) { return 1.0 / r(p).k_sg_inf; }));
    const bool free_i0 = pm.free_I0;
    fit.derived.push_back(propagate(fit, "sigma", "1e-16 cm^2", [&](const auto& p) {
      const auto dr = r(p);
      const auto& rc = dr.rates;
      using S = std::decay_t<decltype(rc.k_eg)>;
      const S i0 = free_i0 ? S(p(5)) : S(i0_fixed);
      return dr.k_sg_inf * (rc.k_eg + rc.k_es) / (dr.k_sg_inf + rc.k_es) *
             S(photon_energy_joule(wl) * 1e9 / 1e3 / 1e-16) / i0;
    }));
  }
  return fit;
}

PhotophysicsLimits limits_from_fit(const FitResult& global, LevelModel model, double I0_sat) {
  PhotophysicsLimits lim;
  lim.tau1_0 = global["tau1_0"].value;
  lim.tau2_inf = global["tau2_inf"].value;
  lim.c_inf = global["c_inf"].value;
  lim.I0_sat = global.has("I0_sat") ? global["I0_sat"].value : I0_sat;
  if (model == LevelModel::four_level) {
    lim.tau2_0 = global["tau2_0"].value;
    lim.d = global["d"].value;
  }
  return lim;
}

// ---------------------------------------------------------------------------
// Saturation

FitResult fit_saturation(std::span<const SaturationPoint> points, const FitOptions& options) {
  if (points.size() < 4) throw DomainError("saturation fit needs at least 4 intensities");
  std::vector<double> I, sig, bg, s_sig, s_bg;
  for (const auto& pt : points) {
    I.push_back(pt.intensity);
    sig.push_back(pt.signal);
    bg.push_back(pt.background);
    s_sig.push_back(pt.signal_sigma);
    s_bg.push_back(pt.background_sigma);
  }
  if (std::all_of(sig.begin(), sig.end(), [](double v) { return v == 0.0; })) {
    throw RankDeficiencyError("signal is identically zero; saturation parameters are degenerate", "I0");
  }

  std::vector<double> sorted_i = I;
  std::sort(sorted_i.begin(), sorted_i.end());
  const double s_max0 = 1.2 * *std::max_element(sig.begin(), sig.end());
  const double i0_0 = std::max(sorted_i[sorted_i.size() / 2], 1e-6);
  const FitResult sat = least_squares(SaturationModel{I}, Eigen::Vector2d(s_max0, i0_0),
                                      {{"S_max", "counts/s"}, {"I0", "kW/cm^2"}}, to_eigen(sig),
                                      usable_sigma(s_sig, sig.size()), options);
  const FitResult lin = least_squares(LineModel{I}, Eigen::Vector2d(bg.front(), 0.0),
                                      {{"b", "counts/s"}, {"m", "counts cm^2/(kW s)"}}, to_eigen(bg),
                                      usable_sigma(s_bg, bg.size()), options);

  FitResult out;
  out.parameters = {sat.parameters[0], sat.parameters[1], lin.parameters[1], lin.parameters[0]};
  out.covariance = Eigen::MatrixXd::Zero(4, 4);
  out.covariance.topLeftCorner<2, 2>() = sat.covariance;
  out.covariance(2, 2) = lin.covariance(1, 1);
  out.covariance(3, 3) = lin.covariance(0, 0);
  out.covariance(2, 3) = out.covariance(3, 2) = lin.covariance(0, 1);
  out.residual_norm = sat.residual_norm + lin.residual_norm;
  out.converged = sat.converged && lin.converged;
  out.iterations = sat.iterations + lin.iterations;
  out.dof = sat.dof + lin.dof;
  out.warnings = sat.warnings;
  out.warnings.insert(out.warnings.end(), lin.warnings.begin(), lin.warnings.end());
  return out;
}

// ---------------------------------------------------------------------------
// Lorentzians

namespace {

/// Center k stays inside [lo_k, hi_k]: center = lo + (hi - lo) / (1 + e^-u).
struct LorentzInternal {
  LorentzianSumModel model;
  std::vector<double> lo, hi;

  template <typename S>
  VectorX<S> to_external(const VectorX<S>& u) const {
    using std::exp;
    VectorX<S> p = u;
    for (std::size_t k = 0; k < lo.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(3 * k);
      p(i) = S(lo[k]) + S(hi[k] - lo[k]) / (S(1) + exp(-u(i)));
      p(i + 1) = exp(u(i + 1));
    }
    return p;
  }
  double to_internal_center(std::size_t k, double center) const {
    const double x = std::clamp((center - lo[k]) / (hi[k] - lo[k]), 1e-3, 1.0 - 1e-3);
    return std::log(x / (1.0 - x));
  }
  template <typename S>
  VectorX<S> operator()(const VectorX<S>& u) const {
    return model(to_external(u));
  }
};

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double w = (at - x[j - 1]) / (x[j] - x[j - 1]);
  return (1.0 - w) * y[j - 1] + w * y[j];
}

}  // namespace

FitResult fit_lorentzians(const OdmrSpectrum& spectrum, int n_peaks, std::vector<double> seeds,
                          const FitOptions& options) {
  spectrum.validate();
  if (n_peaks != 2 && n_peaks != 3) throw DomainError("Lorentzian fit supports 2 or 3 peaks");
  if (spectrum.size() < static_cast<std::size_t>(3 * n_peaks + 2)) {
    throw DomainError("spectrum has too few points for the Lorentzian fit");
  }
  if (seeds.empty()) seeds = {72.0, 36.0, 24.0};
  if (seeds.size() < static_cast<std::size_t>(n_peaks)) throw DomainError("not enough peak seeds");
  seeds.resize(static_cast<std::size_t>(n_peaks));

  const auto& f = spectrum.frequency_mhz;
  const auto smooth = moving_average(spectrum.contrast_percent, 1);
  const double span = f.back() - f.front();
  // Each center is confined between the midpoints to its neighbouring seeds.
  std::vector<std::size_t> by_seed(seeds.size());
  std::iota(by_seed.begin(), by_seed.end(), std::size_t{0});
  std::sort(by_seed.begin(), by_seed.end(), [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });
  LorentzInternal internal{LorentzianSumModel{f, n_peaks}, std::vector<double>(seeds.size(), f.front()),
                           std::vector<double>(seeds.size(), f.back())};
  for (std::size_t r = 0; r + 1 < by_seed.size(); ++r) {
    const double mid = 0.5 * (seeds[by_seed[r]] + seeds[by_seed[r + 1]]);
    internal.hi[by_seed[r]] = std::clamp(mid, f.front(), f.back());
    internal.lo[by_seed[r + 1]] = std::clamp(mid, f.front(), f.back());
  }
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (!(internal.hi[k] > internal.lo[k])) throw DomainError("peak seeds must be distinct and inside the spectrum");
  }
  auto start = [&](double width) {
    Eigen::VectorXd u(3 * n_peaks);
    for (int k = 0; k < n_peaks; ++k) {
      u(3 * k) = internal.to_internal_center(static_cast<std::size_t>(k), seeds[static_cast<std::size_t>(k)]);
      u(3 * k + 1) = std::log(std::min(width, span));
      u(3 * k + 2) = interpolate(f, smooth, seeds[static_cast<std::size_t>(k)]);
    }
    return u;
  };
  std::vector<ParameterSpec> internal_specs, specs;
  for (int k = 1; k <= n_peaks; ++k) {
    const std::string s = std::to_string(k);
    internal_specs.insert(internal_specs.end(), {{"logit_center_" + s, ""}, {"log_fwhm_" + s, ""}, {"amplitude_" + s, "%"}});
    specs.insert(specs.end(), {{"center_" + s, "MHz"}, {"fwhm_" + s, "MHz"}, {"amplitude_" + s, "%"}});
  }
  FitOptions engine = options;
  engine.singular_is_warning = true;
  if (engine.extra_starts.empty()) engine.extra_starts = {start(1.5), start(15.0)};
  const FitResult raw = least_squares(internal, start(5.0),
                                      internal_specs, to_eigen(spectrum.contrast_percent),
                                      usable_sigma(spectrum.sigma, spectrum.size()), engine);
  FitResult fit = reparametrize(raw, [&](const auto& u) { return internal.to_external(u); }, specs);

  // Sort peaks by center, descending.
  std::vector<int> order(static_cast<std::size_t>(n_peaks));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return fit.parameters[static_cast<std::size_t>(3 * a)].value > fit.parameters[static_cast<std::size_t>(3 * b)].value;
  });
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3 * n_peaks);
  std::vector<Estimate> params(fit.parameters.size());
  for (int k = 0; k < n_peaks; ++k) {
    for (int j = 0; j < 3; ++j) {
      const int from = 3 * order[static_cast<std::size_t>(k)] + j;
      const int to = 3 * k + j;
      perm.indices()(from) = to;
      params[static_cast<std::size_t>(to)] = fit.parameters[static_cast<std::size_t>(from)];
      params[static_cast<std::size_t>(to)].name = specs[static_cast<std::size_t>(to)].name;
    }
  }
  fit.parameters = params;
  fit.covariance = perm * fit.covariance * perm.transpose();
  warn_on_high_correlation(fit);
  return fit;
}

// ---------------------------------------------------------------------------
// RF power laws

FitResult fit_amplitude_vs_power(std::span<const PowerPoint> points, int exponent,
                                 const FitOptions& options) {
  if (exponent != 1 && exponent != 2) throw DomainError("amplitude exponent must be 1 or 2");
  if (points.size() < 3) throw DomainError("amplitude fit needs at least 3 powers");
  std::vector<double> P, S, sig;
  for (const auto& pt : points) {
    if (!(pt.x >= 0.0)) throw DomainError("RF power must be nonnegative");
    P.push_back(pt.x);
    S.push_back(pt.value);
    sig.push_back(pt.sigma);
  }
  std::vector<double> xs;
  for (double p : P) xs.push_back(std::pow(p, 0.5 * exponent));
  std::sort(xs.begin(), xs.end());
  const double s_max0 = 1.2 * *std::max_element(S.begin(), S.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  const Eigen::Vector2d p0(s_max0, std::max(xs[xs.size() / 2], 1e-3));
  FitOptions engine = options;
  if (engine.extra_starts.empty()) {
    engine.extra_starts = {Eigen::Vector2d(s_max0, 0.2 * p0(1)), Eigen::Vector2d(2.0 * s_max0, 3.0 * p0(1))};
  }
  FitResult fit = least_squares(PowerSaturationModel{P, exponent}, p0,
                                {{"S_max", "%"}, {"Lambda0", exponent == 1 ? "W^1/2" : "W"}},
                                to_eigen(S), usable_sigma(sig, S.size()), engine);
  fit.derived.push_back({"c", "", static_cast<double>(exponent), 0.0});
  return fit;
}

double dephasing_time_ns(double lw0_mhz) {
  if (!(lw0_mhz > 0.0)) throw DomainError("dephasing time needs a positive linewidth");
  return 1e3 / (std::numbers::pi * lw0_mhz);
}

namespace {

FitResult fit_line(std::span<const PowerPoint> points, bool sqrt_abscissa, const char* slope_name,
                   const char* slope_unit, const FitOptions& options) {
  if (points.size() < 3) throw DomainError("linewidth fit needs at least 3 points");
  std::vector<double> x, y, s;
  for (const auto& pt : points) {
    if (!(pt.x >= 0.0)) throw DomainError("linewidth abscissa must be nonnegative");
    x.push_back(sqrt_abscissa ? std::sqrt(pt.x) : pt.x);
    y.push_back(pt.value);
    s.push_back(pt.sigma);
  }
  FitResult fit = least_squares(LineModel{x}, Eigen::Vector2d(y.front(), 0.0),
                                {{"LW0", "MHz"}, {slope_name, slope_unit}}, to_eigen(y),
                                usable_sigma(s, y.size()), options);
  const auto& lw0 = fit["LW0"];
  if (lw0.value > 0.0) {
    fit.derived.push_back(propagate(fit, "T2star", "ns", [](const auto& p) {
      return 1e3 / (std::numbers::pi * p(0));
    }));
  } else {
    fit.warnings.push_back("fitted LW0 is not positive; T2* undefined");
  }
  fit.derived.push_back({"LW0_low", "MHz", lw0.value - lw0.uncertainty, 0.0});
  fit.derived.push_back({"LW0_high", "MHz", lw0.value + lw0.uncertainty, 0.0});
  return fit;
}

}  // namespace

FitResult fit_linewidth_vs_power(std::span<const PowerPoint> points, const FitOptions& options) {
  return fit_line(points, true, "a", "MHz/W^1/2", options);
}

FitResult fit_linewidth_vs_coupling(std::span<const PowerPoint> points, const FitOptions& options) {
  return fit_line(points, false, "a1", "", options);
}

}  // namespace photospin

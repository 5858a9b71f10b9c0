#pragma once

// The concrete fit models: per-curve g2, the intensity-global photophysics
// fit, PL saturation, multi-Lorentzian ODMR spectra and the RF power laws.

#include <span>
#include <vector>

#include "photospin/correlator.hpp"
#include "photospin/least_squares.hpp"
#include "photospin/ratemodel.hpp"

namespace photospin {

/// Delta PL / PL in percent versus RF frequency.
struct OdmrSpectrum {
  std::vector<double> frequency_mhz;
  std::vector<double> contrast_percent;
  std::vector<double> sigma;  ///< zeros or empty: unknown
  double rf_power_w = 0.0;
  double laser_intensity = 0.0;  ///< kW/cm^2

  std::size_t size() const { return frequency_mhz.size(); }
  /// Throws DomainError unless the frequency axis is strictly increasing.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Model functors. Each maps a parameter vector to predictions at its abscissae.

/// g2 with delay offset and optional visibility:
/// 1 - V [(1+c) e^{-|t-t0|/tau1} - c e^{-|t-t0|/tau2}].
/// Parameters (tau1, tau2, c, tau0[, V]).
struct G2Model {
  std::vector<double> delays_ns;
  bool with_visibility = false;

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    using std::abs;
    using std::exp;
    VectorX<S> out(static_cast<Eigen::Index>(delays_ns.size()));
    const S vis = with_visibility ? p(4) : S(1);
    for (std::size_t i = 0; i < delays_ns.size(); ++i) {
      const S t = abs(S(delays_ns[i]) - p(3));
      out(static_cast<Eigen::Index>(i)) =
          S(1) - vis * ((S(1) + p(2)) * exp(-t / p(0)) - p(2) * exp(-t / p(1)));
    }
    return out;
  }
};

/// S_max I / (I0 + I). Parameters (S_max, I0).
struct SaturationModel {
  std::vector<double> intensity;

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    VectorX<S> out(static_cast<Eigen::Index>(intensity.size()));
    for (std::size_t i = 0; i < intensity.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = p(0) * S(intensity[i]) / (p(1) + S(intensity[i]));
    }
    return out;
  }
};

/// slope x + intercept. Parameters (intercept, slope).
struct LineModel {
  std::vector<double> x;

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    VectorX<S> out(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<Eigen::Index>(i)) = p(0) + p(1) * S(x[i]);
    return out;
  }
};

/// Sum of Lorentzians, parameters per peak (center, fwhm, amplitude).
struct LorentzianSumModel {
  std::vector<double> frequency_mhz;
  int n_peaks = 2;

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    VectorX<S> out = VectorX<S>::Constant(static_cast<Eigen::Index>(frequency_mhz.size()), S(0));
    for (std::size_t i = 0; i < frequency_mhz.size(); ++i) {
      S sum(0);
      for (int k = 0; k < n_peaks; ++k) {
        const S hw = p(3 * k + 1) / S(2);
        const S df = S(frequency_mhz[i]) - p(3 * k);
        sum += p(3 * k + 2) * hw * hw / (df * df + hw * hw);
      }
      out(static_cast<Eigen::Index>(i)) = sum;
    }
    return out;
  }
};

/// S_max P^{c/2} / (Lambda0 + P^{c/2}). Parameters (S_max, Lambda0).
struct PowerSaturationModel {
  std::vector<double> power_w;
  int exponent = 1;

  template <typename S>
  VectorX<S> operator()(const VectorX<S>& p) const {
    VectorX<S> out(static_cast<Eigen::Index>(power_w.size()));
    for (std::size_t i = 0; i < power_w.size(); ++i) {
      const double x = std::pow(power_w[i], 0.5 * exponent);
      out(static_cast<Eigen::Index>(i)) = p(0) * S(x) / (p(1) + S(x));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Fits

struct G2FitOptions {
  /// Adds a visibility V so that the fitted minimum is 1 - V; use for curves
  /// with uncorrected background.
  bool fit_visibility = false;
  /// Only bins with |delay| <= this take part (0: all).
  double max_abs_delay_ns = 0.0;
  FitOptions engine;
};

/// Fits (tau1, tau2, c, tau0) with tau1 < tau2 enforced through
/// tau1 = e^u, tau2 = e^u + e^v. Derived: "g2_min" = model value at tau0.
FitResult fit_g2(const CorrelationCurve& curve, const G2FitOptions& options = {});

struct IntensityFit {
  double intensity = 0.0;  ///< kW/cm^2
  FitResult g2;            ///< from fit_g2
};

struct GlobalFitOptions {
  double I0_sat = 44.0;  ///< kW/cm^2, enters k_sg(I) of the four-level model
  bool free_I0 = false;
  double wavelength_nm = 785.0;  ///< for the derived cross section
  FitOptions engine;
};

/// Simultaneous fit of tau1(I), tau2(I), c(I) through the eigensystem with
/// k_ge = kappa I. Parameters: (tau1_0, tau2_inf, c_inf, kappa) for the
/// three-level model, (tau1_0, tau2_0, tau2_inf, c_inf, kappa[, I0_sat])
/// for the four-level model. Derived rates and inverse rates carry
/// delta-method uncertainties. Needs at least four intensities.
FitResult global_photophysics_fit(const std::vector<IntensityFit>& series, LevelModel model,
                                  const GlobalFitOptions& options = {});

/// Limits struct filled from a global fit result.
PhotophysicsLimits limits_from_fit(const FitResult& global, LevelModel model, double I0_sat);

struct SaturationPoint {
  double intensity = 0.0;   ///< kW/cm^2
  double signal = 0.0;      ///< counts/s
  double background = 0.0;  ///< counts/s
  double signal_sigma = 0.0;      ///< 0: unweighted
  double background_sigma = 0.0;  ///< 0: unweighted
};

/// S = S_max I / (I0 + I) on the signal and m I + b on the background.
/// Parameters (S_max, I0, m, b).
FitResult fit_saturation(std::span<const SaturationPoint> points, const FitOptions& options = {});

/// Sum of 2 or 3 Lorentzians. Parameters center_k, fwhm_k, amplitude_k with
/// k = 1 for the highest center. Empty `seeds` means 72/36/24 MHz. Each
/// center is confined between the midpoints to the neighbouring seeds (or
/// the spectrum edge).
FitResult fit_lorentzians(const OdmrSpectrum& spectrum, int n_peaks,
                          std::vector<double> seeds = {}, const FitOptions& options = {});

struct PowerPoint {
  double x = 0.0;      ///< RF power in W, or coupling in MHz
  double value = 0.0;  ///< amplitude (%) or linewidth (MHz)
  double sigma = 0.0;  ///< 0: unweighted
};

/// S(P) = S_max P^{c/2} / (Lambda0 + P^{c/2}) with c = exponent in {1, 2}.
FitResult fit_amplitude_vs_power(std::span<const PowerPoint> points, int exponent,
                                 const FitOptions& options = {});

/// LW = LW0 + a sqrt(P). Derived "T2star" = 1 / (pi LW0) in ns; for
/// LW0 <= 0 a warning and the 1-sigma interval "LW0_low"/"LW0_high".
FitResult fit_linewidth_vs_power(std::span<const PowerPoint> points, const FitOptions& options = {});

/// LW = LW0 + a1 Omega1, the same straight line with the coupling as abscissa.
FitResult fit_linewidth_vs_coupling(std::span<const PowerPoint> points,
                                    const FitOptions& options = {});

/// T2* in ns for a zero-power linewidth in MHz.
double dephasing_time_ns(double lw0_mhz);

}  // namespace photospin

#include "photospin/ratemodel.hpp"

namespace photospin {

namespace {
constexpr double kPlanck = 6.62607015e-34;      // J s
constexpr double kSpeedOfLight = 299792458.0;  // m/s
}  // namespace

RateCoefficients<double> effective_rates(const RateCoefficients<double>& rc, LevelModel model,
                                         double intensity,
                                         const std::optional<PhotophysicsLimits>& limits) {
  validate(rc);
  if (model == LevelModel::three_level) return rc;
  if (!limits || !limits->d || !limits->I0_sat) {
    throw ConfigurationError("four-level generator needs limits with d and I0_sat");
  }
  if (!(intensity >= 0.0) || !(*limits->I0_sat > 0.0) || *limits->d < 0.0) {
    throw DomainError("four-level generator needs intensity >= 0, I0_sat > 0, d >= 0");
  }
  RateCoefficients<double> out = rc;
  out.k_sg = deshelving_rate(*limits->d, rc.k_sg, intensity, *limits->I0_sat);
  return out;
}

Eigen::Matrix3d build_generator(const RateCoefficients<double>& rc, LevelModel model,
                                double intensity,
                                const std::optional<PhotophysicsLimits>& limits) {
  return build_generator(effective_rates(rc, model, intensity, limits));
}

RateCoefficients<double> rates_from_limits_3level(const PhotophysicsLimits& limits) {
  return rates_from_limits_3level(limits.tau1_0, limits.tau2_inf, limits.c_inf);
}

DeshelvingRates<double> rates_from_limits_4level(const PhotophysicsLimits& limits) {
  if (!limits.tau2_0) {
    throw ConfigurationError("4-level rate extraction needs tau2_0");
  }
  return rates_from_limits_4level(limits.tau1_0, *limits.tau2_0, limits.tau2_inf, limits.c_inf);
}

double photon_energy_joule(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  return kPlanck * kSpeedOfLight / (wavelength_nm * 1e-9);
}

double cross_section(const RateCoefficients<double>& rc, double I0_sat_kw_cm2,
                     double wavelength_nm) {
  if (!(I0_sat_kw_cm2 > 0.0)) throw DomainError("saturation intensity must be positive");
  if (!(rc.k_sg > 0.0) || !(rc.k_eg > 0.0) || rc.k_es < 0.0) {
    throw DomainError("cross section needs k_eg, k_sg > 0 and k_es >= 0");
  }
  // Pump rate at saturation divided by n_g there, in s^-1.
  const double pump_per_ground = rc.k_sg * (rc.k_eg + rc.k_es) / (rc.k_sg + rc.k_es) * 1e9;
  const double intensity_w_cm2 = I0_sat_kw_cm2 * 1e3;
  return pump_per_ground * photon_energy_joule(wavelength_nm) / intensity_w_cm2;
}

Eigen::Matrix3d closed_form_eigenvectors(const RateCoefficients<double>& rc) {
  validate(rc);
  if (!(rc.k_es > 0.0)) throw DomainError("closed-form eigenvectors need k_es > 0");
  const double ge = rc.k_ge, eg = rc.k_eg, es = rc.k_es, sg = rc.k_sg;
  const double s = ge + eg + es;
  const double disc = (s - sg) * (s - sg) - 4.0 * es * ge;
  if (disc < 0.0) throw OscillatoryRegimeError("rate matrix has complex eigenvalues");
  const double h = std::sqrt(disc);

  Eigen::Matrix3d v;
  v.col(0) << sg * (eg + es) / (es * ge), sg / es, 1.0;
  for (int k = 0; k < 2; ++k) {
    const double hk = k == 0 ? h : -h;
    const double f = (hk + eg - es + ge - sg) / (2.0 * es);
    const double g = (hk + eg + es + ge - sg) / (2.0 * es);
    v.col(k + 1) << -f, g, -1.0;
  }
  return v;
}

}  // namespace photospin

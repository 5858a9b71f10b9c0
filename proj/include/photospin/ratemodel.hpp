#pragma once

// Three- and four-level electronic rate model of an optically pumped color
// center: generator matrix, closed-form eigensystem, stationary state,
// analytic g2(tau) and the asymptotic-limit inversions.
//
// Rates are in ns^-1, times in ns, intensities in kW/cm^2. The closed-form
// routines are templated on the scalar so that fits can differentiate
// through them with Eigen::AutoDiffScalar.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "photospin/errors.hpp"
#include "photospin/scalar.hpp"

namespace photospin {

enum class LevelModel { three_level, four_level };

/// Level order everywhere is (G, E, S): ground, excited, shelving.
template <typename Scalar = double>
struct RateCoefficients {
  Scalar k_ge{};  ///< pump rate G -> E
  Scalar k_eg{};  ///< radiative decay E -> G
  Scalar k_es{};  ///< intersystem crossing E -> S
  Scalar k_sg{};  ///< shelf decay S -> G

  template <typename Other>
  RateCoefficients<Other> cast() const {
    return {Other(k_ge), Other(k_eg), Other(k_es), Other(k_sg)};
  }
};

template <typename Scalar = double>
struct LevelPopulations {
  Scalar n_g{};
  Scalar n_e{};
  Scalar n_s{};

  Eigen::Matrix<Scalar, 3, 1> vector() const { return {n_g, n_e, n_s}; }
};

template <typename Scalar = double>
struct EigenSystem {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

  Vector3 lambda;  ///< decay constants (0, lambda1, lambda2), lambda1 >= lambda2
  Scalar tau1{};   ///< 1/lambda1, antibunching time
  Scalar tau2{};   ///< 1/lambda2, bunching time
  Scalar A{};
  Scalar B{};
  Matrix3 eigvecs;  ///< column i satisfies M v = -lambda_i v, order (G, E, S)
};

/// The three parameters of the analytic correlation function.
template <typename Scalar = double>
struct G2Parameters {
  Scalar tau1{};
  Scalar tau2{};
  Scalar c{};
};

/// Asymptotic fit parameters linking per-intensity g2 fits and rates.
struct PhotophysicsLimits {
  double tau1_0 = 0;    ///< ns, low-intensity antibunching time
  double tau2_inf = 0;  ///< ns, high-intensity bunching time
  double c_inf = 0;     ///< high-intensity bunching amplitude
  std::optional<double> tau2_0;  ///< ns, low-intensity bunching time (4-level)
  std::optional<double> d;       ///< ns^-1, deshelving amplitude (4-level)
  std::optional<double> I0_sat;  ///< kW/cm^2
};

/// Output of the four-level inversion. `rates.k_sg` holds k_sg^0 and
/// `rates.k_ge` is left at zero.
template <typename Scalar = double>
struct DeshelvingRates {
  RateCoefficients<Scalar> rates;
  Scalar d{};
  Scalar k_sg0{};
  Scalar k_sg_inf{};
};

// ---------------------------------------------------------------------------
// Validation

/// Throws DomainError unless k_ge, k_eg, k_sg are finite and positive and
/// k_es is finite and nonnegative (k_es = 0 switches the shelf off).
template <typename Scalar>
void validate(const RateCoefficients<Scalar>& rc) {
  const double ge = value_of(rc.k_ge), eg = value_of(rc.k_eg);
  const double es = value_of(rc.k_es), sg = value_of(rc.k_sg);
  auto bad = [](double k) { return !std::isfinite(k) || k <= 0.0; };
  if (bad(ge) || bad(eg) || bad(sg) || !std::isfinite(es) || es < 0.0) {
    throw DomainError("rate coefficients must be finite and positive (k_ge=" +
                      std::to_string(ge) + ", k_eg=" + std::to_string(eg) +
                      ", k_es=" + std::to_string(es) + ", k_sg=" + std::to_string(sg) + ")");
  }
}

/// (k_eg + k_es) > k_sg, required for the limit inversions to be meaningful.
template <typename Scalar>
bool satisfies_side_condition(const RateCoefficients<Scalar>& rc) {
  return value_of(rc.k_eg) + value_of(rc.k_es) > value_of(rc.k_sg);
}

// ---------------------------------------------------------------------------
// Generator

/// Column-stochastic rate matrix M with dn/dt = M n.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> build_generator(const RateCoefficients<Scalar>& rc) {
  validate(rc);
  Eigen::Matrix<Scalar, 3, 3> m;
  m << -rc.k_ge, rc.k_eg, rc.k_sg,
       rc.k_ge, -rc.k_eg - rc.k_es, Scalar(0),
       Scalar(0), rc.k_es, -rc.k_sg;
  return m;
}

/// k_sg(I) = d I / (I + I0) + k_sg0
template <typename Scalar>
Scalar deshelving_rate(const Scalar& d, const Scalar& k_sg0, const Scalar& intensity,
                       const Scalar& I0) {
  return d * intensity / (intensity + I0) + k_sg0;
}

/// Rates actually in effect at `intensity`. For the four-level model rc.k_sg
/// is read as k_sg^0 and replaced by k_sg(I); `limits` must carry d and I0.
RateCoefficients<double> effective_rates(const RateCoefficients<double>& rc, LevelModel model,
                                         double intensity,
                                         const std::optional<PhotophysicsLimits>& limits);

Eigen::Matrix3d build_generator(const RateCoefficients<double>& rc, LevelModel model,
                                double intensity,
                                const std::optional<PhotophysicsLimits>& limits);

// ---------------------------------------------------------------------------
// Closed forms

namespace detail {

// Eigenvector of M for eigenvalue -lambda, built from two row relations;
// whichever of the two candidates is better conditioned is returned.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rate_eigvec(const RateCoefficients<Scalar>& rc, const Scalar& lambda) {
  using Vec = Eigen::Matrix<Scalar, 3, 1>;
  const Scalar a = rc.k_eg + rc.k_es - lambda;
  Vec from_shelf(a * (rc.k_sg - lambda), rc.k_ge * (rc.k_sg - lambda), rc.k_ge * rc.k_es);
  Vec from_ground(a, rc.k_ge, ((rc.k_ge - lambda) * a - rc.k_eg * rc.k_ge) / rc.k_sg);
  const double n1 = value_of(from_shelf.norm());
  const double n2 = value_of(from_ground.norm());
  Vec v = n1 >= n2 ? from_shelf : from_ground;
  return v / v.norm();
}

}  // namespace detail

/// Eigenvalues, time constants and eigenvectors of the three-level generator.
/// Throws OscillatoryRegimeError when A^2 < 4B.
template <typename Scalar>
EigenSystem<Scalar> eigensystem(const RateCoefficients<Scalar>& rc) {
  using std::sqrt;
  validate(rc);
  EigenSystem<Scalar> es;
  const Scalar s = rc.k_ge + rc.k_eg + rc.k_es;
  es.A = s + rc.k_sg;
  es.B = rc.k_sg * s + rc.k_es * rc.k_ge;
  // A^2 - 4B rewritten without the cancellation of the naive form.
  const Scalar disc = (s - rc.k_sg) * (s - rc.k_sg) - Scalar(4) * rc.k_es * rc.k_ge;
  if (value_of(disc) < 0.0) {
    throw OscillatoryRegimeError("rate matrix has complex eigenvalues (A^2 - 4B = " +
                                 std::to_string(value_of(disc)) + ")");
  }
  const Scalar lambda1 = (es.A + sqrt(disc)) / Scalar(2);
  // lambda1 * lambda2 = B; avoids cancellation in (A - sqrt) / 2.
  const Scalar lambda2 = es.B / lambda1;
  es.lambda << Scalar(0), lambda1, lambda2;
  es.tau1 = Scalar(1) / lambda1;
  es.tau2 = Scalar(1) / lambda2;
  for (int i = 0; i < 3; ++i) {
    es.eigvecs.col(i) = detail::rate_eigvec(rc, es.lambda(i));
  }
  return es;
}

template <typename Scalar>
LevelPopulations<Scalar> stationary_state(const RateCoefficients<Scalar>& rc) {
  validate(rc);
  const Scalar b = rc.k_sg * (rc.k_eg + rc.k_es + rc.k_ge) + rc.k_es * rc.k_ge;
  return {rc.k_sg * (rc.k_eg + rc.k_es) / b, rc.k_ge * rc.k_sg / b, rc.k_es * rc.k_ge / b};
}

/// g2(tau) = 1 - (1+c) exp(-|tau|/tau1) + c exp(-|tau|/tau2)
template <typename Scalar, typename Tau>
auto g2_analytic(const Scalar& tau1, const Scalar& tau2, const Scalar& c, const Tau& tau) {
  using std::abs;
  using std::exp;
  const auto t = abs(tau);
  return Scalar(1) - (Scalar(1) + c) * exp(-t / tau1) + c * exp(-t / tau2);
}

/// c = (1 - tau2 k_sg) / (k_sg (tau2 - tau1)); throws DegeneracyError for tau1 == tau2.
template <typename Scalar>
Scalar bunching_amplitude(const EigenSystem<Scalar>& es, const Scalar& k_sg) {
  const double gap = value_of(es.tau2) - value_of(es.tau1);
  if (!(std::abs(gap) > 1e-14 * value_of(es.tau2))) {
    throw DegeneracyError("bunching amplitude undefined for tau1 == tau2");
  }
  return (Scalar(1) - es.tau2 * k_sg) / (k_sg * (es.tau2 - es.tau1));
}

template <typename Scalar>
Scalar bunching_amplitude(const RateCoefficients<Scalar>& rc) {
  return bunching_amplitude(eigensystem(rc), rc.k_sg);
}

template <typename Scalar>
G2Parameters<Scalar> g2_parameters(const RateCoefficients<Scalar>& rc) {
  const auto es = eigensystem(rc);
  return {es.tau1, es.tau2, bunching_amplitude(es, rc.k_sg)};
}

// ---------------------------------------------------------------------------
// Limit inversions

/// Three-level rates from (tau1^0, tau2^inf, c^inf). k_ge is left at zero.
template <typename Scalar>
RateCoefficients<Scalar> rates_from_limits_3level(const Scalar& tau1_0, const Scalar& tau2_inf,
                                                  const Scalar& c_inf) {
  if (!(value_of(tau1_0) > 0.0) || !(value_of(tau2_inf) > 0.0) || !(value_of(c_inf) >= 0.0)) {
    throw DomainError("3-level limits need tau1_0 > 0, tau2_inf > 0, c_inf >= 0");
  }
  RateCoefficients<Scalar> rc;
  rc.k_ge = Scalar(0);
  rc.k_sg = Scalar(1) / ((Scalar(1) + c_inf) * tau2_inf);
  rc.k_es = rc.k_sg * c_inf;
  rc.k_eg = Scalar(1) / tau1_0 - rc.k_es;
  if (!(value_of(rc.k_eg) > 0.0)) {
    throw InconsistentLimitsError("limits give k_eg <= 0 (k_eg = " +
                                  std::to_string(value_of(rc.k_eg)) + " ns^-1)");
  }
  if (!satisfies_side_condition(rc)) {
    throw InconsistentLimitsError("limits violate (k_eg + k_es) > k_sg");
  }
  return rc;
}

/// Four-level rates from (tau1^0, tau2^0, tau2^inf, c^inf).
template <typename Scalar>
DeshelvingRates<Scalar> rates_from_limits_4level(const Scalar& tau1_0, const Scalar& tau2_0,
                                                 const Scalar& tau2_inf, const Scalar& c_inf) {
  if (!(value_of(tau1_0) > 0.0) || !(value_of(tau2_0) > 0.0) || !(value_of(tau2_inf) > 0.0) ||
      !(value_of(c_inf) > 0.0)) {
    throw DomainError("4-level limits need positive tau1_0, tau2_0, tau2_inf, c_inf");
  }
  DeshelvingRates<Scalar> out;
  out.k_sg0 = Scalar(1) / tau2_0;
  out.k_sg_inf = Scalar(1) / tau2_inf;
  out.d = (Scalar(1) / tau2_inf - (Scalar(1) + c_inf) / tau2_0) / (Scalar(1) + c_inf);
  out.rates.k_ge = Scalar(0);
  out.rates.k_sg = out.k_sg0;
  out.rates.k_es = Scalar(1) / tau2_inf - out.k_sg0 - out.d;
  out.rates.k_eg = Scalar(1) / tau1_0 - out.rates.k_es;
  if (value_of(out.d) < 0.0) {
    throw InconsistentLimitsError("limits give negative deshelving amplitude d = " +
                                  std::to_string(value_of(out.d)));
  }
  if (!(value_of(out.rates.k_es) > 0.0) || !(value_of(out.rates.k_eg) > 0.0)) {
    throw InconsistentLimitsError("limits give nonpositive k_es or k_eg");
  }
  return out;
}

RateCoefficients<double> rates_from_limits_3level(const PhotophysicsLimits& limits);
DeshelvingRates<double> rates_from_limits_4level(const PhotophysicsLimits& limits);

// ---------------------------------------------------------------------------

/// Photon energy h*c/lambda in joules.
double photon_energy_joule(double wavelength_nm);

/// sigma = k_sg (k_eg + k_es) / (k_sg + k_es) * h nu / I0, in cm^2.
/// rc.k_ge is not used.
double cross_section(const RateCoefficients<double>& rc, double I0_sat_kw_cm2,
                     double wavelength_nm);

/// Unnormalized eigenvectors in closed form, stationary one scaled to a unit
/// S component, the others as (-F, G, -1) with H = +-sqrt(A^2 - 4B).
/// Columns follow the eigenvalue order (0, lambda1, lambda2). Needs k_es > 0.
Eigen::Matrix3d closed_form_eigenvectors(const RateCoefficients<double>& rc);

}  // namespace photospin

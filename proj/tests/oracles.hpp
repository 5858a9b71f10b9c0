#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "photospin/correlator.hpp"
#include "photospin/photon_stream.hpp"
#include "photospin/ratemodel.hpp"

namespace oracle {

using photospin::RateCoefficients;

inline Eigen::Matrix3d generator(const RateCoefficients<double>& rc) {
  Eigen::Matrix3d m;
  m << -rc.k_ge, rc.k_eg, rc.k_sg, rc.k_ge, -rc.k_eg - rc.k_es, 0.0, 0.0, rc.k_es, -rc.k_sg;
  return m;
}

inline Eigen::Vector3d stationary(const RateCoefficients<double>& rc) {
  Eigen::FullPivLU<Eigen::Matrix3d> lu(generator(rc));
  Eigen::Vector3d v = lu.kernel().col(0);
  return v / v.sum();
}

/// Excited population after a photon (system reset to G), relative to steady state.
inline double g2_expm(const RateCoefficients<double>& rc, double tau) {
  const Eigen::Matrix3d prop = (generator(rc) * std::abs(tau)).exp();
  return prop(1, 0) / stationary(rc)(1);
}

/// Sorted decay constants (lambda1 >= lambda2) from a dense eigensolver.
inline Eigen::Vector2d decay_constants(const RateCoefficients<double>& rc) {
  Eigen::EigenSolver<Eigen::Matrix3d> es(generator(rc));
  Eigen::Vector3d ev = -es.eigenvalues().real();
  std::sort(ev.data(), ev.data() + 3);
  return {ev(2), ev(1)};
}

/// O(N^2) pair count with the same bin convention as the correlator.
inline std::vector<std::uint64_t> brute_force_counts(const photospin::PhotonStream& s,
                                                     double bin_ps, double max_delay_ns) {
  const long long half = static_cast<long long>(std::floor(max_delay_ns * 1000.0 / bin_ps));
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * half + 1), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.channels[i] != 0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s.channels[j] != 1) continue;
      const double dt = static_cast<double>(s.timestamps_ps[j]) - static_cast<double>(s.timestamps_ps[i]);
      const long long k = static_cast<long long>(std::llround(std::floor(dt / bin_ps + 0.5)));
      if (k >= -half && k <= half) ++counts[static_cast<std::size_t>(k + half)];
    }
  }
  return counts;
}

/// Two independent Poisson detectors.
inline photospin::PhotonStream poisson_stream(double rate0, double rate1, double seconds,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::uint64_t, std::uint8_t>> ev;
  for (int ch = 0; ch < 2; ++ch) {
    std::exponential_distribution<double> wait(ch == 0 ? rate0 : rate1);
    for (double t = wait(rng); t < seconds; t += wait(rng)) {
      ev.emplace_back(static_cast<std::uint64_t>(t * 1e12), static_cast<std::uint8_t>(ch));
    }
  }
  std::sort(ev.begin(), ev.end());
  photospin::PhotonStream s;
  s.duration_s = seconds;
  for (auto& [t, c] : ev) {
    s.timestamps_ps.push_back(t);
    s.channels.push_back(c);
  }
  return s;
}

}  // namespace oracle

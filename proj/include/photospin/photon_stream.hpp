#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "photospin/ratemodel.hpp"

namespace photospin {

/// Two-detector time-tag record. Timestamps in ps, nondecreasing, each
/// below duration_s.
struct PhotonStream {
  std::vector<std::uint64_t> timestamps_ps;
  std::vector<std::uint8_t> channels;
  double duration_s = 0.0;

  std::size_t size() const { return timestamps_ps.size(); }
  std::array<std::uint64_t, 2> channel_counts() const;
  /// Throws DomainError when the ordering or range invariants fail.
  void validate() const;
};

enum class StreamSampler {
  /// One exponential waiting time and one categorical choice per transition.
  event_by_event,
  /// Exact sampling of the time between detected photons. Every emission
  /// returns the emitter to G, so that interval is a sum of exponential
  /// sojourns whose counts follow geometric / negative-binomial laws; the
  /// cost per detected photon does not grow as the efficiency drops.
  renewal,
};

struct StreamConfig {
  double duration_s = 1.0;
  double detection_efficiency = 1.0;
  std::array<double, 2> background_rates{0.0, 0.0};  ///< counts/s per detector
  double split = 0.5;  ///< probability that a detected photon goes to detector 0
  std::uint64_t seed = 1;
  StreamSampler sampler = StreamSampler::event_by_event;
};

/// Stochastic emission record of the three-level chain with rates `rc`.
PhotonStream simulate_photon_stream(const RateCoefficients<double>& rc, const StreamConfig& cfg);

/// Number of emitted (not detected) photons per second in steady state,
/// k_eg * n_e^st.
double emission_rate_per_s(const RateCoefficients<double>& rc);

}  // namespace photospin

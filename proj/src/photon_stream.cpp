#include "photospin/photon_stream.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace photospin {

std::array<std::uint64_t, 2> PhotonStream::channel_counts() const {
  std::array<std::uint64_t, 2> n{0, 0};
  for (auto ch : channels) ++n[ch & 1u];
  return n;
}

void PhotonStream::validate() const {
  if (timestamps_ps.size() != channels.size()) {
    throw DomainError("photon stream: timestamp and channel arrays differ in length");
  }
  const double limit_ps = duration_s * 1e12;
  for (std::size_t i = 0; i < timestamps_ps.size(); ++i) {
    if (i > 0 && timestamps_ps[i] < timestamps_ps[i - 1]) {
      throw DomainError("photon stream: timestamps decrease at event " + std::to_string(i));
    }
    if (static_cast<double>(timestamps_ps[i]) >= limit_ps) {
      throw DomainError("photon stream: timestamp beyond duration at event " + std::to_string(i));
    }
    if (channels[i] > 1) {
      throw DomainError("photon stream: channel must be 0 or 1 at event " + std::to_string(i));
    }
  }
}

double emission_rate_per_s(const RateCoefficients<double>& rc) {
  return rc.k_eg * stationary_state(rc).n_e * 1e9;
}

namespace {

using Rng = std::mt19937_64;

// Emission times (ns) of detected photons, in order, below t_end_ns.
std::vector<long double> emissions_event_by_event(const RateCoefficients<double>& rc,
                                                  double efficiency, long double t_end_ns,
                                                  Rng& rng) {
  std::vector<long double> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto pop = stationary_state(rc);
  int state = 0;  // 0 = G, 1 = E, 2 = S
  {
    const double u = unit(rng);
    state = u < pop.n_g ? 0 : (u < pop.n_g + pop.n_e ? 1 : 2);
  }
  std::exponential_distribution<double> leave_g(rc.k_ge);
  std::exponential_distribution<double> leave_e(rc.k_eg + rc.k_es);
  std::exponential_distribution<double> leave_s(rc.k_sg);
  const double p_radiative = rc.k_eg / (rc.k_eg + rc.k_es);
  long double t = 0.0L;
  while (true) {
    switch (state) {
      case 0:
        t += leave_g(rng);
        state = 1;
        break;
      case 1:
        t += leave_e(rng);
        if (t >= t_end_ns) return out;
        if (unit(rng) < p_radiative) {
          if (unit(rng) < efficiency) out.push_back(t);
          state = 0;
        } else {
          state = 2;
        }
        break;
      default:
        t += leave_s(rng);
        state = 0;
        break;
    }
    if (t >= t_end_ns) return out;
  }
}

std::vector<long double> emissions_renewal(const RateCoefficients<double>& rc, double efficiency,
                                           long double t_end_ns, Rng& rng) {
  std::vector<long double> out;
  const double p_radiative = rc.k_eg / (rc.k_eg + rc.k_es);
  std::geometric_distribution<long long> undetected(efficiency);
  long double t = 0.0L;
  while (true) {
    // Emission cycles until the next detected one.
    const long long cycles = (efficiency >= 1.0 ? 0 : undetected(rng)) + 1;
    // Visits to E: one per cycle plus one per detour through the shelf.
    long long detours = 0;
    if (p_radiative < 1.0) {
      std::negative_binomial_distribution<long long> shelf(cycles, p_radiative);
      detours = shelf(rng);
    }
    const long long visits = cycles + detours;
    const double n = static_cast<double>(visits);
    double dt = std::gamma_distribution<double>(n, 1.0 / rc.k_ge)(rng) +
                std::gamma_distribution<double>(n, 1.0 / (rc.k_eg + rc.k_es))(rng);
    if (detours > 0) {
      dt += std::gamma_distribution<double>(static_cast<double>(detours), 1.0 / rc.k_sg)(rng);
    }
    t += dt;
    if (t >= t_end_ns) return out;
    out.push_back(t);
  }
}

std::vector<std::uint64_t> poisson_times_ps(double rate_per_s, double duration_s, Rng& rng) {
  std::vector<std::uint64_t> out;
  if (!(rate_per_s > 0.0)) return out;
  std::exponential_distribution<double> gap(rate_per_s);
  long double t = 0.0L;
  const long double end = duration_s;
  out.reserve(static_cast<std::size_t>(rate_per_s * duration_s * 1.1) + 16);
  while (true) {
    t += gap(rng);
    if (t >= end) break;
    auto ps = static_cast<std::uint64_t>(t * 1e12L);
    out.push_back(ps);
  }
  return out;
}

}  // namespace

PhotonStream simulate_photon_stream(const RateCoefficients<double>& rc, const StreamConfig& cfg) {
  validate(rc);
  if (!(cfg.duration_s > 0.0) || !std::isfinite(cfg.duration_s)) {
    throw DomainError("stream duration must be positive");
  }
  if (!(cfg.detection_efficiency >= 0.0 && cfg.detection_efficiency <= 1.0)) {
    throw DomainError("detection efficiency must lie in [0, 1]");
  }
  if (!(cfg.split >= 0.0 && cfg.split <= 1.0)) throw DomainError("split must lie in [0, 1]");
  for (double b : cfg.background_rates) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("background rate must be >= 0");
  }

  Rng rng(cfg.seed);
  const long double t_end_ns = static_cast<long double>(cfg.duration_s) * 1e9L;
  std::vector<long double> signal;
  if (cfg.detection_efficiency > 0.0) {
    signal = cfg.sampler == StreamSampler::renewal
                 ? emissions_renewal(rc, cfg.detection_efficiency, t_end_ns, rng)
                 : emissions_event_by_event(rc, cfg.detection_efficiency, t_end_ns, rng);
  }

  // Route signal photons, then draw the two background processes.
  std::bernoulli_distribution to_first(cfg.split);
  std::vector<std::uint64_t> sig_ps(signal.size());
  std::vector<std::uint8_t> sig_ch(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    sig_ps[i] = static_cast<std::uint64_t>(signal[i] * 1000.0L);
    sig_ch[i] = to_first(rng) ? 0 : 1;
  }
  std::array<std::vector<std::uint64_t>, 2> bg{
      poisson_times_ps(cfg.background_rates[0], cfg.duration_s, rng),
      poisson_times_ps(cfg.background_rates[1], cfg.duration_s, rng)};

  PhotonStream out;
  out.duration_s = cfg.duration_s;
  const std::size_t total = sig_ps.size() + bg[0].size() + bg[1].size();
  out.timestamps_ps.reserve(total);
  out.channels.reserve(total);
  std::size_t i = 0, j0 = 0, j1 = 0;
  constexpr auto kInf = std::numeric_limits<std::uint64_t>::max();
  while (out.timestamps_ps.size() < total) {
    const std::uint64_t a = i < sig_ps.size() ? sig_ps[i] : kInf;
    const std::uint64_t b = j0 < bg[0].size() ? bg[0][j0] : kInf;
    const std::uint64_t c = j1 < bg[1].size() ? bg[1][j1] : kInf;
    if (a <= b && a <= c) {
      out.timestamps_ps.push_back(a);
      out.channels.push_back(sig_ch[i++]);
    } else if (b <= c) {
      out.timestamps_ps.push_back(b);
      out.channels.push_back(0);
      ++j0;
    } else {
      out.timestamps_ps.push_back(c);
      out.channels.push_back(1);
      ++j1;
    }
  }
  return out;
}

}  // namespace photospin

#pragma once

// Start-stop coincidence histograms and the normalize / rebin / background
// pipeline that turns them into g2(tau) estimates.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "photospin/photon_stream.hpp"

namespace photospin {

/// Coincidences between detector 0 (start) and detector 1 (stop). A pair
/// with delay t1 - t0 lands in bin k when (k - 1/2) W <= t1 - t0 < (k + 1/2) W.
struct CoincidenceHistogram {
  double bin_width_ps = 0.0;
  std::vector<double> delays_ns;  ///< bin centers, symmetric about zero
  std::vector<std::uint64_t> counts;
  double total_time_s = 0.0;
  std::array<std::uint64_t, 2> channel_counts{0, 0};
  bool empty_channel = false;  ///< set when a detector recorded nothing

  /// Per-detector count rates R_i = N_i / T in counts/s.
  std::array<double, 2> rates() const;
};

struct CorrelationCurve {
  std::vector<double> delays_ns;
  std::vector<double> values;
  std::vector<double> sigma;
  double bin_width_ps = 0.0;
  double total_time_s = 0.0;
  std::array<double, 2> rates{0.0, 0.0};  ///< counts/s used in the normalization
  std::optional<double> tau0_ns;          ///< filled in by a fit
  bool background_corrected = false;
  std::optional<double> signal_fraction;  ///< rho = S / (S + B)
  bool has_negative_values = false;       ///< corrected values dipped below zero

  std::size_t size() const { return values.size(); }
};

/// Near-linear two-pointer accumulation over delays |t1 - t0| <= max_delay.
CoincidenceHistogram coincidence_histogram(const PhotonStream& stream, double bin_width_ps,
                                           double max_delay_ns);

/// Adds `shard` into `total`. Both must share the bin layout. Use for
/// segment-wise accumulation of long acquisitions.
void merge_into(CoincidenceHistogram& total, const CoincidenceHistogram& shard);

enum class RateSplit {
  measured,  ///< R_i = N_i / T per detector
  sixty_forty,  ///< R = (N_0 + N_1) / T, R_0 = 0.6 R, R_1 = 0.4 R
};

/// values = counts / (T W R_0 R_1), sigma = sqrt(counts) / N_norm.
/// Empty bins get sigma = 1 / N_norm so that weighted fits stay finite.
CorrelationCurve normalize(const CoincidenceHistogram& hist, RateSplit split = RateSplit::measured);

/// Averages groups of target/current adjacent bins starting from the most
/// negative delay; a trailing partial group is dropped. Identity when the
/// widths match.
CorrelationCurve rebin(const CorrelationCurve& curve, double target_width_ps);

/// (g - (1 - rho^2)) / rho^2 for uncorrelated background.
CorrelationCurve background_correct(const CorrelationCurve& curve, double rho);

/// rho = S / (S + B).
double signal_fraction(double signal_rate, double background_rate);

/// Decides whether a curve gets background-corrected. Background that scales
/// with laser intensity (m I) is corrected; a background made only of dark
/// counts (b) is left alone, as at the lowest intensity of a series.
struct BackgroundPolicy {
  double min_laser_background_fraction = 0.2;  ///< m I / (m I + b) below this: no correction
};

/// Applies background_correct when the policy allows. `S_max`, `I0` describe
/// the PL saturation curve, `m`, `b` the linear background, all in counts/s
/// and kW/cm^2.
CorrelationCurve apply_background_policy(const CorrelationCurve& curve, double intensity,
                                         double S_max, double I0, double m, double b,
                                         const BackgroundPolicy& policy = {});

}  // namespace photospin

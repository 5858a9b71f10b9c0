#include "photospin/correlator.hpp"

#include <cmath>
#include <string>

namespace photospin {

std::array<double, 2> CoincidenceHistogram::rates() const {
  if (!(total_time_s > 0.0)) return {0.0, 0.0};
  return {static_cast<double>(channel_counts[0]) / total_time_s,
          static_cast<double>(channel_counts[1]) / total_time_s};
}

CoincidenceHistogram coincidence_histogram(const PhotonStream& stream, double bin_width_ps,
                                           double max_delay_ns) {
  if (!(bin_width_ps > 0.0)) throw DomainError("bin width must be positive");
  if (!(max_delay_ns > 0.0)) throw DomainError("max delay must be positive");
  if (stream.timestamps_ps.size() != stream.channels.size()) {
    throw DomainError("photon stream arrays differ in length");
  }

  CoincidenceHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.total_time_s = stream.duration_s;
  const auto half_bins = static_cast<long long>(std::floor(max_delay_ns * 1000.0 / bin_width_ps));
  const std::size_t n_bins = static_cast<std::size_t>(2 * half_bins + 1);
  hist.delays_ns.resize(n_bins);
  hist.counts.assign(n_bins, 0);
  for (std::size_t k = 0; k < n_bins; ++k) {
    hist.delays_ns[k] = static_cast<double>(static_cast<long long>(k) - half_bins) * bin_width_ps * 1e-3;
  }

  std::vector<std::int64_t> starts, stops;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    (stream.channels[i] == 0 ? starts : stops).push_back(static_cast<std::int64_t>(stream.timestamps_ps[i]));
  }
  hist.channel_counts = {starts.size(), stops.size()};
  if (starts.empty() || stops.empty()) {
    hist.empty_channel = true;
    return hist;
  }

  // Pairs are accepted inside the outer edges of the first and last bin.
  const double lo_edge = -(static_cast<double>(half_bins) + 0.5) * bin_width_ps;
  const double hi_edge = (static_cast<double>(half_bins) + 0.5) * bin_width_ps;
  const auto window = static_cast<std::int64_t>(std::ceil(hi_edge));
  std::size_t first = 0;
  for (const std::int64_t t0 : starts) {
    while (first < stops.size() && stops[first] < t0 - window) ++first;
    for (std::size_t j = first; j < stops.size(); ++j) {
      const std::int64_t dt = stops[j] - t0;
      if (dt > window) break;
      const double x = static_cast<double>(dt);
      if (x < lo_edge || x >= hi_edge) continue;
      const auto k = static_cast<long long>(std::floor(x / bin_width_ps + 0.5)) + half_bins;
      if (k >= 0 && k < static_cast<long long>(n_bins)) ++hist.counts[static_cast<std::size_t>(k)];
    }
  }
  return hist;
}

void merge_into(CoincidenceHistogram& total, const CoincidenceHistogram& shard) {
  if (total.counts.empty()) {
    total = shard;
    return;
  }
  if (total.counts.size() != shard.counts.size() || total.bin_width_ps != shard.bin_width_ps) {
    throw DomainError("cannot merge histograms with different bin layouts");
  }
  for (std::size_t k = 0; k < total.counts.size(); ++k) total.counts[k] += shard.counts[k];
  total.total_time_s += shard.total_time_s;
  total.channel_counts[0] += shard.channel_counts[0];
  total.channel_counts[1] += shard.channel_counts[1];
  total.empty_channel = total.channel_counts[0] == 0 || total.channel_counts[1] == 0;
}

CorrelationCurve normalize(const CoincidenceHistogram& hist, RateSplit split) {
  if (!(hist.total_time_s > 0.0)) throw NormalizationError("total acquisition time must be positive");
  std::array<double, 2> r = hist.rates();
  if (split == RateSplit::sixty_forty) {
    const double total = r[0] + r[1];
    r = {0.6 * total, 0.4 * total};
  }
  if (!(r[0] > 0.0) || !(r[1] > 0.0)) {
    throw NormalizationError("normalization needs positive count rates on both detectors");
  }
  const double n_norm = hist.total_time_s * hist.bin_width_ps * 1e-12 * r[0] * r[1];

  CorrelationCurve curve;
  curve.delays_ns = hist.delays_ns;
  curve.bin_width_ps = hist.bin_width_ps;
  curve.total_time_s = hist.total_time_s;
  curve.rates = r;
  curve.values.resize(hist.counts.size());
  curve.sigma.resize(hist.counts.size());
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    const double n = static_cast<double>(hist.counts[k]);
    curve.values[k] = n / n_norm;
    curve.sigma[k] = (n > 0.0 ? std::sqrt(n) : 1.0) / n_norm;
  }
  return curve;
}

CorrelationCurve rebin(const CorrelationCurve& curve, double target_width_ps) {
  if (!(curve.bin_width_ps > 0.0)) throw RebinError("curve has no bin width");
  const double ratio = target_width_ps / curve.bin_width_ps;
  const double factor_d = std::round(ratio);
  if (!(factor_d >= 1.0) || std::abs(ratio - factor_d) > 1e-9 * ratio) {
    throw RebinError("target width " + std::to_string(target_width_ps) +
                     " ps is not an integer multiple of " + std::to_string(curve.bin_width_ps) + " ps");
  }
  const auto factor = static_cast<std::size_t>(factor_d);
  if (factor == 1) return curve;

  CorrelationCurve out = curve;
  out.bin_width_ps = target_width_ps;
  const std::size_t groups = curve.size() / factor;
  out.delays_ns.assign(groups, 0.0);
  out.values.assign(groups, 0.0);
  out.sigma.assign(groups, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    double d = 0.0, v = 0.0, s2 = 0.0;
    for (std::size_t i = g * factor; i < (g + 1) * factor; ++i) {
      d += curve.delays_ns[i];
      v += curve.values[i];
      s2 += curve.sigma[i] * curve.sigma[i];
    }
    out.delays_ns[g] = d / factor_d;
    out.values[g] = v / factor_d;
    out.sigma[g] = std::sqrt(s2) / factor_d;
  }
  return out;
}

CorrelationCurve background_correct(const CorrelationCurve& curve, double rho) {
  if (!(rho > 0.0) || rho > 1.0) throw DomainError("signal fraction rho must lie in (0, 1]");
  CorrelationCurve out = curve;
  const double r2 = rho * rho;
  out.has_negative_values = false;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values[k] = (curve.values[k] - (1.0 - r2)) / r2;
    out.sigma[k] = curve.sigma[k] / r2;
    if (out.values[k] < 0.0) out.has_negative_values = true;
  }
  out.background_corrected = true;
  out.signal_fraction = rho;
  return out;
}

double signal_fraction(double signal_rate, double background_rate) {
  if (!(signal_rate > 0.0) || !(background_rate >= 0.0)) {
    throw DomainError("signal fraction needs signal > 0 and background >= 0");
  }
  return signal_rate / (signal_rate + background_rate);
}

CorrelationCurve apply_background_policy(const CorrelationCurve& curve, double intensity,
                                         double S_max, double I0, double m, double b,
                                         const BackgroundPolicy& policy) {
  const double laser_bg = m * intensity;
  const double background = laser_bg + b;
  if (!(background > 0.0) || laser_bg / background < policy.min_laser_background_fraction) {
    return curve;
  }
  const double signal = S_max * intensity / (I0 + intensity);
  return background_correct(curve, signal_fraction(signal, background));
}

}  // namespace photospin

#include <doctest.h>

#include "oracles.hpp"
#include "photospin/correlator.hpp"

using namespace photospin;

TEST_CASE("two-pointer histogram equals brute-force pair counting") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = oracle::poisson_stream(2e5, 3e5, 0.01, seed);
    for (double bin : {486.0, 972.0, 1000.0}) {
      const auto h = coincidence_histogram(s, bin, 50.0);
      CHECK(h.counts == oracle::brute_force_counts(s, bin, 50.0));
    }
  }
}

TEST_CASE("histogram layout is symmetric about zero") {
  const auto s = oracle::poisson_stream(1e4, 1e4, 0.01, 4);
  const auto h = coincidence_histogram(s, 486.0, 10.0);
  CHECK(h.delays_ns.size() == 41);
  CHECK(h.delays_ns[20] == 0.0);
  CHECK(h.delays_ns.front() == doctest::Approx(-20 * 0.486));
  CHECK(h.channel_counts[0] + h.channel_counts[1] == s.size());
}

TEST_CASE("uncorrelated light normalizes to one") {
  const auto s = oracle::poisson_stream(2e5, 2e5, 5.0, 7);
  const auto curve = normalize(coincidence_histogram(s, 1000.0, 100.0));
  double mean = 0.0;
  for (double v : curve.values) mean += v / static_cast<double>(curve.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  double chi2 = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    chi2 += std::pow((curve.values[k] - 1.0) / curve.sigma[k], 2);
  }
  CHECK(chi2 / static_cast<double>(curve.size()) == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("sixty-forty split uses the total rate") {
  const auto s = oracle::poisson_stream(5e4, 5e4, 0.5, 8);
  const auto h = coincidence_histogram(s, 1000.0, 10.0);
  const auto a = normalize(h, RateSplit::measured);
  const auto b = normalize(h, RateSplit::sixty_forty);
  const double total = a.rates[0] + a.rates[1];
  CHECK(b.rates[0] == doctest::Approx(0.6 * total));
  CHECK(b.rates[1] == doctest::Approx(0.4 * total));
}

TEST_CASE("normalization errors") {
  CoincidenceHistogram h;
  h.bin_width_ps = 1000.0;
  h.total_time_s = 0.0;
  CHECK_THROWS_AS(normalize(h), NormalizationError);
  PhotonStream only0;
  only0.duration_s = 1.0;
  only0.timestamps_ps = {1, 2, 3};
  only0.channels = {0, 0, 0};
  const auto empty = coincidence_histogram(only0, 1000.0, 10.0);
  CHECK(empty.empty_channel);
  CHECK_THROWS_AS(normalize(empty), NormalizationError);
}

TEST_CASE("merging shards equals one histogram over the whole record") {
  const auto s = oracle::poisson_stream(1e5, 1e5, 0.02, 9);
  PhotonStream a, b;
  a.duration_s = b.duration_s = 0.01;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& dst = s.timestamps_ps[i] < 10'000'000'000ull ? a : b;
    dst.timestamps_ps.push_back(s.timestamps_ps[i] % 10'000'000'000ull);
    dst.channels.push_back(s.channels[i]);
  }
  CoincidenceHistogram total;
  merge_into(total, coincidence_histogram(a, 1000.0, 20.0));
  merge_into(total, coincidence_histogram(b, 1000.0, 20.0));
  const auto whole = coincidence_histogram(s, 1000.0, 20.0);
  CHECK(total.total_time_s == doctest::Approx(0.02));
  CHECK(total.channel_counts == whole.channel_counts);
  // Pairs straddling the cut are the only difference.
  std::uint64_t diff = 0;
  for (std::size_t k = 0; k < whole.counts.size(); ++k) diff += whole.counts[k] - total.counts[k];
  CHECK(diff < 10);
  CHECK_THROWS_AS(merge_into(total, coincidence_histogram(a, 500.0, 20.0)), DomainError);
}

TEST_CASE("rebinning averages groups and rejects non-integer factors") {
  CorrelationCurve c;
  c.bin_width_ps = 486.0;
  for (int k = 0; k < 9; ++k) {
    c.delays_ns.push_back(k * 0.486);
    c.values.push_back(k);
    c.sigma.push_back(1.0);
  }
  const auto r = rebin(c, 972.0);
  CHECK(r.size() == 4);
  CHECK(r.values[0] == doctest::Approx(0.5));
  CHECK(r.values[3] == doctest::Approx(6.5));
  CHECK(r.sigma[0] == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(r.bin_width_ps == 972.0);
  CHECK(rebin(c, 486.0).values == c.values);
  CHECK_THROWS_AS(rebin(c, 700.0), RebinError);
  CHECK_THROWS_AS(rebin(c, 243.0), RebinError);
}

TEST_CASE("background correction inverts the mixing of uncorrelated light") {
  CorrelationCurve c;
  const double rho = 0.7;
  for (double g : {0.0, 0.5, 1.0, 2.0}) {
    c.values.push_back(rho * rho * g + 1.0 - rho * rho);
    c.sigma.push_back(0.01);
    c.delays_ns.push_back(g);
  }
  const auto out = background_correct(c, rho);
  CHECK(out.values[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.values[3] == doctest::Approx(2.0));
  CHECK(out.sigma[0] == doctest::Approx(0.01 / 0.49));
  CHECK(out.background_corrected);
  CHECK(*out.signal_fraction == rho);
  CHECK(!out.has_negative_values);
  c.values[0] = 0.3;
  CHECK(background_correct(c, 0.7).has_negative_values);
  CHECK_THROWS_AS(background_correct(c, 0.0), DomainError);
  CHECK_THROWS_AS(background_correct(c, 1.2), DomainError);
}

TEST_CASE("signal fraction and background policy") {
  CHECK(signal_fraction(3.0, 1.0) == 0.75);
  CHECK_THROWS_AS(signal_fraction(0.0, 1.0), DomainError);
  CorrelationCurve c;
  c.values = {0.2, 1.0};
  c.sigma = {0.01, 0.01};
  c.delays_ns = {0.0, 100.0};
  // Dark counts only at the lowest intensity: left alone.
  const auto low = apply_background_policy(c, 1.0, 7800.0, 44.0, 15.9, 309.0);
  CHECK(!low.background_corrected);
  const auto high = apply_background_policy(c, 100.0, 7800.0, 44.0, 15.9, 309.0);
  CHECK(high.background_corrected);
  const double s = 7800.0 * 100.0 / 144.0;
  CHECK(*high.signal_fraction == doctest::Approx(s / (s + 1590.0 + 309.0)));
}

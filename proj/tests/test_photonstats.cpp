#include <doctest.h>

#include <cmath>
#include <random>

#include "silfdtd/error.hpp"
#include "silfdtd/photonstats.hpp"

using namespace silfdtd;
using namespace silfdtd::photonstats;

namespace {

SaturationSeries synthetic(double i_sat, double p_sat, double b, int n = 10, double p_max = 5.0) {
  SaturationSeries s;
  for (int i = 1; i <= n; ++i) {
    const double p = p_max * i / n;
    s.powers_mw.push_back(p);
    s.total_kcps.push_back(i_sat * p / (p + p_sat) + b * p);
    s.background_kcps.push_back(b * p);
  }
  return s;
}

}  // namespace

TEST_CASE("g2 background correction") {
  G2Histogram h{{-1, 0, 1}, {0.7, 0.5, 1.2}, 1.0};
  CHECK(background_correct_g2(h) == h.coincidences);
  h.signal_fraction = 0.8;
  CHECK(background_correct_g2(h)[1] == doctest::Approx(0.21875).epsilon(1e-14));
  h.coincidences = {0.36, 0.36, 0.36};
  for (double v : background_correct_g2(h)) CHECK(std::abs(v) < 1e-15);
  h.signal_fraction = 0.0;
  CHECK_THROWS_AS(background_correct_g2(h), Error);
}

TEST_CASE("g2 correction is invertible") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (double rho : {0.3, 0.55, 0.8, 1.0}) {
    std::vector<double> corrected(40), delays(40);
    for (int i = 0; i < 40; ++i) {
      corrected[i] = u(rng);
      delays[i] = i - 20;
    }
    const auto raw = apply_background_g2(corrected, rho);
    const auto back = background_correct_g2({delays, raw, rho});
    for (int i = 0; i < 40; ++i) CHECK(std::abs(back[i] - corrected[i]) < 1e-12);
  }
}

TEST_CASE("single emitter classification") {
  const std::vector<double> tau = {-3, -2, -1, 0, 1, 2, 3};
  auto v = classify_single_emitter(tau, std::vector<double>(7, 1.0));
  CHECK_FALSE(v.is_single);
  CHECK(v.dip_value == 1.0);
  v = classify_single_emitter(tau, {1, 1, 1, 0, 1, 1, 1});
  CHECK(v.is_single);
  v = classify_single_emitter(tau, {1, 1, 1, 0.49, 1, 1, 1});
  CHECK(v.is_single);
  v = classify_single_emitter(tau, {1, 1, 1, 0.5, 1, 1, 1});
  CHECK_FALSE(v.is_single);
  // Jitter moves the minimum off the zero bin; the window still finds it.
  v = classify_single_emitter(tau, {1, 0.3, 0.8, 0.9, 1, 1, 1}, 2);
  CHECK(v.dip_value == 0.3);
  v = classify_single_emitter(tau, {1, 0.3, 0.8, 0.9, 1, 1, 1}, 0);
  CHECK(v.dip_value == 0.9);
  CHECK_THROWS_AS(classify_single_emitter({}, {}), Error);
}

TEST_CASE("signal fraction") {
  CHECK(signal_fraction(80, 20) == doctest::Approx(0.8));
  CHECK(signal_fraction(1, 0) == 1.0);
  CHECK_THROWS_AS(signal_fraction(0, 1), Error);
}

TEST_CASE("saturation fit recovers synthetic parameters") {
  for (double i_sat : {34.5, 345.0, 1000.0}) {
    for (double p_sat : {0.3, 1.0, 2.0}) {
      for (double b : {0.0, 5.0, 20.0}) {
        const auto f = fit_saturation(synthetic(i_sat, p_sat, b));
        CHECK(f.i_sat_kcps.value == doctest::Approx(i_sat).epsilon(1e-3));
        CHECK(f.p_sat_mw.value == doctest::Approx(p_sat).epsilon(1e-3));
        CHECK(std::abs(f.background_slope.value - b) <= 1e-3 * std::max(1.0, b));
        const auto g = fit_saturation(synthetic(i_sat, p_sat, b), BackgroundMode::Prefit);
        CHECK(g.i_sat_kcps.value == doctest::Approx(i_sat).epsilon(1e-3));
        CHECK(g.p_sat_mw.value == doctest::Approx(p_sat).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("saturation model limits") {
  SaturationFit f;
  f.i_sat_kcps.value = 345;
  f.p_sat_mw.value = 1.0;
  CHECK(f.model(1.0) == doctest::Approx(172.5));
  f.background_slope.value = 5;
  CHECK(f.model(1e-9) / 1e-9 == doctest::Approx(345.0 + 5.0).epsilon(1e-6));
}

TEST_CASE("saturation fit warns when the knee is not reached") {
  const auto f = fit_saturation(synthetic(345, 10.0, 0.0, 8, 2.0));
  CHECK_FALSE(f.warning.empty());
  CHECK_THROWS_AS(fit_saturation(synthetic(345, 1.0, 0.0, 3)), Error);
}

TEST_CASE("enhancement factor") {
  const auto sil = fit_saturation(synthetic(345, 1.0, 5));
  const auto planar = fit_saturation(synthetic(34.5, 1.0, 15));
  CHECK(enhancement_factor(sil, planar).value == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(enhancement_factor(sil, sil).value == doctest::Approx(1.0));
  // Scaling both sets of counts leaves the ratio alone.
  SaturationFit a = sil, b = planar;
  a.i_sat_kcps.value *= 3.7;
  b.i_sat_kcps.value *= 3.7;
  CHECK(enhancement_factor(a, b).value == doctest::Approx(enhancement_factor(sil, planar).value).epsilon(1e-15));
  for (double e : {10.0, 8.0, 8.0, 6.0, 3.6}) {
    SaturationFit x, y;
    x.i_sat_kcps.value = 34.5 * e;
    y.i_sat_kcps.value = 34.5;
    CHECK(enhancement_factor(x, y).value == doctest::Approx(e).epsilon(1e-14));
  }
  b.i_sat_kcps.value = 0.0;
  CHECK_THROWS_AS(enhancement_factor(a, b), Error);
}

TEST_CASE("band fraction and projected rate") {
  Spectrum s{{600, 650, 700, 750, 800}, {1, 1, 1, 1, 1}};
  CHECK(band_fraction(s, 630, 700) == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(band_fraction(s, 600, 800) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(band_fraction(s, 500, 900) == doctest::Approx(1.0).epsilon(1e-14));
  double last = 0.0;
  for (double hi = 610; hi <= 800; hi += 10) {
    const double f = band_fraction(s, 600, hi);
    CHECK(f >= last);
    last = f;
  }
  CHECK(projected_rate(345, 0.70) == doctest::Approx(492.857).epsilon(1e-5));
  s.intensities = {0, 0, 0, 0, 0};
  CHECK_THROWS_AS(band_fraction(s, 630, 700), Error);
}

TEST_CASE("background ratio") {
  SaturationSeries a = synthetic(100, 1, 6), b = synthetic(100, 1, 2);
  CHECK(background_ratio(a, a, 2.0) == doctest::Approx(1.0));
  CHECK(background_ratio(a, b, 2.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(background_ratio(a, b, 2.25) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(background_ratio(a, b, 6.0), Error);
  CHECK_THROWS_AS(background_ratio(a, b, 0.1), Error);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "silfdtd/analytic.hpp"

using namespace silfdtd;
using namespace silfdtd::analytic;

TEST_CASE("normal transmission into diamond") {
  CHECK(normal_transmission(2.42, 1.0) == doctest::Approx(0.8276).epsilon(1e-4));
  CHECK(normal_transmission(1.0, 1.0) == 1.0);
  CHECK(normal_transmission(2.42f, 1.0f) == doctest::Approx(0.8276).epsilon(1e-4));
}

TEST_CASE("Fresnel coefficients conserve energy and vanish past the critical angle") {
  const double crit = std::asin(1.0 / 2.42);
  for (double th = 0.0; th < crit; th += 0.01) {
    for (Polarization p : {Polarization::S, Polarization::P}) {
      CHECK(fresnel_power_reflection(2.42, 1.0, th, p) + fresnel_power_transmission(2.42, 1.0, th, p) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(fresnel_power_transmission(2.42, 1.0, crit + 0.01, Polarization::S) == 0.0);
  CHECK(fresnel_power_reflection(2.42, 1.0, crit + 0.01, Polarization::P) == 1.0);
  // Brewster angle
  CHECK(fresnel_power_reflection(2.42, 1.0, std::atan(1.0 / 2.42), Polarization::P) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dipole pattern integrates to one over the sphere") {
  Eigen::ArrayXd x, w;
  gauss_legendre<double>(64, x, w);
  for (const Eigen::Vector3d& p : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1),
                                  Eigen::Vector3d(1, 2, 3).normalized()}) {
    double total = 0.0;
    const int nphi = 128;
    for (int i = 0; i < x.size(); ++i) {
      const double c = x(i), s = std::sqrt(1 - c * c);
      for (int k = 0; k < nphi; ++k) {
        const double phi = 2 * std::numbers::pi * k / nphi;
        const Eigen::Vector3d u(s * std::cos(phi), s * std::sin(phi), c);
        total += w(i) * (2 * std::numbers::pi / nphi) * dipole_radiation_pattern(p, u);
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("bare cone integrals") {
  // Full sphere by two hemispheres.
  const double up = cone_integral(Eigen::Vector3d::UnitX(), std::numbers::pi / 2, 1.0, 1.0, 128);
  CHECK(up == doctest::Approx(0.5).epsilon(1e-10));
  // z dipole, cone of half angle a: 1/2 - (3/4) cos a + (1/4) cos^3 a
  const double a = 0.7;
  const double expect = 0.5 - 0.75 * std::cos(a) + 0.25 * std::pow(std::cos(a), 3);
  CHECK(cone_integral(Eigen::Vector3d::UnitZ(), a, 1.0, 1.0, 128) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("hemisphere efficiencies") {
  const double iso = hemisphere_collection_efficiency(DipoleOrientation::isotropic(), 0.9, 2.42);
  CHECK(std::abs(iso - 0.2334) <= 1e-3);
  CHECK(hemisphere_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 2.42) ==
        doctest::Approx(0.26996).epsilon(1e-4));
  // Without a Fresnel loss the result is the bare cone.
  const double bare = hemisphere_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 2.42, 256, 1.0);
  CHECK(bare == doctest::Approx(cone_integral(Eigen::Vector3d::UnitX(), std::asin(0.9), 1, 1, 256)));
  // Monotone in NA.
  double last = 0.0;
  for (double na = 0.1; na <= 1.0; na += 0.1) {
    const double eta = hemisphere_collection_efficiency(DipoleOrientation::isotropic(), na, 2.42);
    CHECK(eta > last);
    last = eta;
  }
}

TEST_CASE("planar efficiencies") {
  CHECK(planar_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 2.42) ==
        doctest::Approx(0.04214).epsilon(1e-3));
  CHECK(planar_collection_efficiency(DipoleOrientation::vertical(), 0.9, 2.42) <
        planar_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 2.42));
  // Index-matched: same as the bare cone.
  CHECK(planar_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 1.0) ==
        doctest::Approx(hemisphere_collection_efficiency(DipoleOrientation::horizontal(), 0.9, 1.0)));
  CHECK_THROWS_AS(planar_collection_efficiency(DipoleOrientation::horizontal(), 2.5, 2.42), Error);
  CHECK_THROWS_AS(hemisphere_collection_efficiency(DipoleOrientation::horizontal(), 1.2, 2.42), Error);
}

TEST_CASE("orientation parsing") {
  CHECK(parse_orientation("x").axis->isApprox(Eigen::Vector3d::UnitX()));
  CHECK(parse_orientation("vertical").axis->isApprox(Eigen::Vector3d::UnitZ()));
  CHECK(parse_orientation("isotropic").is_isotropic());
  CHECK(parse_orientation("1,1,0").axis->isApprox(Eigen::Vector3d(1, 1, 0).normalized()));
  CHECK_THROWS_AS(parse_orientation("sideways"), Error);
  CHECK_THROWS_AS(parse_orientation("0,0,0"), Error);
}

TEST_CASE("quadrature in long double agrees with double") {
  Eigen::Array<long double, Eigen::Dynamic, 1> x, w;
  gauss_legendre<long double>(20, x, w);
  CHECK(static_cast<double>(w.sum()) == doctest::Approx(2.0).epsilon(1e-15));
  long double m4 = 0;
  for (int i = 0; i < x.size(); ++i) m4 += w(i) * x(i) * x(i) * x(i) * x(i);
  CHECK(static_cast<double>(m4) == doctest::Approx(0.4).epsilon(1e-15));
}

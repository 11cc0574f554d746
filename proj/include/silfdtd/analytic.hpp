#pragma once

// Closed-form and quadrature collection-efficiency models for a point dipole
// under a flat surface or at the centre of a hemispherical lens. Rays are
// treated incoherently: each internal direction carries the free dipole
// pattern times the Fresnel power transmission for its s/p content.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "silfdtd/error.hpp"

namespace silfdtd::analytic {

enum class Polarization { S, P };

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Gauss-Legendre nodes and weights on [-1, 1].
template <typename Scalar>
void gauss_legendre(int n, Eigen::Array<Scalar, Eigen::Dynamic, 1>& nodes,
                    Eigen::Array<Scalar, Eigen::Dynamic, 1>& weights) {
  using std::abs;
  using std::cos;
  nodes.resize(n);
  weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (abs(dx) < Scalar(1e-15)) break;
    }
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    nodes(i) = -x;
    nodes(n - 1 - i) = x;
    weights(i) = w;
    weights(n - 1 - i) = w;
  }
}

/// Power reflectance |r|^2 for light going from n1 into n2; one beyond the
/// critical angle.
template <typename Scalar>
Scalar fresnel_power_reflection(Scalar n1, Scalar n2, Scalar theta1, Polarization pol) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar sin_t = n1 * sin(theta1) / n2;
  if (sin_t >= Scalar(1)) return Scalar(1);
  const Scalar ci = cos(theta1);
  const Scalar ct = sqrt(Scalar(1) - sin_t * sin_t);
  Scalar r;
  if (pol == Polarization::S) {
    r = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
  } else {
    r = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
  }
  return r * r;
}

/// Power transmittance T = (n2 cos t / n1 cos i) |t|^2, zero beyond the
/// critical angle.
template <typename Scalar>
Scalar fresnel_power_transmission(Scalar n1, Scalar n2, Scalar theta1, Polarization pol) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar sin_t = n1 * sin(theta1) / n2;
  if (sin_t >= Scalar(1)) return Scalar(0);
  const Scalar ci = cos(theta1);
  const Scalar ct = sqrt(Scalar(1) - sin_t * sin_t);
  Scalar t;
  if (pol == Polarization::S) {
    t = 2 * n1 * ci / (n1 * ci + n2 * ct);
  } else {
    t = 2 * n1 * ci / (n2 * ci + n1 * ct);
  }
  if (ci <= Scalar(0)) return Scalar(0);
  return (n2 * ct) / (n1 * ci) * t * t;
}

/// Normal-incidence transmittance 4 n1 n2 / (n1 + n2)^2.
template <typename Scalar>
Scalar normal_transmission(Scalar n1, Scalar n2) {
  return 4 * n1 * n2 / ((n1 + n2) * (n1 + n2));
}

/// Far-field power per steradian of a dipole, normalised to unit total:
/// (3 / 8 pi) (1 - (p.u)^2).
template <typename Derived1, typename Derived2>
typename Derived1::Scalar dipole_radiation_pattern(const Eigen::MatrixBase<Derived1>& orientation,
                                                   const Eigen::MatrixBase<Derived2>& direction) {
  using Scalar = typename Derived1::Scalar;
  const Scalar c = orientation.dot(direction);
  return Scalar(3) / (Scalar(8) * std::numbers::pi_v<Scalar>) * (Scalar(1) - c * c);
}

/// A specific unit orientation, or the mean over x, y and z.
struct DipoleOrientation {
  std::optional<Eigen::Vector3d> axis;

  static DipoleOrientation along(const Eigen::Vector3d& v) {
    const double n = v.norm();
    if (!(n > 0.0)) fail(ErrorCategory::Config, "dipole orientation must be nonzero");
    return {v / n};
  }
  static DipoleOrientation horizontal() { return {Eigen::Vector3d::UnitX()}; }
  static DipoleOrientation vertical() { return {Eigen::Vector3d::UnitZ()}; }
  static DipoleOrientation isotropic() { return {std::nullopt}; }

  bool is_isotropic() const { return !axis.has_value(); }
  std::vector<Eigen::Vector3d> members() const {
    if (axis) return {*axis};
    return {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ()};
  }
};

DipoleOrientation parse_orientation(const std::string& text);
std::string describe(const DipoleOrientation& orientation);

inline constexpr int kDefaultSamples = 256;

/// Integral over the internal cone theta <= theta_max of
/// D(u) [w_s T_s + w_p T_p], with T from `n_inside` into `n_outside`.
/// Passing n_inside == n_outside gives the bare cone integral.
double cone_integral(const Eigen::Vector3d& orientation, double theta_max, double n_inside,
                     double n_outside, int samples);

/// Flat diamond/air interface: light collected inside NA in air comes from
/// internal angles up to asin(na / n).
double planar_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                    int samples = kDefaultSamples);

/// Dipole at the centre of a hemisphere: rays leave radially so only the
/// normal-incidence Fresnel loss applies.
double hemisphere_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                        int samples = kDefaultSamples);

/// Same as above with the Fresnel factor replaced by `transmission`.
double hemisphere_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                        int samples, double transmission);

}  // namespace silfdtd::analytic

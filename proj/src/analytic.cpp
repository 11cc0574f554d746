#include "silfdtd/analytic.hpp"

#include <cmath>
#include <sstream>

namespace silfdtd::analytic {

DipoleOrientation parse_orientation(const std::string& text) {
  if (text == "x" || text == "horizontal") return DipoleOrientation::horizontal();
  if (text == "y") return DipoleOrientation::along(Eigen::Vector3d::UnitY());
  if (text == "z" || text == "vertical") return DipoleOrientation::vertical();
  if (text == "isotropic") return DipoleOrientation::isotropic();
  std::istringstream in(text);
  Eigen::Vector3d v;
  char sep = 0;
  if ((in >> v.x() >> sep >> v.y() >> sep >> v.z()) && in.peek() == EOF) {
    return DipoleOrientation::along(v);
  }
  fail(ErrorCategory::Config, "cannot parse dipole orientation '" + text + "'");
}

std::string describe(const DipoleOrientation& orientation) {
  if (orientation.is_isotropic()) return "isotropic";
  std::ostringstream out;
  out << orientation.axis->x() << "," << orientation.axis->y() << "," << orientation.axis->z();
  return out.str();
}

double cone_integral(const Eigen::Vector3d& p, double theta_max, double n_inside,
                     double n_outside, int samples) {
  if (samples < 64) fail(ErrorCategory::Config, "quadrature needs at least 64 samples");
  if (!(theta_max > 0.0)) return 0.0;
  Eigen::ArrayXd nodes, weights;
  gauss_legendre<double>(samples, nodes, weights);
  const double cos_max = std::cos(theta_max);
  const double half = 0.5 * (1.0 - cos_max);
  const double dphi = 2.0 * std::numbers::pi / samples;
  const double norm = 3.0 / (8.0 * std::numbers::pi);
  const bool interface = n_inside != n_outside;

  double total = 0.0;
  for (int a = 0; a < samples; ++a) {
    const double c = cos_max + half * (nodes(a) + 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double theta = std::acos(c);
    double ts = 1.0, tp = 1.0;
    if (interface) {
      ts = fresnel_power_transmission(n_inside, n_outside, theta, Polarization::S);
      tp = fresnel_power_transmission(n_inside, n_outside, theta, Polarization::P);
    }
    double ring = 0.0;
    for (int b = 0; b < samples; ++b) {
      const double phi = dphi * b;
      const double cp = std::cos(phi), sp = std::sin(phi);
      // Projections of p onto the s and p polarisation vectors of this direction;
      // their squares sum to 1 - (p.u)^2.
      const double ps = -p.x() * sp + p.y() * cp;
      const double pp = c * (p.x() * cp + p.y() * sp) - s * p.z();
      ring += ps * ps * ts + pp * pp * tp;
    }
    total += weights(a) * half * ring * dphi;
  }
  return norm * total;
}

double planar_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                    int samples) {
  if (!(na >= 0.0)) fail(ErrorCategory::Config, "numerical aperture must be nonnegative");
  if (na > n) fail(ErrorCategory::Config, "numerical aperture exceeds the substrate index");
  if (!(n >= 1.0)) fail(ErrorCategory::Config, "refractive index must be >= 1");
  const double theta_max = std::asin(na / n);
  double sum = 0.0;
  const auto members = orientation.members();
  for (const auto& p : members) sum += cone_integral(p, theta_max, n, 1.0, samples);
  return sum / static_cast<double>(members.size());
}

double hemisphere_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                        int samples, double transmission) {
  if (!(na >= 0.0) || na > 1.0) fail(ErrorCategory::Config, "numerical aperture must lie in [0, 1]");
  if (!(n >= 1.0)) fail(ErrorCategory::Config, "refractive index must be >= 1");
  const double theta_max = std::asin(na);
  double sum = 0.0;
  const auto members = orientation.members();
  for (const auto& p : members) sum += cone_integral(p, theta_max, 1.0, 1.0, samples);
  return transmission * sum / static_cast<double>(members.size());
}

double hemisphere_collection_efficiency(const DipoleOrientation& orientation, double na, double n,
                                        int samples) {
  return hemisphere_collection_efficiency(orientation, na, n, samples,
                                          normal_transmission(n, 1.0));
}

}  // namespace silfdtd::analytic

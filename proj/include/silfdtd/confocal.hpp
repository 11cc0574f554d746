#pragma once

// Confocal imaging arithmetic for a microscope looking through a
// hemispherical lens, plus Gaussian fitting of line scans.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "silfdtd/estimate.hpp"
#include "silfdtd/scene.hpp"

namespace silfdtd::confocal {

/// FWHM of a Gaussian in units of its standard deviation.
inline const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);

struct ImagingContext {
  double objective_na = 0.9;
  double medium_index = kDiamondIndex;
  bool sil_present = true;
  double excitation_wavelength_nm = 532.0;

  void validate() const;
};

double effective_na(const ImagingContext& ctx);

/// 0.37 lambda / NA, in the units of `wavelength`.
double theoretical_fwhm(double wavelength, double na);

struct Coordinates {
  double lateral = 0.0;
  double longitudinal = 0.0;
};

/// Under a lens the image is magnified by n laterally and n^2 along the axis.
/// Without one both maps are the identity.
Coordinates image_to_real(const ImagingContext& ctx, Coordinates image);
Coordinates real_to_image(const ImagingContext& ctx, Coordinates real);

struct LineScan {
  std::vector<double> positions_um;
  std::vector<double> counts;
  std::vector<double> uncertainties;  // optional, empty or one per point

  void validate() const;
};

struct GaussianFit {
  Estimate amplitude, center_um, sigma_um, offset;
  Estimate fwhm_um;
  std::optional<Estimate> real_fwhm_um;  // set when the context has a lens
  double reduced_chi2 = 0.0;
  int evaluations = 0;

  double model(double x) const;
};

/// Least-squares fit of a exp(-(x - c)^2 / (2 s^2)) + b. Uncertainties are
/// 1-sigma from the covariance scaled by the reduced chi-square.
GaussianFit fit_gaussian_linescan(const LineScan& scan,
                                  const std::optional<ImagingContext>& ctx = std::nullopt);

}  // namespace silfdtd::confocal

#pragma once

// Photon-statistics analysis: background-corrected g2, saturation fits,
// enhancement factors and spectral band fractions.

#include <string>
#include <utility>
#include <vector>

#include "silfdtd/estimate.hpp"

namespace silfdtd::photonstats {

struct G2Histogram {
  std::vector<double> delays_ns;
  std::vector<double> coincidences;  // normalised so that c(inf) = 1
  double signal_fraction = 1.0;      // rho = S / (S + B)

  void validate() const;
};

/// c_corr = (c - (1 - rho^2)) / rho^2. Negative values from noise are kept.
std::vector<double> background_correct_g2(const G2Histogram& hist);

/// Inverse of the correction, c = rho^2 c_corr + 1 - rho^2.
std::vector<double> apply_background_g2(const std::vector<double>& corrected, double signal_fraction);

/// rho from signal and background count rates.
double signal_fraction(double signal, double background);

struct EmitterVerdict {
  bool is_single = false;
  double dip_value = 0.0;
  std::size_t zero_index = 0;  // bin nearest to zero delay
};

inline constexpr int kDefaultDipWindowBins = 2;
inline constexpr double kSingleEmitterThreshold = 0.5;

/// Minimum of the corrected histogram within +-window bins of zero delay.
EmitterVerdict classify_single_emitter(const std::vector<double>& delays_ns,
                                       const std::vector<double>& corrected,
                                       int window_bins = kDefaultDipWindowBins);

struct SaturationSeries {
  std::vector<double> powers_mw;
  std::vector<double> total_kcps;
  std::vector<double> background_kcps;  // may be empty

  void validate() const;
};

enum class BackgroundMode {
  Joint,   // fit I_sat, P_sat and b together to the total counts
  Prefit,  // b from the background series alone, line through the origin
};

struct SaturationFit {
  Estimate i_sat_kcps, p_sat_mw, background_slope;
  double reduced_chi2 = 0.0;
  BackgroundMode mode = BackgroundMode::Joint;
  /// Non-empty when the data do not reach past the fitted knee.
  std::string warning;

  double model(double power_mw) const;
};

/// Fit of I(P) = I_sat P / (P + P_sat) + b P.
SaturationFit fit_saturation(const SaturationSeries& series, BackgroundMode mode = BackgroundMode::Joint);

/// I_sat ratio with first-order propagated uncertainty.
Estimate enhancement_factor(const SaturationFit& sil, const SaturationFit& planar);

struct Spectrum {
  std::vector<double> wavelengths_nm;
  std::vector<double> intensities;

  void validate() const;
};

/// Trapezoidal integral over [lo, hi] (clipped to the support) divided by
/// the integral over the whole support.
double band_fraction(const Spectrum& spectrum, double lo_nm, double hi_nm);

/// Rate that would be seen if the whole spectrum were collected.
double projected_rate(double measured_rate, double fraction);

/// background_a(P) / background_b(P) with linear interpolation.
double background_ratio(const SaturationSeries& a, const SaturationSeries& b, double power_mw);

}  // namespace silfdtd::photonstats

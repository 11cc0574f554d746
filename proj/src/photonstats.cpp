#include "silfdtd/photonstats.hpp"

#include <algorithm>
#include <cmath>

#include "lsq.hpp"
#include "silfdtd/error.hpp"

namespace silfdtd::photonstats {

namespace {

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) fail(ErrorCategory::Config, std::string(what) + " must be strictly increasing");
  }
}

void require_nonnegative(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x >= 0.0)) fail(ErrorCategory::Config, std::string(what) + " must be non-negative");
  }
}

// Integral of the piecewise-linear interpolant of (x, y) over [a, b].
double trapezoid(const std::vector<double>& x, const std::vector<double>& y, double a, double b) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double lo = std::max(a, x[i - 1]);
    const double hi = std::min(b, x[i]);
    if (!(hi > lo)) continue;
    const double slope = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
    const double ylo = y[i - 1] + slope * (lo - x[i - 1]);
    const double yhi = y[i - 1] + slope * (hi - x[i - 1]);
    sum += 0.5 * (ylo + yhi) * (hi - lo);
  }
  return sum;
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at < x.front() || at > x.back()) fail(ErrorCategory::Domain, "interpolation point outside the data range");
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.end()) return y.back();
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  if (i == 0) return y.front();
  const double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + t * (y[i] - y[i - 1]);
}

}  // namespace

void G2Histogram::validate() const {
  if (delays_ns.size() != coincidences.size()) fail(ErrorCategory::Config, "g2 columns differ in length");
  if (delays_ns.empty()) fail(ErrorCategory::Config, "g2 histogram is empty");
  require_increasing(delays_ns, "g2 delays");
  require_nonnegative(coincidences, "g2 coincidences");
  if (!(signal_fraction > 0.0 && signal_fraction <= 1.0)) {
    fail(ErrorCategory::Config, "signal fraction must lie in (0, 1]");
  }
}

std::vector<double> background_correct_g2(const G2Histogram& hist) {
  hist.validate();
  const double r2 = hist.signal_fraction * hist.signal_fraction;
  std::vector<double> out(hist.coincidences.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (hist.coincidences[i] - (1.0 - r2)) / r2;
  return out;
}

std::vector<double> apply_background_g2(const std::vector<double>& corrected, double signal_fraction) {
  if (!(signal_fraction > 0.0 && signal_fraction <= 1.0)) {
    fail(ErrorCategory::Config, "signal fraction must lie in (0, 1]");
  }
  const double r2 = signal_fraction * signal_fraction;
  std::vector<double> out(corrected.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r2 * corrected[i] + (1.0 - r2);
  return out;
}

double signal_fraction(double signal, double background) {
  if (!(signal > 0.0) || !(background >= 0.0)) {
    fail(ErrorCategory::Config, "signal must be positive and background non-negative");
  }
  return signal / (signal + background);
}

EmitterVerdict classify_single_emitter(const std::vector<double>& delays_ns,
                                       const std::vector<double>& corrected, int window_bins) {
  if (delays_ns.empty() || delays_ns.size() != corrected.size()) {
    fail(ErrorCategory::Config, "g2 histogram is empty or has mismatched columns");
  }
  if (window_bins < 0) fail(ErrorCategory::Config, "dip window must be non-negative");
  EmitterVerdict v;
  for (std::size_t i = 1; i < delays_ns.size(); ++i) {
    if (std::abs(delays_ns[i]) < std::abs(delays_ns[v.zero_index])) v.zero_index = i;
  }
  const std::size_t w = static_cast<std::size_t>(window_bins);
  const std::size_t lo = v.zero_index > w ? v.zero_index - w : 0;
  const std::size_t hi = std::min(corrected.size() - 1, v.zero_index + w);
  v.dip_value = *std::min_element(corrected.begin() + lo, corrected.begin() + hi + 1);
  v.is_single = v.dip_value < kSingleEmitterThreshold;
  return v;
}

void SaturationSeries::validate() const {
  if (powers_mw.size() != total_kcps.size()) fail(ErrorCategory::Config, "saturation columns differ in length");
  if (!background_kcps.empty() && background_kcps.size() != powers_mw.size()) {
    fail(ErrorCategory::Config, "background column must match the number of powers");
  }
  require_increasing(powers_mw, "excitation powers");
  require_nonnegative(powers_mw, "excitation powers");
  require_nonnegative(total_kcps, "total counts");
  require_nonnegative(background_kcps, "background counts");
}

double SaturationFit::model(double p) const {
  return i_sat_kcps.value * p / (p + p_sat_mw.value) + background_slope.value * p;
}

SaturationFit fit_saturation(const SaturationSeries& series, BackgroundMode mode) {
  series.validate();
  const std::size_t n = series.powers_mw.size();
  if (n < 4) fail(ErrorCategory::Fit, "saturation fit needs at least 4 points");
  if (mode == BackgroundMode::Prefit && series.background_kcps.empty()) {
    fail(ErrorCategory::Config, "background prefit requested without background counts");
  }
  const Eigen::Map<const Eigen::VectorXd> p(series.powers_mw.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(series.total_kcps.data(), static_cast<Eigen::Index>(n));

  SaturationFit fit;
  fit.mode = mode;
  const bool joint = mode == BackgroundMode::Joint;
  if (!joint) {
    const Eigen::Map<const Eigen::VectorXd> bg(series.background_kcps.data(), static_cast<Eigen::Index>(n));
    const double pp = p.squaredNorm();
    if (!(pp > 0.0)) fail(ErrorCategory::Fit, "background fit needs a nonzero power");
    const double b = p.dot(bg) / pp;
    const double rss = (bg - b * p).squaredNorm();
    fit.background_slope = {b, n > 1 ? std::sqrt(rss / static_cast<double>(n - 1) / pp) : 0.0};
    y -= b * p;
  }

  // The model is linear in I_sat and b for fixed P_sat, so scan P_sat on a
  // log grid with a linear solve each and start LM from the best point.
  const double p_max = p.maxCoeff();
  double p_min = p_max;
  for (double v : series.powers_mw) {
    if (v > 0.0) p_min = std::min(p_min, v);
  }
  if (!(p_max > 0.0)) fail(ErrorCategory::Fit, "saturation fit needs a nonzero power");
  const int cols = joint ? 2 : 1;
  double best_rss = INFINITY;
  Eigen::VectorXd start(joint ? 3 : 2);
  const int grid = 200;
  for (int g = 0; g <= grid; ++g) {
    const double ps = p_min * 0.01 * std::pow(1e4 * p_max / p_min, static_cast<double>(g) / grid);
    Eigen::MatrixXd a(n, cols);
    a.col(0) = p.array() / (p.array() + ps);
    if (joint) a.col(1) = p;
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    const double rss = (a * c - y).squaredNorm();
    if (rss < best_rss && c(0) > 0.0) {
      best_rss = rss;
      start(0) = c(0);
      start(1) = ps;
      if (joint) start(2) = c(1);
    }
  }
  if (!std::isfinite(best_rss)) fail(ErrorCategory::Fit, "no saturating component found in the data");

  const detail::ModelFn model = [&p, joint](const Eigen::VectorXd& q, Eigen::VectorXd& v, Eigen::MatrixXd& j) {
    const Eigen::Index m = p.size();
    v.resize(m);
    j.resize(m, q.size());
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = p(i) + q(1);
      v(i) = q(0) * p(i) / d;
      j(i, 0) = p(i) / d;
      j(i, 1) = -q(0) * p(i) / (d * d);
      if (joint) {
        v(i) += q(2) * p(i);
        j(i, 2) = p(i);
      }
    }
  };
  const detail::LsqResult r = detail::least_squares(model, y, Eigen::VectorXd(), start);
  auto est = [&r](int k) { return Estimate{r.params(k), std::sqrt(std::max(0.0, r.covariance(k, k)))}; };
  fit.i_sat_kcps = est(0);
  fit.p_sat_mw = est(1);
  if (joint) fit.background_slope = est(2);
  fit.reduced_chi2 = r.chi2 / r.dof;
  if (!(fit.i_sat_kcps.value > 0.0) || !(fit.p_sat_mw.value > 0.0)) {
    fail(ErrorCategory::Fit, "saturation fit gave a non-positive I_sat or P_sat");
  }
  if (p_max < fit.p_sat_mw.value) {
    fit.warning = "highest power lies below the fitted saturation power; I_sat is an extrapolation";
  }
  return fit;
}

Estimate enhancement_factor(const SaturationFit& sil, const SaturationFit& planar) {
  const double a = sil.i_sat_kcps.value, b = planar.i_sat_kcps.value;
  if (!(b > 0.0)) fail(ErrorCategory::Domain, "reference I_sat must be positive");
  if (!(a > 0.0)) fail(ErrorCategory::Domain, "I_sat must be positive");
  const double r = a / b;
  const double ra = sil.i_sat_kcps.sigma / a, rb = planar.i_sat_kcps.sigma / b;
  return {r, r * std::sqrt(ra * ra + rb * rb)};
}

void Spectrum::validate() const {
  if (wavelengths_nm.size() != intensities.size()) fail(ErrorCategory::Config, "spectrum columns differ in length");
  if (wavelengths_nm.size() < 2) fail(ErrorCategory::Config, "spectrum needs at least two samples");
  require_increasing(wavelengths_nm, "spectrum wavelengths");
  require_nonnegative(intensities, "spectrum intensities");
}

double band_fraction(const Spectrum& spectrum, double lo_nm, double hi_nm) {
  spectrum.validate();
  if (!(hi_nm > lo_nm)) fail(ErrorCategory::Config, "band must have positive width");
  const auto& x = spectrum.wavelengths_nm;
  const auto& y = spectrum.intensities;
  const double total = trapezoid(x, y, x.front(), x.back());
  if (!(total > 0.0)) fail(ErrorCategory::Domain, "spectrum integrates to zero");
  return trapezoid(x, y, lo_nm, hi_nm) / total;
}

double projected_rate(double measured_rate, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorCategory::Domain, "band fraction must lie in (0, 1]");
  return measured_rate / fraction;
}

double background_ratio(const SaturationSeries& a, const SaturationSeries& b, double power_mw) {
  a.validate();
  b.validate();
  if (a.background_kcps.empty() || b.background_kcps.empty()) {
    fail(ErrorCategory::Config, "background ratio needs background counts in both series");
  }
  const double ba = interpolate(a.powers_mw, a.background_kcps, power_mw);
  const double bb = interpolate(b.powers_mw, b.background_kcps, power_mw);
  if (!(bb > 0.0)) fail(ErrorCategory::Domain, "reference background is zero at this power");
  return ba / bb;
}

}  // namespace silfdtd::photonstats

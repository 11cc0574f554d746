#include "silfdtd/confocal.hpp"

#include <algorithm>

#include "lsq.hpp"
#include "silfdtd/error.hpp"

namespace silfdtd::confocal {

void ImagingContext::validate() const {
  if (!(objective_na > 0.0 && objective_na <= 1.0)) {
    fail(ErrorCategory::Config, "objective NA must lie in (0, 1]");
  }
  if (!(medium_index >= 1.0)) fail(ErrorCategory::Config, "medium index must be at least 1");
  if (!(excitation_wavelength_nm > 0.0)) {
    fail(ErrorCategory::Config, "excitation wavelength must be positive");
  }
}

double effective_na(const ImagingContext& ctx) {
  ctx.validate();
  return ctx.sil_present ? ctx.objective_na * ctx.medium_index : ctx.objective_na;
}

double theoretical_fwhm(double wavelength, double na) {
  if (!(na > 0.0)) fail(ErrorCategory::Config, "numerical aperture must be positive");
  return 0.37 * wavelength / na;
}

Coordinates image_to_real(const ImagingContext& ctx, Coordinates image) {
  ctx.validate();
  if (!ctx.sil_present) return image;
  const double n = ctx.medium_index;
  return {image.lateral / n, image.longitudinal / (n * n)};
}

Coordinates real_to_image(const ImagingContext& ctx, Coordinates real) {
  ctx.validate();
  if (!ctx.sil_present) return real;
  const double n = ctx.medium_index;
  return {real.lateral * n, real.longitudinal * (n * n)};
}

void LineScan::validate() const {
  if (positions_um.size() != counts.size()) fail(ErrorCategory::Config, "line scan columns differ in length");
  if (!uncertainties.empty() && uncertainties.size() != counts.size()) {
    fail(ErrorCategory::Config, "line scan uncertainties must match the number of points");
  }
  if (positions_um.size() < 5) fail(ErrorCategory::Fit, "line scan needs at least 5 points");
  for (std::size_t i = 1; i < positions_um.size(); ++i) {
    if (!(positions_um[i] > positions_um[i - 1])) {
      fail(ErrorCategory::Config, "line scan positions must be strictly increasing");
    }
  }
  for (double c : counts) {
    if (!(c >= 0.0)) fail(ErrorCategory::Config, "line scan counts must be non-negative");
  }
  for (double u : uncertainties) {
    if (!(u > 0.0)) fail(ErrorCategory::Config, "line scan uncertainties must be positive");
  }
}

double GaussianFit::model(double x) const {
  const double d = (x - center_um.value) / sigma_um.value;
  return amplitude.value * std::exp(-0.5 * d * d) + offset.value;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

GaussianFit fit_gaussian_linescan(const LineScan& scan, const std::optional<ImagingContext>& ctx) {
  scan.validate();
  if (ctx) ctx->validate();
  const auto [lo, hi] = std::minmax_element(scan.counts.begin(), scan.counts.end());
  if (*hi == *lo) fail(ErrorCategory::Fit, "line scan is flat");

  const std::size_t n = scan.counts.size();
  const Eigen::Map<const Eigen::VectorXd> x(scan.positions_um.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> y(scan.counts.data(), static_cast<Eigen::Index>(n));

  // Start from the data moments.
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  std::vector<double> edges(scan.counts.begin(), scan.counts.begin() + edge);
  edges.insert(edges.end(), scan.counts.end() - edge, scan.counts.end());
  const double b0 = median(edges);
  const Eigen::Index peak = std::distance(scan.counts.begin(), hi);
  const double c0 = x(peak);
  double mass = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = std::max(0.0, y(i) - b0);
    mass += w;
    second += w * (x(i) - c0) * (x(i) - c0);
  }
  const double span = x(x.size() - 1) - x(0);
  double s0 = mass > 0.0 ? std::sqrt(second / mass) : span / 6.0;
  if (!(s0 > 0.0)) s0 = span / 6.0;
  s0 = std::clamp(s0, 0.5 * span / static_cast<double>(n), span);

  Eigen::VectorXd start(4);
  start << *hi - b0, c0, s0, b0;

  const detail::ModelFn model = [&x](const Eigen::VectorXd& p, Eigen::VectorXd& v, Eigen::MatrixXd& j) {
    v.resize(x.size());
    j.resize(x.size(), 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d = (x(i) - p(1)) / p(2);
      const double g = std::exp(-0.5 * d * d);
      v(i) = p(0) * g + p(3);
      j(i, 0) = g;
      j(i, 1) = p(0) * g * d / p(2);
      j(i, 2) = p(0) * g * d * d / p(2);
      j(i, 3) = 1.0;
    }
  };
  Eigen::VectorXd sigma;
  if (!scan.uncertainties.empty()) {
    sigma = Eigen::Map<const Eigen::VectorXd>(scan.uncertainties.data(), static_cast<Eigen::Index>(n));
  }
  const detail::LsqResult r = detail::least_squares(model, y, sigma, start);

  GaussianFit fit;
  auto est = [&r](int k) { return Estimate{r.params(k), std::sqrt(std::max(0.0, r.covariance(k, k)))}; };
  fit.amplitude = est(0);
  fit.center_um = est(1);
  fit.sigma_um = est(2);
  fit.sigma_um.value = std::abs(fit.sigma_um.value);  // the model is even in sigma
  fit.offset = est(3);
  if (!(fit.sigma_um.value > 0.0)) fail(ErrorCategory::Fit, "fitted width collapsed to zero");
  fit.fwhm_um = {kFwhmPerSigma * fit.sigma_um.value, kFwhmPerSigma * fit.sigma_um.sigma};
  if (ctx && ctx->sil_present) {
    fit.real_fwhm_um = Estimate{fit.fwhm_um.value / ctx->medium_index, fit.fwhm_um.sigma / ctx->medium_index};
  }
  fit.reduced_chi2 = r.chi2 / r.dof;
  fit.evaluations = r.evaluations;
  return fit;
}

}  // namespace silfdtd::confocal

#pragma once

#include <functional>

#include <Eigen/Core>
#include <Eigen/LU>
#include <unsupported/Eigen/NonLinearOptimization>

#include "silfdtd/error.hpp"

namespace silfdtd::detail {

/// Model evaluated at every sample: fills values (n) and the Jacobian (n x p).
using ModelFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& values,
                                   Eigen::MatrixXd& jacobian)>;

struct LsqResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // scaled by the reduced chi-square
  double chi2 = 0.0;
  int dof = 0;
  int evaluations = 0;
};

/// Weighted least squares via MINPACK-style Levenberg-Marquardt. `sigma`
/// holds per-sample standard deviations, or is empty for unit weights.
inline LsqResult least_squares(const ModelFn& model, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& sigma, const Eigen::VectorXd& start,
                               int max_evaluations = 2000) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(start.size());
  if (n <= p) fail(ErrorCategory::Fit, "not enough samples for the number of parameters");
  const Eigen::VectorXd w = sigma.size() == 0 ? Eigen::VectorXd::Ones(n) : sigma.cwiseInverse().eval();

  struct Functor {
    const ModelFn& model;
    const Eigen::VectorXd& y;
    const Eigen::VectorXd& w;
    int p, n;
    int inputs() const { return p; }
    int values() const { return n; }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
      Eigen::VectorXd v;
      Eigen::MatrixXd j;
      model(x, v, j);
      f = (v - y).cwiseProduct(w);
      return f.allFinite() ? 0 : -1;
    }
    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
      Eigen::VectorXd v;
      model(x, v, fjac);
      fjac = w.asDiagonal() * fjac;
      return 0;
    }
  } functor{model, y, w, p, n};

  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  Eigen::VectorXd x = start;
  const auto status = lm.minimize(x);
  using Status = Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::ImproperInputParameters || status == Status::TooManyFunctionEvaluation ||
      status == Status::UserAsked || !x.allFinite()) {
    fail(ErrorCategory::Fit, "least-squares fit did not converge (status " +
                                 std::to_string(static_cast<int>(status)) + ")");
  }

  LsqResult out;
  out.params = x;
  out.evaluations = static_cast<int>(lm.nfev);
  Eigen::VectorXd v;
  Eigen::MatrixXd j;
  model(x, v, j);
  const Eigen::VectorXd r = (v - y).cwiseProduct(w);
  const Eigen::MatrixXd jw = w.asDiagonal() * j;
  out.chi2 = r.squaredNorm();
  out.dof = n - p;
  const Eigen::MatrixXd normal = jw.transpose() * jw;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  if (!lu.isInvertible()) fail(ErrorCategory::Fit, "fit parameters are degenerate");
  out.covariance = lu.inverse() * (out.chi2 / out.dof);
  return out;
}

}  // namespace silfdtd::detail

// Small dense Levenberg-Marquardt minimizer for sum-of-squares problems.
// The caller supplies the residual function; the Jacobian is either supplied
// or taken by central finite differences in the same parameter space.
#pragma once

#include <functional>

#include <Eigen/Dense>

namespace odmr::levmar {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct Options {
  int max_iterations = 500;
  double ftol = 1e-10;          // relative chi2 decrease
  double xtol = 1e-12;          // step norm relative to |x|
  double lambda0 = 1e-3;        // initial damping
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double fd_rel_step = 1e-6;    // for the built-in finite-difference Jacobian
};

struct Result {
  Eigen::VectorXd x;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd residual;     // at x
  Eigen::MatrixXd jacobian;     // at x
};

// Central finite-difference Jacobian with per-coordinate step
// rel_step * max(1, |x_i|).  Throws NumericalError on non-finite entries,
// identifying the offending parameter and residual indices.
Eigen::MatrixXd jacobian_fd(const ResidualFn& f, const Eigen::VectorXd& x,
                            double rel_step = 1e-6);

// Classic damped normal equations with Marquardt diagonal scaling.
// Accepted steps never increase chi2 (monotone by construction).
Result minimize(const ResidualFn& f, const Eigen::VectorXd& x0,
                const Options& opts = {}, const JacobianFn& jac = nullptr);

}  // namespace odmr::levmar

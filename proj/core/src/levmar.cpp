#include "odmr/levmar.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "odmr/common.hpp"

namespace odmr::levmar {

Eigen::MatrixXd jacobian_fd(const ResidualFn& f, const Eigen::VectorXd& x,
                            double rel_step) {
  if (!(rel_step > 0.0 && rel_step <= 0.1))
    throw ConfigError("jacobian_fd: rel_step must be in (0, 0.1]");

  const Eigen::VectorXd r0 = f(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    for (Eigen::Index i = 0; i < jac.rows(); ++i) {
      if (!std::isfinite(jac(i, j)))
        throw NumericalError("jacobian_fd: non-finite derivative at parameter " +
                             std::to_string(j) + ", residual " + std::to_string(i));
    }
  }
  return jac;
}

Result minimize(const ResidualFn& f, const Eigen::VectorXd& x0,
                const Options& opts, const JacobianFn& jac) {
  auto jacobian = [&](const Eigen::VectorXd& x) {
    return jac ? jac(x) : jacobian_fd(f, x, opts.fd_rel_step);
  };

  Result res;
  res.x = x0;
  res.residual = f(x0);
  if (!res.residual.allFinite())
    throw NumericalError("levmar: non-finite residual at the starting point");
  res.chi2 = res.residual.squaredNorm();
  res.jacobian = jacobian(x0);

  double lambda = opts.lambda0;
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Eigen::MatrixXd jtj = res.jacobian.transpose() * res.jacobian;
    const Eigen::VectorXd jtr = res.jacobian.transpose() * res.residual;

    bool accepted = false;
    while (!accepted) {
      // Marquardt scaling: damp relative to the curvature of each direction.
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index i = 0; i < damped.rows(); ++i)
        damped(i, i) += lambda * std::max(jtj(i, i), 1e-300);

      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd x_try = res.x + step;
      // A trial point where the model breaks down numerically is just a bad
      // step, same as a non-finite residual: reject it and raise the damping.
      Eigen::VectorXd r_try;
      double chi2_try = std::numeric_limits<double>::infinity();
      try {
        r_try = f(x_try);
        if (r_try.allFinite()) chi2_try = r_try.squaredNorm();
      } catch (const NumericalError&) {
      }

      if (chi2_try < res.chi2) {
        const double decrease = res.chi2 - chi2_try;
        res.x = x_try;
        res.residual = r_try;
        res.chi2 = chi2_try;
        lambda = std::max(lambda / opts.lambda_down, 1e-12);
        accepted = true;

        if (decrease < opts.ftol * std::max(res.chi2, 1e-300) ||
            step.norm() < opts.xtol * (res.x.norm() + opts.xtol)) {
          res.converged = true;
        }
      } else {
        lambda *= opts.lambda_up;
        if (lambda > 1e12) {
          // No acceptable step even under near-gradient damping: the current
          // point is a minimum to machine precision.
          res.converged = true;
          break;
        }
      }
    }

    if (!accepted) break;         // damping limit hit
    if (res.converged) break;
    res.jacobian = jacobian(res.x);
  }

  res.jacobian = jacobian(res.x);
  return res;
}

}  // namespace odmr::levmar

#include <doctest.h>

#include <cmath>

#include "odmr/common.hpp"
#include "odmr/levmar.hpp"

using namespace odmr;
using namespace odmr::levmar;

TEST_SUITE("levmar") {

TEST_CASE("linear least squares converges to the normal-equation solution") {
  // residual r = A x - b with tall A
  Eigen::MatrixXd a(4, 2);
  a << 1, 1, 1, 2, 1, 3, 1, 4;
  Eigen::VectorXd b(4);
  b << 6, 5, 7, 10;

  const auto fn = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return a * x - b;
  };
  const Eigen::VectorXd exact =
      (a.transpose() * a).ldlt().solve(a.transpose() * b);

  const Result res = minimize(fn, Eigen::VectorXd::Zero(2), Options{});
  CHECK(res.converged);
  CHECK((res.x - exact).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("nonlinear valley: the Rosenbrock residuals reach the minimum") {
  const auto fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const Result res = minimize(fn, x0, Options{});
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.chi2 < 1e-16);
}

TEST_CASE("exponential decay parameters are recovered exactly without noise") {
  const double a_true = 2.0, k_true = 3.0;
  std::vector<double> t(40), y(40);
  for (int i = 0; i < 40; ++i) {
    t[i] = 0.05 * i;
    y[i] = a_true * std::exp(-k_true * t[i]);
  }
  const auto fn = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(40);
    for (int i = 0; i < 40; ++i) r[i] = x[0] * std::exp(-x[1] * t[i]) - y[i];
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 1.0;
  const Result res = minimize(fn, x0, Options{});
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(a_true).epsilon(1e-8));
  CHECK(res.x[1] == doctest::Approx(k_true).epsilon(1e-8));
}

TEST_CASE("an already-converged start is reported as converged") {
  const auto fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << x[0] - 1.0, x[1] + 2.0;
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, -2.0;  // exact minimum, chi2 = 0
  const Result res = minimize(fn, x0, Options{});
  CHECK(res.converged);
  CHECK(res.chi2 < 1e-30);
}

TEST_CASE("finite-difference jacobian matches the analytic one") {
  const auto fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(3);
    r << x[0] * x[0] + x[1], std::sin(x[0]) * x[1], std::exp(0.5 * x[1]);
    return r;
  };
  Eigen::VectorXd x(2);
  x << 0.7, -1.3;

  Eigen::MatrixXd analytic(3, 2);
  analytic << 2 * x[0], 1.0, std::cos(x[0]) * x[1], std::sin(x[0]), 0.0,
      0.5 * std::exp(0.5 * x[1]);

  const Eigen::MatrixXd fd = jacobian_fd(fn, x, 1e-6);
  CHECK((fd - analytic).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(jacobian_fd(fn, x, 0.0), ConfigError);
  CHECK_THROWS_AS(jacobian_fd(fn, x, 0.5), ConfigError);
}

TEST_CASE("non-finite residuals are diagnosed") {
  const auto fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(1);
    r << std::log(x[0]);  // NaN for x <= 0
    return r;
  };
  Eigen::VectorXd x0(1);
  x0 << -1.0;
  CHECK_THROWS_AS(minimize(fn, x0, Options{}), NumericalError);
}

TEST_CASE("a throwing trial point is a rejected step, not a fatal error") {
  // tanh has a near-flat tail, so the first Gauss-Newton step from x = 3
  // overshoots to x ~ -97, deep inside the throwing region.  The step must
  // be rejected like any other bad trial and the fit still reach zero.
  const auto fn = [](const Eigen::VectorXd& x) {
    if (std::abs(x[0]) > 50.0) throw NumericalError("model blew up");
    Eigen::VectorXd r(1);
    r << std::tanh(x[0]);
    return r;
  };
  Eigen::VectorXd x0(1);
  x0 << 3.0;
  const Result res = minimize(fn, x0);
  CHECK(res.converged);
  CHECK(std::abs(res.x[0]) < 1e-4);
}

TEST_CASE("iteration budget is honored") {
  // A slow-converging fit with a tight budget stops unconverged.
  const auto fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  Options opts;
  opts.max_iterations = 2;
  const Result res = minimize(fn, x0, opts);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 2);
}

}  // TEST_SUITE

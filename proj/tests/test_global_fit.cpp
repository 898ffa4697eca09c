#include <doctest.h>

#include <cmath>

#include "odmr/global_fit.hpp"
#include "odmr/presets.hpp"

using namespace odmr;
using namespace odmr::fit;

namespace {

FitParameterSet dap_truth() {
  FitParameterSet p;
  p.kinetic = presets::by_name("DAP-fig4c").kinetic;
  return p;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

// A small but information-rich subset of the plan for fast fit tests.
std::vector<pulse::MeasurementSpec> mini_plan(int n_points) {
  const auto grid = log_grid(1e-7, 4e-4, n_points);
  const auto grid_b = log_grid(1e-7, 1.5e-4, n_points);
  std::vector<pulse::MeasurementSpec> specs;
  for (int init : {1, 2, 3}) {
    pulse::MeasurementSpec a;
    a.init_id = init;
    a.kind = pulse::SequenceKind::a;
    a.delay_grid = grid;
    specs.push_back(a);
  }
  const Transition probes[3] = {Transition::xy, Transition::xz, Transition::yz};
  for (int i = 0; i < 3; ++i) {
    pulse::MeasurementSpec b;
    b.init_id = i + 1;
    b.kind = pulse::SequenceKind::b;
    b.b_transition = probes[i];
    b.delay_grid = grid_b;
    specs.push_back(b);
  }
  return specs;
}

kinetics::OpticalParams strong_pump() {
  kinetics::OpticalParams op;
  op.pump_rate = 2e6;
  return op;
}

pulse::SequenceTimings saturating_timings() {
  pulse::SequenceTimings t;
  t.laser_s = 1e-4;
  t.readout_window_s = 1e-6;
  t.readout_delay_s = 5e-6;
  return t;
}

}  // namespace

TEST_SUITE("global_fit") {

TEST_CASE("internal packing round-trips the physical parameters") {
  FitParameterSet p = dap_truth();
  p.pump_scale = 1.37;

  const Eigen::VectorXd theta = pack_internal(p, false, 0);
  CHECK(theta.size() == 9);
  const FitParameterSet back = unpack_internal(theta, false, 0);

  CHECK(back.kinetic.k_x == doctest::Approx(p.kinetic.k_x).epsilon(1e-12));
  CHECK(back.kinetic.w_yz == doctest::Approx(p.kinetic.w_yz).epsilon(1e-12));
  CHECK(back.kinetic.p_x == doctest::Approx(p.kinetic.p_x).epsilon(1e-12));
  CHECK(back.kinetic.p_z == doctest::Approx(p.kinetic.p_z).epsilon(1e-12));
  CHECK(back.pump_scale == doctest::Approx(1.37).epsilon(1e-12));

  p.per_curve_amplitude = std::vector<double>{0.9, 1.1, 1.05};
  const Eigen::VectorXd theta_amp = pack_internal(p, true, 3);
  CHECK(theta_amp.size() == 12);
  const FitParameterSet back_amp = unpack_internal(theta_amp, true, 3);
  REQUIRE(back_amp.per_curve_amplitude.has_value());
  CHECK((*back_amp.per_curve_amplitude)[1] == doctest::Approx(1.1).epsilon(1e-12));

  FitParameterSet bad = dap_truth();
  bad.kinetic.k_x = 0.0;
  CHECK_THROWS_AS(pack_internal(bad, false, 0), ConfigError);
}

TEST_CASE("unpacked branching fractions always live on the simplex") {
  Eigen::VectorXd theta = pack_internal(dap_truth(), false, 0);
  theta[6] = 4.2;   // extreme softmax logits
  theta[7] = -3.0;
  const FitParameterSet p = unpack_internal(theta, false, 0);
  CHECK(p.kinetic.p_x + p.kinetic.p_y + p.kinetic.p_z ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.kinetic.p_x > 0.0);
  CHECK(p.kinetic.p_y > 0.0);
  CHECK(p.kinetic.p_z > 0.0);
}

TEST_CASE("residuals vanish at the generating parameters") {
  const auto op = strong_pump();
  const auto timings = saturating_timings();
  const auto curves =
      synthesize_curves(dap_truth(), mini_plan(25), op, timings, 0.0, 1);

  const Eigen::VectorXd r = residuals(dap_truth(), curves, op, timings);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesis is deterministic in the seed") {
  const auto op = strong_pump();
  const auto timings = saturating_timings();
  const auto plan = mini_plan(10);

  const auto a = synthesize_curves(dap_truth(), plan, op, timings, 0.01, 42);
  const auto b = synthesize_curves(dap_truth(), plan, op, timings, 0.01, 42);
  const auto c = synthesize_curves(dap_truth(), plan, op, timings, 0.01, 43);

  REQUIRE(a.size() == b.size());
  bool any_differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a[i].signal.size(); ++j) {
      CHECK(a[i].signal[j] == b[i].signal[j]);  // bitwise
      any_differs |= a[i].signal[j] != c[i].signal[j];
    }
    REQUIRE(a[i].sigma.has_value());
    CHECK((*a[i].sigma)[0] == doctest::Approx(0.01));
  }
  CHECK(any_differs);
}

TEST_CASE("threaded residual evaluation is bitwise identical to serial") {
  const auto op = strong_pump();
  const auto timings = saturating_timings();
  const auto curves =
      synthesize_curves(dap_truth(), mini_plan(30), op, timings, 0.01, 5);

  FitParameterSet off_truth = dap_truth();
  off_truth.kinetic.k_x *= 1.8;
  const Eigen::VectorXd serial = residuals(off_truth, curves, op, timings, 1);
  const Eigen::VectorXd threaded = residuals(off_truth, curves, op, timings, 4);
  REQUIRE(serial.size() == threaded.size());
  for (Eigen::Index i = 0; i < serial.size(); ++i)
    CHECK(serial[i] == threaded[i]);  // bitwise
}

TEST_CASE("covariance reduces to the weighted normal-equation inverse") {
  Eigen::MatrixXd j(5, 2);
  j << 1, 0.5, 1, 1.0, 1, 1.5, 1, 2.0, 1, 2.5;
  const double chi2 = 3.0;
  const int dof = 3;

  bool deficient = true;
  const Eigen::MatrixXd cov = covariance_from_jacobian(j, chi2, dof, &deficient);
  CHECK_FALSE(deficient);
  const Eigen::MatrixXd expected =
      (j.transpose() * j).inverse() * (chi2 / dof);
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-12);

  // A duplicated column is rank deficient; the pseudo-inverse must be finite.
  Eigen::MatrixXd singular(5, 2);
  singular << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
  const Eigen::MatrixXd pinv_cov =
      covariance_from_jacobian(singular, chi2, dof, &deficient);
  CHECK(deficient);
  CHECK(pinv_cov.allFinite());
}

TEST_CASE("noiseless mini-fit recovers the generator from a perturbed start") {
  const auto op = strong_pump();
  const auto timings = saturating_timings();
  const auto curves =
      synthesize_curves(dap_truth(), mini_plan(40), op, timings, 0.0, 1);

  FitParameterSet start = dap_truth();
  start.kinetic.k_x *= 1.6;
  start.kinetic.k_y /= 1.4;
  start.kinetic.w_xz *= 1.5;
  start.kinetic.p_x = 0.5;
  start.kinetic.p_y = 0.3;
  start.kinetic.p_z = 0.2;

  FitOptions opts;
  opts.n_starts = 1;
  const FitResult res = fit::fit(curves, start, op, timings, opts);

  CHECK(res.converged);
  CHECK(res.chi2 < 1e-12);
  const auto truth = dap_truth().kinetic;
  CHECK(res.best_fit.kinetic.k_x == doctest::Approx(truth.k_x).epsilon(1e-5));
  CHECK(res.best_fit.kinetic.k_y == doctest::Approx(truth.k_y).epsilon(1e-5));
  CHECK(res.best_fit.kinetic.k_z == doctest::Approx(truth.k_z).epsilon(1e-5));
  CHECK(res.best_fit.kinetic.w_xy == doctest::Approx(truth.w_xy).epsilon(1e-4));
  CHECK(res.best_fit.kinetic.w_xz == doctest::Approx(truth.w_xz).epsilon(1e-4));
  CHECK(res.best_fit.kinetic.w_yz == doctest::Approx(truth.w_yz).epsilon(1e-4));
  CHECK(res.best_fit.kinetic.p_x == doctest::Approx(truth.p_x).epsilon(1e-5));
  CHECK(res.best_fit.kinetic.p_z == doctest::Approx(truth.p_z).epsilon(1e-5));
  CHECK(res.best_fit.pump_scale == doctest::Approx(1.0).epsilon(1e-5));

  CHECK(res.dof > 0);
  CHECK(res.uncertainties.size() == static_cast<size_t>(n_physical_core));
  CHECK(res.covariance_physical.rows() == n_physical_core);
}

TEST_CASE("input validation") {
  const auto op = strong_pump();
  const auto timings = saturating_timings();

  MeasurementCurve bad;
  bad.spec.init_id = 1;
  bad.spec.kind = pulse::SequenceKind::a;
  bad.delays = {1e-6, 2e-6};
  bad.signal = {1.0};  // length mismatch
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad.signal = {1.0, 0.9};
  bad.delays = {2e-6, 1e-6};  // not increasing
  CHECK_THROWS_AS(validate(bad), ConfigError);

  CHECK_THROWS_AS(fit::fit({}, dap_truth(), op, timings, FitOptions{}),
                  ConfigError);
}

}  // TEST_SUITE

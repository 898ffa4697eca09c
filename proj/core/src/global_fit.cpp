#include "odmr/global_fit.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <random>

#include "odmr/levmar.hpp"

namespace odmr::fit {

using kinetics::KineticParams;
using kinetics::OpticalParams;
using pulse::PlanSimulator;
using pulse::SequenceTimings;

void validate(const MeasurementCurve& curve) {
  if (curve.delays.size() != curve.signal.size())
    throw ConfigError("curve '" + curve.spec.label() + "': delay/signal length mismatch");
  if (curve.sigma && curve.sigma->size() != curve.delays.size())
    throw ConfigError("curve '" + curve.spec.label() + "': sigma length mismatch");
  for (size_t i = 1; i < curve.delays.size(); ++i)
    if (!(curve.delays[i] > curve.delays[i - 1]))
      throw ConfigError("curve '" + curve.spec.label() + "': delays must be strictly increasing");
  if (curve.sigma)
    for (double s : *curve.sigma)
      if (!(s > 0.0))
        throw ConfigError("curve '" + curve.spec.label() + "': sigma must be > 0");
}

// Internal vector layout: [log k_x, log k_y, log k_z, log w_xy, log w_xz,
// log w_yz, a_x, a_y, log pump_scale, (log amplitudes...)] where
// P = softmax(a_x, a_y, 0).
namespace {
constexpr int kNCore = 9;

std::array<double, 3> softmax_p(double ax, double ay) {
  const double m = std::max({ax, ay, 0.0});
  const double ex = std::exp(ax - m), ey = std::exp(ay - m), ez = std::exp(-m);
  const double sum = ex + ey + ez;
  return {ex / sum, ey / sum, ez / sum};
}
}  // namespace

Eigen::VectorXd pack_internal(const FitParameterSet& p, bool with_amplitudes,
                              int n_curves) {
  const int n = kNCore + (with_amplitudes ? n_curves : 0);
  Eigen::VectorXd theta(n);
  const auto k = p.kinetic.k(), w = p.kinetic.w(), pp = p.kinetic.p();
  for (int i = 0; i < 3; ++i) {
    if (!(k[i] > 0.0) || !(w[i] > 0.0))
      throw ConfigError("pack_internal: rates must be > 0 for the log parameterization");
    theta[i] = std::log(k[i]);
    theta[3 + i] = std::log(w[i]);
  }
  if (!(pp[2] > 0.0) || !(pp[0] > 0.0) || !(pp[1] > 0.0))
    throw ConfigError("pack_internal: P components must be > 0");
  theta[6] = std::log(pp[0] / pp[2]);
  theta[7] = std::log(pp[1] / pp[2]);
  if (!(p.pump_scale > 0.0))
    throw ConfigError("pack_internal: pump_scale must be > 0");
  theta[8] = std::log(p.pump_scale);
  if (with_amplitudes) {
    for (int c = 0; c < n_curves; ++c) {
      const double a =
          p.per_curve_amplitude ? (*p.per_curve_amplitude)[c] : 1.0;
      if (!(a > 0.0)) throw ConfigError("pack_internal: amplitudes must be > 0");
      theta[kNCore + c] = std::log(a);
    }
  }
  return theta;
}

FitParameterSet unpack_internal(const Eigen::VectorXd& theta,
                                bool with_amplitudes, int n_curves) {
  FitParameterSet p;
  p.kinetic.k_x = std::exp(theta[0]);
  p.kinetic.k_y = std::exp(theta[1]);
  p.kinetic.k_z = std::exp(theta[2]);
  p.kinetic.w_xy = std::exp(theta[3]);
  p.kinetic.w_xz = std::exp(theta[4]);
  p.kinetic.w_yz = std::exp(theta[5]);
  const auto pp = softmax_p(theta[6], theta[7]);
  p.kinetic.p_x = pp[0];
  p.kinetic.p_y = pp[1];
  p.kinetic.p_z = pp[2];
  p.pump_scale = std::exp(theta[8]);
  if (with_amplitudes) {
    std::vector<double> amps(n_curves);
    for (int c = 0; c < n_curves; ++c) amps[c] = std::exp(theta[kNCore + c]);
    p.per_curve_amplitude = std::move(amps);
  }
  return p;
}

namespace {

// Model curves for one parameter set; curves are independent given the
// shared PlanSimulator, so they parallelize without affecting results.
std::vector<std::vector<double>> model_curves(
    const FitParameterSet& params, const std::vector<MeasurementCurve>& data,
    const OpticalParams& op, const SequenceTimings& timings, int threads) {
  OpticalParams scaled = op;
  scaled.pump_rate *= params.pump_scale;
  const PlanSimulator sim(params.kinetic, scaled, timings);

  std::vector<std::vector<double>> model(data.size());
  auto run = [&](size_t begin, size_t end) {
    for (size_t c = begin; c < end; ++c) {
      pulse::MeasurementSpec spec = data[c].spec;
      spec.delay_grid = data[c].delays;
      model[c] = sim.simulate(spec);
      if (params.per_curve_amplitude)
        for (double& v : model[c]) v *= (*params.per_curve_amplitude)[c];
    }
  };

  if (threads <= 1 || data.size() < 2) {
    run(0, data.size());
  } else {
    const int n_jobs = std::min<int>(threads, static_cast<int>(data.size()));
    std::vector<std::future<void>> jobs;
    const size_t chunk = (data.size() + n_jobs - 1) / n_jobs;
    for (int j = 0; j < n_jobs; ++j) {
      const size_t begin = j * chunk;
      const size_t end = std::min(data.size(), begin + chunk);
      if (begin >= end) break;
      jobs.push_back(std::async(std::launch::async, run, begin, end));
    }
    for (auto& job : jobs) job.get();
  }
  return model;
}

}  // namespace

Eigen::VectorXd residuals(const FitParameterSet& params,
                          const std::vector<MeasurementCurve>& data,
                          const OpticalParams& op,
                          const SequenceTimings& timings, int threads) {
  if (data.empty()) throw ConfigError("residuals: no curves");
  size_t total = 0;
  for (const auto& c : data) total += c.delays.size();

  const auto model = model_curves(params, data, op, timings, threads);

  Eigen::VectorXd r(total);
  size_t at = 0;
  for (size_t c = 0; c < data.size(); ++c) {
    const auto& curve = data[c];
    for (size_t i = 0; i < curve.delays.size(); ++i) {
      const double sigma = curve.sigma ? (*curve.sigma)[i] : 1.0;
      r[at++] = (model[c][i] - curve.signal[i]) / sigma;
    }
  }
  return r;
}

Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jacobian,
                                         double chi2, int dof,
                                         bool* rank_deficient) {
  if (dof <= 0) throw ConfigError("covariance_from_jacobian: dof must be > 0");
  const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() ? sv.maxCoeff() : 0.0;
  const double cutoff = smax * 1e-12;
  bool deficient = false;

  // Inverse through the SVD; rank-deficient directions are pseudo-inverted
  // (zeroed) and flagged rather than blowing up.
  Eigen::VectorXd inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) {
      inv_sv[i] = 1.0 / sv[i];
    } else {
      inv_sv[i] = 0.0;
      deficient = true;
    }
  }
  if (rank_deficient) *rank_deficient = deficient;

  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() *
         (chi2 / dof);
}

namespace {

// d(physical)/d(theta) for the delta method; physical order
// k(3), w(3), P(3), pump_scale, then amplitudes.
Eigen::MatrixXd internal_to_physical_jacobian(const Eigen::VectorXd& theta,
                                              bool with_amplitudes,
                                              int n_curves) {
  const int n_int = static_cast<int>(theta.size());
  const int n_phys = n_physical_core + (with_amplitudes ? n_curves : 0);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_phys, n_int);
  for (int i = 0; i < 6; ++i) g(i, i) = std::exp(theta[i]);  // log rates
  const auto p = softmax_p(theta[6], theta[7]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double delta = i == j ? 1.0 : 0.0;
      g(6 + i, 6 + j) = p[i] * (delta - p[j]);
    }
  }
  g(9, 8) = std::exp(theta[8]);  // pump_scale
  if (with_amplitudes)
    for (int c = 0; c < n_curves; ++c)
      g(n_physical_core + c, kNCore + c) = std::exp(theta[kNCore + c]);
  return g;
}

}  // namespace

FitResult fit(const std::vector<MeasurementCurve>& data,
              const FitParameterSet& initial, const OpticalParams& op,
              const SequenceTimings& timings, const FitOptions& options) {
  if (data.empty()) throw ConfigError("fit: no curves");
  for (const auto& c : data) validate(c);

  const bool with_amps = options.fit_per_curve_amplitude;
  const int n_curves = static_cast<int>(data.size());

  size_t total = 0;
  for (const auto& c : data) total += c.delays.size();
  const int n_free = kNCore + (with_amps ? n_curves : 0);
  const int dof = static_cast<int>(total) - n_free;
  if (dof <= 0) throw ConfigError("fit: dof <= 0");

  auto resid_fn = [&](const Eigen::VectorXd& theta) {
    try {
      return residuals(unpack_internal(theta, with_amps, n_curves), data, op,
                       timings, options.threads);
    } catch (const ConfigError& e) {
      // exp() of an extreme internal coordinate overflows the physical
      // rates.  The curves and timings were validated up front, so in the
      // unconstrained space this is a numerical failure of the trial point,
      // not a configuration problem.
      throw NumericalError(e.what());
    }
  };

  levmar::Options lm_opts;
  lm_opts.max_iterations = options.max_iterations;
  lm_opts.ftol = options.ftol;
  lm_opts.xtol = options.xtol;
  lm_opts.fd_rel_step = options.fd_rel_step;

  const Eigen::VectorXd theta0 = pack_internal(initial, with_amps, n_curves);

  // Multi-start: the supplied start plus (n_starts - 1) perturbed copies.
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-std::log(options.start_spread),
                                           std::log(options.start_spread));
  std::vector<levmar::Result> runs;
  for (int s = 0; s < std::max(1, options.n_starts); ++s) {
    Eigen::VectorXd start = theta0;
    if (s > 0)
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += u(rng);
    try {
      runs.push_back(levmar::minimize(resid_fn, start, lm_opts));
    } catch (const NumericalError&) {
      if (s == 0) throw;  // the caller's own start must be evaluable
    }
  }
  if (runs.empty()) throw NumericalError("fit: no start converged");

  size_t best = 0;
  for (size_t i = 1; i < runs.size(); ++i)
    if (runs[i].chi2 < runs[best].chi2) best = i;

  int tied = 0;
  for (const auto& run : runs)
    if (&run != &runs[best] &&
        run.chi2 - runs[best].chi2 <= options.ftol * std::max(runs[best].chi2, 1.0))
      ++tied;

  const auto& win = runs[best];

  FitResult out;
  out.best_fit = unpack_internal(win.x, with_amps, n_curves);
  out.chi2 = win.chi2;
  out.dof = dof;
  out.converged = win.converged;
  out.n_iterations = win.iterations;
  out.n_tied_starts = tied;

  out.covariance =
      covariance_from_jacobian(win.jacobian, win.chi2, dof, &out.rank_deficient);
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.covariance);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    out.condition_number = smin > 0.0 ? smax / smin
                                      : std::numeric_limits<double>::infinity();
  }

  const Eigen::MatrixXd g =
      internal_to_physical_jacobian(win.x, with_amps, n_curves);
  out.covariance_physical = g * out.covariance * g.transpose();
  out.uncertainties.resize(out.covariance_physical.rows());
  for (Eigen::Index i = 0; i < out.covariance_physical.rows(); ++i)
    out.uncertainties[i] =
        std::sqrt(std::max(0.0, out.covariance_physical(i, i)));

  // Per-curve residual blocks of the winning fit.
  size_t at = 0;
  for (const auto& curve : data) {
    std::vector<double> block(curve.delays.size());
    for (size_t i = 0; i < block.size(); ++i) block[i] = win.residual[at++];
    out.per_curve_residuals.push_back(std::move(block));
  }
  return out;
}

std::vector<MeasurementCurve> synthesize_curves(
    const FitParameterSet& truth, const std::vector<pulse::MeasurementSpec>& specs,
    const OpticalParams& op, const SequenceTimings& timings, double noise,
    std::uint64_t seed) {
  OpticalParams scaled = op;
  scaled.pump_rate *= truth.pump_scale;
  const PlanSimulator sim(truth.kinetic, scaled, timings);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<MeasurementCurve> out;
  for (size_t c = 0; c < specs.size(); ++c) {
    MeasurementCurve curve;
    curve.spec = specs[c];
    curve.delays = specs[c].delay_grid;
    curve.signal = sim.simulate(specs[c]);
    if (truth.per_curve_amplitude)
      for (double& v : curve.signal) v *= (*truth.per_curve_amplitude)[c];
    if (noise > 0.0) {
      for (double& v : curve.signal) v += noise * gauss(rng);
      curve.sigma = std::vector<double>(curve.signal.size(), noise);
    }
    out.push_back(std::move(curve));
  }
  return out;
}

}  // namespace odmr::fit

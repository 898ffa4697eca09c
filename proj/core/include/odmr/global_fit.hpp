// Global fit of the nine kinetic parameters (plus a shared pump-scale
// nuisance, optionally per-curve amplitudes) to all measurement curves
// simultaneously.
//
// Internally the fit runs in an unconstrained space: log(k_i), log(w_ij),
// softmax-parameterized P (pivot P_z), log(pump_scale).  That keeps rates
// positive and P on the simplex without bound clipping, and makes the
// covariance meaningful; physical uncertainties come out via the delta
// method.
#pragma once

#include <cstdint>
#include <optional>

#include "odmr/pulse_engine.hpp"

namespace odmr::fit {

struct MeasurementCurve {
  pulse::MeasurementSpec spec;
  std::vector<double> delays;                 // s, strictly increasing
  std::vector<double> signal;                 // normalized
  std::optional<std::vector<double>> sigma;   // per-point std dev
};

void validate(const MeasurementCurve& curve);

struct FitParameterSet {
  kinetics::KineticParams kinetic;
  double pump_scale = 1.0;  // multiplies OpticalParams::pump_rate
  std::optional<std::vector<double>> per_curve_amplitude;
};

struct FitOptions {
  int max_iterations = 500;
  double ftol = 1e-10;
  double xtol = 1e-12;
  double fd_rel_step = 1e-6;
  int n_starts = 8;             // multi-start: 1 = only the supplied start
  double start_spread = 3.0;    // extra starts perturb rates by */ up to this
  std::uint64_t seed = 0;       // for the multi-start perturbations
  bool fit_per_curve_amplitude = false;
  int threads = 1;              // curves are simulated independently
};

// Physical-parameter order used for uncertainties/covariance reporting:
// k_x k_y k_z w_xy w_xz w_yz P_x P_y P_z pump_scale [amplitudes...].
inline constexpr int n_physical_core = 10;

struct FitResult {
  FitParameterSet best_fit;
  Eigen::MatrixXd covariance;            // internal (free) parameter space
  Eigen::MatrixXd covariance_physical;   // delta-method transform
  std::vector<double> uncertainties;     // sqrt(diag(covariance_physical))
  double chi2 = 0.0;
  int dof = 0;
  std::vector<std::vector<double>> per_curve_residuals;
  bool converged = false;
  int n_iterations = 0;
  double condition_number = 0.0;         // of the internal covariance
  bool rank_deficient = false;           // JtJ was singular; pseudo-inverse used
  int n_tied_starts = 0;                 // multi-start minima within ftol of best
};

// Map between the internal vector and the physical parameter set.
Eigen::VectorXd pack_internal(const FitParameterSet& p, bool with_amplitudes,
                              int n_curves);
FitParameterSet unpack_internal(const Eigen::VectorXd& theta,
                                bool with_amplitudes, int n_curves);

// Concatenated (model - data)/sigma over all curves; sigma defaults to 1.
// The model is the PlanSimulator forward simulation of each curve's spec.
Eigen::VectorXd residuals(const FitParameterSet& params,
                          const std::vector<MeasurementCurve>& data,
                          const kinetics::OpticalParams& op,
                          const pulse::SequenceTimings& timings,
                          int threads = 1);

FitResult fit(const std::vector<MeasurementCurve>& data,
              const FitParameterSet& initial,
              const kinetics::OpticalParams& op,
              const pulse::SequenceTimings& timings,
              const FitOptions& options = {});

// cov = (J^T J)^-1 * chi2/dof.  Rank deficiency (relative singular value
// below 1e-12) switches to the pseudo-inverse and sets the flag.
Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jacobian,
                                         double chi2, int dof,
                                         bool* rank_deficient = nullptr);

// Forward-simulate every spec and add iid Gaussian noise (sigma = noise);
// the per-point sigma fields are filled with the same value.  noise = 0
// gives exact model curves with no sigma.
std::vector<MeasurementCurve> synthesize_curves(
    const FitParameterSet& truth, const std::vector<pulse::MeasurementSpec>& specs,
    const kinetics::OpticalParams& op, const pulse::SequenceTimings& timings,
    double noise, std::uint64_t seed);

}  // namespace odmr::fit

// Classical population kinetics of the optical cycle
// S0 -> S1 -> {Tx,Ty,Tz} -> S0 with spin-lattice relaxation, propagated
// exactly as a linear first-order system.
//
// Two representations: `reduced` eliminates S1 adiabatically (its ns-scale
// lifetime is three orders below the triplet microsecond scale) giving a
// 4-state system [S0,Tx,Ty,Tz]; `explicit_s1` keeps all five states.
#pragma once

#include <array>

#include <Eigen/Dense>

#include "odmr/common.hpp"

namespace odmr::kinetics {

enum class Mode { reduced, explicit_s1 };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// The nine triplet parameters: anisotropic decay rates k_i, symmetric
// spin-lattice exchange rates w_ij, and ISC branching fractions P_i.
struct KineticParams {
  double k_x = 0.0, k_y = 0.0, k_z = 0.0;     // T_i -> S0, s^-1
  double w_xy = 0.0, w_xz = 0.0, w_yz = 0.0;  // T_i <-> T_j, s^-1, both directions
  double p_x = 1.0, p_y = 0.0, p_z = 0.0;     // sum to 1

  std::array<double, 3> k() const { return {k_x, k_y, k_z}; }
  std::array<double, 3> w() const { return {w_xy, w_xz, w_yz}; }
  std::array<double, 3> p() const { return {p_x, p_y, p_z}; }
};

// Throws ConfigError on negative rates or non-normalizable P; renormalizes
// P in place when |sum - 1| <= 1e-9, rejects larger deviations.
void validate(KineticParams& kp);

struct OpticalParams {
  double pump_rate = 0.0;       // effective S0 excitation rate, s^-1 (laser on)
  double isc_yield = 0.65;      // Phi_ISC
  double s1_decay_rate = 1e8;   // total S1 decay, s^-1 (explicit_s1 mode only)
  Mode mode = Mode::reduced;
};

void validate(const OpticalParams& op);

// Populations in mode-dependent order: reduced [S0,Tx,Ty,Tz],
// explicit_s1 [S0,S1,Tx,Ty,Tz].
struct StateVector {
  Eigen::VectorXd p;
  Mode mode = Mode::reduced;

  static StateVector ground(Mode m);
  static int dim(Mode m) { return m == Mode::reduced ? 4 : 5; }
  // index of the first triplet entry
  static int triplet_offset(Mode m) { return m == Mode::reduced ? 1 : 2; }

  double s0() const { return p[0]; }
  double s1() const { return mode == Mode::explicit_s1 ? p[1] : 0.0; }
  double triplet(int i) const { return p[triplet_offset(mode) + i]; }
  double sum() const { return p.sum(); }
};

// First-order generator: off-diagonals >= 0, columns sum to zero.
struct RateMatrix {
  Eigen::MatrixXd m;
  Mode mode = Mode::reduced;
};

// Encoding (explicit_s1): S0 -> S1 at pump_rate (laser on only);
// S1 -> S0 at (1 - Phi)*s1_decay; S1 -> T_i at Phi*P_i*s1_decay;
// T_i -> S0 at k_i; T_i <-> T_j at w_ij.
// Reduced: pump feeds T_i directly at pump*Phi*P_i, S0 loses pump*Phi
// (the non-ISC branch returns to S0 immediately and drops out).
RateMatrix rate_matrix(const KineticParams& kp, const OpticalParams& op,
                       bool laser_on);

// Reusable decomposition for exp(M t) v.  Eigendecomposition when the
// eigenvector basis is well conditioned (rcond >= 1e-8), otherwise
// scaling-and-squaring Pade per evaluation.
class Expm {
 public:
  explicit Expm(const Eigen::MatrixXd& m, double rcond_tol = 1e-8);

  Eigen::VectorXd apply(const Eigen::VectorXd& v, double t) const;
  Eigen::MatrixXd matrix(double t) const;  // dense exp(M t)

  bool uses_pade() const { return use_pade_; }
  const Eigen::MatrixXcd& eigenvectors() const { return v_; }
  const Eigen::MatrixXcd& eigenvectors_inv() const { return vi_; }
  const Eigen::VectorXcd& eigenvalues() const { return lambda_; }

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXcd v_, vi_;
  Eigen::VectorXcd lambda_;
  bool use_pade_ = false;
};

// state' = exp(R t) state.  Rejects t < 0; enforces conservation and
// non-negativity (entries below -1e-12 raise NumericalError rather than
// being clamped silently).
StateVector evolve(const StateVector& state, const RateMatrix& r, double t);

// Normalized kernel vector of R (the cw steady state).  Errors when the
// kernel is not one-dimensional (disconnected kinetics).
StateVector steady_state(const RateMatrix& r);

// Ideal instantaneous pi pulse: exchanges the populations of the two named
// sublevels.  efficiency < 1 transfers only that fraction:
// p' = (1-eff)*p + eff*swapped(p).
StateVector apply_pi_pulse(const StateVector& state, Transition transition,
                           double efficiency = 1.0);

// Integrated fluorescence proxy for a readout pulse of length `window`:
// evolve under the laser-on generator and return integral of
// pump_rate * n_S0(t) dt (photons ~ excitation events).  Computed exactly
// with one augmented matrix exponential.
double pl_signal(const StateVector& state, const KineticParams& kp,
                 const OpticalParams& op, double window);

// Row functional g such that g . p0 == pl_signal(p0) for the given window;
// lets batched simulations reuse the readout across many states.
Eigen::RowVectorXd readout_row(const KineticParams& kp,
                               const OpticalParams& op, double window);

}  // namespace odmr::kinetics

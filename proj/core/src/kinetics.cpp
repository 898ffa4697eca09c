#include "odmr/kinetics.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace odmr::kinetics {

std::string to_string(Mode m) {
  return m == Mode::reduced ? "reduced" : "explicit_s1";
}

Mode mode_from_string(const std::string& s) {
  if (s == "reduced") return Mode::reduced;
  if (s == "explicit_s1") return Mode::explicit_s1;
  throw ConfigError("unknown kinetics mode '" + s +
                    "' (expected reduced or explicit_s1)");
}

void validate(KineticParams& kp) {
  for (double r : {kp.k_x, kp.k_y, kp.k_z, kp.w_xy, kp.w_xz, kp.w_yz}) {
    if (!std::isfinite(r) || r < 0.0)
      throw ConfigError("kinetic rates must be finite and >= 0");
  }
  for (double p : {kp.p_x, kp.p_y, kp.p_z}) {
    if (!std::isfinite(p) || p < 0.0)
      throw ConfigError("ISC branching fractions must be finite and >= 0");
  }
  const double sum = kp.p_x + kp.p_y + kp.p_z;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("ISC branching fractions must sum to 1 (got " +
                      std::to_string(sum) + ")");
  kp.p_x /= sum;
  kp.p_y /= sum;
  kp.p_z /= sum;
}

void validate(const OpticalParams& op) {
  if (!std::isfinite(op.pump_rate) || op.pump_rate < 0.0)
    throw ConfigError("pump_rate must be finite and >= 0");
  if (!(op.isc_yield >= 0.0 && op.isc_yield <= 1.0))
    throw ConfigError("isc_yield must be in [0, 1]");
  if (op.mode == Mode::explicit_s1 &&
      (!std::isfinite(op.s1_decay_rate) || op.s1_decay_rate <= 0.0))
    throw ConfigError("explicit_s1 mode needs s1_decay_rate > 0");
}

StateVector StateVector::ground(Mode m) {
  StateVector s;
  s.mode = m;
  s.p = Eigen::VectorXd::Zero(dim(m));
  s.p[0] = 1.0;
  return s;
}

RateMatrix rate_matrix(const KineticParams& kp, const OpticalParams& op,
                       bool laser_on) {
  KineticParams checked = kp;
  validate(checked);
  validate(op);

  const int n = StateVector::dim(op.mode);
  const int toff = StateVector::triplet_offset(op.mode);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);

  const auto k = checked.k();
  const auto p = checked.p();

  // Triplet decay T_i -> S0.
  for (int i = 0; i < 3; ++i) {
    m(0, toff + i) += k[i];
    m(toff + i, toff + i) -= k[i];
  }
  // Spin-lattice exchange, equal rates both ways (ZFS << kT at room
  // temperature, so no thermal asymmetry).
  const std::array<std::array<int, 2>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  const auto w = checked.w();
  for (int e = 0; e < 3; ++e) {
    const int a = toff + pairs[e][0], b = toff + pairs[e][1];
    m(a, b) += w[e];
    m(b, b) -= w[e];
    m(b, a) += w[e];
    m(a, a) -= w[e];
  }

  if (op.mode == Mode::explicit_s1) {
    // S1 -> S0 (radiative + IC) and S1 -> T_i (ISC branches).
    const double g = op.s1_decay_rate;
    m(0, 1) += (1.0 - op.isc_yield) * g;
    for (int i = 0; i < 3; ++i) m(toff + i, 1) += op.isc_yield * p[i] * g;
    m(1, 1) -= g;
    if (laser_on) {
      m(1, 0) += op.pump_rate;
      m(0, 0) -= op.pump_rate;
    }
  } else if (laser_on) {
    // S1 eliminated: only the ISC branch removes ground population, the
    // rest of the optical cycle returns immediately.
    for (int i = 0; i < 3; ++i) m(toff + i, 0) += op.pump_rate * op.isc_yield * p[i];
    m(0, 0) -= op.pump_rate * op.isc_yield;
  }

  return {m, op.mode};
}

Expm::Expm(const Eigen::MatrixXd& m, double rcond_tol) : m_(m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    use_pade_ = true;
    return;
  }
  v_ = solver.eigenvectors();
  lambda_ = solver.eigenvalues();

  // Reciprocal condition of the eigenvector basis; near-defective matrices
  // (coinciding rates) get the Pade path instead.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v_);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smax <= 0.0 || smin / smax < rcond_tol) {
    use_pade_ = true;
    return;
  }
  vi_ = v_.inverse();
}

Eigen::VectorXd Expm::apply(const Eigen::VectorXd& v, double t) const {
  if (use_pade_) return matrix(t) * v;
  const Eigen::VectorXcd c = vi_ * v.cast<std::complex<double>>();
  const Eigen::VectorXcd scaled =
      ((lambda_.array() * t).exp() * c.array()).matrix();
  return (v_ * scaled).real();
}

Eigen::MatrixXd Expm::matrix(double t) const {
  if (use_pade_) {
    Eigen::MatrixXd mt = m_ * t;
    return mt.exp();  // scaling-and-squaring Pade
  }
  const Eigen::MatrixXcd d =
      ((lambda_.array() * t).exp()).matrix().asDiagonal();
  return (v_ * d * vi_).real();
}

StateVector evolve(const StateVector& state, const RateMatrix& r, double t) {
  if (t < 0.0) throw ConfigError("evolve: t must be >= 0");
  if (state.mode != r.mode || state.p.size() != r.m.rows())
    throw ConfigError("evolve: state/matrix mode mismatch");

  StateVector out;
  out.mode = state.mode;
  out.p = Expm(r.m).apply(state.p, t);

  for (Eigen::Index i = 0; i < out.p.size(); ++i) {
    if (out.p[i] < -1e-12)
      throw NumericalError("evolve: negative population beyond tolerance");
    if (out.p[i] < 0.0) out.p[i] = 0.0;
  }
  return out;
}

StateVector steady_state(const RateMatrix& r) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(r.m);
  if (solver.info() != Eigen::Success)
    throw NumericalError("steady_state: eigen decomposition failed");

  // A generator always has eigenvalue 0; demand that it is simple.
  const Eigen::VectorXcd lambda = solver.eigenvalues();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    scale = std::max(scale, std::abs(lambda[i]));
  const double tol = std::max(scale, 1.0) * 1e-10;

  int kernel_dim = 0;
  int kernel_index = -1;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) < tol) {
      ++kernel_dim;
      if (kernel_index < 0 || std::abs(lambda[i]) < std::abs(lambda[kernel_index]))
        kernel_index = static_cast<int>(i);
    }
  }
  if (kernel_dim != 1)
    throw NumericalError(
        "steady_state: kernel dimension " + std::to_string(kernel_dim) +
        " != 1 (disconnected kinetics)");

  Eigen::VectorXd kernel = solver.eigenvectors().col(kernel_index).real();
  if (kernel.sum() < 0.0) kernel = -kernel;
  for (Eigen::Index i = 0; i < kernel.size(); ++i) {
    if (kernel[i] < -1e-9 * kernel.cwiseAbs().maxCoeff())
      throw NumericalError("steady_state: kernel vector has negative entries");
    if (kernel[i] < 0.0) kernel[i] = 0.0;
  }
  const double sum = kernel.sum();
  if (sum <= 0.0) throw NumericalError("steady_state: degenerate kernel vector");

  StateVector out;
  out.mode = r.mode;
  out.p = kernel / sum;
  return out;
}

StateVector apply_pi_pulse(const StateVector& state, Transition transition,
                           double efficiency) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw ConfigError("pi-pulse efficiency must be in [0, 1]");
  const auto [a, b] = transition_levels(transition);
  const int toff = StateVector::triplet_offset(state.mode);

  StateVector out = state;
  const double pa = state.p[toff + a], pb = state.p[toff + b];
  out.p[toff + a] = (1.0 - efficiency) * pa + efficiency * pb;
  out.p[toff + b] = (1.0 - efficiency) * pb + efficiency * pa;
  return out;
}

namespace {

// Generator augmented with a photon-counting row: the extra coordinate
// accumulates integral pump_rate * n_S0 dt while the population block
// evolves under the laser-on generator.
Eigen::MatrixXd augmented_readout_generator(const KineticParams& kp,
                                            const OpticalParams& op) {
  const RateMatrix on = rate_matrix(kp, op, true);
  const int n = static_cast<int>(on.m.rows());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = on.m;
  aug(n, 0) = op.pump_rate;
  return aug;
}

}  // namespace

double pl_signal(const StateVector& state, const KineticParams& kp,
                 const OpticalParams& op, double window) {
  if (window <= 0.0) throw ConfigError("pl_signal: window must be > 0");
  if (state.mode != op.mode)
    throw ConfigError("pl_signal: state/optical mode mismatch");

  const Eigen::MatrixXd aug = augmented_readout_generator(kp, op);
  const int n = static_cast<int>(state.p.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
  v.head(n) = state.p;
  // The augmented matrix is defective at eigenvalue 0 by construction, so
  // Expm routes it through the Pade path automatically.
  return Expm(aug).apply(v, window)[n];
}

Eigen::RowVectorXd readout_row(const KineticParams& kp,
                               const OpticalParams& op, double window) {
  if (window <= 0.0) throw ConfigError("readout_row: window must be > 0");
  const Eigen::MatrixXd aug = augmented_readout_generator(kp, op);
  const int n = static_cast<int>(aug.rows()) - 1;
  const Eigen::MatrixXd full = Expm(aug).matrix(window);
  return full.row(n).head(n);
}

}  // namespace odmr::kinetics

#include "odmr/spin_hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace odmr {

std::string validate(const SpinSystem& system) {
  const auto& zfs = system.zfs;
  if (!std::isfinite(zfs.d_mhz) || !std::isfinite(zfs.e_mhz))
    throw ConfigError("ZFS parameters must be finite");
  if (zfs.d_mhz <= 0.0)
    throw ConfigError("ZFS requires D > 0 (conventional ordering)");
  if (std::abs(zfs.e_mhz) > zfs.d_mhz / 3.0 + 1e-12)
    throw ConfigError("ZFS requires |E| <= D/3 (conventional ordering)");
  if (system.nuclei.size() > 2)
    throw ConfigError("at most two I=1 nuclei are supported");

  std::string warning;
  int n = 0;
  for (const auto& nuc : system.nuclei) {
    for (double v : {nuc.hyperfine.xx, nuc.hyperfine.yy, nuc.hyperfine.zz,
                     nuc.quadrupole.xx, nuc.quadrupole.yy, nuc.quadrupole.zz}) {
      if (!std::isfinite(v)) throw ConfigError("non-finite tensor entry");
    }
    const double qmax = nuc.quadrupole.max_abs();
    if (qmax > 0.0 && std::abs(nuc.quadrupole.trace()) > 0.1 * qmax) {
      warning += "nucleus " + std::to_string(n) +
                 ": quadrupole tensor trace is far from zero (|trace| > 10% of "
                 "the largest component)\n";
    }
    ++n;
  }
  return warning;
}

namespace spinham {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  // even permutations of (0,1,2)
  if ((i == 0 && j == 1) || (i == 1 && j == 2) || (i == 2 && j == 0)) return 1;
  return -1;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Operator `op` on factor `which` of `n_factors` spin-1 spaces
// (factor 0 = electron, 1.. = nuclei; electron is the leftmost factor).
Eigen::MatrixXcd embed(const Eigen::Matrix3cd& op, int which, int n_factors) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int f = 0; f < n_factors; ++f) {
    if (f == which)
      out = kron(out, op);
    else
      out = kron(out, Eigen::Matrix3cd::Identity());
  }
  return out;
}

}  // namespace

Eigen::Matrix3cd spin1_operator(int k) {
  // Cartesian zero-field basis: (S_k)_lm = -i eps_klm.
  Eigen::Matrix3cd s = Eigen::Matrix3cd::Zero();
  for (int l = 0; l < 3; ++l)
    for (int m = 0; m < 3; ++m)
      s(l, m) = -kI * static_cast<double>(levi_civita(k, l, m));
  return s;
}

Eigen::MatrixXcd electron_spin_operator(const SpinSystem& system, int k) {
  const int n_factors = 1 + static_cast<int>(system.nuclei.size());
  return embed(spin1_operator(k), 0, n_factors);
}

Eigen::MatrixXcd build_hamiltonian(const SpinSystem& system) {
  validate(system);
  const int n_factors = 1 + static_cast<int>(system.nuclei.size());

  const Eigen::Matrix3cd sx = spin1_operator(0);
  const Eigen::Matrix3cd sy = spin1_operator(1);
  const Eigen::Matrix3cd sz = spin1_operator(2);

  // ZFS: D(Sz^2 - S^2/3) + E(Sx^2 - Sy^2), with S^2 = 2 for S=1.
  Eigen::Matrix3cd zfs =
      system.zfs.d_mhz * (sz * sz - (2.0 / 3.0) * Eigen::Matrix3cd::Identity()) +
      system.zfs.e_mhz * (sx * sx - sy * sy);

  Eigen::MatrixXcd h = embed(zfs, 0, n_factors);

  for (int n = 0; n < static_cast<int>(system.nuclei.size()); ++n) {
    const auto& nuc = system.nuclei[n];
    for (int k = 0; k < 3; ++k) {
      const Eigen::Matrix3cd ik = spin1_operator(k);  // I=1 uses the same matrices
      const Eigen::MatrixXcd ik_full = embed(ik, n + 1, n_factors);
      h += nuc.hyperfine.component(k) *
               (electron_spin_operator(system, k) * ik_full) +
           nuc.quadrupole.component(k) * (ik_full * ik_full);
    }
  }

  // Symmetrize away the last bits of roundoff so Hermiticity is exact.
  h = 0.5 * (h + h.adjoint()).eval();
  return h;
}

EigenSolution diagonalize(const Eigen::MatrixXcd& h) {
  const double scale = h.norm();
  if ((h - h.adjoint()).norm() > 1e-9 * (scale > 0 ? scale : 1.0))
    throw ConfigError("diagonalize: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success)
    throw NumericalError("diagonalize: eigen decomposition failed");

  EigenSolution sol;
  sol.energies = solver.eigenvalues();  // ascending
  sol.states = solver.eigenvectors();
  return sol;
}

std::array<TransitionLine, 3> zero_field_transitions_analytic(const ZfsParams& zfs) {
  // Sublevel energies in the zero-field basis: E_x = D/3 - E, E_y = D/3 + E,
  // E_z = -2D/3.  Differences: xy = 2|E|, xz = D - E, yz = D + E (E signed).
  std::array<TransitionLine, 3> out;
  out[0] = {2.0 * std::abs(zfs.e_mhz), 1.0, 0, 1, static_cast<int>(Transition::xy)};
  out[1] = {zfs.d_mhz - zfs.e_mhz, 1.0, 0, 2, static_cast<int>(Transition::xz)};
  out[2] = {zfs.d_mhz + zfs.e_mhz, 1.0, 1, 2, static_cast<int>(Transition::yz)};
  return out;
}

std::array<double, 3> electron_character(const EigenSolution& sol,
                                         const SpinSystem& system, int index) {
  const int nuc_dim = system.dim() / 3;
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int l = 0; l < 3; ++l)
    for (int r = 0; r < nuc_dim; ++r)
      p[l] += std::norm(sol.states(l * nuc_dim + r, index));
  return p;
}

namespace {

int dominant_level(const std::array<double, 3>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

int pair_of(int a, int b) {
  if (a > b) std::swap(a, b);
  if (a == 0 && b == 1) return static_cast<int>(Transition::xy);
  if (a == 0 && b == 2) return static_cast<int>(Transition::xz);
  if (a == 1 && b == 2) return static_cast<int>(Transition::yz);
  return -1;
}

}  // namespace

std::vector<TransitionLine> transition_lines(const EigenSolution& sol,
                                             const SpinSystem& system,
                                             double prune_rel) {
  const int dim = system.dim();
  if (sol.energies.size() != dim)
    throw ConfigError("transition_lines: solution/system dimension mismatch");

  const int n_nuclei = static_cast<int>(system.nuclei.size());
  double nuc_norm = 1.0;
  for (int n = 0; n < n_nuclei; ++n) nuc_norm /= 3.0;

  std::array<Eigen::MatrixXcd, 3> sk;
  for (int k = 0; k < 3; ++k) sk[k] = electron_spin_operator(system, k);

  std::vector<int> dominant(dim);
  for (int i = 0; i < dim; ++i)
    dominant[i] = dominant_level(electron_character(sol, system, i));

  std::vector<TransitionLine> lines;
  double max_intensity = 0.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      double intensity = 0.0;
      for (int k = 0; k < 3; ++k) {
        const std::complex<double> me =
            sol.states.col(j).dot(sk[k] * sol.states.col(i));
        intensity += std::norm(me);
      }
      intensity *= nuc_norm;
      max_intensity = std::max(max_intensity, intensity);

      TransitionLine line;
      line.frequency_mhz = sol.energies[j] - sol.energies[i];
      line.intensity = intensity;
      line.lower_index = i;
      line.upper_index = j;
      line.pair = dominant[i] == dominant[j] ? -1 : pair_of(dominant[i], dominant[j]);
      lines.push_back(line);
    }
  }

  std::erase_if(lines, [&](const TransitionLine& l) {
    return l.intensity < prune_rel * max_intensity;
  });
  return lines;
}

std::array<MultipletCentroid, 3> multiplet_centroids(
    const std::vector<TransitionLine>& lines) {
  std::array<MultipletCentroid, 3> out{};
  std::array<double, 3> first_moment{0.0, 0.0, 0.0};
  for (const auto& line : lines) {
    if (line.pair < 0) continue;
    out[line.pair].total_intensity += line.intensity;
    first_moment[line.pair] += line.intensity * line.frequency_mhz;
  }
  for (int p = 0; p < 3; ++p)
    if (out[p].total_intensity > 0.0)
      out[p].centroid_mhz = first_moment[p] / out[p].total_intensity;
  return out;
}

std::array<double, 3> quadrupole_frequencies(const DiagonalTensor& q) {
  return {std::abs(q.xx - q.yy), std::abs(q.yy - q.zz), std::abs(q.xx - q.zz)};
}

}  // namespace spinham
}  // namespace odmr

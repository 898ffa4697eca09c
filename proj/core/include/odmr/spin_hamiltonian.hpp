// Zero-field spin Hamiltonian of an S=1 triplet coupled to up to two I=1
// nuclei, its eigensystem, and the stick-spectrum (transition lines).
//
// Everything is expressed in the zero-field (Cartesian) basis {|x>,|y>,|z>}
// where (S_k)_lm = -i eps_klm.  In this basis the ZFS term is diagonal:
// diag(D/3 - E, D/3 + E, -2D/3).  The same convention is used for the
// nuclear I=1 operators.
#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "odmr/spin_system.hpp"

namespace odmr::spinham {

// Spin-1 operator S_k (k: 0=x, 1=y, 2=z) in the Cartesian basis.
Eigen::Matrix3cd spin1_operator(int k);

// S_k acting on the electron factor of the full 3*3^N product space
// (identity on all nuclear factors).
Eigen::MatrixXcd electron_spin_operator(const SpinSystem& system, int k);

// H = D(Sz^2 - S^2/3) + E(Sx^2 - Sy^2)
//   + sum_n sum_k (A_kk S_k I_k,n + Q_kk I_k,n^2),     all in MHz.
// Hermitian by construction; validates the system first.
Eigen::MatrixXcd build_hamiltonian(const SpinSystem& system);

struct EigenSolution {
  Eigen::VectorXd energies;   // ascending, MHz
  Eigen::MatrixXcd states;    // column i <-> energies[i]
};

// Rejects inputs with relative asymmetry above 1e-9.
EigenSolution diagonalize(const Eigen::MatrixXcd& h);

struct TransitionLine {
  double frequency_mhz = 0.0;
  double intensity = 0.0;       // sum_k |<j|S_k|i>|^2, nuclear-trace normalized
  int lower_index = 0;          // eigenstate indices into EigenSolution
  int upper_index = 0;
  int pair = -1;                // dominant sublevel pair as int(Transition), -1 if unresolved
};

// Analytic zero-field transitions {2|E| (xy), D-E (xz), D+E (yz)}.
std::array<TransitionLine, 3> zero_field_transitions_analytic(const ZfsParams& zfs);

// All eigenstate pairs with intensity above prune_rel * max intensity.
// Intensity model: unpolarized drive, (1/3^N) sum_k |<j|S_k|i>|^2 — the
// nuclear-space normalization keeps the total equal to the N=0 value (3).
// Each line is tagged with the sublevel pair of dominant electron character.
std::vector<TransitionLine> transition_lines(const EigenSolution& sol,
                                             const SpinSystem& system,
                                             double prune_rel = 1e-6);

// Electron-character weights (p_x, p_y, p_z) of one eigenstate: partial
// trace of |psi><psi| over the nuclear factors.
std::array<double, 3> electron_character(const EigenSolution& sol,
                                         const SpinSystem& system, int index);

// Intensity-weighted centroid frequency and summed intensity of each
// sublevel-pair multiplet, indexed by int(Transition).  Lines with
// pair == -1 are skipped.
struct MultipletCentroid {
  double centroid_mhz = 0.0;
  double total_intensity = 0.0;
};
std::array<MultipletCentroid, 3> multiplet_centroids(
    const std::vector<TransitionLine>& lines);

// {|Qxx - Qyy|, |Qyy - Qzz|, |Qxx - Qzz|} — the I=1 nuclear quadrupole
// transition frequencies at zero field.
std::array<double, 3> quadrupole_frequencies(const DiagonalTensor& q);

}  // namespace odmr::spinham

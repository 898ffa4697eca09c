// Input-side description of the spin system: zero-field splitting plus
// 0-2 coupled I=1 nuclei with diagonal hyperfine/quadrupole tensors.
#pragma once

#include <cmath>
#include <vector>

#include "odmr/common.hpp"

namespace odmr {

// Zero-field splitting D(Sz^2 - S^2/3) + E(Sx^2 - Sy^2), in MHz.
// E is signed; transition labels follow the signed convention.
struct ZfsParams {
  double d_mhz = 0.0;
  double e_mhz = 0.0;
};

// Diagonal rank-2 tensor in the ZFS principal frame (MHz).
struct DiagonalTensor {
  double xx = 0.0, yy = 0.0, zz = 0.0;

  constexpr double trace() const { return xx + yy + zz; }
  constexpr double component(int k) const { return k == 0 ? xx : (k == 1 ? yy : zz); }
  constexpr double max_abs() const {
    double m = std::abs(xx) > std::abs(yy) ? std::abs(xx) : std::abs(yy);
    return std::abs(zz) > m ? std::abs(zz) : m;
  }
};

// One I=1 nucleus coupled to the triplet.  Only I=1 is supported.
struct NucleusSpec {
  DiagonalTensor hyperfine;   // A tensor, MHz
  DiagonalTensor quadrupole;  // Q tensor, MHz
};

struct SpinSystem {
  ZfsParams zfs;
  std::vector<NucleusSpec> nuclei;  // length 0, 1 or 2

  int dim() const {
    int d = 3;
    for (size_t n = 0; n < nuclei.size(); ++n) d *= 3;
    return d;
  }
};

// Throw ConfigError on invariant violations: D > 0, |E| <= D/3 (conventional
// sublevel ordering), <= 2 nuclei, finite tensor entries.  Emits a warning
// string (returned, empty if none) when a quadrupole tensor is far from
// traceless: |trace| > 0.1 * max|component|.
std::string validate(const SpinSystem& system);

}  // namespace odmr

// Broadened cw-ODMR spectra from stick lines.
#pragma once

#include <optional>
#include <vector>

#include "odmr/spin_hamiltonian.hpp"

namespace odmr::spinham {

enum class LineShape { gaussian, lorentzian };

struct SpectrumConfig {
  LineShape line_shape = LineShape::gaussian;
  double fwhm_mhz = 10.0;
  double f_min_mhz = 0.0;
  double f_max_mhz = 2000.0;
  int n_points = 2001;
  // Optional signed weight per sublevel pair, indexed by int(Transition).
  // Models the observed positive/negative ODMR contrast of different
  // transitions; lines with unresolved pair get weight 1.
  std::optional<std::array<double, 3>> transition_weights;
};

struct SampledSpectrum {
  std::vector<double> frequency_mhz;
  std::vector<double> amplitude;
};

// amplitude(f) = sum_lines weight * intensity * L(f - f_line; fwhm) with L a
// unit-area Gaussian or Lorentzian.  An empty line list gives a zero
// spectrum.  Signed weights may produce negative amplitudes.
SampledSpectrum broaden_spectrum(const std::vector<TransitionLine>& lines,
                                 const SpectrumConfig& cfg);

}  // namespace odmr::spinham

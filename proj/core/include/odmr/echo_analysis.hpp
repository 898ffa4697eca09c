// Hahn-echo trace analysis: T2 envelope fit, ESEEM residual extraction,
// FFT spectrum, and peak assignment against predicted quadrupole
// frequencies.  Analysis only — echo traces are inputs (or synthesized by
// tests), not simulated from first principles.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "odmr/common.hpp"

namespace odmr::echo {

// tau is the pi/2 - pi pulse spacing; the total free evolution time is
// 2*tau.  Loaders converting from a total-time axis must divide by 2.
struct EchoTrace {
  std::vector<double> tau_s;       // strictly increasing, length >= 8
  std::vector<double> amplitude;   // arbitrary units
};

void validate(const EchoTrace& trace);

struct EnvelopeFit {
  double t2_s = 0.0;
  double t2_sigma_s = 0.0;
  double amplitude = 0.0;          // A in A*exp(-(2 tau / T2)^n) + c
  double amplitude_sigma = 0.0;
  double offset = 0.0;
  double offset_sigma = 0.0;
  double exponent = 1.0;           // stretch exponent n (1 unless fitted)
  double chi2 = 0.0;
  int dof = 0;
  bool converged = false;
};

// Least-squares fit of A*exp(-(2 tau / T2)^n) + c.  n is fixed to 1 unless
// fit_stretch_exponent.  Throws NumericalError when the fit does not
// converge or T2 falls outside (0, 1 s) — e.g. a constant trace.
EnvelopeFit fit_envelope(const EchoTrace& trace,
                         bool fit_stretch_exponent = false);

// amplitude - envelope(tau)
std::vector<double> extract_modulation(const EchoTrace& trace,
                                       const EnvelopeFit& envelope);

enum class FftWindow { none, hann };

struct FftOptions {
  FftWindow window = FftWindow::hann;
  int zero_pad_factor = 4;  // one of 1, 2, 4, 8
};

struct EseemSpectrum {
  std::vector<double> frequency_hz;  // from the 2*tau evolution-time axis
  std::vector<double> magnitude;
};

// Magnitude spectrum of the windowed, zero-padded residual.  Requires a
// uniform tau grid (error directs to resampling otherwise).
EseemSpectrum fft_spectrum(const std::vector<double>& residual,
                           const std::vector<double>& tau_s,
                           const FftOptions& options = {});

struct Peak {
  double frequency_hz = 0.0;
  double magnitude = 0.0;
  std::optional<std::string> assignment;  // label of the matched prediction
};

struct PredictedLine {
  std::string label;
  double frequency_hz = 0.0;
};

// Local maxima above a robust noise floor (median + 5*MAD), sorted by
// magnitude descending, each assigned to the nearest predicted frequency
// within `tolerance_hz` (unassigned otherwise).  The DC bin is ignored.
std::vector<Peak> detect_and_assign_peaks(const EseemSpectrum& spectrum,
                                          const std::vector<PredictedLine>& predicted,
                                          double tolerance_hz);

struct EseemResult {
  EnvelopeFit envelope;
  std::vector<double> residual;
  EseemSpectrum spectrum;
  std::vector<Peak> peaks;
};

// The full pipeline: envelope fit, residual, FFT, peak assignment.
EseemResult analyze(const EchoTrace& trace,
                    const std::vector<PredictedLine>& predicted,
                    double tolerance_hz, const FftOptions& options = {});

}  // namespace odmr::echo

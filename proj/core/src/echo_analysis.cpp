#include "odmr/echo_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "odmr/global_fit.hpp"
#include "odmr/levmar.hpp"

namespace odmr::echo {

void validate(const EchoTrace& trace) {
  if (trace.tau_s.size() != trace.amplitude.size())
    throw ConfigError("echo trace: tau/amplitude length mismatch");
  if (trace.tau_s.size() < 8)
    throw ConfigError("echo trace: need at least 8 points");
  for (size_t i = 0; i < trace.tau_s.size(); ++i) {
    if (!std::isfinite(trace.tau_s[i]) || !std::isfinite(trace.amplitude[i]))
      throw ConfigError("echo trace: non-finite values");
    if (i > 0 && !(trace.tau_s[i] > trace.tau_s[i - 1]))
      throw ConfigError("echo trace: tau must be strictly increasing");
  }
}

namespace {

double envelope_model(double tau, double a, double t2, double c, double n) {
  return a * std::exp(-std::pow(2.0 * tau / t2, n)) + c;
}

}  // namespace

EnvelopeFit fit_envelope(const EchoTrace& trace, bool fit_stretch_exponent) {
  validate(trace);
  const size_t npts = trace.tau_s.size();

  // Starting values: offset from the tail, amplitude from the head, T2 from
  // the 1/e crossing of the span.
  double c0 = 0.0;
  const size_t tail = std::max<size_t>(1, npts / 10);
  for (size_t i = npts - tail; i < npts; ++i) c0 += trace.amplitude[i];
  c0 /= tail;
  const double a0 = trace.amplitude.front() - c0;
  if (std::abs(a0) < 1e-12 * std::max(1.0, std::abs(c0)))
    throw NumericalError("fit_envelope: flat trace, envelope is degenerate");

  double t2_0 = 2.0 * trace.tau_s.back() / 3.0;
  for (size_t i = 0; i < npts; ++i) {
    if ((trace.amplitude[i] - c0) / a0 < std::exp(-1.0)) {
      t2_0 = std::max(2.0 * trace.tau_s[i], 2.0 * trace.tau_s.front());
      break;
    }
  }

  // Parameters: (A, log T2, c [, log n]); log keeps T2 and n positive.
  const int n_par = fit_stretch_exponent ? 4 : 3;
  Eigen::VectorXd x0(n_par);
  x0 << a0, std::log(t2_0), c0, Eigen::VectorXd::Zero(n_par - 3);

  auto resid = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(npts);
    const double n = fit_stretch_exponent ? std::exp(x[3]) : 1.0;
    for (size_t i = 0; i < npts; ++i)
      r[i] = envelope_model(trace.tau_s[i], x[0], std::exp(x[1]), x[2], n) -
             trace.amplitude[i];
    return r;
  };

  levmar::Options opts;
  const levmar::Result lm = levmar::minimize(resid, x0, opts);

  EnvelopeFit out;
  out.t2_s = std::exp(lm.x[1]);
  out.amplitude = lm.x[0];
  out.offset = lm.x[2];
  out.exponent = fit_stretch_exponent ? std::exp(lm.x[3]) : 1.0;
  out.chi2 = lm.chi2;
  out.dof = static_cast<int>(npts) - n_par;
  out.converged = lm.converged;

  if (!lm.converged)
    throw NumericalError("fit_envelope: did not converge");
  if (!(out.t2_s > 0.0) || out.t2_s >= 1.0)
    throw NumericalError("fit_envelope: T2 outside (0, 1 s)");

  if (out.dof > 0) {
    bool deficient = false;
    const Eigen::MatrixXd cov =
        fit::covariance_from_jacobian(lm.jacobian, lm.chi2, out.dof, &deficient);
    out.amplitude_sigma = std::sqrt(std::max(0.0, cov(0, 0)));
    // T2 = exp(theta): delta method multiplies the log-space sigma by T2.
    out.t2_sigma_s = out.t2_s * std::sqrt(std::max(0.0, cov(1, 1)));
    out.offset_sigma = std::sqrt(std::max(0.0, cov(2, 2)));
    if (deficient)
      throw NumericalError("fit_envelope: singular covariance (degenerate trace)");
  }
  return out;
}

std::vector<double> extract_modulation(const EchoTrace& trace,
                                       const EnvelopeFit& envelope) {
  std::vector<double> out(trace.tau_s.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = trace.amplitude[i] -
             envelope_model(trace.tau_s[i], envelope.amplitude, envelope.t2_s,
                            envelope.offset, envelope.exponent);
  return out;
}

namespace {
// FFTW plan creation is not thread safe; execution of ready plans is.
std::mutex fftw_plan_mutex;
}  // namespace

EseemSpectrum fft_spectrum(const std::vector<double>& residual,
                           const std::vector<double>& tau_s,
                           const FftOptions& options) {
  const size_t npts = residual.size();
  if (npts != tau_s.size())
    throw ConfigError("fft_spectrum: residual/tau length mismatch");
  if (npts < 8) throw ConfigError("fft_spectrum: too few points");
  if (options.zero_pad_factor != 1 && options.zero_pad_factor != 2 &&
      options.zero_pad_factor != 4 && options.zero_pad_factor != 8)
    throw ConfigError("fft_spectrum: zero_pad_factor must be 1, 2, 4 or 8");

  const double dtau = (tau_s.back() - tau_s.front()) / (npts - 1);
  for (size_t i = 1; i < npts; ++i) {
    if (std::abs((tau_s[i] - tau_s[i - 1]) - dtau) > 1e-6 * dtau)
      throw ConfigError(
          "fft_spectrum: tau grid is not uniform; resample the trace first");
  }

  std::vector<double> in(npts);
  for (size_t i = 0; i < npts; ++i) {
    const double w = options.window == FftWindow::hann
                         ? 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (npts - 1)))
                         : 1.0;
    in[i] = residual[i] * w;
  }

  const size_t padded = npts * options.zero_pad_factor;
  std::vector<double> buf(padded, 0.0);
  std::copy(in.begin(), in.end(), buf.begin());

  std::vector<std::complex<double>> spec(padded / 2 + 1);
  {
    std::unique_lock<std::mutex> lock(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(padded), buf.data(),
        reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    lock.unlock();
    fftw_execute(plan);
    lock.lock();
    fftw_destroy_plan(plan);
  }

  // The physical evolution time is 2*tau, so the sample spacing on the
  // frequency axis is 1/(padded * 2*dtau).
  const double dt_evolution = 2.0 * dtau;
  EseemSpectrum out;
  out.frequency_hz.resize(spec.size());
  out.magnitude.resize(spec.size());
  for (size_t k = 0; k < spec.size(); ++k) {
    out.frequency_hz[k] = static_cast<double>(k) / (padded * dt_evolution);
    out.magnitude[k] = std::abs(spec[k]);
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

std::vector<Peak> detect_and_assign_peaks(const EseemSpectrum& spectrum,
                                          const std::vector<PredictedLine>& predicted,
                                          double tolerance_hz) {
  if (!(tolerance_hz > 0.0))
    throw ConfigError("detect_and_assign_peaks: tolerance must be > 0");
  const size_t n = spectrum.magnitude.size();
  if (n < 3) return {};

  const double median = median_of(spectrum.magnitude);
  std::vector<double> dev(n);
  for (size_t i = 0; i < n; ++i) dev[i] = std::abs(spectrum.magnitude[i] - median);
  const double mad = median_of(dev);
  const double floor = median + 5.0 * mad;

  std::vector<Peak> peaks;
  for (size_t i = 1; i + 1 < n; ++i) {  // skip the DC bin and the edge
    const double m = spectrum.magnitude[i];
    if (m <= floor) continue;
    if (m < spectrum.magnitude[i - 1] || m < spectrum.magnitude[i + 1]) continue;
    if (m == spectrum.magnitude[i - 1] && i > 1) continue;  // plateau: keep leftmost

    Peak peak;
    peak.frequency_hz = spectrum.frequency_hz[i];
    peak.magnitude = m;
    double best = tolerance_hz;
    for (const auto& line : predicted) {
      const double d = std::abs(line.frequency_hz - peak.frequency_hz);
      if (d <= best) {
        best = d;
        peak.assignment = line.label;
      }
    }
    peaks.push_back(std::move(peak));
  }

  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  return peaks;
}

EseemResult analyze(const EchoTrace& trace,
                    const std::vector<PredictedLine>& predicted,
                    double tolerance_hz, const FftOptions& options) {
  EseemResult out;
  out.envelope = fit_envelope(trace);
  out.residual = extract_modulation(trace, out.envelope);
  out.spectrum = fft_spectrum(out.residual, trace.tau_s, options);
  out.peaks = detect_and_assign_peaks(out.spectrum, predicted, tolerance_hz);
  return out;
}

}  // namespace odmr::echo

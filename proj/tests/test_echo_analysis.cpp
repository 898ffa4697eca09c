#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "odmr/echo_analysis.hpp"

using namespace odmr;
using namespace odmr::echo;

namespace {

EchoTrace make_trace(int n, double tau_max, double a, double t2, double c,
                     double stretch = 1.0, double mod_depth = 0.0,
                     double mod_freq_hz = 0.0) {
  EchoTrace tr;
  tr.tau_s.resize(n);
  tr.amplitude.resize(n);
  const double tau_min = tau_max / n;
  for (int i = 0; i < n; ++i) {
    const double tau = tau_min + (tau_max - tau_min) * i / (n - 1);
    const double env = a * std::exp(-std::pow(2.0 * tau / t2, stretch)) + c;
    const double mod =
        mod_depth * std::cos(2.0 * std::numbers::pi * mod_freq_hz * 2.0 * tau);
    tr.tau_s[i] = tau;
    tr.amplitude[i] = env * (1.0 + mod);
  }
  return tr;
}

}  // namespace

TEST_SUITE("echo_analysis") {

TEST_CASE("envelope fit recovers a clean exponential decay") {
  const double t2 = 1.71e-6;
  const auto tr = make_trace(200, 4e-6, 0.8, t2, 0.1);
  const EnvelopeFit env = fit_envelope(tr);

  CHECK(env.converged);
  CHECK(env.t2_s == doctest::Approx(t2).epsilon(1e-6));
  CHECK(env.amplitude == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(env.offset == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(env.exponent == doctest::Approx(1.0));
  CHECK(env.chi2 < 1e-20);
  CHECK(env.dof == 200 - 3);
  CHECK(env.t2_sigma_s >= 0.0);
}

TEST_CASE("stretch exponent is recovered when requested") {
  const auto tr = make_trace(200, 4e-6, 0.8, 1.71e-6, 0.1, 1.5);
  const EnvelopeFit env = fit_envelope(tr, true);
  CHECK(env.converged);
  CHECK(env.exponent == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(env.t2_s == doctest::Approx(1.71e-6).epsilon(1e-5));
  CHECK(env.dof == 200 - 4);

  // With the exponent fixed, the same trace is described by a biased T2.
  const EnvelopeFit fixed = fit_envelope(tr, false);
  CHECK(fixed.exponent == doctest::Approx(1.0));
  CHECK(fixed.chi2 > env.chi2);
}

TEST_CASE("modulation residual of a pure envelope is numerically zero") {
  const auto tr = make_trace(128, 4e-6, 0.8, 1.71e-6, 0.1);
  const EnvelopeFit env = fit_envelope(tr);
  const auto residual = extract_modulation(tr, env);
  REQUIRE(residual.size() == tr.tau_s.size());
  for (double r : residual) CHECK(std::abs(r) < 1e-9);
}

TEST_CASE("fft places a single cosine within one padded bin") {
  const double f0 = 3.19e6;
  const int n = 256;
  std::vector<double> tau(n), x(n);
  const double dtau = 4e-6 / n;
  for (int i = 0; i < n; ++i) {
    tau[i] = dtau * (i + 1);
    x[i] = std::cos(2.0 * std::numbers::pi * f0 * 2.0 * tau[i]);
  }

  FftOptions opt;
  opt.zero_pad_factor = 8;
  const EseemSpectrum spec = fft_spectrum(x, tau, opt);

  // Frequency axis derives from the evolution time 2*tau.
  const double df = spec.frequency_hz[1] - spec.frequency_hz[0];
  CHECK(df == doctest::Approx(1.0 / (8.0 * n * 2.0 * dtau)).epsilon(1e-12));

  size_t best = 1;
  for (size_t i = 1; i < spec.magnitude.size(); ++i)
    if (spec.magnitude[i] > spec.magnitude[best]) best = i;
  CHECK(std::abs(spec.frequency_hz[best] - f0) <= df);
}

TEST_CASE("unwindowed unpadded fft satisfies Parseval's identity") {
  const int n = 128;
  std::vector<double> tau(n), x(n);
  std::mt19937_64 rng(20260814);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    tau[i] = 1e-8 * (i + 1);
    x[i] = gauss(rng);
  }

  FftOptions opt;
  opt.window = FftWindow::none;
  opt.zero_pad_factor = 1;
  const EseemSpectrum spec = fft_spectrum(x, tau, opt);
  REQUIRE(spec.magnitude.size() == static_cast<size_t>(n / 2 + 1));

  double sum_t = 0.0;
  for (double v : x) sum_t += v * v;
  double sum_f = spec.magnitude.front() * spec.magnitude.front() +
                 spec.magnitude.back() * spec.magnitude.back();
  for (size_t i = 1; i + 1 < spec.magnitude.size(); ++i)
    sum_f += 2.0 * spec.magnitude[i] * spec.magnitude[i];
  CHECK(sum_f / n == doctest::Approx(sum_t).epsilon(1e-9));
}

TEST_CASE("fft input validation") {
  std::vector<double> tau(10), x(10, 1.0);
  for (int i = 0; i < 10; ++i) tau[i] = 1e-8 * (i + 1);
  tau[5] += 3e-9;  // non-uniform
  CHECK_THROWS_WITH_AS(fft_spectrum(x, tau, FftOptions{}),
                       doctest::Contains("resample"), ConfigError);

  std::vector<double> tau_ok(10);
  for (int i = 0; i < 10; ++i) tau_ok[i] = 1e-8 * (i + 1);
  FftOptions bad_pad;
  bad_pad.zero_pad_factor = 3;
  CHECK_THROWS_AS(fft_spectrum(x, tau_ok, bad_pad), ConfigError);

  CHECK_THROWS_WITH_AS(fft_spectrum({1.0, 2.0}, {1e-8, 2e-8}, FftOptions{}),
                       doctest::Contains("too few"), ConfigError);
  CHECK_THROWS_AS(fft_spectrum({1.0, 2.0}, tau_ok, FftOptions{}), ConfigError);
}

TEST_CASE("peaks are assigned to the nearest prediction and DC is skipped") {
  EseemSpectrum spec;
  const int n = 64;
  spec.frequency_hz.resize(n);
  spec.magnitude.assign(n, 0.01);
  for (int i = 0; i < n; ++i) spec.frequency_hz[i] = 1e5 * i;
  spec.magnitude[0] = 50.0;   // DC must be ignored even though it dominates
  spec.magnitude[32] = 1.0;   // 3.2 MHz
  spec.magnitude[34] = 0.6;   // 3.4 MHz
  spec.magnitude[50] = 0.3;   // 5.0 MHz, no prediction nearby

  const std::vector<PredictedLine> predicted = {
      {"q1", 3.19e6}, {"q2", 3.40e6}, {"q3", 0.21e6}};
  const auto peaks = detect_and_assign_peaks(spec, predicted, 0.25e6);

  REQUIRE(peaks.size() == 3);
  CHECK(peaks[0].frequency_hz == doctest::Approx(3.2e6));
  REQUIRE(peaks[0].assignment.has_value());
  CHECK(*peaks[0].assignment == "q1");
  REQUIRE(peaks[1].assignment.has_value());
  CHECK(*peaks[1].assignment == "q2");
  CHECK_FALSE(peaks[2].assignment.has_value());
  CHECK(peaks[1].magnitude <= peaks[0].magnitude);  // sorted descending
}

TEST_CASE("analyze pipeline finds the modulation frequency end to end") {
  const double f0 = 3.19e6;
  const auto tr = make_trace(256, 4e-6, 0.8, 1.71e-6, 0.1, 1.0, 0.05, f0);
  const std::vector<PredictedLine> predicted = {{"q1", f0}, {"q3", 0.21e6}};

  const EseemResult res = analyze(tr, predicted, 0.25e6);
  CHECK(res.envelope.converged);
  CHECK(res.envelope.t2_s == doctest::Approx(1.71e-6).epsilon(0.05));
  CHECK(res.residual.size() == tr.tau_s.size());
  REQUIRE_FALSE(res.peaks.empty());
  REQUIRE(res.peaks[0].assignment.has_value());
  CHECK(*res.peaks[0].assignment == "q1");
}

TEST_CASE("trace validation") {
  EchoTrace tr;
  tr.tau_s = {1e-8, 2e-8, 3e-8};
  tr.amplitude = {1.0, 0.9};
  CHECK_THROWS_AS(validate(tr), ConfigError);  // length mismatch

  tr = make_trace(6, 1e-6, 1.0, 1e-6, 0.0);
  CHECK_THROWS_AS(validate(tr), ConfigError);  // too short

  tr = make_trace(16, 1e-6, 1.0, 1e-6, 0.0);
  CHECK_NOTHROW(validate(tr));
  tr.tau_s[5] = tr.tau_s[4];  // not strictly increasing
  CHECK_THROWS_AS(validate(tr), ConfigError);

  tr = make_trace(16, 1e-6, 1.0, 1e-6, 0.0);
  tr.amplitude[3] = std::nan("");
  CHECK_THROWS_AS(validate(tr), ConfigError);

  // A constant trace has no decay to fit.
  EchoTrace flat;
  for (int i = 0; i < 32; ++i) {
    flat.tau_s.push_back(1e-8 * (i + 1));
    flat.amplitude.push_back(1.0);
  }
  CHECK_THROWS_AS(fit_envelope(flat), NumericalError);
}

}  // TEST_SUITE

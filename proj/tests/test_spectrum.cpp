#include <doctest.h>

#include <cmath>

#include "odmr/spectrum.hpp"

using namespace odmr;
using spinham::LineShape;
using spinham::SpectrumConfig;
using spinham::TransitionLine;

namespace {

double trapz(const std::vector<double>& x, const std::vector<double>& y) {
  double area = 0.0;
  for (size_t i = 1; i < x.size(); ++i)
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return area;
}

SpectrumConfig wide_config(LineShape shape) {
  SpectrumConfig cfg;
  cfg.line_shape = shape;
  cfg.fwhm_mhz = 8.0;
  cfg.f_min_mhz = -3000.0;
  cfg.f_max_mhz = 3000.0;
  cfg.n_points = 120001;
  return cfg;
}

}  // namespace

TEST_SUITE("spectrum") {

TEST_CASE("line shapes integrate to the line intensity") {
  TransitionLine line;
  line.frequency_mhz = 400.0;
  line.intensity = 2.5;

  // The Lorentzian's heavy tails lose ~0.2% outside a +-3 GHz window.
  const double area_g =
      trapz(spinham::broaden_spectrum({line}, wide_config(LineShape::gaussian)).frequency_mhz,
            spinham::broaden_spectrum({line}, wide_config(LineShape::gaussian)).amplitude);
  CHECK(area_g == doctest::Approx(2.5).epsilon(1e-6));

  const auto lor = spinham::broaden_spectrum({line}, wide_config(LineShape::lorentzian));
  CHECK(trapz(lor.frequency_mhz, lor.amplitude) == doctest::Approx(2.5).epsilon(5e-3));
}

TEST_CASE("full width at half maximum matches the configured value") {
  TransitionLine line;
  line.frequency_mhz = 0.0;
  line.intensity = 1.0;

  for (const LineShape shape : {LineShape::gaussian, LineShape::lorentzian}) {
    SpectrumConfig cfg;
    cfg.line_shape = shape;
    cfg.fwhm_mhz = 10.0;
    cfg.f_min_mhz = -100.0;
    cfg.f_max_mhz = 100.0;
    cfg.n_points = 40001;
    const auto s = spinham::broaden_spectrum({line}, cfg);

    const double peak = *std::max_element(s.amplitude.begin(), s.amplitude.end());
    double left = 0.0, right = 0.0;
    for (size_t i = 1; i < s.amplitude.size(); ++i) {
      if (s.amplitude[i - 1] < peak / 2 && s.amplitude[i] >= peak / 2)
        left = s.frequency_mhz[i];
      if (s.amplitude[i - 1] >= peak / 2 && s.amplitude[i] < peak / 2)
        right = s.frequency_mhz[i];
    }
    CHECK(right - left == doctest::Approx(10.0).epsilon(2e-3));
  }
}

TEST_CASE("signed transition weights scale and flip multiplets") {
  TransitionLine pos, neg, untagged;
  pos.frequency_mhz = 100.0;
  pos.intensity = 1.0;
  pos.pair = 0;
  neg.frequency_mhz = 300.0;
  neg.intensity = 1.0;
  neg.pair = 2;
  untagged.frequency_mhz = 500.0;
  untagged.intensity = 1.0;
  untagged.pair = -1;

  SpectrumConfig cfg;
  cfg.fwhm_mhz = 5.0;
  cfg.f_min_mhz = 0.0;
  cfg.f_max_mhz = 600.0;
  cfg.n_points = 6001;
  cfg.transition_weights = {{2.0, 1.0, -1.0}};

  const auto s = spinham::broaden_spectrum({pos, neg, untagged}, cfg);
  auto amplitude_at = [&](double f) {
    size_t best = 0;
    for (size_t i = 0; i < s.frequency_mhz.size(); ++i)
      if (std::abs(s.frequency_mhz[i] - f) < std::abs(s.frequency_mhz[best] - f))
        best = i;
    return s.amplitude[best];
  };
  CHECK(amplitude_at(100.0) > 0.0);
  CHECK(amplitude_at(300.0) < 0.0);
  // Untagged lines keep weight 1; the flipped line mirrors it exactly.
  CHECK(amplitude_at(300.0) == doctest::Approx(-amplitude_at(500.0)).epsilon(1e-12));
  CHECK(amplitude_at(100.0) == doctest::Approx(2 * amplitude_at(500.0)).epsilon(1e-12));
}

TEST_CASE("an empty line list gives a zero spectrum") {
  SpectrumConfig cfg;
  const auto s = spinham::broaden_spectrum({}, cfg);
  REQUIRE(static_cast<int>(s.amplitude.size()) == cfg.n_points);
  for (const double a : s.amplitude) CHECK(a == 0.0);
}

TEST_CASE("configuration validation") {
  TransitionLine line;
  line.frequency_mhz = 1.0;
  line.intensity = 1.0;

  SpectrumConfig cfg;
  cfg.n_points = 1;
  CHECK_THROWS_AS(spinham::broaden_spectrum({line}, cfg), ConfigError);

  cfg = SpectrumConfig{};
  cfg.f_max_mhz = cfg.f_min_mhz;
  CHECK_THROWS_AS(spinham::broaden_spectrum({line}, cfg), ConfigError);

  cfg = SpectrumConfig{};
  cfg.fwhm_mhz = 0.0;
  CHECK_THROWS_AS(spinham::broaden_spectrum({line}, cfg), ConfigError);
}

}  // TEST_SUITE

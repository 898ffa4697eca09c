#include "odmr/spectrum.hpp"

#include <cmath>

namespace odmr::spinham {

namespace {

// Unit-area line shapes.
double gaussian(double x, double fwhm) {
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

double lorentzian(double x, double fwhm) {
  const double gamma = fwhm / 2.0;
  return gamma / (M_PI * (x * x + gamma * gamma));
}

}  // namespace

SampledSpectrum broaden_spectrum(const std::vector<TransitionLine>& lines,
                                 const SpectrumConfig& cfg) {
  if (cfg.fwhm_mhz <= 0.0) throw ConfigError("broaden_spectrum: fwhm must be > 0");
  if (cfg.n_points < 2) throw ConfigError("broaden_spectrum: need n_points >= 2");
  if (!(cfg.f_min_mhz < cfg.f_max_mhz))
    throw ConfigError("broaden_spectrum: need f_min < f_max");

  SampledSpectrum out;
  out.frequency_mhz.resize(cfg.n_points);
  out.amplitude.assign(cfg.n_points, 0.0);
  const double df = (cfg.f_max_mhz - cfg.f_min_mhz) / (cfg.n_points - 1);
  for (int i = 0; i < cfg.n_points; ++i)
    out.frequency_mhz[i] = cfg.f_min_mhz + df * i;

  for (const auto& line : lines) {
    double weight = 1.0;
    if (cfg.transition_weights && line.pair >= 0)
      weight = (*cfg.transition_weights)[line.pair];
    const double strength = weight * line.intensity;
    if (strength == 0.0) continue;
    for (int i = 0; i < cfg.n_points; ++i) {
      const double x = out.frequency_mhz[i] - line.frequency_mhz;
      out.amplitude[i] += strength * (cfg.line_shape == LineShape::gaussian
                                          ? gaussian(x, cfg.fwhm_mhz)
                                          : lorentzian(x, cfg.fwhm_mhz));
    }
  }
  return out;
}

}  // namespace odmr::spinham

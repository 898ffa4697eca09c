#include "odmr/sensitivity.hpp"

#include <cmath>

namespace odmr::sensitivity {

void validate(const SensitivityInputs& in) {
  if (!(in.contrast > 0.0) || in.contrast > 1.0)
    throw ConfigError("sensitivity: contrast must be in (0, 1]");
  if (!(in.n_avg > 0.0)) throw ConfigError("sensitivity: n_avg must be > 0");
  if (!(in.c_s > 0.0)) throw ConfigError("sensitivity: c_s must be > 0");
  if (in.t_overhead_s < 0.0)
    throw ConfigError("sensitivity: t_overhead must be >= 0");
  if (!(in.t2_chi_s > 0.0)) throw ConfigError("sensitivity: T2_chi must be > 0");
}

SensitivityValue relative_sensitivity(const SensitivityInputs& in) {
  validate(in);
  SensitivityValue out;
  out.eta = std::sqrt(in.t_overhead_s) /
            (in.contrast * std::sqrt(in.n_avg * in.c_s) * in.t2_chi_s);
  out.overhead_free = in.t_overhead_s == 0.0;
  return out;
}

RatioBreakdown sensitivity_ratio(const SensitivityInputs& a,
                                 const SensitivityInputs& b) {
  validate(a);
  validate(b);
  if (a.t_overhead_s == 0.0 || b.t_overhead_s == 0.0)
    throw ConfigError(
        "sensitivity_ratio: overhead-free inputs have eta = 0; the ratio is "
        "not defined");

  RatioBreakdown out;
  // eta ~ sqrt(t_overhead) / (C sqrt(n_avg c_s) T2): parameters in the
  // denominator contribute a_value/b_value to eta(b)/eta(a).
  out.terms = {
      {"contrast", a.contrast / b.contrast},
      {"n_avg", std::sqrt(a.n_avg / b.n_avg)},
      {"c_s", std::sqrt(a.c_s / b.c_s)},
      {"t_overhead", std::sqrt(b.t_overhead_s / a.t_overhead_s)},
      {"t2_chi", a.t2_chi_s / b.t2_chi_s},
  };
  out.ratio = 1.0;
  for (const auto& term : out.terms) out.ratio *= term.factor;
  return out;
}

}  // namespace odmr::sensitivity

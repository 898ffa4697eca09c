// Relative sensing-sensitivity scaling:
//   eta ~ (1 / (C sqrt(n_avg c_s))) * sqrt(t_overhead) / T2_chi.
// The proportionality constant is unknown; only ratios between two inputs
// are meaningful.
#pragma once

#include <string>
#include <vector>

#include "odmr/common.hpp"

namespace odmr::sensitivity {

struct SensitivityInputs {
  double contrast = 0.0;       // C in (0, 1]
  double n_avg = 0.0;          // photons per spin per readout, > 0
  double c_s = 0.0;            // spin density, m^-3, > 0
  double t_overhead_s = 0.0;   // >= 0
  double t2_chi_s = 0.0;       // T2 (AC) or T2* (DC), > 0; caller labels which
};

void validate(const SensitivityInputs& in);

struct SensitivityValue {
  double eta = 0.0;            // relative figure, not absolute units
  bool overhead_free = false;  // t_overhead == 0: proportionality degenerates
};

SensitivityValue relative_sensitivity(const SensitivityInputs& in);

// eta(b)/eta(a) decomposed into one multiplicative factor per parameter
// (their product is the ratio).
struct RatioBreakdown {
  struct Term {
    std::string name;
    double factor = 1.0;
  };
  double ratio = 1.0;
  std::vector<Term> terms;
};

RatioBreakdown sensitivity_ratio(const SensitivityInputs& a,
                                 const SensitivityInputs& b);

}  // namespace odmr::sensitivity

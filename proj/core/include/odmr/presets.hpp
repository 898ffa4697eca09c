// Built-in kinetic parameter presets.
//
// The k_i are reconstructed from published rate ratios (only DAP's
// k_x = 24.9e4 s^-1 is an anchored value); the spin-lattice rates w_ij are
// plausible room-temperature placeholders chosen to reproduce the
// qualitative contrast physics, NOT fitted values.  Treat presets as
// starting points, not ground truth.
#pragma once

#include <string>
#include <vector>

#include "odmr/kinetics.hpp"

namespace odmr::presets {

struct Preset {
  std::string name;
  kinetics::KineticParams kinetic;
  kinetics::OpticalParams optical;
  std::string note;
};

// "DAP-fig4c" and "Pc-fig4c".
const std::vector<Preset>& all();

// Throws ConfigError for unknown names.
const Preset& by_name(const std::string& name);

}  // namespace odmr::presets

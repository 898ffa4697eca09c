#include "odmr/presets.hpp"

#include <algorithm>

namespace odmr::presets {

const std::vector<Preset>& all() {
  static const std::vector<Preset> table = [] {
    std::vector<Preset> v;

    {
      Preset p;
      p.name = "DAP-fig4c";
      p.kinetic.k_x = 2.49e5;
      p.kinetic.k_y = 4.8e4;
      p.kinetic.k_z = 2.075e4;
      p.kinetic.w_xy = 5.0e4;
      p.kinetic.w_xz = 2.8e4;
      p.kinetic.w_yz = 3.8e4;
      p.kinetic.p_x = 0.60;
      p.kinetic.p_y = 0.21;
      p.kinetic.p_z = 0.19;
      p.optical.pump_rate = 5.0e5;
      p.optical.isc_yield = 0.65;
      p.optical.mode = kinetics::Mode::reduced;
      p.note =
          "Donor-acceptor-pair-like triplet. Decay rates follow the published "
          "anisotropy (k_x anchor 2.49e5 /s); spin-lattice rates are "
          "room-temperature placeholders, not fitted values.";
      v.push_back(std::move(p));
    }

    {
      Preset p;
      p.name = "Pc-fig4c";
      p.kinetic.k_x = 2.49e4;
      p.kinetic.k_y = 1.2e4;
      p.kinetic.k_z = 4.98e3;
      p.kinetic.w_xy = 2.0e4;
      p.kinetic.w_xz = 1.0e4;
      p.kinetic.w_yz = 1.5e4;
      p.kinetic.p_x = 0.76;
      p.kinetic.p_y = 0.16;
      p.kinetic.p_z = 0.08;
      p.optical.pump_rate = 5.0e5;
      p.optical.isc_yield = 0.65;
      p.optical.mode = kinetics::Mode::reduced;
      p.note =
          "Pentacene-like triplet (slower decay, strongly x-selective "
          "population). Spin-lattice rates are room-temperature placeholders, "
          "not fitted values.";
      v.push_back(std::move(p));
    }

    for (auto& p : v) kinetics::validate(p.kinetic);
    return v;
  }();
  return table;
}

const Preset& by_name(const std::string& name) {
  const auto& table = all();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const Preset& p) { return p.name == name; });
  if (it == table.end()) {
    std::string known;
    for (const auto& p : table) {
      if (!known.empty()) known += ", ";
      known += p.name;
    }
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return *it;
}

}  // namespace odmr::presets

#include "odmr/common.hpp"

namespace odmr {

Transition transition_from_string(const std::string& s) {
  if (s == "xy") return Transition::xy;
  if (s == "xz") return Transition::xz;
  if (s == "yz") return Transition::yz;
  throw ConfigError("unknown transition '" + s + "' (expected xy, xz or yz)");
}

}  // namespace odmr

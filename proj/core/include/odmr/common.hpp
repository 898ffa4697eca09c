// Shared vocabulary: triplet sublevel transitions and error categories.
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace odmr {

inline constexpr const char* version_string = "0.1.0";

// The three zero-field sublevels are labelled by the molecular axes
// (x: long in-plane, y: short in-plane, z: out-of-plane).  Sublevel indices
// are fixed as x=0, y=1, z=2 throughout.
enum class Transition { xy = 0, xz = 1, yz = 2 };

inline constexpr std::array<Transition, 3> all_transitions = {
    Transition::xy, Transition::xz, Transition::yz};

// Sublevel index pair connected by a transition, lower index first.
constexpr std::pair<int, int> transition_levels(Transition t) {
  switch (t) {
    case Transition::xy: return {0, 1};
    case Transition::xz: return {0, 2};
    default:             return {1, 2};
  }
}

inline std::string to_string(Transition t) {
  switch (t) {
    case Transition::xy: return "xy";
    case Transition::xz: return "xz";
    default:             return "yz";
  }
}

Transition transition_from_string(const std::string& s);

// Invalid inputs/configuration (CLI exit code 2) versus failures of the
// numerics on valid input (CLI exit code 3).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace odmr

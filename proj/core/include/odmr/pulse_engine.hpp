// Pulse programs for the relaxation measurements: initialization sequences
// 1-6, Sequences A and B, the 22-measurement plan, and ODMR contrast.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "odmr/kinetics.hpp"

namespace odmr::pulse {

struct Laser    { double duration_s = 0.0; };
struct Microwave{ Transition transition = Transition::xy; double efficiency = 1.0; };
struct Delay    { double duration_s = 0.0; };
struct Readout  { double window_s = 0.0; };

using PulseElement = std::variant<Laser, Microwave, Delay, Readout>;

enum class SequenceKind { a, b };

inline std::string to_string(SequenceKind k) { return k == SequenceKind::a ? "A" : "B"; }
SequenceKind sequence_kind_from_string(const std::string& s);

// Ordered pulse program.  Invariants (checked by simulate_sequence): exactly
// one Readout, at the end; any Laser precedes all Microwave elements.
struct Sequence {
  std::vector<PulseElement> elements;
  std::string label;
  SequenceKind kind = SequenceKind::a;  // selects the normalization scheme
};

// Shared timing constants of one experimental run.
struct SequenceTimings {
  double laser_s = 0.0;           // pump pulse length
  double readout_window_s = 1e-6;
  double readout_delay_s = 5e-6;  // Sequence B: wait between probe and readout
};

// Default pump length transfers ~30% of the ground population
// (pump_rate*isc_yield*t = -ln(0.7)); an arbitrary but documented choice —
// fits treat the pump strength as a nuisance parameter anyway.
SequenceTimings default_timings(const kinetics::OpticalParams& op);

// The pi-pulse prefix realizing one of the six permutations of the initial
// sublevel populations: 1 = none, 2 = [xy], 3 = [xz], 4 = [yz],
// 5 = [xy,xz], 6 = [xy,yz] (applied left to right).
std::vector<Microwave> build_init_sequence(int init_id);

// Transitions driven by an initialization sequence (for plan bookkeeping).
std::vector<Transition> init_sequence_transitions(int init_id);

// A: [Laser, init pulses, Delay(delay), Readout]
Sequence build_sequence_a(int init_id, double delay_s,
                          const SequenceTimings& t);

// B: [Laser, init pulses, Delay(delay), Microwave(probe),
//     Delay(readout_delay), Readout]
Sequence build_sequence_b(int init_id, double delay_s, Transition probe,
                          const SequenceTimings& t);

// Readout signal of the sequence run from the ground state, without
// normalization.
double simulate_sequence_raw(const Sequence& seq, const kinetics::KineticParams& kp,
                             const kinetics::OpticalParams& op);

// Normalized signal.  Sequence A references the readout of the unperturbed
// ground state (control = bare readout of S0); Sequence B references the
// identical sequence with only the final probe Microwave removed.
double simulate_sequence(const Sequence& seq, const kinetics::KineticParams& kp,
                         const kinetics::OpticalParams& op);

// One of the 22 planned measurements.
struct MeasurementSpec {
  int init_id = 1;
  SequenceKind kind = SequenceKind::a;
  std::optional<Transition> b_transition;  // required for kind B
  std::vector<double> delay_grid;          // s
  double readout_delay_s = 5e-6;           // used by kind B

  std::string label() const;
};

// 6 Sequence-A specs + 18 Sequence-B specs minus the two combinations whose
// init+probe pulses span all three distinct microwave frequencies = 22.
std::vector<MeasurementSpec> generate_plan(const std::vector<double>& delay_grid,
                                           double readout_delay_s);

// Logarithmic delay grid, `points_per_decade` points covering
// [t_min, 10/min(k_i)] (ten times the longest lifetime).
std::vector<double> default_delay_grid(const kinetics::KineticParams& kp,
                                       double t_min = 1e-7,
                                       int points_per_decade = 30);

// Precomputes everything shared between the curves of a plan for one
// parameter set (pumped state, laser-off eigendecomposition, readout row),
// so a full 22-curve simulation costs little more than the delays
// themselves.  Results match the element-by-element simulate_sequence walk
// to ~1e-12 (enforced by tests).
class PlanSimulator {
 public:
  PlanSimulator(const kinetics::KineticParams& kp,
                const kinetics::OpticalParams& op,
                const SequenceTimings& timings);

  std::vector<double> simulate(const MeasurementSpec& spec) const;
  double control() const { return ctrl_; }

 private:
  Eigen::VectorXd permuted_initial(int init_id) const;

  kinetics::Mode mode_;
  int toff_;                    // triplet offset within the state vector
  kinetics::RateMatrix roff_;
  kinetics::Expm off_;          // laser-off propagator
  Eigen::VectorXd pumped_;      // state after the pump pulse
  Eigen::RowVectorXd g_;        // readout functional
  double ctrl_;                 // readout of the pristine ground state
};

// (signal_on - signal_off) / signal_off from raw (unnormalized) readouts.
// The two sequences must be identical apart from Microwave probe elements.
double contrast(const Sequence& seq_on, const Sequence& seq_off,
                const kinetics::KineticParams& kp,
                const kinetics::OpticalParams& op);

}  // namespace odmr::pulse

#include "odmr/pulse_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace odmr::pulse {

using kinetics::KineticParams;
using kinetics::OpticalParams;
using kinetics::RateMatrix;
using kinetics::StateVector;

SequenceKind sequence_kind_from_string(const std::string& s) {
  if (s == "A" || s == "a") return SequenceKind::a;
  if (s == "B" || s == "b") return SequenceKind::b;
  throw ConfigError("unknown sequence kind '" + s + "' (expected A or B)");
}

SequenceTimings default_timings(const OpticalParams& op) {
  SequenceTimings t;
  const double depletion_rate = op.pump_rate * op.isc_yield;
  if (depletion_rate <= 0.0)
    throw ConfigError("default_timings: pump_rate * isc_yield must be > 0");
  t.laser_s = -std::log(0.7) / depletion_rate;
  return t;
}

std::vector<Microwave> build_init_sequence(int init_id) {
  if (init_id < 1 || init_id > 6)
    throw ConfigError("init_id must be in 1..6, got " + std::to_string(init_id));
  // The six permutations of (P_x, P_y, P_z) reachable with at most two
  // pi pulses; 5 and 6 are the two three-cycles.
  switch (init_id) {
    case 1: return {};
    case 2: return {{Transition::xy}};
    case 3: return {{Transition::xz}};
    case 4: return {{Transition::yz}};
    case 5: return {{Transition::xy}, {Transition::xz}};
    default: return {{Transition::xy}, {Transition::yz}};
  }
}

std::vector<Transition> init_sequence_transitions(int init_id) {
  std::vector<Transition> out;
  for (const auto& mw : build_init_sequence(init_id)) out.push_back(mw.transition);
  return out;
}

Sequence build_sequence_a(int init_id, double delay_s, const SequenceTimings& t) {
  if (delay_s < 0.0) throw ConfigError("sequence delay must be >= 0");
  Sequence seq;
  seq.kind = SequenceKind::a;
  seq.label = "A" + std::to_string(init_id);
  seq.elements.push_back(Laser{t.laser_s});
  for (const auto& mw : build_init_sequence(init_id)) seq.elements.push_back(mw);
  seq.elements.push_back(Delay{delay_s});
  seq.elements.push_back(Readout{t.readout_window_s});
  return seq;
}

Sequence build_sequence_b(int init_id, double delay_s, Transition probe,
                          const SequenceTimings& t) {
  if (delay_s < 0.0) throw ConfigError("sequence delay must be >= 0");
  Sequence seq;
  seq.kind = SequenceKind::b;
  seq.label = "B" + std::to_string(init_id) + "-" + to_string(probe);
  seq.elements.push_back(Laser{t.laser_s});
  for (const auto& mw : build_init_sequence(init_id)) seq.elements.push_back(mw);
  seq.elements.push_back(Delay{delay_s});
  seq.elements.push_back(Microwave{probe});
  seq.elements.push_back(Delay{t.readout_delay_s});
  seq.elements.push_back(Readout{t.readout_window_s});
  return seq;
}

namespace {

void check_sequence(const Sequence& seq) {
  int n_readout = 0;
  bool seen_microwave = false;
  for (size_t i = 0; i < seq.elements.size(); ++i) {
    const auto& el = seq.elements[i];
    if (std::holds_alternative<Readout>(el)) {
      ++n_readout;
      if (i + 1 != seq.elements.size())
        throw ConfigError("sequence: Readout must be the final element");
    }
    if (std::holds_alternative<Microwave>(el)) seen_microwave = true;
    if (std::holds_alternative<Laser>(el) && seen_microwave)
      throw ConfigError("sequence: Laser must precede all Microwave elements");
  }
  if (n_readout != 1)
    throw ConfigError("sequence: exactly one Readout element required");
}

double run_elements(const Sequence& seq, const KineticParams& kp,
                    const OpticalParams& op) {
  const RateMatrix on = kinetics::rate_matrix(kp, op, true);
  const RateMatrix off = kinetics::rate_matrix(kp, op, false);

  StateVector state = StateVector::ground(op.mode);
  double signal = 0.0;
  for (const auto& el : seq.elements) {
    if (const auto* laser = std::get_if<Laser>(&el)) {
      state = kinetics::evolve(state, on, laser->duration_s);
    } else if (const auto* mw = std::get_if<Microwave>(&el)) {
      state = kinetics::apply_pi_pulse(state, mw->transition, mw->efficiency);
    } else if (const auto* delay = std::get_if<Delay>(&el)) {
      state = kinetics::evolve(state, off, delay->duration_s);
    } else {
      const auto& readout = std::get<Readout>(el);
      signal = kinetics::pl_signal(state, kp, op, readout.window_s);
    }
  }
  return signal;
}

}  // namespace

double simulate_sequence_raw(const Sequence& seq, const KineticParams& kp,
                             const OpticalParams& op) {
  check_sequence(seq);
  return run_elements(seq, kp, op);
}

double simulate_sequence(const Sequence& seq, const KineticParams& kp,
                         const OpticalParams& op) {
  check_sequence(seq);
  const double raw = run_elements(seq, kp, op);

  double reference = 0.0;
  if (seq.kind == SequenceKind::a) {
    // Control: PL of the unperturbed ground state under the same readout.
    double window = 0.0;
    for (const auto& el : seq.elements)
      if (const auto* r = std::get_if<Readout>(&el)) window = r->window_s;
    reference = kinetics::pl_signal(StateVector::ground(op.mode), kp, op, window);
  } else {
    // Control: identical sequence with only the final probe pulse removed.
    Sequence ref = seq;
    for (auto it = ref.elements.rbegin(); it != ref.elements.rend(); ++it) {
      if (std::holds_alternative<Microwave>(*it)) {
        ref.elements.erase(std::next(it).base());
        break;
      }
    }
    reference = run_elements(ref, kp, op);
  }

  if (reference == 0.0)
    throw NumericalError("simulate_sequence: zero reference signal");
  return raw / reference;
}

std::string MeasurementSpec::label() const {
  if (kind == SequenceKind::a) return "A" + std::to_string(init_id);
  return "B" + std::to_string(init_id) + "-" + to_string(*b_transition);
}

std::vector<MeasurementSpec> generate_plan(const std::vector<double>& delay_grid,
                                           double readout_delay_s) {
  if (delay_grid.empty()) throw ConfigError("generate_plan: empty delay grid");

  std::vector<MeasurementSpec> plan;
  for (int init = 1; init <= 6; ++init)
    plan.push_back({init, SequenceKind::a, std::nullopt, delay_grid, readout_delay_s});

  for (int init = 1; init <= 6; ++init) {
    for (Transition probe : all_transitions) {
      // Skip the combinations that would require driving all three
      // microwave frequencies in one sequence.
      std::set<Transition> used;
      for (Transition t : init_sequence_transitions(init)) used.insert(t);
      used.insert(probe);
      if (used.size() == 3) continue;
      plan.push_back({init, SequenceKind::b, probe, delay_grid, readout_delay_s});
    }
  }
  return plan;
}

std::vector<double> default_delay_grid(const KineticParams& kp, double t_min,
                                       int points_per_decade) {
  const double kmin = std::min({kp.k_x, kp.k_y, kp.k_z});
  if (kmin <= 0.0)
    throw ConfigError("default_delay_grid: all k_i must be > 0");
  const double t_max = 10.0 / kmin;
  if (t_max <= t_min) throw ConfigError("default_delay_grid: empty range");

  const double decades = std::log10(t_max / t_min);
  const int n = std::max(2, static_cast<int>(std::round(decades * points_per_decade)) + 1);
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = t_min * std::pow(10.0, decades * i / (n - 1));
  return grid;
}

PlanSimulator::PlanSimulator(const KineticParams& kp, const OpticalParams& op,
                             const SequenceTimings& timings)
    : mode_(op.mode),
      toff_(StateVector::triplet_offset(op.mode)),
      roff_(kinetics::rate_matrix(kp, op, false)),
      off_(roff_.m) {
  const RateMatrix ron = kinetics::rate_matrix(kp, op, true);
  pumped_ = kinetics::Expm(ron.m).apply(StateVector::ground(mode_).p, timings.laser_s);
  g_ = kinetics::readout_row(kp, op, timings.readout_window_s);
  ctrl_ = g_ * StateVector::ground(mode_).p;
  if (ctrl_ == 0.0)
    throw NumericalError("PlanSimulator: zero ground-state readout");
}

Eigen::VectorXd PlanSimulator::permuted_initial(int init_id) const {
  Eigen::VectorXd n0 = pumped_;
  for (const auto& mw : build_init_sequence(init_id)) {
    const auto [a, b] = transition_levels(mw.transition);
    std::swap(n0[toff_ + a], n0[toff_ + b]);
  }
  return n0;
}

std::vector<double> PlanSimulator::simulate(const MeasurementSpec& spec) const {
  if (spec.kind == SequenceKind::b && !spec.b_transition)
    throw ConfigError("Sequence-B spec without b_transition");

  const Eigen::VectorXd n0 = permuted_initial(spec.init_id);
  const int n = static_cast<int>(n0.size());

  // Readout functionals: row_off applied to the state at the end of the
  // variable delay gives the no-probe signal; row_on additionally includes
  // the probe swap and the fixed post-probe wait.
  Eigen::RowVectorXd row_off = g_;
  Eigen::RowVectorXd row_on;
  if (spec.kind == SequenceKind::b) {
    row_off = g_ * off_.matrix(spec.readout_delay_s);
    Eigen::MatrixXd swap = Eigen::MatrixXd::Identity(n, n);
    const auto [a, b] = transition_levels(*spec.b_transition);
    swap(toff_ + a, toff_ + a) = swap(toff_ + b, toff_ + b) = 0.0;
    swap(toff_ + a, toff_ + b) = swap(toff_ + b, toff_ + a) = 1.0;
    row_on = row_off * swap;
  }

  // One shared eigendecomposition; per delay only the spectral weights move.
  // (If the generator happened to be defective, Expm::apply falls back to a
  // per-delay Pade evaluation — slower but still exact.)
  Eigen::VectorXcd c;
  if (!off_.uses_pade())
    c = off_.eigenvectors_inv() * n0.cast<std::complex<double>>();

  std::vector<double> out;
  out.reserve(spec.delay_grid.size());
  for (double t : spec.delay_grid) {
    Eigen::VectorXd state;
    if (off_.uses_pade()) {
      state = off_.apply(n0, t);
    } else {
      const Eigen::VectorXcd scaled =
          ((off_.eigenvalues().array() * t).exp() * c.array()).matrix();
      state = (off_.eigenvectors() * scaled).real();
    }
    if (spec.kind == SequenceKind::a) {
      out.push_back((g_ * state)(0) / ctrl_);
    } else {
      const double s_off = (row_off * state)(0);
      if (s_off == 0.0)
        throw NumericalError("PlanSimulator: zero reference signal");
      out.push_back((row_on * state)(0) / s_off);
    }
  }
  return out;
}

double contrast(const Sequence& seq_on, const Sequence& seq_off,
                const KineticParams& kp, const OpticalParams& op) {
  // The two programs must agree except in Microwave probe elements.
  auto stripped = [](const Sequence& s) {
    std::vector<PulseElement> keep;
    for (const auto& el : s.elements)
      if (!std::holds_alternative<Microwave>(el)) keep.push_back(el);
    return keep;
  };
  const auto a = stripped(seq_on), b = stripped(seq_off);
  bool same = a.size() == b.size();
  for (size_t i = 0; same && i < a.size(); ++i) {
    if (a[i].index() != b[i].index()) same = false;
    else if (const auto* la = std::get_if<Laser>(&a[i]))
      same = la->duration_s == std::get<Laser>(b[i]).duration_s;
    else if (const auto* da = std::get_if<Delay>(&a[i]))
      same = da->duration_s == std::get<Delay>(b[i]).duration_s;
    else
      same = std::get<Readout>(a[i]).window_s == std::get<Readout>(b[i]).window_s;
  }
  if (!same)
    throw ConfigError("contrast: sequences differ beyond Microwave elements");

  const double s_on = simulate_sequence_raw(seq_on, kp, op);
  const double s_off = simulate_sequence_raw(seq_off, kp, op);
  if (s_off == 0.0) throw NumericalError("contrast: zero reference signal");
  return (s_on - s_off) / s_off;
}

}  // namespace odmr::pulse

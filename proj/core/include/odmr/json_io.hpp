// Serialization boundary: JSON parsing/emission for the domain types and
// the CSV dialect used for curves, spectra and traces.
//
// All functions take or return JSON *text*; the JSON library stays an
// implementation detail.  CSV dialect: comma separators, '.' decimal,
// mandatory header row with units in the column names, UTF-8, LF endings.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odmr/echo_analysis.hpp"
#include "odmr/global_fit.hpp"
#include "odmr/sensitivity.hpp"
#include "odmr/spectrum.hpp"

namespace odmr::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a over the raw config bytes; stamped into every output's
// provenance block so results can be traced to their configuration.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct Provenance {
  std::string tool_version = version_string;
  std::string config_hash;   // hex64(fnv1a64(config text))
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::string> presets;  // preset names in effect
};

// Unknown keys: strict rejects (ConfigError), lenient collects warnings.
enum class Strictness { strict, lenient };

// {"D_MHz":…, "E_MHz":…, "nuclei":[{"A_MHz":[xx,yy,zz], "Q_MHz":[xx,yy,zz]}]}
SpinSystem parse_spin_system(const std::string& json_text, Strictness mode,
                             std::vector<std::string>* warnings = nullptr);
std::string spin_system_to_json(const SpinSystem& system);

// {"k_per_s":[…], "w_per_s":[…], "P":[…], "pump_per_s":…, "isc_yield":…,
//  "mode":"reduced"|"explicit_s1", "s1_decay_per_s":…}  or  {"preset":name}
// with optional overrides of pump_per_s/isc_yield/mode on top of a preset.
struct KineticsConfig {
  kinetics::KineticParams kinetic;
  kinetics::OpticalParams optical;
  std::string preset;  // empty when given explicitly
};
KineticsConfig parse_kinetics(const std::string& json_text, Strictness mode,
                              std::vector<std::string>* warnings = nullptr);
std::string kinetics_to_json(const kinetics::KineticParams& kp,
                             const kinetics::OpticalParams& op);

sensitivity::SensitivityInputs parse_sensitivity_inputs(
    const std::string& json_text, Strictness mode,
    std::vector<std::string>* warnings = nullptr);

std::string measurement_spec_to_json(const pulse::MeasurementSpec& spec);
pulse::MeasurementSpec parse_measurement_spec(const std::string& json_text);

// Generic column-oriented CSV.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

// One measurement curve: CSV (delay_s, signal[, sigma]) plus a JSON sidecar
// carrying the MeasurementSpec.
void write_curve(const std::string& csv_path, const std::string& sidecar_path,
                 const fit::MeasurementCurve& curve);
fit::MeasurementCurve read_curve(const std::string& csv_path,
                                 const std::string& sidecar_path);

// Echo trace CSV (time_us, amplitude) with sidecar
// {"time_axis":"tau"|"total_time"}; total_time is converted to tau on load.
echo::EchoTrace read_echo_trace(const std::string& csv_path,
                                const std::string& sidecar_path);

std::string stick_lines_to_json(const std::vector<spinham::TransitionLine>& lines,
                                const Provenance& prov);
std::string fit_result_to_json(const fit::FitResult& result, const Provenance& prov);
std::string eseem_result_to_json(const echo::EseemResult& result, const Provenance& prov);
std::string sensitivity_report_to_json(const sensitivity::RatioBreakdown& ratio,
                                       const sensitivity::SensitivityValue& a,
                                       const sensitivity::SensitivityValue& b,
                                       const Provenance& prov);
std::string presets_to_json();

}  // namespace odmr::io

#include "odmr/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "odmr/presets.hpp"

namespace odmr::io {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ConfigError("read error: " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("write error: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

json parse_json(const std::string& text, const std::string& ctx) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": invalid JSON: " + e.what());
  }
}

void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
}

void check_keys(const json& obj, const std::set<std::string>& known,
                Strictness mode, std::vector<std::string>* warnings,
                const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key())) continue;
    const std::string msg = ctx + ": unknown key \"" + it.key() + "\"";
    if (mode == Strictness::strict)
      throw ConfigError(msg + " (use --lenient to downgrade to a warning)");
    if (warnings) warnings->push_back(msg);
  }
}

double get_number(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing required key \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(ctx + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(ctx + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing required key \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(ctx + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::array<double, 3> get_array3(const json& obj, const std::string& key,
                                 const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing required key \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3)
    throw ConfigError(ctx + ": \"" + key + "\" must be an array of 3 numbers");
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number())
      throw ConfigError(ctx + ": \"" + key + "\" must be an array of 3 numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

json provenance_json(const Provenance& prov) {
  return json{{"tool_version", prov.tool_version},
              {"config_hash", prov.config_hash},
              {"command", prov.command},
              {"seed", prov.seed},
              {"presets", prov.presets}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

const char* pair_name(int pair) {
  switch (pair) {
    case 0: return "xy";
    case 1: return "xz";
    case 2: return "yz";
    default: return nullptr;
  }
}

}  // namespace

SpinSystem parse_spin_system(const std::string& json_text, Strictness mode,
                             std::vector<std::string>* warnings) {
  const json j = parse_json(json_text, "spin system");
  require_object(j, "spin system");
  check_keys(j, {"D_MHz", "E_MHz", "nuclei"}, mode, warnings, "spin system");

  SpinSystem system;
  system.zfs.d_mhz = get_number(j, "D_MHz", "spin system");
  system.zfs.e_mhz = get_number(j, "E_MHz", "spin system");

  if (j.contains("nuclei")) {
    const json& nuclei = j.at("nuclei");
    if (!nuclei.is_array())
      throw ConfigError("spin system: \"nuclei\" must be an array");
    for (size_t n = 0; n < nuclei.size(); ++n) {
      const std::string ctx = "spin system: nuclei[" + std::to_string(n) + "]";
      require_object(nuclei[n], ctx);
      check_keys(nuclei[n], {"A_MHz", "Q_MHz"}, mode, warnings, ctx);
      const auto a = get_array3(nuclei[n], "A_MHz", ctx);
      const auto q = get_array3(nuclei[n], "Q_MHz", ctx);
      NucleusSpec spec;
      spec.hyperfine = {a[0], a[1], a[2]};
      spec.quadrupole = {q[0], q[1], q[2]};
      system.nuclei.push_back(spec);
    }
  }

  const std::string warning = validate(system);
  if (!warning.empty() && warnings) warnings->push_back(warning);
  return system;
}

std::string spin_system_to_json(const SpinSystem& system) {
  json nuclei = json::array();
  for (const auto& n : system.nuclei) {
    nuclei.push_back(
        {{"A_MHz", {n.hyperfine.xx, n.hyperfine.yy, n.hyperfine.zz}},
         {"Q_MHz", {n.quadrupole.xx, n.quadrupole.yy, n.quadrupole.zz}}});
  }
  return dump(json{{"D_MHz", system.zfs.d_mhz},
                   {"E_MHz", system.zfs.e_mhz},
                   {"nuclei", nuclei}});
}

KineticsConfig parse_kinetics(const std::string& json_text, Strictness mode,
                              std::vector<std::string>* warnings) {
  const json j = parse_json(json_text, "kinetics");
  require_object(j, "kinetics");

  KineticsConfig cfg;
  if (j.contains("preset")) {
    check_keys(j, {"preset", "pump_per_s", "isc_yield", "mode", "s1_decay_per_s"},
               mode, warnings, "kinetics");
    cfg.preset = get_string(j, "preset", "kinetics");
    const auto& preset = presets::by_name(cfg.preset);
    cfg.kinetic = preset.kinetic;
    cfg.optical = preset.optical;
    cfg.optical.pump_rate =
        get_number_or(j, "pump_per_s", cfg.optical.pump_rate, "kinetics");
    cfg.optical.isc_yield =
        get_number_or(j, "isc_yield", cfg.optical.isc_yield, "kinetics");
    if (j.contains("mode"))
      cfg.optical.mode = kinetics::mode_from_string(get_string(j, "mode", "kinetics"));
    cfg.optical.s1_decay_rate =
        get_number_or(j, "s1_decay_per_s", cfg.optical.s1_decay_rate, "kinetics");
  } else {
    check_keys(j,
               {"k_per_s", "w_per_s", "P", "pump_per_s", "isc_yield", "mode",
                "s1_decay_per_s"},
               mode, warnings, "kinetics");
    const auto k = get_array3(j, "k_per_s", "kinetics");
    const auto w = get_array3(j, "w_per_s", "kinetics");
    const auto p = get_array3(j, "P", "kinetics");
    cfg.kinetic.k_x = k[0];
    cfg.kinetic.k_y = k[1];
    cfg.kinetic.k_z = k[2];
    cfg.kinetic.w_xy = w[0];
    cfg.kinetic.w_xz = w[1];
    cfg.kinetic.w_yz = w[2];
    cfg.kinetic.p_x = p[0];
    cfg.kinetic.p_y = p[1];
    cfg.kinetic.p_z = p[2];
    cfg.optical.pump_rate = get_number(j, "pump_per_s", "kinetics");
    cfg.optical.isc_yield = get_number(j, "isc_yield", "kinetics");
    if (j.contains("mode"))
      cfg.optical.mode = kinetics::mode_from_string(get_string(j, "mode", "kinetics"));
    if (cfg.optical.mode == kinetics::Mode::explicit_s1) {
      cfg.optical.s1_decay_rate = get_number(j, "s1_decay_per_s", "kinetics");
    } else {
      cfg.optical.s1_decay_rate =
          get_number_or(j, "s1_decay_per_s", cfg.optical.s1_decay_rate, "kinetics");
    }
  }

  kinetics::validate(cfg.kinetic);
  kinetics::validate(cfg.optical);
  return cfg;
}

std::string kinetics_to_json(const kinetics::KineticParams& kp,
                             const kinetics::OpticalParams& op) {
  return dump(json{{"k_per_s", {kp.k_x, kp.k_y, kp.k_z}},
                   {"w_per_s", {kp.w_xy, kp.w_xz, kp.w_yz}},
                   {"P", {kp.p_x, kp.p_y, kp.p_z}},
                   {"pump_per_s", op.pump_rate},
                   {"isc_yield", op.isc_yield},
                   {"mode", kinetics::to_string(op.mode)},
                   {"s1_decay_per_s", op.s1_decay_rate}});
}

sensitivity::SensitivityInputs parse_sensitivity_inputs(
    const std::string& json_text, Strictness mode,
    std::vector<std::string>* warnings) {
  const json j = parse_json(json_text, "sensitivity");
  require_object(j, "sensitivity");
  check_keys(j,
             {"contrast", "n_avg", "c_s", "t_overhead_s", "t_overhead",
              "t2_chi_s", "t2_chi"},
             mode, warnings, "sensitivity");

  sensitivity::SensitivityInputs in;
  in.contrast = get_number(j, "contrast", "sensitivity");
  in.n_avg = get_number(j, "n_avg", "sensitivity");
  in.c_s = get_number(j, "c_s", "sensitivity");
  // Both spellings accepted; the _s suffix form is canonical.
  if (j.contains("t_overhead_s"))
    in.t_overhead_s = get_number(j, "t_overhead_s", "sensitivity");
  else
    in.t_overhead_s = get_number(j, "t_overhead", "sensitivity");
  if (j.contains("t2_chi_s"))
    in.t2_chi_s = get_number(j, "t2_chi_s", "sensitivity");
  else
    in.t2_chi_s = get_number(j, "t2_chi", "sensitivity");
  sensitivity::validate(in);
  return in;
}

std::string measurement_spec_to_json(const pulse::MeasurementSpec& spec) {
  json j{{"init_id", spec.init_id},
         {"kind", pulse::to_string(spec.kind)},
         {"readout_delay_s", spec.readout_delay_s},
         {"delay_grid_s", spec.delay_grid},
         {"label", spec.label()}};
  if (spec.b_transition) j["b_transition"] = to_string(*spec.b_transition);
  return dump(j);
}

pulse::MeasurementSpec parse_measurement_spec(const std::string& json_text) {
  const json j = parse_json(json_text, "measurement spec");
  require_object(j, "measurement spec");

  pulse::MeasurementSpec spec;
  const double id = get_number(j, "init_id", "measurement spec");
  spec.init_id = static_cast<int>(id);
  if (spec.init_id != id)
    throw ConfigError("measurement spec: init_id must be an integer");
  spec.kind = pulse::sequence_kind_from_string(get_string(j, "kind", "measurement spec"));
  spec.readout_delay_s = get_number_or(j, "readout_delay_s", spec.readout_delay_s,
                                       "measurement spec");
  if (j.contains("b_transition"))
    spec.b_transition =
        transition_from_string(get_string(j, "b_transition", "measurement spec"));
  if (spec.kind == pulse::SequenceKind::b && !spec.b_transition)
    throw ConfigError("measurement spec: kind B requires b_transition");

  if (j.contains("delay_grid_s")) {
    const json& grid = j.at("delay_grid_s");
    if (!grid.is_array())
      throw ConfigError("measurement spec: delay_grid_s must be an array");
    for (const auto& v : grid) {
      if (!v.is_number())
        throw ConfigError("measurement spec: delay_grid_s must hold numbers");
      spec.delay_grid.push_back(v.get<double>());
    }
  }
  return spec;
}

namespace {

// Shortest representation that parses back to the same double, so CSV
// round trips are lossless.
std::string format_value(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  if (table.header.size() != table.columns.size())
    throw ConfigError("write_csv: header/column count mismatch");
  if (table.header.empty()) throw ConfigError("write_csv: empty table");
  const size_t rows = table.columns.front().size();
  for (const auto& col : table.columns)
    if (col.size() != rows) throw ConfigError("write_csv: ragged columns");

  std::ostringstream out;
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out << ',';
      out << format_value(table.columns[c][r]);
    }
    out << '\n';
  }
  write_file(path, out.str());
}

CsvTable read_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("read_csv: empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  table.header = split_csv_line(line);
  if (table.header.empty())
    throw ConfigError("read_csv: missing header row: " + path);
  table.columns.resize(table.header.size());

  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw ConfigError("read_csv: " + path + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(table.header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    for (size_t c = 0; c < fields.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end == fields[c].c_str() || *end != '\0')
        throw ConfigError("read_csv: " + path + ":" + std::to_string(lineno) +
                          ": not a number: \"" + fields[c] + "\"");
      table.columns[c].push_back(v);
    }
  }
  return table;
}

namespace {

int find_column(const CsvTable& table, const std::string& name,
                const std::string& path, bool required = true) {
  for (size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == name) return static_cast<int>(c);
  if (required)
    throw ConfigError(path + ": missing required column \"" + name + "\"");
  return -1;
}

}  // namespace

void write_curve(const std::string& csv_path, const std::string& sidecar_path,
                 const fit::MeasurementCurve& curve) {
  CsvTable table;
  table.header = {"delay_s", "signal"};
  table.columns = {curve.delays, curve.signal};
  if (curve.sigma) {
    table.header.push_back("sigma");
    table.columns.push_back(*curve.sigma);
  }
  write_csv(csv_path, table);
  write_file(sidecar_path, measurement_spec_to_json(curve.spec));
}

fit::MeasurementCurve read_curve(const std::string& csv_path,
                                 const std::string& sidecar_path) {
  const CsvTable table = read_csv(csv_path);
  fit::MeasurementCurve curve;
  curve.delays = table.columns[find_column(table, "delay_s", csv_path)];
  curve.signal = table.columns[find_column(table, "signal", csv_path)];
  const int sigma_col = find_column(table, "sigma", csv_path, false);
  if (sigma_col >= 0) curve.sigma = table.columns[sigma_col];
  curve.spec = parse_measurement_spec(read_file(sidecar_path));
  curve.spec.delay_grid = curve.delays;
  fit::validate(curve);
  return curve;
}

echo::EchoTrace read_echo_trace(const std::string& csv_path,
                                const std::string& sidecar_path) {
  const CsvTable table = read_csv(csv_path);

  int time_col = find_column(table, "time_us", csv_path, false);
  double scale = 1e-6;
  if (time_col < 0) {
    time_col = find_column(table, "time_s", csv_path, false);
    scale = 1.0;
  }
  if (time_col < 0)
    throw ConfigError(csv_path + ": need a \"time_us\" or \"time_s\" column");
  const int amp_col = find_column(table, "amplitude", csv_path);

  const json sidecar = parse_json(read_file(sidecar_path), "echo trace sidecar");
  require_object(sidecar, "echo trace sidecar");
  const std::string axis = get_string(sidecar, "time_axis", "echo trace sidecar");
  double axis_factor = 0.0;
  if (axis == "tau")
    axis_factor = 1.0;
  else if (axis == "total_time")
    axis_factor = 0.5;  // total free-evolution time 2*tau -> tau
  else
    throw ConfigError("echo trace sidecar: time_axis must be \"tau\" or \"total_time\"");

  echo::EchoTrace trace;
  for (const double t : table.columns[time_col])
    trace.tau_s.push_back(t * scale * axis_factor);
  trace.amplitude = table.columns[amp_col];
  echo::validate(trace);
  return trace;
}

std::string stick_lines_to_json(const std::vector<spinham::TransitionLine>& lines,
                                const Provenance& prov) {
  json arr = json::array();
  for (const auto& line : lines) {
    json jl{{"frequency_MHz", line.frequency_mhz},
            {"intensity", line.intensity},
            {"lower_index", line.lower_index},
            {"upper_index", line.upper_index}};
    const char* pair = pair_name(line.pair);
    jl["pair"] = pair ? json(pair) : json(nullptr);
    arr.push_back(std::move(jl));
  }
  return dump(json{{"provenance", provenance_json(prov)}, {"lines", arr}});
}

std::string fit_result_to_json(const fit::FitResult& result, const Provenance& prov) {
  const auto& kp = result.best_fit.kinetic;

  json parameters{{"k_per_s", {kp.k_x, kp.k_y, kp.k_z}},
                  {"w_per_s", {kp.w_xy, kp.w_xz, kp.w_yz}},
                  {"P", {kp.p_x, kp.p_y, kp.p_z}},
                  {"pump_scale", result.best_fit.pump_scale}};
  if (result.best_fit.per_curve_amplitude)
    parameters["per_curve_amplitude"] = *result.best_fit.per_curve_amplitude;

  json uncertainties;
  if (result.uncertainties.size() >= static_cast<size_t>(fit::n_physical_core)) {
    const auto& u = result.uncertainties;
    uncertainties = json{{"k_per_s", {u[0], u[1], u[2]}},
                         {"w_per_s", {u[3], u[4], u[5]}},
                         {"P", {u[6], u[7], u[8]}},
                         {"pump_scale", u[9]}};
    if (u.size() > static_cast<size_t>(fit::n_physical_core))
      uncertainties["per_curve_amplitude"] = std::vector<double>(
          u.begin() + fit::n_physical_core, u.end());
  }

  json cov = json::array();
  for (Eigen::Index r = 0; r < result.covariance_physical.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < result.covariance_physical.cols(); ++c)
      row.push_back(result.covariance_physical(r, c));
    cov.push_back(std::move(row));
  }

  json rms = json::array();
  for (const auto& block : result.per_curve_residuals) {
    double s = 0.0;
    for (const double r : block) s += r * r;
    rms.push_back(block.empty() ? 0.0 : std::sqrt(s / block.size()));
  }

  return dump(json{{"provenance", provenance_json(prov)},
                   {"parameters", parameters},
                   {"uncertainties", uncertainties},
                   {"covariance_physical", cov},
                   {"chi2", result.chi2},
                   {"dof", result.dof},
                   {"chi2_reduced", result.dof > 0 ? result.chi2 / result.dof : 0.0},
                   {"converged", result.converged},
                   {"n_iterations", result.n_iterations},
                   {"condition_number", result.condition_number},
                   {"rank_deficient", result.rank_deficient},
                   {"n_tied_starts", result.n_tied_starts},
                   {"per_curve_residual_rms", rms}});
}

std::string eseem_result_to_json(const echo::EseemResult& result,
                                 const Provenance& prov) {
  const auto& env = result.envelope;
  json peaks = json::array();
  for (const auto& peak : result.peaks) {
    json jp{{"frequency_Hz", peak.frequency_hz}, {"magnitude", peak.magnitude}};
    jp["assignment"] = peak.assignment ? json(*peak.assignment) : json(nullptr);
    peaks.push_back(std::move(jp));
  }
  return dump(json{{"provenance", provenance_json(prov)},
                   {"envelope",
                    {{"T2_s", env.t2_s},
                     {"T2_sigma_s", env.t2_sigma_s},
                     {"amplitude", env.amplitude},
                     {"amplitude_sigma", env.amplitude_sigma},
                     {"offset", env.offset},
                     {"offset_sigma", env.offset_sigma},
                     {"exponent", env.exponent},
                     {"chi2", env.chi2},
                     {"dof", env.dof},
                     {"converged", env.converged}}},
                   {"peaks", peaks}});
}

std::string sensitivity_report_to_json(const sensitivity::RatioBreakdown& ratio,
                                       const sensitivity::SensitivityValue& a,
                                       const sensitivity::SensitivityValue& b,
                                       const Provenance& prov) {
  json terms = json::array();
  for (const auto& term : ratio.terms)
    terms.push_back({{"name", term.name}, {"factor", term.factor}});
  return dump(json{{"provenance", provenance_json(prov)},
                   {"eta_a", a.eta},
                   {"eta_b", b.eta},
                   {"overhead_free_a", a.overhead_free},
                   {"overhead_free_b", b.overhead_free},
                   {"ratio_b_over_a", ratio.ratio},
                   {"terms", terms}});
}

std::string presets_to_json() {
  json arr = json::array();
  for (const auto& p : presets::all()) {
    arr.push_back({{"name", p.name},
                   {"note", p.note},
                   {"kinetics", parse_json(kinetics_to_json(p.kinetic, p.optical),
                                           "preset")}});
  }
  return dump(json{{"tool_version", version_string}, {"presets", arr}});
}

}  // namespace odmr::io

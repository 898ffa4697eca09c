// odmr: config-driven frontend for the triplet-ODMR toolkit.
//
// Subcommands: spectrum | simulate | fit | eseem | sensitivity | presets.
// Every run is deterministic for a fixed config + seed; outputs are CSV/JSON
// (the interface of record) plus SVG plots as a convenience.  Errors exit
// with 2 (configuration) or 3 (numerical) and a machine-readable JSON line
// on stderr.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "odmr/echo_analysis.hpp"
#include "odmr/global_fit.hpp"
#include "odmr/json_io.hpp"
#include "odmr/presets.hpp"
#include "odmr/sensitivity.hpp"
#include "odmr/spectrum.hpp"

#include "svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace odmr;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  bool lenient = false;

  io::Strictness strictness() const {
    return lenient ? io::Strictness::lenient : io::Strictness::strict;
  }
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string out_path(const GlobalArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / name).string();
}

json load_config(const GlobalArgs& args, const std::set<std::string>& known,
                 std::vector<std::string>* warnings, std::string* raw_text) {
  if (args.config_path.empty())
    throw ConfigError("this subcommand requires --config PATH");
  const std::string text = io::read_file(args.config_path);
  if (raw_text) *raw_text = text;
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }
  if (!cfg.is_object()) throw ConfigError("config: expected a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (known.count(it.key())) continue;
    const std::string msg = "config: unknown key \"" + it.key() + "\"";
    if (args.strictness() == io::Strictness::strict)
      throw ConfigError(msg + " (use --lenient to downgrade to a warning)");
    warnings->push_back(msg);
  }
  return cfg;
}

io::Provenance make_provenance(const std::string& command,
                               const std::string& config_text,
                               const GlobalArgs& args,
                               std::vector<std::string> presets = {}) {
  io::Provenance prov;
  prov.command = command;
  prov.config_hash = io::hex64(io::fnv1a64(config_text));
  prov.seed = args.seed;
  prov.presets = std::move(presets);
  return prov;
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError("config: \"" + key + "\" must be a number");
  return obj.at(key).get<double>();
}

void check_section_keys(const json& obj, const std::set<std::string>& known,
                        const GlobalArgs& args, std::vector<std::string>* warnings,
                        const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key())) continue;
    const std::string msg = ctx + ": unknown key \"" + it.key() + "\"";
    if (args.strictness() == io::Strictness::strict)
      throw ConfigError(msg + " (use --lenient to downgrade to a warning)");
    warnings->push_back(msg);
  }
}

void wrote(const std::string& path) { std::cout << "wrote " << path << "\n"; }

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const GlobalArgs& args) {
  std::vector<std::string> warnings;
  std::string raw;
  const json cfg = load_config(args, {"spin_system", "spectrum"}, &warnings, &raw);
  if (!cfg.contains("spin_system"))
    throw ConfigError("config: missing required key \"spin_system\"");

  const SpinSystem system = io::parse_spin_system(cfg.at("spin_system").dump(),
                                                  args.strictness(), &warnings);

  spinham::SpectrumConfig sc;
  double prune_rel = 1e-6;
  if (cfg.contains("spectrum")) {
    const json& s = cfg.at("spectrum");
    if (!s.is_object()) throw ConfigError("config: \"spectrum\" must be an object");
    check_section_keys(s,
                       {"line_shape", "fwhm_MHz", "f_min_MHz", "f_max_MHz",
                        "n_points", "transition_weights", "prune_rel"},
                       args, &warnings, "config: spectrum");
    if (s.contains("line_shape")) {
      const std::string shape = s.at("line_shape").get<std::string>();
      if (shape == "gaussian")
        sc.line_shape = spinham::LineShape::gaussian;
      else if (shape == "lorentzian")
        sc.line_shape = spinham::LineShape::lorentzian;
      else
        throw ConfigError("config: line_shape must be gaussian or lorentzian");
    }
    sc.fwhm_mhz = number_or(s, "fwhm_MHz", sc.fwhm_mhz);
    sc.f_min_mhz = number_or(s, "f_min_MHz", sc.f_min_mhz);
    sc.f_max_mhz = number_or(s, "f_max_MHz", sc.f_max_mhz);
    sc.n_points = static_cast<int>(number_or(s, "n_points", sc.n_points));
    prune_rel = number_or(s, "prune_rel", prune_rel);
    if (s.contains("transition_weights")) {
      const json& w = s.at("transition_weights");
      if (!w.is_array() || w.size() != 3)
        throw ConfigError("config: transition_weights must be an array of 3");
      sc.transition_weights = {{w[0].get<double>(), w[1].get<double>(),
                                w[2].get<double>()}};
    }
  }
  print_warnings(warnings);

  const auto h = spinham::build_hamiltonian(system);
  const auto sol = spinham::diagonalize(h);
  const auto lines = spinham::transition_lines(sol, system, prune_rel);
  const auto spectrum = spinham::broaden_spectrum(lines, sc);
  const auto centroids = spinham::multiplet_centroids(lines);
  const auto analytic = spinham::zero_field_transitions_analytic(system.zfs);

  const io::Provenance prov = make_provenance("spectrum", raw, args);

  // Augment the canonical stick-line JSON with the resolved settings and the
  // multiplet summary so defaults are visible in the output.
  json sticks = json::parse(io::stick_lines_to_json(lines, prov));
  sticks["settings"] = {
      {"line_shape",
       sc.line_shape == spinham::LineShape::gaussian ? "gaussian" : "lorentzian"},
      {"fwhm_MHz", sc.fwhm_mhz},
      {"f_min_MHz", sc.f_min_mhz},
      {"f_max_MHz", sc.f_max_mhz},
      {"n_points", sc.n_points},
      {"prune_rel", prune_rel}};
  json multiplets = json::array();
  for (int p = 0; p < 3; ++p) {
    multiplets.push_back({{"pair", to_string(static_cast<Transition>(p))},
                          {"centroid_MHz", centroids[p].centroid_mhz},
                          {"total_intensity", centroids[p].total_intensity},
                          {"analytic_MHz", analytic[p].frequency_mhz}});
  }
  sticks["multiplets"] = multiplets;

  const std::string json_path = out_path(args, "stick_lines.json");
  io::write_file(json_path, sticks.dump(2) + "\n");

  io::CsvTable table;
  table.header = {"frequency_MHz", "amplitude"};
  table.columns = {spectrum.frequency_mhz, spectrum.amplitude};
  const std::string csv_path = out_path(args, "spectrum.csv");
  io::write_csv(csv_path, table);

  svgplot::Plot plot("cw-ODMR spectrum", "frequency (MHz)", "amplitude");
  plot.add_series({spectrum.frequency_mhz, spectrum.amplitude, "#1f77b4", ""});
  const std::string svg_path = out_path(args, "spectrum.svg");
  io::write_file(svg_path, plot.render());

  wrote(csv_path);
  wrote(json_path);
  wrote(svg_path);
  return 0;
}

// ---------------------------------------------------------------- simulate

struct PlanSettings {
  pulse::SequenceTimings timings;
  std::vector<double> delay_grid;
  double t_min_s = 1e-7;
  int points_per_decade = 30;
};

PlanSettings resolve_plan(const json& cfg, const GlobalArgs& args,
                          std::vector<std::string>* warnings,
                          const kinetics::KineticParams& kp,
                          const kinetics::OpticalParams& op) {
  PlanSettings ps;
  ps.timings = pulse::default_timings(op);
  if (cfg.contains("plan")) {
    const json& p = cfg.at("plan");
    if (!p.is_object()) throw ConfigError("config: \"plan\" must be an object");
    check_section_keys(p,
                       {"t_min_s", "points_per_decade", "readout_delay_s",
                        "laser_s", "readout_window_s", "delay_grid_s"},
                       args, warnings, "config: plan");
    ps.t_min_s = number_or(p, "t_min_s", ps.t_min_s);
    ps.points_per_decade =
        static_cast<int>(number_or(p, "points_per_decade", ps.points_per_decade));
    ps.timings.readout_delay_s =
        number_or(p, "readout_delay_s", ps.timings.readout_delay_s);
    ps.timings.laser_s = number_or(p, "laser_s", ps.timings.laser_s);
    ps.timings.readout_window_s =
        number_or(p, "readout_window_s", ps.timings.readout_window_s);
    if (p.contains("delay_grid_s")) {
      for (const auto& v : p.at("delay_grid_s"))
        ps.delay_grid.push_back(v.get<double>());
    }
  }
  if (ps.delay_grid.empty())
    ps.delay_grid = pulse::default_delay_grid(kp, ps.t_min_s, ps.points_per_decade);
  return ps;
}

json timings_json(const pulse::SequenceTimings& t) {
  return {{"laser_s", t.laser_s},
          {"readout_window_s", t.readout_window_s},
          {"readout_delay_s", t.readout_delay_s}};
}

int cmd_simulate(const GlobalArgs& args) {
  std::vector<std::string> warnings;
  std::string raw;
  const json cfg =
      load_config(args, {"kinetics", "plan", "noise_sigma"}, &warnings, &raw);
  if (!cfg.contains("kinetics"))
    throw ConfigError("config: missing required key \"kinetics\"");

  const io::KineticsConfig kc =
      io::parse_kinetics(cfg.at("kinetics").dump(), args.strictness(), &warnings);
  const double noise = number_or(cfg, "noise_sigma", 0.0);
  if (noise < 0) throw ConfigError("config: noise_sigma must be >= 0");
  const PlanSettings ps = resolve_plan(cfg, args, &warnings, kc.kinetic, kc.optical);
  print_warnings(warnings);

  const auto specs =
      pulse::generate_plan(ps.delay_grid, ps.timings.readout_delay_s);

  fit::FitParameterSet truth;
  truth.kinetic = kc.kinetic;
  const auto curves = fit::synthesize_curves(truth, specs, kc.optical, ps.timings,
                                             noise, args.seed);

  std::vector<std::string> presets_in_effect;
  if (!kc.preset.empty()) presets_in_effect.push_back(kc.preset);
  const io::Provenance prov =
      make_provenance("simulate", raw, args, presets_in_effect);

  json plan{{"provenance",
             {{"tool_version", prov.tool_version},
              {"config_hash", prov.config_hash},
              {"command", prov.command},
              {"seed", prov.seed},
              {"presets", prov.presets}}},
            {"kinetics", json::parse(io::kinetics_to_json(kc.kinetic, kc.optical))},
            {"timings", timings_json(ps.timings)},
            {"noise_sigma", noise},
            {"curves", json::array()}};

  svgplot::Plot plot_a("Sequence A relaxation curves", "delay (s)",
                       "normalized signal", true);
  svgplot::Plot plot_b("Sequence B relaxation curves", "delay (s)",
                       "normalized signal", true);
  size_t color_a = 0, color_b = 0;

  for (const auto& curve : curves) {
    const std::string label = curve.spec.label();
    const std::string csv_path = out_path(args, "curve_" + label + ".csv");
    const std::string sidecar_path = out_path(args, "curve_" + label + ".spec.json");
    io::write_curve(csv_path, sidecar_path, curve);
    plan["curves"].push_back({{"label", label},
                              {"csv", "curve_" + label + ".csv"},
                              {"spec", "curve_" + label + ".spec.json"}});
    if (curve.spec.kind == pulse::SequenceKind::a) {
      plot_a.add_series({curve.delays, curve.signal,
                         svgplot::palette()[color_a++ % svgplot::palette().size()],
                         label});
    } else {
      plot_b.add_series({curve.delays, curve.signal,
                         svgplot::palette()[color_b++ % svgplot::palette().size()],
                         label});
    }
  }

  const std::string plan_path = out_path(args, "plan.json");
  io::write_file(plan_path, plan.dump(2) + "\n");
  const std::string svg_a = out_path(args, "curves_a.svg");
  const std::string svg_b = out_path(args, "curves_b.svg");
  io::write_file(svg_a, plot_a.render());
  io::write_file(svg_b, plot_b.render());

  std::cout << "simulated " << curves.size() << " curves\n";
  wrote(plan_path);
  wrote(svg_a);
  wrote(svg_b);
  return 0;
}

// --------------------------------------------------------------------- fit

int cmd_fit(const GlobalArgs& args, const std::string& curves_subset) {
  std::vector<std::string> warnings;
  std::string raw;
  const json cfg = load_config(
      args, {"kinetics", "plan", "data_dir", "curves", "start", "fit"},
      &warnings, &raw);
  if (!cfg.contains("kinetics"))
    throw ConfigError("config: missing required key \"kinetics\"");
  if (!cfg.contains("data_dir"))
    throw ConfigError("config: missing required key \"data_dir\"");

  const io::KineticsConfig kc =
      io::parse_kinetics(cfg.at("kinetics").dump(), args.strictness(), &warnings);
  const PlanSettings ps = resolve_plan(cfg, args, &warnings, kc.kinetic, kc.optical);
  const std::string data_dir = cfg.at("data_dir").get<std::string>();

  // Expected curve labels: explicit list, else the full 22-measurement plan.
  std::vector<std::string> labels;
  if (cfg.contains("curves")) {
    for (const auto& v : cfg.at("curves")) labels.push_back(v.get<std::string>());
  } else {
    for (const auto& spec : pulse::generate_plan({1e-6}, ps.timings.readout_delay_s))
      labels.push_back(spec.label());
  }
  if (!curves_subset.empty()) {
    const std::string prefix = curves_subset;
    std::erase_if(labels, [&](const std::string& l) {
      return l.rfind(prefix, 0) != 0;
    });
    if (labels.empty())
      throw ConfigError("--curves-subset " + prefix + " matches no curves");
  }

  std::vector<std::string> missing;
  std::vector<fit::MeasurementCurve> data;
  for (const auto& label : labels) {
    const fs::path csv = fs::path(data_dir) / ("curve_" + label + ".csv");
    const fs::path sidecar = fs::path(data_dir) / ("curve_" + label + ".spec.json");
    if (!fs::exists(csv) || !fs::exists(sidecar)) {
      missing.push_back(csv.string());
      continue;
    }
    data.push_back(io::read_curve(csv.string(), sidecar.string()));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing curve files: " + list);
  }

  fit::FitParameterSet initial;
  initial.kinetic = kc.kinetic;
  if (cfg.contains("start")) {
    const json& s = cfg.at("start");
    check_section_keys(s, {"k_per_s", "w_per_s", "P", "pump_scale"}, args,
                       &warnings, "config: start");
    auto arr3 = [&](const std::string& key, double* a, double* b, double* c) {
      if (!s.contains(key)) return;
      const json& v = s.at(key);
      if (!v.is_array() || v.size() != 3)
        throw ConfigError("config: start." + key + " must be an array of 3");
      *a = v[0].get<double>();
      *b = v[1].get<double>();
      *c = v[2].get<double>();
    };
    arr3("k_per_s", &initial.kinetic.k_x, &initial.kinetic.k_y, &initial.kinetic.k_z);
    arr3("w_per_s", &initial.kinetic.w_xy, &initial.kinetic.w_xz, &initial.kinetic.w_yz);
    arr3("P", &initial.kinetic.p_x, &initial.kinetic.p_y, &initial.kinetic.p_z);
    initial.pump_scale = number_or(s, "pump_scale", initial.pump_scale);
    kinetics::validate(initial.kinetic);
  }

  fit::FitOptions opts;
  opts.seed = args.seed;
  opts.threads = args.threads;
  if (cfg.contains("fit")) {
    const json& f = cfg.at("fit");
    check_section_keys(f,
                       {"max_iterations", "ftol", "xtol", "fd_rel_step",
                        "n_starts", "start_spread", "fit_per_curve_amplitude"},
                       args, &warnings, "config: fit");
    opts.max_iterations =
        static_cast<int>(number_or(f, "max_iterations", opts.max_iterations));
    opts.ftol = number_or(f, "ftol", opts.ftol);
    opts.xtol = number_or(f, "xtol", opts.xtol);
    opts.fd_rel_step = number_or(f, "fd_rel_step", opts.fd_rel_step);
    opts.n_starts = static_cast<int>(number_or(f, "n_starts", opts.n_starts));
    opts.start_spread = number_or(f, "start_spread", opts.start_spread);
    if (f.contains("fit_per_curve_amplitude"))
      opts.fit_per_curve_amplitude = f.at("fit_per_curve_amplitude").get<bool>();
  }
  print_warnings(warnings);

  const fit::FitResult result = fit::fit(data, initial, kc.optical, ps.timings, opts);

  std::vector<std::string> presets_in_effect;
  if (!kc.preset.empty()) presets_in_effect.push_back(kc.preset);
  const io::Provenance prov = make_provenance("fit", raw, args, presets_in_effect);

  json result_json = json::parse(io::fit_result_to_json(result, prov));
  result_json["settings"] = {{"n_curves", data.size()},
                             {"n_starts", opts.n_starts},
                             {"start_spread", opts.start_spread},
                             {"max_iterations", opts.max_iterations},
                             {"ftol", opts.ftol},
                             {"xtol", opts.xtol},
                             {"fd_rel_step", opts.fd_rel_step},
                             {"threads", opts.threads},
                             {"timings", timings_json(ps.timings)}};
  const std::string result_path = out_path(args, "fit_result.json");
  io::write_file(result_path, result_json.dump(2) + "\n");
  wrote(result_path);

  for (size_t c = 0; c < data.size(); ++c) {
    const auto& residual = result.per_curve_residuals[c];
    std::vector<double> model(residual.size());
    for (size_t i = 0; i < residual.size(); ++i) {
      const double sigma = data[c].sigma ? (*data[c].sigma)[i] : 1.0;
      model[i] = data[c].signal[i] + residual[i] * sigma;
    }
    io::CsvTable table;
    table.header = {"delay_s", "signal", "model", "residual"};
    table.columns = {data[c].delays, data[c].signal, model, residual};
    const std::string path =
        out_path(args, "residuals_" + data[c].spec.label() + ".csv");
    io::write_csv(path, table);
  }
  std::cout << "fit " << data.size() << " curves: chi2/dof = " << result.chi2
            << "/" << result.dof << (result.converged ? "" : " (not converged)")
            << "\n";
  return 0;
}

// ------------------------------------------------------------------- eseem

int cmd_eseem(const GlobalArgs& args, std::string trace_path) {
  std::vector<std::string> warnings;
  std::string raw;
  const json cfg = load_config(args,
                               {"trace_csv", "trace_sidecar", "spin_system",
                                "predicted", "tolerance_MHz", "fft",
                                "fit_stretch_exponent"},
                               &warnings, &raw);

  if (trace_path.empty() && cfg.contains("trace_csv"))
    trace_path = cfg.at("trace_csv").get<std::string>();
  if (trace_path.empty())
    throw ConfigError("config: no echo trace given (trace_csv or positional)");
  std::string sidecar_path;
  if (cfg.contains("trace_sidecar"))
    sidecar_path = cfg.at("trace_sidecar").get<std::string>();
  else
    sidecar_path = fs::path(trace_path).replace_extension(".json").string();

  std::vector<echo::PredictedLine> predicted;
  if (cfg.contains("predicted")) {
    for (const auto& p : cfg.at("predicted")) {
      predicted.push_back({p.at("label").get<std::string>(),
                           p.at("frequency_MHz").get<double>() * 1e6});
    }
  } else if (cfg.contains("spin_system")) {
    const SpinSystem system = io::parse_spin_system(
        cfg.at("spin_system").dump(), args.strictness(), &warnings);
    static const char* names[3] = {"|Qxx-Qyy|", "|Qyy-Qzz|", "|Qxx-Qzz|"};
    for (size_t n = 0; n < system.nuclei.size(); ++n) {
      const auto freqs =
          spinham::quadrupole_frequencies(system.nuclei[n].quadrupole);
      for (int i = 0; i < 3; ++i)
        predicted.push_back({"nucleus" + std::to_string(n) + ":" + names[i],
                             freqs[i] * 1e6});
    }
  }

  const double tolerance_hz = number_or(cfg, "tolerance_MHz", 0.25) * 1e6;
  echo::FftOptions fft;
  if (cfg.contains("fft")) {
    const json& f = cfg.at("fft");
    check_section_keys(f, {"window", "zero_pad_factor"}, args, &warnings,
                       "config: fft");
    if (f.contains("window")) {
      const std::string w = f.at("window").get<std::string>();
      if (w == "hann")
        fft.window = echo::FftWindow::hann;
      else if (w == "none")
        fft.window = echo::FftWindow::none;
      else
        throw ConfigError("config: fft.window must be hann or none");
    }
    fft.zero_pad_factor =
        static_cast<int>(number_or(f, "zero_pad_factor", fft.zero_pad_factor));
  }
  const bool stretch = cfg.contains("fit_stretch_exponent") &&
                       cfg.at("fit_stretch_exponent").get<bool>();
  print_warnings(warnings);

  const echo::EchoTrace trace = io::read_echo_trace(trace_path, sidecar_path);

  echo::EseemResult result;
  result.envelope = echo::fit_envelope(trace, stretch);
  result.residual = echo::extract_modulation(trace, result.envelope);
  result.spectrum = echo::fft_spectrum(result.residual, trace.tau_s, fft);
  result.peaks =
      echo::detect_and_assign_peaks(result.spectrum, predicted, tolerance_hz);

  const io::Provenance prov = make_provenance("eseem", raw, args);
  json result_json = json::parse(io::eseem_result_to_json(result, prov));
  result_json["settings"] = {
      {"tolerance_MHz", tolerance_hz / 1e6},
      {"window", fft.window == echo::FftWindow::hann ? "hann" : "none"},
      {"zero_pad_factor", fft.zero_pad_factor},
      {"fit_stretch_exponent", stretch},
      {"trace_csv", trace_path}};
  const std::string result_path = out_path(args, "eseem_result.json");
  io::write_file(result_path, result_json.dump(2) + "\n");

  io::CsvTable spec_table;
  std::vector<double> freq_mhz(result.spectrum.frequency_hz.size());
  for (size_t i = 0; i < freq_mhz.size(); ++i)
    freq_mhz[i] = result.spectrum.frequency_hz[i] / 1e6;
  spec_table.header = {"frequency_MHz", "magnitude"};
  spec_table.columns = {freq_mhz, result.spectrum.magnitude};
  const std::string spec_path = out_path(args, "eseem_spectrum.csv");
  io::write_csv(spec_path, spec_table);

  io::CsvTable resid_table;
  resid_table.header = {"tau_s", "residual"};
  resid_table.columns = {trace.tau_s, result.residual};
  const std::string resid_path = out_path(args, "eseem_residual.csv");
  io::write_csv(resid_path, resid_table);

  svgplot::Plot plot("ESEEM spectrum", "frequency (MHz)", "magnitude");
  plot.add_series({freq_mhz, result.spectrum.magnitude, "#1f77b4", ""});
  for (const auto& peak : result.peaks)
    plot.add_marker(peak.frequency_hz / 1e6, peak.magnitude,
                    peak.assignment ? "#d62728" : "#7f7f7f");
  const std::string svg_path = out_path(args, "eseem.svg");
  io::write_file(svg_path, plot.render());

  std::cout << "T2 = " << result.envelope.t2_s << " s, " << result.peaks.size()
            << " peaks\n";
  wrote(result_path);
  wrote(spec_path);
  wrote(resid_path);
  wrote(svg_path);
  return 0;
}

// ------------------------------------------------------------- sensitivity

int cmd_sensitivity(const GlobalArgs& args, const std::string& path_a,
                    const std::string& path_b) {
  std::vector<std::string> warnings;
  std::string text_a, text_b;
  if (!path_a.empty() && !path_b.empty()) {
    text_a = io::read_file(path_a);
    text_b = io::read_file(path_b);
  } else if (!args.config_path.empty()) {
    std::string raw;
    const json cfg = load_config(args, {"a", "b"}, &warnings, &raw);
    if (!cfg.contains("a") || !cfg.contains("b"))
      throw ConfigError("config: sensitivity needs \"a\" and \"b\" input blocks");
    text_a = cfg.at("a").dump();
    text_b = cfg.at("b").dump();
  } else {
    throw ConfigError(
        "sensitivity needs two input JSON paths or --config with a/b blocks");
  }

  const auto in_a =
      io::parse_sensitivity_inputs(text_a, args.strictness(), &warnings);
  const auto in_b =
      io::parse_sensitivity_inputs(text_b, args.strictness(), &warnings);
  print_warnings(warnings);

  const auto eta_a = sensitivity::relative_sensitivity(in_a);
  const auto eta_b = sensitivity::relative_sensitivity(in_b);
  const auto ratio = sensitivity::sensitivity_ratio(in_a, in_b);

  const io::Provenance prov =
      make_provenance("sensitivity", text_a + text_b, args);
  const std::string report =
      io::sensitivity_report_to_json(ratio, eta_a, eta_b, prov);
  const std::string path = out_path(args, "sensitivity.json");
  io::write_file(path, report);
  std::cout << "eta(b)/eta(a) = " << ratio.ratio << "\n";
  wrote(path);
  return 0;
}

// ------------------------------------------------------------------- error

json error_json(const std::string& type, const std::string& message, int code) {
  return json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and inference for zero-field ODMR of molecular "
               "photoexcited triplets"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  bool strict_flag = false;
  app.add_option("--config", args.config_path, "Path to the JSON configuration");
  app.add_option("--out", args.out_dir, "Output directory (default .)");
  app.add_option("--seed", args.seed, "RNG seed for noise/multistart");
  app.add_option("--threads", args.threads, "Worker threads for curve simulation");
  app.add_flag("--strict", strict_flag, "Reject unknown config keys (default)");
  app.add_flag("--lenient", args.lenient, "Downgrade unknown config keys to warnings");

  auto* sub_spectrum =
      app.add_subcommand("spectrum", "Stick lines + broadened cw-ODMR spectrum");
  auto* sub_simulate =
      app.add_subcommand("simulate", "Synthesize the pulsed-ODMR measurement plan");
  auto* sub_fit =
      app.add_subcommand("fit", "Global kinetic fit of measured/synthetic curves");
  std::string curves_subset;
  sub_fit->add_option("--curves-subset", curves_subset,
                      "Fit only curves whose label starts with this prefix "
                      "(e.g. A)");
  auto* sub_eseem =
      app.add_subcommand("eseem", "Echo envelope fit + ESEEM spectrum analysis");
  std::string trace_positional;
  sub_eseem->add_option("trace", trace_positional, "Echo trace CSV path");
  auto* sub_sens =
      app.add_subcommand("sensitivity", "Relative sensitivity ratio of two inputs");
  std::string sens_a, sens_b;
  sub_sens->add_option("input_a", sens_a, "First sensitivity input JSON");
  sub_sens->add_option("input_b", sens_b, "Second sensitivity input JSON");
  auto* sub_presets =
      app.add_subcommand("presets", "Print the built-in parameter presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << error_json("config", e.what(), 2).dump() << "\n";
    return 2;
  }

  if (strict_flag && args.lenient) {
    std::cerr << error_json("config", "--strict and --lenient are exclusive", 2).dump()
              << "\n";
    return 2;
  }
  if (args.threads < 1) {
    std::cerr << error_json("config", "--threads must be >= 1", 2).dump() << "\n";
    return 2;
  }

  try {
    if (sub_spectrum->parsed()) return cmd_spectrum(args);
    if (sub_simulate->parsed()) return cmd_simulate(args);
    if (sub_fit->parsed()) return cmd_fit(args, curves_subset);
    if (sub_eseem->parsed()) return cmd_eseem(args, trace_positional);
    if (sub_sens->parsed()) return cmd_sensitivity(args, sens_a, sens_b);
    if (sub_presets->parsed()) {
      std::cout << io::presets_to_json();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << error_json("config", e.what(), 2).dump() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << error_json("numerical", e.what(), 3).dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what(), 3).dump() << "\n";
    return 3;
  }
  return 0;
}

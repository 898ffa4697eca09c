#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "odmr/json_io.hpp"
#include "odmr/presets.hpp"

using namespace odmr;
using namespace odmr::io;

namespace {

// Each test case writes into its own directory so cases stay independent.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("odmr_io_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

const char* spin_json = R"({
  "D_MHz": 1390.5, "E_MHz": -84.9,
  "nuclei": [
    {"A_MHz": [-0.79, -0.99, 23.0], "Q_MHz": [0.99, -2.2, 1.2]},
    {"A_MHz": [-0.79, -0.99, 23.0], "Q_MHz": [0.99, -2.2, 1.2]}
  ]
})";

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0xcbf29ce484222325ull) == "cbf29ce484222325");
  CHECK(hex64(0x1ull) == "0000000000000001");
}

TEST_CASE("spin system json round trip") {
  std::vector<std::string> warnings;
  const SpinSystem sys =
      parse_spin_system(spin_json, Strictness::strict, &warnings);
  CHECK(sys.zfs.d_mhz == doctest::Approx(1390.5));
  CHECK(sys.zfs.e_mhz == doctest::Approx(-84.9));
  REQUIRE(sys.nuclei.size() == 2);
  CHECK(sys.nuclei[1].hyperfine.zz == doctest::Approx(23.0));
  CHECK(sys.nuclei[0].quadrupole.yy == doctest::Approx(-2.2));

  const SpinSystem back =
      parse_spin_system(spin_system_to_json(sys), Strictness::strict);
  CHECK(back.zfs.d_mhz == sys.zfs.d_mhz);
  CHECK(back.nuclei[0].quadrupole.zz == sys.nuclei[0].quadrupole.zz);
}

TEST_CASE("unknown keys: strict throws, lenient warns") {
  const std::string with_extra = R"({
    "D_MHz": 1390.5, "E_MHz": -84.9, "nuclei": [], "typo_key": 1
  })";
  CHECK_THROWS_WITH_AS(parse_spin_system(with_extra, Strictness::strict),
                       doctest::Contains("typo_key"), ConfigError);

  std::vector<std::string> warnings;
  CHECK_NOTHROW(parse_spin_system(with_extra, Strictness::lenient, &warnings));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("typo_key") != std::string::npos);
}

TEST_CASE("explicit kinetics json round trip") {
  const std::string text = R"({
    "k_per_s": [2.49e5, 4.8e4, 2.075e4],
    "w_per_s": [5e4, 2.8e4, 3.8e4],
    "P": [0.60, 0.21, 0.19],
    "pump_per_s": 5e5, "isc_yield": 0.65, "mode": "reduced"
  })";
  const KineticsConfig kc = parse_kinetics(text, Strictness::strict);
  CHECK(kc.preset.empty());
  CHECK(kc.kinetic.k_x == doctest::Approx(2.49e5));
  CHECK(kc.kinetic.w_yz == doctest::Approx(3.8e4));
  CHECK(kc.kinetic.p_y == doctest::Approx(0.21));
  CHECK(kc.optical.pump_rate == doctest::Approx(5e5));
  CHECK(kc.optical.mode == kinetics::Mode::reduced);

  const KineticsConfig back = parse_kinetics(
      kinetics_to_json(kc.kinetic, kc.optical), Strictness::strict);
  CHECK(back.kinetic.k_z == doctest::Approx(kc.kinetic.k_z).epsilon(1e-12));
  CHECK(back.optical.isc_yield == doctest::Approx(kc.optical.isc_yield));
}

TEST_CASE("preset kinetics with overrides") {
  const KineticsConfig kc =
      parse_kinetics(R"({"preset": "DAP-fig4c", "pump_per_s": 2e6})",
                     Strictness::strict);
  CHECK(kc.preset == "DAP-fig4c");
  const auto& ref = presets::by_name("DAP-fig4c");
  CHECK(kc.kinetic.k_x == doctest::Approx(ref.kinetic.k_x));
  CHECK(kc.optical.pump_rate == doctest::Approx(2e6));  // override applied
  CHECK(kc.optical.isc_yield == doctest::Approx(ref.optical.isc_yield));

  CHECK_THROWS_WITH_AS(
      parse_kinetics(R"({"preset": "nope"})", Strictness::strict),
      doctest::Contains("DAP-fig4c"), ConfigError);

  // explicit_s1 requires the S1 decay rate.
  CHECK_THROWS_AS(parse_kinetics(R"({
    "k_per_s": [1e5, 1e5, 1e5], "w_per_s": [1e4, 1e4, 1e4],
    "P": [0.4, 0.3, 0.3], "pump_per_s": 1e6, "isc_yield": 0.5,
    "mode": "explicit_s1"
  })",
                                 Strictness::strict),
                  ConfigError);
}

TEST_CASE("sensitivity inputs accept unit-suffixed aliases") {
  const auto a = parse_sensitivity_inputs(
      R"({"contrast": 0.18, "n_avg": 0.5, "c_s": 1e24,
          "t_overhead_s": 1e-5, "t2_chi_s": 3e-6})",
      Strictness::strict);
  const auto b = parse_sensitivity_inputs(
      R"({"contrast": 0.18, "n_avg": 0.5, "c_s": 1e24,
          "t_overhead": 1e-5, "t2_chi": 3e-6})",
      Strictness::strict);
  CHECK(a.t_overhead_s == b.t_overhead_s);
  CHECK(a.t2_chi_s == b.t2_chi_s);
}

TEST_CASE("csv round trip is lossless at double precision") {
  TempDir dir("csv");
  CsvTable table;
  table.header = {"delay_s", "signal"};
  table.columns = {{1e-7, 2.5e-7, 0.1 + 0.2}, {0.123456789012345, -1.0, 3e300}};
  write_csv(dir.file("t.csv"), table);

  const CsvTable back = read_csv(dir.file("t.csv"));
  REQUIRE(back.header == table.header);
  REQUIRE(back.columns.size() == 2);
  for (size_t c = 0; c < 2; ++c)
    for (size_t r = 0; r < 3; ++r)
      CHECK(back.columns[c][r] == table.columns[c][r]);  // bitwise
}

TEST_CASE("csv parse errors carry the file position") {
  TempDir dir("csverr");
  write_file(dir.file("ragged.csv"), "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv(dir.file("ragged.csv")),
                       doctest::Contains(":3"), ConfigError);

  write_file(dir.file("text.csv"), "a,b\n1,oops\n");
  CHECK_THROWS_AS(read_csv(dir.file("text.csv")), ConfigError);

  write_file(dir.file("empty.csv"), "");
  CHECK_THROWS_AS(read_csv(dir.file("empty.csv")), ConfigError);

  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), ConfigError);

  // CRLF input is tolerated.
  write_file(dir.file("crlf.csv"), "a,b\r\n1,2\r\n");
  const CsvTable t = read_csv(dir.file("crlf.csv"));
  CHECK(t.columns[1][0] == doctest::Approx(2.0));
}

TEST_CASE("measurement spec json round trip") {
  pulse::MeasurementSpec spec;
  spec.init_id = 5;
  spec.kind = pulse::SequenceKind::b;
  spec.b_transition = Transition::xz;
  spec.delay_grid = {1e-7, 1e-6, 1e-5};
  spec.readout_delay_s = 5e-6;

  const pulse::MeasurementSpec back =
      parse_measurement_spec(measurement_spec_to_json(spec));
  CHECK(back.init_id == 5);
  CHECK(back.kind == pulse::SequenceKind::b);
  REQUIRE(back.b_transition.has_value());
  CHECK(*back.b_transition == Transition::xz);
  REQUIRE(back.delay_grid.size() == 3);
  CHECK(back.delay_grid[1] == doctest::Approx(1e-6));

  // Kind B without a probe transition is rejected.
  CHECK_THROWS_AS(parse_measurement_spec(
                      R"({"init_id": 1, "kind": "B",
                          "readout_delay_s": 5e-6, "delay_grid_s": [1e-6]})"),
                  ConfigError);
}

TEST_CASE("curve csv + sidecar round trip") {
  TempDir dir("curve");
  fit::MeasurementCurve curve;
  curve.spec.init_id = 2;
  curve.spec.kind = pulse::SequenceKind::a;
  curve.delays = {1e-7, 1e-6, 1e-5, 1e-4};
  curve.spec.delay_grid = curve.delays;
  curve.signal = {0.2, 0.4, 0.8, 1.0};
  curve.sigma = std::vector<double>{0.01, 0.01, 0.01, 0.01};

  write_curve(dir.file("c.csv"), dir.file("c.spec.json"), curve);
  const fit::MeasurementCurve back =
      read_curve(dir.file("c.csv"), dir.file("c.spec.json"));
  CHECK(back.spec.init_id == 2);
  CHECK(back.spec.label() == "A2");
  REQUIRE(back.delays.size() == 4);
  CHECK(back.delays[3] == curve.delays[3]);
  CHECK(back.signal[2] == curve.signal[2]);
  REQUIRE(back.sigma.has_value());
  CHECK((*back.sigma)[0] == doctest::Approx(0.01));

  // Without sigma the column is simply absent.
  curve.sigma.reset();
  write_curve(dir.file("ns.csv"), dir.file("ns.spec.json"), curve);
  const fit::MeasurementCurve back2 =
      read_curve(dir.file("ns.csv"), dir.file("ns.spec.json"));
  CHECK_FALSE(back2.sigma.has_value());
}

TEST_CASE("echo trace loader handles both time-axis conventions") {
  TempDir dir("echo");
  std::string csv = "time_us,amplitude\n";
  for (int i = 1; i <= 16; ++i)
    csv += std::to_string(0.1 * i) + "," + std::to_string(1.0 / i) + "\n";
  write_file(dir.file("tau.csv"), csv);
  write_file(dir.file("tau.json"), R"({"time_axis": "tau"})");
  write_file(dir.file("tot.csv"), csv);
  write_file(dir.file("tot.json"), R"({"time_axis": "total_time"})");

  const echo::EchoTrace as_tau =
      read_echo_trace(dir.file("tau.csv"), dir.file("tau.json"));
  const echo::EchoTrace as_total =
      read_echo_trace(dir.file("tot.csv"), dir.file("tot.json"));
  REQUIRE(as_tau.tau_s.size() == 16);
  CHECK(as_tau.tau_s[0] == doctest::Approx(1e-7));          // µs -> s
  CHECK(as_total.tau_s[0] == doctest::Approx(0.5e-7));      // halved
  CHECK(as_tau.amplitude[3] == as_total.amplitude[3]);

  write_file(dir.file("bad.json"), R"({"time_axis": "bogus"})");
  CHECK_THROWS_AS(read_echo_trace(dir.file("tau.csv"), dir.file("bad.json")),
                  ConfigError);
}

TEST_CASE("stick lines json carries transition labels and provenance") {
  std::vector<spinham::TransitionLine> lines(2);
  lines[0].frequency_mhz = 169.8;
  lines[0].intensity = 1.0;
  lines[0].pair = static_cast<int>(Transition::xy);
  lines[1].frequency_mhz = 1475.4;
  lines[1].intensity = 0.5;  // pair stays -1: unresolved

  Provenance prov;
  prov.config_hash = hex64(fnv1a64("test"));
  prov.command = "spectrum";
  const std::string text = stick_lines_to_json(lines, prov);
  CHECK(text.find("169.8") != std::string::npos);
  CHECK(text.find("xy") != std::string::npos);
  CHECK(text.find(prov.config_hash) != std::string::npos);
  CHECK(text.find(version_string) != std::string::npos);
}

TEST_CASE("presets json lists both built-ins") {
  const std::string text = presets_to_json();
  CHECK(text.find("DAP-fig4c") != std::string::npos);
  CHECK(text.find("Pc-fig4c") != std::string::npos);
  CHECK(text.find("placeholder") != std::string::npos);  // the caveat note
}

}  // TEST_SUITE

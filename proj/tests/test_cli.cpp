#include <doctest.h>

#include "cli.hpp"
#include "dtwpa/csv.hpp"
#include "dtwpa/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dtwpa;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dtwpa_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text_file(p.string())); }

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("parse and format") {
  const auto t = parse_csv("# comment\na,b\n1,2.5\n\n-3,4e9\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column("b")[1] == 4e9);
  CHECK(t.has("a"));
  CHECK(!t.has("c"));
  CHECK_THROWS_AS(t.index("c"), Error);
  CHECK(parse_csv(format_csv(t)).rows == t.rows);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parse_csv("a\nx1\n"), Error);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), Error);
}

}

TEST_SUITE("cli") {

TEST_CASE("argument errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gain", "--manifest", "{}"}).code == 2);  // --out missing
  const auto d = scratch("args");
  auto r = run({"gain", "--manifest", "{\"signal\": {\"frequencies_hz\": [6e9]}, \"mode\": \"pump_on\"}",
                "--out", d.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("pump") != std::string::npos);
  r = run({"synth-diplexer", "--manifest", "{not json", "--out", d.string()});
  CHECK(r.code == 2);
  r = run({"noise-fit", "--manifest", "{}", "--out", d.string()});
  CHECK(r.code == 2);
  CHECK(fs::is_empty(d));  // nothing written before validation passes
}

TEST_CASE("synth-diplexer writes the component table") {
  const auto d = scratch("synth");
  const auto r = run({"synth-diplexer", "--manifest",
                      R"({"filter": {"n": 5, "ripple_db": 0.1, "crossover_hz": 8e9, "z0_ohm": 50}})",
                      "--out", d.string()});
  REQUIRE(r.code == 0);
  const auto s = read_json(d / "summary.json");
  CHECK(s["crossover_hz"].get<double>() == doctest::Approx(8e9).epsilon(0.01));
  CHECK(s["max_unitarity_error"].get<double>() < 1e-9);
  CHECK(fs::exists(d / "diplexer.s3p"));
  CHECK(fs::exists(d / "sparams.csv"));
  const auto text = read_text_file((d / "components.csv").string());
  CHECK(text.find("1,low,series,inductor,6.47") != std::string::npos);
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto d = scratch("paths");
  write_text_file((d / "filter.json").string(), R"({"n": 3, "ripple_db": 0.1, "crossover_hz": 5e9, "z0_ohm": 50})");
  write_text_file((d / "run.json").string(), R"({"filter": "filter.json", "sweep": {"points": 101}})");
  const auto r = run({"synth-diplexer", "--manifest", (d / "run.json").string(), "--out", (d / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "out" / "summary.json")["filter"]["n"] == 3);
}

TEST_CASE("noise-fit from CSV files") {
  const auto d = scratch("noise");
  write_text_file((d / "dec.csv").string(),
                  "g_twpa_db,n_add_quanta,n_add_err\n"
                  "5,6.4,0.1\n8,4.5,0.1\n11,2.5,0.1\n13,2.2,0.1\n14,2.6,0.1\n");
  std::ostringstream sw;
  sw << "f_hz,n_in_quanta,n_out\n";
  for (int i = 0; i < 5; ++i) sw << "7e9," << 0.5 + i << "," << 10.0 * (0.5 + i + 2.0) << "\n";
  write_text_file((d / "sweeps.csv").string(), sw.str());
  write_text_file((d / "run.json").string(),
                  R"({"sweeps": {"csv": "sweeps.csv"}, "decomposition": {"csv": "dec.csv"}})");
  const auto r = run({"noise-fit", "--manifest", (d / "run.json").string(), "--out", d.string()});
  REQUIRE(r.code == 0);
  const auto s = read_json(d / "summary.json");
  CHECK(s["decomposition"]["retained"] == 4);
  CHECK(s["decomposition"]["excluded_mask"][4] == true);
  const auto fit = read_csv((d / "chain_fit.csv").string());
  CHECK(fit.column("n_add_quanta")[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("calibrate report") {
  const auto d = scratch("cal");
  const auto r = run({"calibrate", "--manifest",
                      R"({"synthetic": true, "pump": {"source_dbm": -15.8, "attenuation_db": 61}})",
                      "--out", d.string()});
  REQUIRE(r.code == 0);
  const auto s = read_json(d / "summary.json");
  CHECK(s["pump"]["at_device_dbm"].get<double>() == doctest::Approx(-76.8));
  const auto t = read_csv((d / "attenuation.csv").string());
  CHECK(t.column("attenuation_db")[0] == doctest::Approx(-68.0).epsilon(1e-9));
}

TEST_CASE("runtime failures exit with 1") {
  const auto d = scratch("runtime");
  // A sweep that never reaches the crossover still succeeds; a decomposition
  // with too few distinct gains fails at run time.
  write_text_file((d / "dec.csv").string(), "g_twpa_db,n_add_quanta\n5,3\n5,3.1\n13,2\n");
  const std::string m = R"({"decomposition": {"exclusion": "none", "csv": ")" + (d / "dec.csv").string() + "\"}}";
  const auto r = run({"noise-fit", "--manifest", m, "--out", d.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("insufficient points") != std::string::npos);
}

TEST_CASE("gain in pump-off mode on a short line") {
  const auto d = scratch("gain");
  const auto r = run({"gain", "--manifest",
                      R"({"twpa": {"n_cells": 30}, "mode": "pump_off", "measure_s43": false,
                          "signal": {"frequencies_hz": [5e9, 6e9]},
                          "sim": {"window_s": 2e-9, "settle_time_s": 2e-9, "ramp_time_s": 0.4e-9}})",
                      "--out", d.string()});
  REQUIRE(r.code == 0);
  const auto t = read_csv((d / "gain_pump_off.csv").string());
  REQUIRE(t.rows.size() == 2);
  for (double g : t.column("gain_db")) CHECK(std::abs(g) < 1.0);
}

}

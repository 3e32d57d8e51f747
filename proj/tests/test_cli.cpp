#include <doctest.h>

#include "ffent/cli.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace ffent;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ffent_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_exe(const std::string& args) {
  const std::string cmd = std::string(FFENT_EXE) + " " + args + " --quiet > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Relative path -> contents for every file below dir.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

const char* kSsh = R"({
  "experiment": "ssh_demo",
  "model": {"kind": "ssh", "t1": 2.0, "t2": 4.0, "omega0": 48.0},
  "mesh": {"divisions": [40]},
  "mask": {"geometry": "interval", "length": 10}
})";

const char* kHoneycomb = R"({
  "experiment": "hc_demo",
  "model": {"kind": "honeycomb", "t": 2.5, "omega0": 48.5, "m": 0.0},
  "mesh": {"divisions": [24, 24]},
  "mask": {"geometry": "rhombus", "side": 3},
  "window": {"fill": "up_to", "omega_F": 46.0},
  "scaling": {"sizes": [2, 3, 4, 5]},
  "cylinder": {"n1": 20, "subsystem_cells": 5, "k2_points": 12},
  "ribbon": {"n_open": 10, "k2_points": 16}
})";

ExperimentConfig parse(const std::string& text) { return ExperimentConfig::from_json(json::parse(text)); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config_round_trips_through_resolved_json") {
  for (const char* text : {kSsh, kHoneycomb}) {
    const auto a = parse(text);
    const auto b = ExperimentConfig::from_json(a.to_json());
    CHECK(a.to_json() == b.to_json());
    CHECK_NOTHROW(b.validate());
  }
}

TEST_CASE("config_rejects_unknown_and_foreign_keys") {
  auto j = json::parse(kSsh);
  j["modle"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(kSsh);
  j["model"]["t"] = 2.5;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(kSsh);
  j["mask"]["sides"] = 3;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(kSsh);
  j["model"]["kind"] = "kagome";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("config_requires_model_parameters") {
  auto j = json::parse(kSsh);
  j["model"].erase("t2");
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(kSsh);
  j["model"]["kind"] = "ssh_no_chiral";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j["model"]["delta"] = 1.2;
  CHECK_NOTHROW(ExperimentConfig::from_json(j));
  j = json::parse(kHoneycomb);
  j["model"].erase("m");
  CHECK(ExperimentConfig::from_json(j).model.m == 0.0);
}

TEST_CASE("config_validation_of_values") {
  auto j = json::parse(kSsh);
  j["mesh"]["divisions"] = json::array({0});
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  j = json::parse(kSsh);
  j["mask"]["length"] = 50;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  j = json::parse(kSsh);
  j["workers"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  j = json::parse(kSsh);
  j["scan"] = {{"parameter", "t1"}, {"values", {{"start", 0.5}, {"stop", 1.5}, {"step", 0.25}}}};
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.scan.values == std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5});
  j["window"] = {{"omega_F", 47.0}};
  CHECK(ExperimentConfig::from_json(j).window.fill == "up_to");
}

TEST_CASE("every_command_produces_its_files") {
  const std::map<std::string, std::set<std::string>> expect1d{
      {"bands", {"bands.csv"}},
      {"entropy", {"entropy.json"}},
      {"spectrum", {"entropy.json", "spectrum.csv"}},
      {"sweep-filling", {"sweep.csv"}},
      {"scaling", {"scaling.csv", "scaling_fit.json"}},
      {"scan-transition", {"transition.csv", "transition_spectra.csv"}},
      {"pipeline", {"pipeline.json", "recovered_bands.csv"}},
      {"zak", {"zak.csv"}}};
  auto cfg = parse(kSsh);
  cfg.scan.values = {1.0, 2.0, 3.0};
  cfg.scaling.sizes = {4, 6, 8};
  for (const auto& [cmd, files] : expect1d) {
    const auto out = cli::execute(cmd, cfg);
    std::set<std::string> got;
    for (const auto& [name, _] : out.files) got.insert(name);
    CHECK_MESSAGE(got == files, cmd);
    CHECK_FALSE(out.partial);
  }
  const auto hc = parse(kHoneycomb);
  CHECK(cli::execute("cylinder-es", hc).files.count("cylinder_es.csv") == 1u);
  CHECK(cli::execute("ribbon", hc).files.count("ribbon.csv") == 1u);
  CHECK(cli::execute("scaling", hc).files.count("scaling_fit.json") == 1u);
  CHECK_THROWS_AS(cli::execute("ribbon", cfg), ConfigError);
  CHECK_THROWS_AS(cli::execute("frobnicate", cfg), ConfigError);
}

TEST_CASE("bands_csv_records_mesh_and_offset") {
  const auto out = cli::execute("bands", parse(kSsh));
  const std::string& csv = out.files.at("bands.csv");
  CHECK(csv.rfind("# mesh 40", 0) == 0);
  CHECK(csv.find("offset 0.5") != std::string::npos);
  CHECK(csv_rows(csv).size() == 1u + 80u);
}

TEST_CASE("entropy_json_matches_library") {
  const auto out = cli::execute("entropy", parse(kSsh));
  const auto j = json::parse(out.files.at("entropy.json"));
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(40));
  const auto ref = entanglement(correlation_matrix(bs, SubsystemMask::interval(10), FillingWindow::half(bs)));
  CHECK(j.at("entropy").get<double>() == ref.entropy);
}

TEST_CASE("figure_2e_gapless_slope") {
  const auto out = cli::figure("2e", 1);
  const auto j = json::parse(out.files.at("gapless/scaling_fit.json"));
  double slope = 0.0;
  for (const auto& f : j.at("fits"))
    if (f.at("law") == "log1d") slope = f.at("coefficients").at("lnL").get<double>();
  CHECK(std::abs(slope - 1.0 / 3.0) / (1.0 / 3.0) < 0.05);
  CHECK(out.files.count("topological/scaling.csv") == 1u);
  CHECK(out.files.count("trivial/scaling.csv") == 1u);
}

TEST_CASE("figure_4c_flagged_region") {
  const auto out = cli::figure("4c", 1);
  const auto rows = csv_rows(out.files.at("cylinder/cylinder_es.csv"));
  REQUIRE(rows.size() > 1u);
  CHECK(rows[0] == std::vector<std::string>{"k2", "index", "epsilon", "in_gap_flag"});
  std::set<double> flagged, all;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double k2 = std::stod(rows[i][0]);
    all.insert(k2);
    if (rows[i][3] == "1") flagged.insert(k2);
  }
  REQUIRE_FALSE(flagged.empty());
  const double step = 2 * pi / static_cast<double>(all.size());
  CHECK(std::abs(*flagged.begin() - 2 * pi / 3) <= step + 1e-9);
  CHECK(std::abs(*flagged.rbegin() - 4 * pi / 3) <= step + 1e-9);
  // contiguous
  for (double k : all)
    if (k > *flagged.begin() && k < *flagged.rbegin()) CHECK(flagged.count(k) == 1u);
}

TEST_CASE("exit_code_config_error_writes_nothing") {
  const auto dir = scratch("bad");
  auto j = json::parse(kSsh);
  j["model"].erase("t2");
  write(dir / "cfg.json", j.dump());
  CHECK(run_exe("entropy --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string()) == 1);
  CHECK_FALSE(fs::exists(dir / "out"));
  CHECK(run_exe("entropy --config " + (dir / "missing.json").string()) == 1);
  CHECK(run_exe("entropy") == 1);
  CHECK(run_exe("frobnicate") == 1);
  CHECK(run_exe("figure 9z") == 1);
  CHECK(run_exe("--version") == 0);
}

TEST_CASE("exit_code_numerical_failure") {
  const auto dir = scratch("numerical");
  auto j = json::parse(kSsh);
  j["model"]["t1"] = 4.0;  // gapless, and offset 0 puts a mesh point on the node
  j["mesh"]["offset"] = 0.0;
  write(dir / "cfg.json", j.dump());
  CHECK(run_exe("entropy --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("exit_code_partial_results") {
  const auto dir = scratch("partial");
  auto j = json::parse(kSsh);
  j["model"]["t1"] = 0.01;
  j["model"]["t2"] = 0.01;
  j["mesh"]["divisions"] = {24};
  j["mask"]["length"] = 4;
  j["pipeline"] = {{"gamma", 0.05}};
  write(dir / "cfg.json", j.dump());
  CHECK(run_exe("pipeline --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string()) == 3);
  REQUIRE(fs::exists(dir / "out" / "manifest.json"));
  CHECK(json::parse(slurp(dir / "out" / "manifest.json")).at("partial") == true);
  const auto report = json::parse(slurp(dir / "out" / "pipeline.json"));
  CHECK(report.dump().find("flagged") != std::string::npos);
}

TEST_CASE("outputs_byte_identical_on_rerun_and_worker_independent") {
  const auto dir = scratch("repro");
  write(dir / "cfg.json", kHoneycomb);
  const std::string cfg = " --config " + (dir / "cfg.json").string();
  for (const char* cmd : {"scaling", "cylinder-es", "sweep-filling"}) {
    REQUIRE(run_exe(std::string(cmd) + cfg + " --workers 1 --out " + (dir / "a").string()) == 0);
    REQUIRE(run_exe(std::string(cmd) + cfg + " --workers 1 --out " + (dir / "b").string()) == 0);
    REQUIRE(run_exe(std::string(cmd) + cfg + " --workers 3 --out " + (dir / "c").string()) == 0);
    auto a = tree(dir / "a"), b = tree(dir / "b"), c = tree(dir / "c");
    CHECK(a.at("manifest.json").find("\"output\"") != std::string::npos);
    a.erase("manifest.json");
    b.erase("manifest.json");
    c.erase("manifest.json");
    CHECK(a == b);
    CHECK(a == c);
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
    fs::remove_all(dir / "c");
  }
}

TEST_CASE("noisy_pipeline_reproducible_from_seed") {
  const auto dir = scratch("seed");
  auto j = json::parse(kSsh);
  j["pipeline"] = {{"gamma", 0.05}, {"snr", 200.0}};
  write(dir / "cfg.json", j.dump());
  const std::string cfg = "pipeline --config " + (dir / "cfg.json").string();
  REQUIRE(run_exe(cfg + " --seed 5 --out " + (dir / "a").string()) == 0);
  REQUIRE(run_exe(cfg + " --seed 5 --out " + (dir / "b").string()) == 0);
  REQUIRE(run_exe(cfg + " --seed 6 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "a" / "pipeline.json") == slurp(dir / "b" / "pipeline.json"));
  CHECK(slurp(dir / "a" / "pipeline.json") != slurp(dir / "c" / "pipeline.json"));
}

TEST_CASE("manifest_is_sufficient_to_rerun") {
  const auto dir = scratch("manifest");
  write(dir / "cfg.json", kHoneycomb);
  REQUIRE(run_exe("scaling --config " + (dir / "cfg.json").string() + " --out " + (dir / "first").string()) == 0);
  const auto manifest = json::parse(slurp(dir / "first" / "manifest.json"));
  CHECK(manifest.at("version") == cli::kVersion);
  CHECK(manifest.at("command") == "scaling");
  write(dir / "resolved.json", manifest.at("resolved").dump());
  REQUIRE(run_exe("scaling --config " + (dir / "resolved.json").string() + " --out " + (dir / "second").string()) == 0);
  auto a = tree(dir / "first"), b = tree(dir / "second");
  a.erase("manifest.json");
  b.erase("manifest.json");
  CHECK(a == b);
}

TEST_CASE("figure_writes_manifest_and_subdirectories") {
  const auto dir = scratch("figure");
  REQUIRE(run_exe("figure 3g --out " + (dir / "fig").string()) == 0);
  const auto manifest = json::parse(slurp(dir / "fig" / "manifest.json"));
  CHECK(manifest.at("panel") == "3g");
  CHECK(manifest.at("command") == "figure");
  bool has_csv = false;
  for (const auto& [name, _] : tree(dir / "fig")) has_csv = has_csv || name.ends_with(".csv");
  CHECK(has_csv);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bohmcover/config.hpp"
#include "bohmcover/io.hpp"
#include "bohmcover/scenario.hpp"

using namespace bohmcover;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = BOHMCOVER_SCENARIOS;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "bohmcover_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "BOHMCOVER_LOG=quiet '" + std::string(BOHMCOVER_CLI) + "' " + args + " 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kMinimalRing = R"({
  "geometry": {"kind": "ring", "grid": [64]},
  "factor": {"beta": 0.5}
})";

}  // namespace

TEST(LoadConfig, MinimalRingFillsDefaults) {
  const Config c = parse_config(kMinimalRing);
  EXPECT_TRUE(c.has_dynamics);
  EXPECT_DOUBLE_EQ(c.scenario.numerics.dt, 1e-3);
  EXPECT_EQ(c.scenario.seed, 0u);
  EXPECT_EQ(c.scenario.geometry.kind, GeometryKind::Ring);
  EXPECT_EQ(c.scenario.geometry.n_theta, 64);
  EXPECT_DOUBLE_EQ(c.scenario.factor.beta, 0.5);
}

TEST(LoadConfig, UnknownKeyIsNamed) {
  try {
    parse_config(R"({"geometry": {"kind": "ring", "grid": [64]}, "factor": {"beta": 0.5, "betaa": 1}})", "x.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("factor.betaa"), std::string::npos) << e.what();
  }
}

TEST(LoadConfig, ParseErrorCarriesLineAndColumn) {
  try {
    parse_config("{\n  \"geometry\": {\n    \"kind\": \"ring\",,\n  }\n}", "broken.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json:3:"), std::string::npos) << e.what();
  }
}

TEST(LoadConfig, PhysicsKeysHaveNoSilentDefaults) {
  EXPECT_THROW(parse_config(R"({"geometry": {"kind": "ring", "grid": [64]}, "factor": {}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"kind": "ring"}, "factor": {"beta": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"kind": "spin_annulus", "r_in": 1, "r_out": 2, "grid": [16, 32]},
                                "factor": {"kind": "su2", "alpha": 1.0}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"kind": "spin_annulus", "r_in": 1, "r_out": 2, "grid": [16, 32]},
                                "factor": {"kind": "su2", "axis": [0, 0, 1]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"geometry": {"kind": "spin_annulus", "r_in": 1, "r_out": 2, "grid": [16, 32]},
                                "factor": {"kind": "su2", "alpha": 1.0, "axis": [0, 0, 2]}})"),
               ConfigError);
}

TEST(LoadConfig, PauliIncompatiblePotentialIsRejectedWithNorm) {
  const char* text = R"({
    "geometry": {"kind": "spin_annulus", "r_in": 1, "r_out": 2, "grid": [12, 16]},
    "factor": {"kind": "su2", "alpha": 1.5707963267948966, "axis": [0, 0, 1]},
    "potential": {"kind": "zeeman", "field": [1, 0, 0]}
  })";
  try {
    parse_config(text, "zeeman.json");
    FAIL();
  } catch (const AdmissibilityError& e) {
    EXPECT_NEAR(e.commutator_norm(), 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NE(std::string(e.what()).find("commutator norm"), std::string::npos);
  }
}

TEST(LoadConfig, ShippedScenariosParse) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++n;
  }
  EXPECT_EQ(n, 17u);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = scratch("checkpoint");
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 10, 16, GeometryKind::SpinAnnulus));
  CoveringWave psi = packet_wave(grid, su2_exp(0.7, {0, 0, 1}),
                                 PacketInit{{1.5, 1.0}, 0.2, 0.4, 0.3, 1.0, {Complex(0.6, 0), Complex(0, 0.8)}});
  psi.time = 0.123456789;
  write_checkpoint((dir / "w.cwave").string(), psi);
  CoveringWave back = make_wave(grid, psi.twist);
  const auto h = read_checkpoint((dir / "w.cwave").string(), back);
  EXPECT_EQ(h.n_r, 10u);
  EXPECT_EQ(h.n_theta, 16u);
  EXPECT_EQ(h.fiber_dim, 2u);
  EXPECT_EQ(back.time, psi.time);
  EXPECT_EQ(back.values, psi.values);
  EXPECT_EQ(fs::file_size(dir / "w.cwave"), 64u + 16u * 10u * 16u * 2u);
  const std::string raw = slurp(dir / "w.cwave");
  EXPECT_EQ(raw.substr(0, 7), "CWAVE01");
  const auto other = make_grid(Geometry::annulus(1.0, 2.0, 12, 16, GeometryKind::SpinAnnulus));
  CoveringWave wrong = make_wave(other, psi.twist);
  EXPECT_THROW(read_checkpoint((dir / "w.cwave").string(), wrong), Error);
}

TEST(Cli, AlgebraCheckOnS3) {
  const auto dir = scratch("s3");
  const auto r = cli("algebra-check --config '" + (kScenarios / "algebra_s3.json").string() + "' --out '" +
                         dir.string() + "'",
                     dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(dir / "report.txt");
  EXPECT_NE(report.find("character_count=2 pass"), std::string::npos) << report;
  EXPECT_NE(report.find("overall=pass"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_EQ(j.at("subcommand"), "algebra-check");
  EXPECT_TRUE(j.at("failures").empty());
}

TEST(Cli, SpectrumOnRingAtHalfFlux) {
  const auto dir = scratch("spectrum");
  const auto cfg = write_config(dir, R"({
    "geometry": {"kind": "ring", "grid": [512]},
    "factor": {"beta": 3.141592653589793},
    "numerics": {"spectrum_count": 4}
  })");
  const auto r = cli("spectrum --config '" + cfg.string() + "' --out '" + dir.string() + "'", dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  double lowest = -1.0;
  for (const auto& c : j.at("checks")) {
    if (c.at("name") == "lowest_energy") lowest = std::stod(c.at("value").get<std::string>());
  }
  EXPECT_NEAR(lowest, 0.125, 1e-4);
  const std::string csv = slurp(dir / "spectrum.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,energy,exact");
  EXPECT_EQ(count_lines(csv), 5u);
}

TEST(Cli, UnknownKeyExitsWithError) {
  const auto dir = scratch("unknown");
  const auto cfg = write_config(dir, R"({"geometry": {"kind": "ring", "grid": [64]}, "factor": {"betaa": 0.5}})");
  const auto r = cli("spectrum --config '" + cfg.string() + "' --out '" + dir.string() + "'", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("factor.betaa"), std::string::npos) << r.err;
}

TEST(Cli, InadmissibleScenarioReportsCommutator) {
  const auto dir = scratch("inadmissible");
  const auto cfg = write_config(dir, R"({
    "geometry": {"kind": "spin_annulus", "r_in": 1, "r_out": 2, "grid": [12, 16]},
    "factor": {"kind": "su2", "alpha": 1.5707963267948966, "axis": [0, 0, 1]},
    "potential": {"kind": "zeeman", "field": [0, 1, 0]}
  })");
  const auto r = cli("evolve --config '" + cfg.string() + "' --out '" + dir.string() + "'", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("commutator norm 2.828"), std::string::npos) << r.err;
}

TEST(Cli, MissingSubcommandOrConfigIsAUsageError) {
  const auto dir = scratch("usage");
  EXPECT_NE(cli("", dir).code, 0);
  EXPECT_NE(cli("spectrum", dir).code, 0);
  EXPECT_NE(cli("spectrum --config /nonexistent/file.json", dir).code, 0);
}

TEST(Cli, EvolveWritesSnapshotsAndCheckpoint) {
  const auto dir = scratch("evolve");
  const auto cfg = write_config(dir, R"({
    "geometry": {"kind": "ring", "grid": [128]},
    "factor": {"beta": 1.0471975511965976},
    "initial": {"kind": "packet", "center": [1.0], "width": [0.4], "momentum": [2.0]},
    "numerics": {"dt": 0.001, "t_final": 0.1, "times": [0.0, 0.05, 0.1]}
  })");
  const auto r = cli("evolve --config '" + cfg.string() + "' --out '" + dir.string() + "'", dir);
  EXPECT_EQ(r.code, 0) << r.err;
  for (const char* f : {"wave_0.csv", "wave_1.csv", "wave_2.csv", "wave_final.cwave", "report.txt", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string w = slurp(dir / "wave_2.csv");
  EXPECT_EQ(w.rfind("# time=0.1", 0), 0u) << w.substr(0, 40);
  EXPECT_NE(w.find("\nr,theta,re,im\n"), std::string::npos);
  EXPECT_EQ(count_lines(w), 5u + 128u);
  const std::string report = slurp(dir / "report.txt");
  EXPECT_NE(report.find("periodicity_preserved="), std::string::npos);
  EXPECT_NE(report.find("norm_drift="), std::string::npos);
}

TEST(Cli, TrajectoryDropAccountingAndThreadReproducibility) {
  const auto dir = scratch("traj");
  const auto cfg = write_config(dir, R"({
    "seed": 11,
    "geometry": {"kind": "annulus", "r_in": 1, "r_out": 2, "grid": [32, 32]},
    "factor": {"beta": 1.7},
    "initial": {"kind": "packet", "center": [1.5, 1.0], "width": [0.12, 0.5], "momentum": [0.0, 2.0]},
    "numerics": {"dt": 0.002, "t_final": 0.4, "record_every": 20}
  })");
  const fs::path a = dir / "a", b = dir / "b";
  // Exit 1 is allowed: only the drop budget may fail here.
  const int ca = cli("trajectories --config '" + cfg.string() + "' --out '" + a.string() + "' --n 300 --threads 1", dir).code;
  const int cb = cli("trajectories --config '" + cfg.string() + "' --out '" + b.string() + "' --n 300 --threads 8", dir).code;
  ASSERT_TRUE(ca == 0 || ca == 1);
  ASSERT_EQ(ca, cb);
  EXPECT_EQ(slurp(a / "trajectories.csv"), slurp(b / "trajectories.csv"));
  EXPECT_EQ(slurp(a / "final_positions.csv"), slurp(b / "final_positions.csv"));
  const auto j = nlohmann::json::parse(slurp(a / "report.json"));
  const auto dropped = j.at("values").at("dropped").get<std::size_t>();
  EXPECT_EQ(dropped + count_lines(slurp(a / "final_positions.csv")) - 1, 300u);
  for (const auto& c : j.at("checks")) {
    if (c.at("name") == "drop_accounting") {
      EXPECT_TRUE(c.at("pass").get<bool>());
    }
  }
}

TEST(Cli, TinyEquivarianceRunWarnsButReports) {
  const auto dir = scratch("tiny");
  const auto r = cli("equivariance --config '" + (kScenarios / "ring_beta_0.json").string() + "' --out '" +
                         dir.string() + "' --n 10 --t-final 0.2",
                     dir);
  EXPECT_TRUE(r.code == 0 || r.code == 1) << r.err;
  const std::string report = slurp(dir / "report.txt");
  EXPECT_NE(report.find("# warning: only 10 samples"), std::string::npos) << report;
  EXPECT_NE(report.find("equivariance_ks_t=0="), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(dir / "equivariance.json"));
  EXPECT_TRUE(fs::exists(dir / "histograms.csv"));
}

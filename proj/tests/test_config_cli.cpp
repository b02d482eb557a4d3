#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "graspsynth/cli.hpp"
#include "graspsynth/config.hpp"
#include "support/oracles.hpp"

using namespace graspsynth;
namespace fs = std::filesystem;

namespace {

const char* kTable1 = R"({
  "material": { "youngs_modulus_E": 1800 },
  "mechanism": {
    "beam": { "length_L": 40, "thickness_T": 1.2, "width_W": 5, "tilt_theta_deg": 7 },
    "n_beams": 12
  },
  "sweep": { "travel_max": 5, "n_samples": 500 },
  "design": {
    "target_force": 21.6, "target_travel": 5,
    "bounds": { "length_L": [35, 45], "thickness_T": [1.1, 1.3], "width_W": [4, 6],
                "tilt_theta_deg": [6, 8], "n_beams": [11, 13] },
    "grid": { "length_L": 3, "thickness_T": 3, "width_W": 3, "tilt_theta_deg": 3, "n_beams": 3 },
    "stress_limit": 100, "refine_max_evals": 40
  }
})";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("graspsynth_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return (path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

ConfigError::Kind parse_kind(const std::string& text, std::string* message = nullptr) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    if (message) *message = e.what();
    return e.kind;
  }
  FAIL("expected a config error");
  return ConfigError::Kind::Syntax;
}

bool angle_close(double a, double b) { return std::abs(a - b) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(b); }

}  // namespace

TEST_CASE("reference configuration parses with documented units") {
  const auto c = parse_config(kTable1);
  CHECK(c.mechanism.beam_geometry.length_L == 40.0);
  CHECK(c.mechanism.beam_geometry.thickness_T == 1.2);
  CHECK(c.mechanism.beam_geometry.width_W == 5.0);
  CHECK(c.mechanism.beam_geometry.tilt_theta == deg_to_rad(7.0));
  CHECK(c.mechanism.n_beams == 12);
  CHECK(c.material.youngs_modulus_E == 1800.0);
  CHECK(c.mechanism.material == c.material);
  CHECK(c.sweep.travel_max == 5.0);
  CHECK(c.mechanism.latch_travel == 8.0);
  CHECK(c.mechanism.jaw_calibration == default_jaw_calibration());
  REQUIRE(c.design.has_value());
  CHECK(c.design->spec.bounds.tilt_theta.max == deg_to_rad(8.0));
  CHECK_FALSE(c.fe.has_value());
  CHECK(c.output_dir == ".");
}

TEST_CASE("shipped configurations are valid") {
  for (const char* name : {"table1.json", "final_prototype.json"}) {
    const auto c = load_config(std::string(GRASPSYNTH_SOURCE_DIR) + "/configs/" + name);
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("config errors carry their kind and location") {
  std::string msg;
  CHECK(parse_kind("", &msg) == ConfigError::Kind::Schema);
  CHECK(msg.find("mechanism") != std::string::npos);
  CHECK(msg.find("material") != std::string::npos);

  std::string neg = kTable1;
  neg.replace(neg.find("\"thickness_T\": 1.2"), 18, "\"thickness_T\": -1");
  CHECK(parse_kind(neg, &msg) == ConfigError::Kind::Invariant);
  CHECK(msg.find("thickness_T must be > 0") != std::string::npos);

  std::string unknown = kTable1;
  unknown.replace(unknown.find("\"n_beams\": 12"), 13, "\"n_beams\": 12, \"colour\": 1");
  CHECK(parse_kind(unknown, &msg) == ConfigError::Kind::Schema);
  CHECK(msg.find("mechanism.colour") != std::string::npos);

  CHECK(parse_kind("{\n  \"material\": {,\n}", &msg) == ConfigError::Kind::Syntax);
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);

  CHECK(parse_kind(R"({"material": {"youngs_modulus_E": "hard"}, "mechanism": {}})", &msg) ==
        ConfigError::Kind::Schema);
  CHECK(parse_kind(R"({"material": {"youngs_modulus_E": 1800}, "mechanism": {"n_beams": 12}})", &msg) ==
        ConfigError::Kind::Schema);
  CHECK(msg.find("mechanism.beam") != std::string::npos);
  CHECK(parse_kind("[1, 2]") == ConfigError::Kind::Schema);
}

TEST_CASE("serialize then parse reproduces the configuration") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    RunConfig c;
    c.material.youngs_modulus_E = 500 + 3000 * u(rng);
    c.material.poisson_ratio = 0.45 * u(rng);
    c.mechanism.material = c.material;
    c.mechanism.beam_geometry =
        VBeamGeometry::from_degrees(20 + 40 * u(rng), 0.5 + u(rng), 2 + 6 * u(rng), 1 + 15 * u(rng));
    c.mechanism.n_beams = 1 + static_cast<int>(20 * u(rng));
    c.mechanism.series_stiffness_ks = 0.1 + 20 * u(rng);
    c.mechanism.latch_travel = 1 + 10 * u(rng);
    c.mechanism.jaw_calibration = {{1 + u(rng), 2 + u(rng)}, {3 + u(rng), 5 + u(rng)}};
    c.sweep.travel_max = 0.5 + 8 * u(rng);
    c.sweep.n_samples = 2 + static_cast<int>(1000 * u(rng));
    if (i % 2 == 0) {
      DesignSettings d;
      d.spec.material = c.material;
      d.spec.target_force = 1 + 30 * u(rng);
      d.spec.bounds = {{20, 50}, {0.5, 2}, {2, 8}, {deg_to_rad(2 + u(rng)), deg_to_rad(10 + u(rng))}, {4, 14}};
      d.spec.require_non_bistable_at_travel = u(rng) < 0.5;
      d.grid_cap = 12345;
      c.design = d;
    }
    if (i % 3 == 0) c.fe = FeSettings{8 + i % 20, 10 + i, 1e-9, 30, i % 2 == 0};
    c.output_dir = "out_" + std::to_string(i);
    REQUIRE_NOTHROW(c.validate());

    RunConfig back = parse_config(serialize_config(c));
    // Degrees on disk: allow the conversion round trip a few ulps.
    CHECK(angle_close(back.mechanism.beam_geometry.tilt_theta, c.mechanism.beam_geometry.tilt_theta));
    back.mechanism.beam_geometry.tilt_theta = c.mechanism.beam_geometry.tilt_theta;
    if (c.design) {
      auto& t = back.design->spec.bounds.tilt_theta;
      CHECK(angle_close(t.min, c.design->spec.bounds.tilt_theta.min));
      CHECK(angle_close(t.max, c.design->spec.bounds.tilt_theta.max));
      t = c.design->spec.bounds.tilt_theta;
    }
    CHECK(back == c);
  }
}

TEST_CASE("curve csv format") {
  TempDir dir;
  const CurveProvenance p{"t", std::nullopt, std::nullopt, 0};
  const ForceDisplacementCurve two({{0.5, 1.0, Branch::Monostable, 0.1, -1.0}, {1.0, 2.0}}, p);
  const auto file = dir.path / "two.csv";
  cli::write_curve_csv(two, 12, file.string());
  const auto text = slurp(file);
  CHECK(text ==
        "delta_y_mm,branch,f_o,p_o,force_single_N,force_ring_N\n"
        "0.5,Monostable,0.1,-1,0.5,6\n"
        "1,,,,1,12\n");

  const auto curve = force_curve(oracle::table1(), MaterialModel{}, 5.0, 500);
  cli::write_curve_csv(curve, 12, (dir.path / "a.csv").string());
  cli::write_curve_csv(curve, 12, (dir.path / "b.csv").string());
  CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));

  std::ifstream in(dir.path / "a.csv");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> tags;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto tag = line.substr(a + 1, line.find(',', a + 1) - a - 1);
    if (tags.empty() || tags.back() != tag) tags.push_back(tag);
  }
  CHECK(tags == std::vector<std::string>{"Monostable", "Bistable"});
  CHECK_THROWS_AS(cli::write_curve_csv(curve, 12, (dir.path / "missing" / "x.csv").string()), IoError);
}

TEST_CASE("single peak detection") {
  const CurveProvenance p{"t", std::nullopt, std::nullopt, 0};
  CHECK(cli::single_peak_then_decline(ForceDisplacementCurve({{1, 1}, {2, 3}, {3, 1}, {4, 0.1}}, p)));
  CHECK_FALSE(cli::single_peak_then_decline(ForceDisplacementCurve({{1, 1}, {2, 3}, {3, 1}, {4, 2}}, p)));
  CHECK_FALSE(cli::single_peak_then_decline(ForceDisplacementCurve({{1, 1}, {2, 3}, {3, 2}, {4, 1.5}}, p)));
  CHECK_FALSE(cli::single_peak_then_decline(ForceDisplacementCurve({{1, 1}, {2, 2}, {3, 3}}, p)));
}

TEST_CASE("curve subcommand writes the curve table") {
  TempDir dir;
  const auto cfg = dir.write("c.json", kTable1);
  const auto r = run({"curve", "--config", cfg, "--out", dir.path.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("18.108") != std::string::npos);
  CHECK(first_line(dir.path / "curve.csv") == "delta_y_mm,branch,f_o,p_o,force_single_N,force_ring_N");
}

TEST_CASE("sampling overrides and quiet mode") {
  TempDir dir;
  const auto cfg = dir.write("c.json", kTable1);
  const auto r = run({"d1", "--config", cfg, "--out", dir.path.string(), "--samples", "10", "--travel", "2", "--quiet"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const auto text = slurp(dir.path / "d1.csv");
  CHECK(text.rfind("delta_y_mm,d1,satisfied\n0.2,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  CHECK(text.find("\n2,") != std::string::npos);
}

TEST_CASE("usage errors exit 1 with usage on the diagnostic stream") {
  auto r = run({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("curve") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(run({}).code == 1);
  CHECK(run({"curve"}).code == 1);
  CHECK(run({"curve", "--config", "x.json", "--samples", "many"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("configuration failures exit 2 naming the stage") {
  TempDir dir;
  auto r = run({"curve", "--config", (dir.path / "absent.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("curve") != std::string::npos);

  std::string neg = kTable1;
  neg.replace(neg.find("\"thickness_T\": 1.2"), 18, "\"thickness_T\": -1");
  r = run({"grasper", "--config", dir.write("neg.json", neg)});
  CHECK(r.code == 2);
  CHECK(r.err.find("grasper") != std::string::npos);
  CHECK(r.err.find("thickness_T") != std::string::npos);

  r = run({"curve", "--config", dir.write("ok.json", kTable1), "--out", dir.path.string(), "--samples", "1"});
  CHECK(r.code == 2);

  std::string nodesign = kTable1;
  nodesign = nodesign.substr(0, nodesign.find(",\n  \"design\"")) + "\n}";
  r = run({"design", "--config", dir.write("nodesign.json", nodesign), "--out", dir.path.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("design") != std::string::npos);
}

TEST_CASE("verify writes the comparison report and its exit code follows the verdict") {
  TempDir dir;
  const auto cfg = dir.write("c.json", kTable1);
  const auto r = run({"verify", "--config", cfg, "--out", dir.path.string()});
  std::ifstream in(dir.path / "verify_report.csv");
  std::string header, primary, diagnostic;
  std::getline(in, header);
  std::getline(in, primary);
  std::getline(in, diagnostic);
  CHECK(header == "comparison,rms_rel,max_rel,peak_force_rel_diff,peak_location_diff_mm,points,pass");
  CHECK(primary.rfind("tebc_single_vs_fe,", 0) == 0);
  CHECK(diagnostic.rfind("tebc_double_vs_fe,", 0) == 0);
  const bool passed = primary.substr(primary.rfind(',') + 1) == "true";
  CHECK(r.code == (passed ? 0 : 3));
  if (!passed) CHECK(r.err.find("verify") != std::string::npos);
  CHECK(first_line(dir.path / "fe_path.csv") == "step,control_mm,reaction_N,iters,residual");
}

TEST_CASE("report is reproducible byte for byte") {
  TempDir a, b;
  const auto cfg = a.write("c.json", kTable1);
  const auto ra = run({"report", "--config", cfg, "--out", (a.path / "r").string(), "--quiet"});
  const auto rb = run({"report", "--config", cfg, "--out", (b.path / "r").string(), "--quiet"});
  CHECK(ra.code == rb.code);
  for (const char* f : {"curve.csv", "d1.csv", "design_ranked.csv", "design_refined.csv", "verify_report.csv",
                        "fe_path.csv", "grasper.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a.path / "r" / f));
    CHECK(slurp(a.path / "r" / f) == slurp(b.path / "r" / f));
  }
  CHECK(first_line(a.path / "r" / "grasper.csv") ==
        "ring_mm,shuttle_mm,ring_force_N,jaw_opening_mm,latch,jaw_root_stress_MPa");
  CHECK(first_line(a.path / "r" / "design_ranked.csv") ==
        "rank,L_mm,T_mm,W_mm,theta_deg,n_beams,peak_force_N,objective,violations");
}

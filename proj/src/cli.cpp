#include "graspsynth/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

namespace graspsynth::cli {

namespace {

namespace fs = std::filesystem;

std::string g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::string& destination) {
  std::ofstream os(destination, std::ios::binary);
  if (!os) throw IoError("cannot open " + destination + " for writing");
  return os;
}

void close_out(std::ofstream& os, const std::string& destination) {
  os.flush();
  if (!os) throw IoError("write failed for " + destination);
}

}  // namespace

void write_curve_csv(const ForceDisplacementCurve& curve, int n_beams, const std::string& destination) {
  if (n_beams < 1) throw ValidationError("curve csv: n_beams must be >= 1");
  auto os = open_out(destination);
  os << "delta_y_mm,branch,f_o,p_o,force_single_N,force_ring_N\n";
  for (const auto& s : curve.samples()) {
    const double single = s.force / 2.0;
    os << g9(s.delta_y) << ',' << (s.branch ? to_string(*s.branch) : std::string_view{}) << ','
       << (s.f_o ? g9(*s.f_o) : "") << ',' << (s.p_o ? g9(*s.p_o) : "") << ',' << g9(single) << ','
       << g9(single * n_beams) << '\n';
  }
  close_out(os, destination);
}

void write_d1_csv(const VBeamGeometry& geom, double travel_max, int n_samples,
                  const std::string& destination) {
  if (!(travel_max > 0.0) || n_samples < 2) throw ValidationError("d1 table: invalid sampling");
  auto os = open_out(destination);
  os << "delta_y_mm,d1,satisfied\n";
  for (int i = 1; i <= n_samples; ++i) {
    const double dy = travel_max * static_cast<double>(i) / n_samples;
    const auto m = bistability_margin(geom, dy);
    os << g9(dy) << ',' << g9(m.d1) << ',' << (m.satisfied ? "true" : "false") << '\n';
  }
  close_out(os, destination);
}

void write_grasper_csv(const MechanismConfig& config, int n_points, const std::string& destination) {
  if (n_points < 2) throw ValidationError("grasper table: n_points must be >= 2");
  config.validate();
  const double span = config.max_ring_travel();
  std::vector<GrasperResponse> rows(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double ring = i == n_points - 1 ? span : span * static_cast<double>(i) / (n_points - 1);
    rows[static_cast<std::size_t>(i)] = grasper_response(config, ring);
  }
  auto os = open_out(destination);
  os << "ring_mm,shuttle_mm,ring_force_N,jaw_opening_mm,latch,jaw_root_stress_MPa\n";
  for (int i = 0; i < n_points; ++i) {
    const double ring = i == n_points - 1 ? span : span * static_cast<double>(i) / (n_points - 1);
    const auto& r = rows[static_cast<std::size_t>(i)];
    os << g9(ring) << ',' << g9(r.shuttle_displacement) << ',' << g9(r.ring_force) << ','
       << g9(r.jaw_opening) << ',' << to_string(r.latch.phase) << ',' << g9(r.jaw_root_stress) << '\n';
  }
  close_out(os, destination);
}

bool single_peak_then_decline(const ForceDisplacementCurve& curve, double near_zero_fraction) {
  const auto s = curve.samples();
  if (s.size() < 3) return false;
  const PeakForce peak = peak_force(curve);
  if (!(peak.force > 0.0)) return false;
  const double slack = 1e-9 * peak.force;
  std::size_t ip = 0;
  while (s[ip].delta_y != peak.delta_y) ++ip;
  for (std::size_t i = 1; i <= ip; ++i) {
    if (s[i].force < s[i - 1].force - slack) return false;
  }
  for (std::size_t i = ip + 1; i < s.size(); ++i) {
    if (s[i].force > s[i - 1].force + slack) return false;
  }
  if (ip + 1 >= s.size()) return false;
  return std::abs(s.back().force) <= near_zero_fraction * peak.force;
}

VerifyOutcome verify_against_fe(const RunConfig& config, fe::EquilibriumPath* path_out) {
  const FeSettings fes = config.fe.value_or(FeSettings{});
  const auto& geom = config.mechanism.beam_geometry;
  const auto tebc = force_curve(geom, config.material, config.sweep.travel_max, config.sweep.n_samples);
  std::vector<CurveSample> halved(tebc.samples().begin(), tebc.samples().end());
  for (auto& s : halved) s.force /= 2.0;
  const ForceDisplacementCurve tebc_single(std::move(halved), CurveProvenance{"tebc-single", geom, config.material, 1});

  const auto mesh = fe::build_vbeam_mesh(geom, config.material, fes.n_elements);
  fe::EquilibriumPath path = fe::solve_guided_sweep(mesh, config.sweep.travel_max, fes.n_steps, fes.solver());
  const auto fe_curve = fe::path_to_curve(path);

  VerifyOutcome out;
  out.halved = fe::compare_curves(tebc_single, fe_curve);
  out.full = fe::compare_curves(tebc, fe_curve);
  out.single_peak_tebc = single_peak_then_decline(tebc_single);
  out.single_peak_fe = single_peak_then_decline(fe_curve);
  out.passed = out.halved.rms_rel <= kVerifyRmsRel &&
               out.halved.peak_location_diff <= kVerifyPeakLocation && out.single_peak_tebc &&
               out.single_peak_fe;
  if (path_out != nullptr) *path_out = std::move(path);
  return out;
}

void write_verify_report(const VerifyOutcome& o, const std::string& destination) {
  auto os = open_out(destination);
  os << "comparison,rms_rel,max_rel,peak_force_rel_diff,peak_location_diff_mm,points,pass\n";
  auto row = [&](const char* name, const fe::CurveComparison& c, bool pass) {
    os << name << ',' << g9(c.rms_rel) << ',' << g9(c.max_rel) << ',' << g9(c.peak_force_rel_diff) << ','
       << g9(c.peak_location_diff) << ',' << c.points << ',' << (pass ? "true" : "false") << '\n';
  };
  row("tebc_single_vs_fe", o.halved, o.passed);
  const bool full_pass = o.full.rms_rel <= kVerifyRmsRel && o.full.peak_location_diff <= kVerifyPeakLocation;
  row("tebc_double_vs_fe", o.full, full_pass);
  close_out(os, destination);
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<int> samples;
  std::optional<double> travel;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "JSON run configuration")->required();
  sub->add_option("--out", o.out_dir, "output directory (default: config output_dir)");
  sub->add_option("--samples", o.samples, "curve samples over the travel");
  sub->add_option("--travel", o.travel, "maximum shuttle travel [mm]");
  sub->add_flag("--quiet", o.quiet, "suppress summaries and warnings");
}

// Maps failures to exit codes, naming the stage that failed.
int guarded(const std::string& stage, std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "graspsynth " << stage << ": config: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError& e) {
    err << "graspsynth " << stage << ": invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const RangeError& e) {
    err << "graspsynth " << stage << ": out of range: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "graspsynth " << stage << ": numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "graspsynth " << stage << ": failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

struct Context {
  RunConfig config;
  fs::path out;
  bool quiet = false;
  std::ostream* log = nullptr;

  std::string file(const char* name) const { return (out / name).string(); }
  void say(const std::string& line) const {
    if (!quiet) *log << line << '\n';
  }
};

int cmd_curve(const Context& c) {
  const auto& m = c.config.mechanism;
  const auto curve = force_curve(m.beam_geometry, c.config.material, c.config.sweep.travel_max,
                                 c.config.sweep.n_samples);
  write_curve_csv(curve, m.n_beams, c.file("curve.csv"));
  const auto ring = aggregate_ring_force(curve, m.n_beams);
  const auto peak = peak_force(ring);
  c.say("curve: peak ring force " + g9(peak.force) + " N at " + g9(peak.delta_y) + " mm (" +
        std::to_string(m.n_beams) + " beams) -> " + c.file("curve.csv"));
  return kSuccess;
}

int cmd_d1(const Context& c) {
  const auto& g = c.config.mechanism.beam_geometry;
  write_d1_csv(g, c.config.sweep.travel_max, c.config.sweep.n_samples, c.file("d1.csv"));
  const auto cross = bistability_crossover(g);
  c.say("d1: sign change at " + (cross ? g9(*cross) + " mm" : std::string("none")) + " -> " +
        c.file("d1.csv"));
  return kSuccess;
}

int cmd_design(const Context& c) {
  if (!c.config.design) throw ConfigError(ConfigError::Kind::Schema, "missing required key design");
  const auto& d = *c.config.design;
  const auto grid = grid_search(d.spec, d.grid, d.grid_cap);
  write_candidates_csv(grid.ranked, c.file("design_ranked.csv"));
  if (grid.ranked.empty()) {
    c.say("design: no valid grid points");
    return kSuccess;
  }
  const auto refined = refine(d.spec, grid.ranked.front(), d.refine_max_evals);
  write_candidates_csv({refined.best}, c.file("design_refined.csv"));
  c.say("design: " + std::to_string(grid.ranked.size()) + " candidates; best objective " +
        g9(grid.ranked.front().objective) + ", refined " + g9(refined.best.objective) +
        (refined.exhausted ? " (evaluation budget exhausted)" : "") + " -> " + c.file("design_ranked.csv"));
  return kSuccess;
}

int cmd_verify(const Context& c) {
  fe::EquilibriumPath path;
  const auto outcome = verify_against_fe(c.config, &path);
  fe::write_path_csv(path, c.file("fe_path.csv"));
  write_verify_report(outcome, c.file("verify_report.csv"));
  c.say("verify: single-beam rms_rel " + g9(outcome.halved.rms_rel) + ", peak location diff " +
        g9(outcome.halved.peak_location_diff) + " mm; double-beam rms_rel " + g9(outcome.full.rms_rel) +
        " -> " + c.file("verify_report.csv"));
  if (!outcome.passed) {
    throw NumericalError("closed-form vs FE cross-check outside tolerance (rms_rel " +
                         g9(outcome.halved.rms_rel) + " > " + g9(kVerifyRmsRel) +
                         " or peak location diff " + g9(outcome.halved.peak_location_diff) + " > " +
                         g9(kVerifyPeakLocation) + " mm); see " + c.file("verify_report.csv"));
  }
  return kSuccess;
}

int cmd_grasper(const Context& c) {
  write_grasper_csv(c.config.mechanism, c.config.sweep.ring_points, c.file("grasper.csv"));
  c.say("grasper: " + std::to_string(c.config.sweep.ring_points) + " rows -> " + c.file("grasper.csv"));
  return kSuccess;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"graspsynth: bistable V-beam grasper design and verification"};
  app.require_subcommand(1);
  CommonOptions opts;
  using Handler = int (*)(const Context&);
  struct Sub {
    const char* name;
    const char* help;
    Handler handler;
  };
  const Sub subs[] = {
      {"curve", "force/travel curve and ring-force aggregate (curve.csv)", cmd_curve},
      {"d1", "bistability margin table over travel (d1.csv)", cmd_d1},
      {"design", "grid search plus pattern-search refinement (design_*.csv)", cmd_design},
      {"verify", "closed-form vs nonlinear FE cross-check (verify_report.csv, fe_path.csv)", cmd_verify},
      {"grasper", "whole-grasper response over ring displacement (grasper.csv)", cmd_grasper},
      {"report", "all of the above into --out", nullptr},
  };
  for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "graspsynth: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();

  Context ctx;
  ctx.quiet = opts.quiet;
  ctx.log = &out;
  int code = guarded(name, err, [&] {
    ctx.config = load_config(opts.config_path);
    if (opts.samples) ctx.config.sweep.n_samples = *opts.samples;
    if (opts.travel) ctx.config.sweep.travel_max = *opts.travel;
    ctx.config.validate();
    ctx.out = opts.out_dir.empty() ? fs::path(ctx.config.output_dir) : fs::path(opts.out_dir);
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec || !fs::is_directory(ctx.out))
      throw IoError("cannot create output directory " + ctx.out.string());
    return kSuccess;
  });
  if (code != kSuccess) return code == kNumericalFailure ? kConfigError : code;

  if (ctx.quiet) set_warning_sink({});

  int result = kSuccess;
  for (const auto& s : subs) {
    const bool selected = name == s.name || (name == "report" && s.handler != nullptr);
    if (!selected || s.handler == nullptr) continue;
    const int rc = guarded(s.name, err, [&] { return s.handler(ctx); });
    result = std::max(result, rc);
  }
  if (ctx.quiet) {
    set_warning_sink([](std::string_view msg) { std::clog << "warning: " << msg << '\n'; });
  }
  return result;
}

}  // namespace graspsynth::cli

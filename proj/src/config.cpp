#include "graspsynth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace graspsynth {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw ConfigError(ConfigError::Kind::Schema, msg); }

// Walks one JSON object, recording which keys were consumed so leftovers can
// be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) schema(where() + " must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key) {
    const json& v = take(key);
    if (!v.is_number()) schema(where(key) + " must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const json& v = take(key);
    if (!v.is_number_integer()) schema(where(key) + " must be an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = take(key);
    if (!v.is_boolean()) schema(where(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = take(key);
    if (!v.is_string()) schema(where(key) + " must be a string");
    return v.get<std::string>();
  }

  ObjectReader object(const std::string& key) { return ObjectReader(take(key), where(key)); }

  const json& raw(const std::string& key) { return take(key); }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "document" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void require(std::initializer_list<const char*> keys) const {
    std::vector<std::string> missing;
    for (const char* k : keys) {
      if (!has(k)) missing.emplace_back(k);
    }
    if (missing.empty()) return;
    std::string msg = where() + ": missing required key" + (missing.size() > 1 ? "s " : " ");
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + where(missing[i]);
    schema(msg);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) schema("unknown key " + where(it.key()));
    }
  }

 private:
  const json& take(const std::string& key) {
    if (!node_.contains(key)) schema("missing required key " + where(key));
    seen_.insert(key);
    return node_.at(key);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

ParamRange read_range(ObjectReader& r, const std::string& key, double scale = 1.0) {
  const json& v = r.raw(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    schema(r.where(key) + " must be a [min, max] pair of numbers");
  return {v[0].get<double>() * scale, v[1].get<double>() * scale};
}

int to_int(long long v, const std::string& where) {
  if (v < -2147483647LL || v > 2147483647LL) schema(where + " is out of integer range");
  return static_cast<int>(v);
}

MechanismConfig read_mechanism(ObjectReader r, const MaterialModel& material) {
  r.require({"beam", "n_beams"});
  MechanismConfig m;
  {
    ObjectReader b = r.object("beam");
    b.require({"length_L", "thickness_T", "width_W", "tilt_theta_deg"});
    m.beam_geometry = VBeamGeometry::from_degrees(b.number("length_L"), b.number("thickness_T"),
                                                  b.number("width_W"), b.number("tilt_theta_deg"));
    b.finish();
  }
  m.n_beams = to_int(r.integer("n_beams"), r.where("n_beams"));
  m.material = material;
  m.latch_travel = r.number("latch_travel", m.latch_travel);
  if (r.has("jaw_calibration")) {
    const json& v = r.raw("jaw_calibration");
    if (!v.is_array()) schema(r.where("jaw_calibration") + " must be an array of [trigger, jaw] pairs");
    m.jaw_calibration.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& p = v[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        schema(r.where("jaw_calibration") + "[" + std::to_string(i) + "] must be a [trigger, jaw] pair");
      m.jaw_calibration.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  m.series_stiffness_ks = r.number("series_stiffness_ks", m.series_stiffness_ks);
  if (r.has("jaw_section")) {
    ObjectReader s = r.object("jaw_section");
    m.jaw_section.out_of_plane_b = s.number("out_of_plane_b", m.jaw_section.out_of_plane_b);
    m.jaw_section.in_plane_h = s.number("in_plane_h", m.jaw_section.in_plane_h);
    m.jaw_section.jaw_length = s.number("jaw_length", m.jaw_section.jaw_length);
    s.finish();
  }
  m.overall_length_budget = r.number("overall_length_budget", m.overall_length_budget);
  m.latch_ramp_gain = r.number("latch_ramp_gain", m.latch_ramp_gain);
  m.latch_ramp_fraction = r.number("latch_ramp_fraction", m.latch_ramp_fraction);
  r.finish();
  return m;
}

DesignSettings read_design(ObjectReader r, const MaterialModel& material, const SweepSettings& sweep,
                           double default_budget) {
  r.require({"target_force", "target_travel", "bounds"});
  DesignSettings d;
  d.spec.material = material;
  d.spec.target_force = r.number("target_force");
  d.spec.target_travel = r.number("target_travel");
  {
    ObjectReader b = r.object("bounds");
    b.require({"length_L", "thickness_T", "width_W", "tilt_theta_deg", "n_beams"});
    d.spec.bounds.length_L = read_range(b, "length_L");
    d.spec.bounds.thickness_T = read_range(b, "thickness_T");
    d.spec.bounds.width_W = read_range(b, "width_W");
    d.spec.bounds.tilt_theta = read_range(b, "tilt_theta_deg", kPi / 180.0);
    const json& n = b.raw("n_beams");
    if (!n.is_array() || n.size() != 2 || !n[0].is_number_integer() || !n[1].is_number_integer())
      schema(b.where("n_beams") + " must be a [min, max] pair of integers");
    d.spec.bounds.n_beams = {to_int(n[0].get<long long>(), b.where("n_beams")),
                             to_int(n[1].get<long long>(), b.where("n_beams"))};
    b.finish();
  }
  if (r.has("grid")) {
    ObjectReader g = r.object("grid");
    d.grid.length_L = to_int(g.integer("length_L", d.grid.length_L), g.where("length_L"));
    d.grid.thickness_T = to_int(g.integer("thickness_T", d.grid.thickness_T), g.where("thickness_T"));
    d.grid.width_W = to_int(g.integer("width_W", d.grid.width_W), g.where("width_W"));
    d.grid.tilt_theta = to_int(g.integer("tilt_theta_deg", d.grid.tilt_theta), g.where("tilt_theta_deg"));
    d.grid.n_beams = to_int(g.integer("n_beams", d.grid.n_beams), g.where("n_beams"));
    g.finish();
  }
  d.spec.stress_limit = r.number("stress_limit", d.spec.stress_limit);
  d.spec.length_budget = r.number("length_budget", default_budget);
  d.spec.fixture_allowance = r.number("fixture_allowance", d.spec.fixture_allowance);
  d.spec.require_non_bistable_at_travel =
      r.boolean("require_non_bistable_at_travel", d.spec.require_non_bistable_at_travel);
  d.spec.curve_samples = to_int(r.integer("curve_samples", sweep.n_samples), r.where("curve_samples"));
  const long long cap = r.integer("grid_cap", static_cast<long long>(d.grid_cap));
  if (cap < 1) schema(r.where("grid_cap") + " must be >= 1");
  d.grid_cap = static_cast<std::uint64_t>(cap);
  d.refine_max_evals = to_int(r.integer("refine_max_evals", d.refine_max_evals), r.where("refine_max_evals"));
  r.finish();
  return d;
}

FeSettings read_fe(ObjectReader r) {
  FeSettings f;
  f.n_elements = to_int(r.integer("n_elements", f.n_elements), r.where("n_elements"));
  f.n_steps = to_int(r.integer("n_steps", f.n_steps), r.where("n_steps"));
  f.tolerance = r.number("tolerance", f.tolerance);
  f.max_iterations = to_int(r.integer("max_iterations", f.max_iterations), r.where("max_iterations"));
  f.arc_length_fallback = r.boolean("arc_length_fallback", f.arc_length_fallback);
  r.finish();
  return f;
}

std::string syntax_message(const json::parse_error& e, std::string_view text) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < stop; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::string detail = e.what();
  const auto pos = detail.find("syntax error");
  if (pos != std::string::npos) detail = detail.substr(pos);
  return "config syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
         ": " + detail;
}

}  // namespace

fe::SolverSettings FeSettings::solver() const {
  fe::SolverSettings s;
  s.tolerance = tolerance;
  s.max_iterations = max_iterations;
  s.arc_length_fallback = arc_length_fallback;
  return s;
}

void RunConfig::validate() const {
  material.validate();
  mechanism.validate();
  if (!(mechanism.material == material))
    throw ValidationError("config: mechanism material must match the top-level material");
  if (!(sweep.travel_max > 0.0)) throw ValidationError("sweep: travel_max must be > 0");
  if (sweep.n_samples < 2) throw ValidationError("sweep: n_samples must be >= 2");
  if (sweep.ring_points < 2) throw ValidationError("sweep: ring_points must be >= 2");
  if (design) {
    design->spec.validate();
    if (design->refine_max_evals < 0) throw ValidationError("design: refine_max_evals must be >= 0");
    const auto& g = design->grid;
    if (g.length_L < 1 || g.thickness_T < 1 || g.width_W < 1 || g.tilt_theta < 1 || g.n_beams < 1)
      throw ValidationError("design: grid counts must be >= 1");
  }
  if (fe) {
    if (fe->n_elements < 4) throw ValidationError("fe: n_elements must be >= 4");
    if (fe->n_steps < 1) throw ValidationError("fe: n_steps must be >= 1");
    if (!(fe->tolerance > 0.0)) throw ValidationError("fe: tolerance must be > 0");
    if (fe->max_iterations < 1) throw ValidationError("fe: max_iterations must be >= 1");
  }
  if (output_dir.empty()) throw ValidationError("config: output_dir must not be empty");
}

RunConfig parse_config(std::string_view text) {
  json doc;
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (blank) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      throw ConfigError(ConfigError::Kind::Syntax, syntax_message(e, text));
    }
  }

  RunConfig cfg;
  ObjectReader root(doc, "");
  root.require({"mechanism", "material"});
  {
    ObjectReader m = root.object("material");
    m.require({"youngs_modulus_E"});
    cfg.material.youngs_modulus_E = m.number("youngs_modulus_E");
    cfg.material.poisson_ratio = m.number("poisson_ratio", cfg.material.poisson_ratio);
    m.finish();
  }
  if (root.has("sweep")) {
    ObjectReader s = root.object("sweep");
    cfg.sweep.travel_max = s.number("travel_max", cfg.sweep.travel_max);
    cfg.sweep.n_samples = to_int(s.integer("n_samples", cfg.sweep.n_samples), s.where("n_samples"));
    cfg.sweep.ring_points = to_int(s.integer("ring_points", cfg.sweep.ring_points), s.where("ring_points"));
    s.finish();
  }
  cfg.mechanism = read_mechanism(root.object("mechanism"), cfg.material);
  if (root.has("design")) {
    cfg.design = read_design(root.object("design"), cfg.material, cfg.sweep,
                             cfg.mechanism.overall_length_budget);
  }
  if (root.has("fe")) cfg.fe = read_fe(root.object("fe"));
  cfg.output_dir = root.string("output_dir", cfg.output_dir);
  root.finish();

  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(ConfigError::Kind::Invariant, std::string("invariant violation: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  const auto& m = c.mechanism;
  json doc;
  doc["material"] = {{"youngs_modulus_E", c.material.youngs_modulus_E},
                     {"poisson_ratio", c.material.poisson_ratio}};
  json anchors = json::array();
  for (const auto& a : m.jaw_calibration) anchors.push_back({a.trigger_disp, a.jaw_disp});
  doc["mechanism"] = {
      {"beam",
       {{"length_L", m.beam_geometry.length_L},
        {"thickness_T", m.beam_geometry.thickness_T},
        {"width_W", m.beam_geometry.width_W},
        {"tilt_theta_deg", rad_to_deg(m.beam_geometry.tilt_theta)}}},
      {"n_beams", m.n_beams},
      {"latch_travel", m.latch_travel},
      {"jaw_calibration", anchors},
      {"series_stiffness_ks", m.series_stiffness_ks},
      {"jaw_section",
       {{"out_of_plane_b", m.jaw_section.out_of_plane_b},
        {"in_plane_h", m.jaw_section.in_plane_h},
        {"jaw_length", m.jaw_section.jaw_length}}},
      {"overall_length_budget", m.overall_length_budget},
      {"latch_ramp_gain", m.latch_ramp_gain},
      {"latch_ramp_fraction", m.latch_ramp_fraction},
  };
  doc["sweep"] = {{"travel_max", c.sweep.travel_max},
                  {"n_samples", c.sweep.n_samples},
                  {"ring_points", c.sweep.ring_points}};
  if (c.design) {
    const auto& d = *c.design;
    const auto& b = d.spec.bounds;
    doc["design"] = {
        {"target_force", d.spec.target_force},
        {"target_travel", d.spec.target_travel},
        {"bounds",
         {{"length_L", {b.length_L.min, b.length_L.max}},
          {"thickness_T", {b.thickness_T.min, b.thickness_T.max}},
          {"width_W", {b.width_W.min, b.width_W.max}},
          {"tilt_theta_deg", {rad_to_deg(b.tilt_theta.min), rad_to_deg(b.tilt_theta.max)}},
          {"n_beams", {b.n_beams.min, b.n_beams.max}}}},
        {"grid",
         {{"length_L", d.grid.length_L},
          {"thickness_T", d.grid.thickness_T},
          {"width_W", d.grid.width_W},
          {"tilt_theta_deg", d.grid.tilt_theta},
          {"n_beams", d.grid.n_beams}}},
        {"stress_limit", d.spec.stress_limit},
        {"length_budget", d.spec.length_budget},
        {"fixture_allowance", d.spec.fixture_allowance},
        {"require_non_bistable_at_travel", d.spec.require_non_bistable_at_travel},
        {"curve_samples", d.spec.curve_samples},
        {"grid_cap", d.grid_cap},
        {"refine_max_evals", d.refine_max_evals},
    };
  }
  if (c.fe) {
    doc["fe"] = {{"n_elements", c.fe->n_elements},
                 {"n_steps", c.fe->n_steps},
                 {"tolerance", c.fe->tolerance},
                 {"max_iterations", c.fe->max_iterations},
                 {"arc_length_fallback", c.fe->arc_length_fallback}};
  }
  doc["output_dir"] = c.output_dir;
  return doc.dump(2) + "\n";
}

}  // namespace graspsynth

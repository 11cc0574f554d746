#include "silfdtd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "silfdtd/analytic.hpp"
#include "silfdtd/error.hpp"
#include "silfdtd/io.hpp"

namespace silfdtd {

using nlohmann::json;

namespace {

void reject_unknown(const json& section, const std::string& where, std::initializer_list<const char*> keys) {
  if (!section.is_object()) fail(ErrorCategory::Config, "'" + where + "' must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [key, value] : section.items()) {
    if (!known.count(key)) fail(ErrorCategory::Config, "unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void take(const json& section, const char* key, T& out, const std::string& where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCategory::Config, "bad value for '" + where + "." + key + "'");
  }
}

Vec3 take_vec3(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) fail(ErrorCategory::Config, "'" + what + "' must be a 3-element array");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) fail(ErrorCategory::Config, "'" + what + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

Vec3 take_orientation(const json& v) {
  if (v.is_string()) {
    const auto o = analytic::parse_orientation(v.get<std::string>());
    if (!o.axis) fail(ErrorCategory::Config, "a simulated dipole needs a single axis, not 'isotropic'");
    return *o.axis;
  }
  return take_vec3(v, "scene.dipole_orientation");
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

RunConfig preset_config(const std::string& preset, GridLevel level) {
  RunConfig c;
  c.preset = preset;
  c.level = level;
  c.scene = scene_preset(preset);
  c.grid = preset_grid(preset, level);
  return c;
}

RunConfig parse_config(const std::string& json_text, RunConfig c) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::Config, std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "config", {"scene", "grid", "band", "objective", "simulation", "sweep", "outputs"});

  // Re-seeding from a preset or a level comes first so explicit keys win.
  std::string level_text;
  if (doc.contains("grid")) take(doc["grid"], "level", level_text, "grid");
  if (!level_text.empty()) c.level = parse_grid_level(level_text);
  if (doc.contains("scene") && doc["scene"].is_object() && doc["scene"].contains("preset")) {
    std::string name;
    take(doc["scene"], "preset", name, "scene");
    const RunConfig p = preset_config(name, c.level);
    c.preset = name;
    c.scene = p.scene;
    c.grid = p.grid;
  } else if (!level_text.empty()) {
    if (!c.preset.empty()) c.grid = preset_grid(c.preset, c.level);
    else c.grid.cell_size_um = cell_size_um(c.level);
  }

  if (doc.contains("scene")) {
    const json& s = doc["scene"];
    reject_unknown(s, "scene", {"preset", "geometry", "sil_radius_um", "trench_width_um", "dipole_depth_um",
                                "dipole_position_um", "dipole_orientation", "substrate_index", "ambient_index"});
    take(s, "geometry", c.scene.geometry, "scene");
    take(s, "sil_radius_um", c.scene.sil_radius_um, "scene");
    take(s, "trench_width_um", c.scene.trench_width_um, "scene");
    take(s, "dipole_depth_um", c.scene.dipole_depth_um, "scene");
    take(s, "substrate_index", c.scene.substrate_index, "scene");
    take(s, "ambient_index", c.scene.ambient_index, "scene");
    if (s.contains("dipole_position_um")) c.scene.dipole_position_um = take_vec3(s["dipole_position_um"], "scene.dipole_position_um");
    if (s.contains("dipole_orientation")) c.scene.dipole_orientation = take_orientation(s["dipole_orientation"]);
    if (!s.contains("preset") && s.contains("geometry")) c.preset.clear();
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    reject_unknown(g, "grid", {"level", "cell_size_um", "domain_extent_um", "z_floor_um", "pml_cells",
                               "courant_factor", "rasterization"});
    take(g, "cell_size_um", c.grid.cell_size_um, "grid");
    if (g.contains("domain_extent_um")) c.grid.domain_extent_um = take_vec3(g["domain_extent_um"], "grid.domain_extent_um");
    take(g, "z_floor_um", c.grid.z_floor_um, "grid");
    take(g, "pml_cells", c.grid.pml_cells, "grid");
    take(g, "courant_factor", c.grid.courant_factor, "grid");
    std::string r;
    take(g, "rasterization", r, "grid");
    if (r == "volume_average") c.grid.rasterization = Rasterization::VolumeAverage;
    else if (r == "staircase") c.grid.rasterization = Rasterization::Staircase;
    else if (!r.empty()) fail(ErrorCategory::Config, "grid.rasterization must be volume_average or staircase");
  }
  if (doc.contains("band")) {
    const json& b = doc["band"];
    reject_unknown(b, "band", {"min_nm", "max_nm", "samples"});
    take(b, "min_nm", c.band_min_nm, "band");
    take(b, "max_nm", c.band_max_nm, "band");
    take(b, "samples", c.band_samples, "band");
  }
  if (doc.contains("objective")) {
    reject_unknown(doc["objective"], "objective", {"na"});
    take(doc["objective"], "na", c.objective_na, "objective");
  }
  if (doc.contains("simulation")) {
    const json& s = doc["simulation"];
    reject_unknown(s, "simulation", {"workers", "stop", "steps", "energy_decay", "max_steps", "check_interval",
                                     "pulse_center_nm", "relative_bandwidth", "box_half_size_um",
                                     "plane_clearance_um", "map_wavelength_nm", "fft_padding", "fft_taper"});
    take(s, "workers", c.workers, "simulation");
    std::string stop;
    take(s, "stop", stop, "simulation");
    if (stop == "fixed") c.stop.mode = StopCriterion::Mode::FixedSteps;
    else if (stop == "decay") c.stop.mode = StopCriterion::Mode::EnergyDecay;
    else if (!stop.empty()) fail(ErrorCategory::Config, "simulation.stop must be fixed or decay");
    take(s, "steps", c.stop.steps, "simulation");
    take(s, "energy_decay", c.stop.energy_decay, "simulation");
    take(s, "max_steps", c.stop.max_steps, "simulation");
    take(s, "check_interval", c.stop.check_interval, "simulation");
    take(s, "pulse_center_nm", c.pulse.center_wavelength_nm, "simulation");
    take(s, "relative_bandwidth", c.pulse.relative_bandwidth, "simulation");
    take(s, "box_half_size_um", c.box_half_size_um, "simulation");
    take(s, "plane_clearance_um", c.plane_clearance_um, "simulation");
    take(s, "map_wavelength_nm", c.map_wavelength_nm, "simulation");
    take(s, "fft_padding", c.fft_padding, "simulation");
    take(s, "fft_taper", c.fft_taper, "simulation");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    reject_unknown(s, "sweep", {"axis", "offsets_um"});
    std::string axis;
    take(s, "axis", axis, "sweep");
    if (!axis.empty()) c.sweep.axis = parse_axis(axis);
    take(s, "offsets_um", c.sweep.offsets_um, "sweep");
  }
  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    reject_unknown(o, "outputs", {"directory", "formats"});
    std::string dir;
    take(o, "directory", dir, "outputs");
    if (!dir.empty()) c.output_directory = dir;
    take(o, "formats", c.formats, "outputs");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void RunConfig::validate() const {
  (void)build_scene(scene);  // geometry checks live with the scene
  if (!(grid.cell_size_um > 0.0)) fail(ErrorCategory::Config, "grid.cell_size_um must be positive");
  if (!(grid.domain_extent_um.minCoeff() > 0.0)) fail(ErrorCategory::Config, "grid.domain_extent_um must be positive");
  if (grid.pml_cells < 4) fail(ErrorCategory::Config, "grid.pml_cells must be at least 4");
  if (!(band_min_nm >= 400.0 && band_max_nm <= 1000.0 && band_max_nm >= band_min_nm)) {
    fail(ErrorCategory::Config, "band must satisfy 400 <= min_nm <= max_nm <= 1000");
  }
  if (band_samples < 1) fail(ErrorCategory::Config, "band.samples must be at least 1");
  if (!(objective_na > 0.0 && objective_na <= 1.0)) fail(ErrorCategory::Config, "objective.na must lie in (0, 1]");
  if (workers < 1) fail(ErrorCategory::Config, "simulation.workers must be at least 1");
  if (fft_padding < 1) fail(ErrorCategory::Config, "simulation.fft_padding must be at least 1");
  if (!(box_half_size_um > 0.0)) fail(ErrorCategory::Config, "simulation.box_half_size_um must be positive");
  if (stop.mode == StopCriterion::Mode::FixedSteps && stop.steps < 1) {
    fail(ErrorCategory::Config, "simulation.steps must be positive for a fixed-length run");
  }
  if (!(stop.energy_decay > 0.0 && stop.energy_decay < 1.0)) {
    fail(ErrorCategory::Config, "simulation.energy_decay must lie in (0, 1)");
  }
  if (!(map_wavelength_nm > 0.0)) fail(ErrorCategory::Config, "simulation.map_wavelength_nm must be positive");
  for (const auto& f : formats) {
    if (f != "csv" && f != "pgm") fail(ErrorCategory::Config, "outputs.formats entries must be csv or pgm");
  }
}

ScenarioSettings RunConfig::settings() const {
  ScenarioSettings s;
  s.grid = grid;
  s.wavelengths_nm = uniform_band(band_min_nm, band_max_nm, band_samples);
  s.na = objective_na;
  s.box_half_size_um = box_half_size_um;
  s.plane_clearance_um = plane_clearance_um;
  s.record_map = wants("pgm") || wants("csv");
  s.map_wavelength_nm = map_wavelength_nm;
  s.stop = stop;
  s.pulse = pulse;
  s.workers = workers;
  s.fft_padding = fft_padding;
  s.fft_taper = fft_taper;
  return s;
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::string RunConfig::canonical() const {
  json j;
  j["scene"] = {{"preset", preset},
                {"geometry", scene.geometry},
                {"sil_radius_um", scene.sil_radius_um},
                {"trench_width_um", scene.trench_width_um},
                {"dipole_depth_um", scene.dipole_depth_um},
                {"dipole_position_um", scene.dipole_position_um ? vec_json(*scene.dipole_position_um) : json()},
                {"dipole_orientation", vec_json(scene.dipole_orientation)},
                {"substrate_index", scene.substrate_index},
                {"ambient_index", scene.ambient_index}};
  j["grid"] = {{"level", to_string(level)},
               {"cell_size_um", grid.cell_size_um},
               {"domain_extent_um", vec_json(grid.domain_extent_um)},
               {"z_floor_um", grid.z_floor_um},
               {"pml_cells", grid.pml_cells},
               {"courant_factor", grid.courant_factor},
               {"rasterization", grid.rasterization == Rasterization::Staircase ? "staircase" : "volume_average"}};
  j["band"] = {{"min_nm", band_min_nm}, {"max_nm", band_max_nm}, {"samples", band_samples}};
  j["objective"] = {{"na", objective_na}};
  j["simulation"] = {{"stop", stop.mode == StopCriterion::Mode::FixedSteps ? "fixed" : "decay"},
                     {"steps", stop.steps},
                     {"energy_decay", stop.energy_decay},
                     {"max_steps", stop.max_steps},
                     {"check_interval", stop.check_interval},
                     {"pulse_center_nm", pulse.center_wavelength_nm},
                     {"relative_bandwidth", pulse.relative_bandwidth},
                     {"box_half_size_um", box_half_size_um},
                     {"plane_clearance_um", plane_clearance_um},
                     {"map_wavelength_nm", map_wavelength_nm},
                     {"fft_padding", fft_padding},
                     {"fft_taper", fft_taper}};
  j["sweep"] = {{"axis", to_string(sweep.axis)}, {"offsets_um", sweep.offsets_um}};
  return j.dump();
}

std::string RunConfig::hash() const { return io::fnv1a_hex(canonical()); }

}  // namespace silfdtd

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "silfdtd/analytic.hpp"
#include "silfdtd/config.hpp"
#include "silfdtd/confocal.hpp"
#include "silfdtd/error.hpp"
#include "silfdtd/farfield.hpp"
#include "silfdtd/io.hpp"
#include "silfdtd/photonstats.hpp"

namespace fs = std::filesystem;
using namespace silfdtd;

namespace {

constexpr const char* kArtifactRootEnv = "SILFDTD_ARTIFACT_ROOT";

// Relative output paths land under the artifact root when it is set.
fs::path resolve_output(const fs::path& out) {
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv(kArtifactRootEnv); root && *root) return fs::path(root) / out;
  return out;
}

std::string fmt(double v) { return io::format_number(v); }

std::string pm(const Estimate& e) { return fmt(e.value) + " +- " + fmt(e.sigma); }

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::string level;
  std::string out;
  int workers = 0;
  double resolution_nm = 0.0;
  int wavelength_samples = 0;
};

void add_run_options(CLI::App* app, RunOptions& o) {
  app->add_option("--config", o.config_path, "JSON run configuration");
  app->add_option("--preset", o.preset, "Named scenario (fig1a, fig1b, fig1c)");
  app->add_option("--grid", o.level, "Grid level: smoke (50 nm), default (25 nm), accurate (15 nm)");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--workers", o.workers, "Worker threads for the FDTD updates")->check(CLI::PositiveNumber);
  app->add_option("--resolution-nm", o.resolution_nm, "Cell size in nm (overrides the grid level)")
      ->check(CLI::PositiveNumber);
  app->add_option("--wavelength-samples", o.wavelength_samples, "Number of wavelengths across the band")
      ->check(CLI::PositiveNumber);
}

RunConfig assemble_config(const RunOptions& o) {
  const GridLevel level = o.level.empty() ? GridLevel::Default : parse_grid_level(o.level);
  RunConfig c;
  if (!o.preset.empty()) {
    c = preset_config(o.preset, level);
  } else {
    c.level = level;
    c.grid.cell_size_um = cell_size_um(level);
  }
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  if (o.config_path.empty() && o.preset.empty()) {
    fail(ErrorCategory::Config, "give --preset or --config");
  }
  if (!o.preset.empty() && !o.config_path.empty() && c.preset != o.preset) {
    fail(ErrorCategory::Config, "--preset disagrees with the config file's scene.preset");
  }
  if (!o.level.empty() && !c.preset.empty()) c.grid = preset_grid(c.preset, level);
  if (o.resolution_nm > 0.0) c.grid.cell_size_um = 1e-3 * o.resolution_nm;
  if (o.wavelength_samples > 0) c.band_samples = o.wavelength_samples;
  if (o.workers > 0) c.workers = o.workers;
  if (!o.out.empty()) {
    c.output_directory = o.out;
  } else if (o.config_path.empty()) {
    c.output_directory = fs::path("runs") / (c.preset.empty() ? "scenario" : c.preset);
  }
  c.validate();
  return c;
}

std::string scenario_name(const RunConfig& c) { return c.preset.empty() ? c.scene.geometry : c.preset; }

void write_eta_csv(const fs::path& path, const EfficiencyReport& r, const std::vector<std::string>& comments) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.eta.size(); ++i) {
    rows.push_back({r.wavelengths_nm[i], r.eta[i], r.total_power[i], r.collected_power[i],
                    r.over_unity[i] ? 1.0 : 0.0});
  }
  io::write_csv(path, comments, {"wavelength_nm", "eta", "total_power", "collected_power", "over_unity"}, rows);
}

void write_field_map(const fs::path& dir, const RunConfig& c, const ScenarioOutcome& o,
                     const std::vector<std::string>& comments) {
  if (o.field_map.size() == 0) return;
  std::ostringstream stem;
  stem << "fieldmap_" << fmt(c.map_wavelength_nm) << "nm";
  const double dx = o.report.grid.cell_size_um;
  std::vector<std::string> meta = comments;
  meta.push_back("plane: y-z through the dipole, |E|^2 normalised to 1");
  meta.push_back("y0_um: " + fmt(o.map_y0_um) + " z0_um: " + fmt(o.map_z0_um) + " cell_um: " + fmt(dx));
  if (c.wants("pgm")) {
    io::write_pgm(dir / (stem.str() + ".pgm"), o.field_map, 255, meta);
    io::write_pgm(dir / (stem.str() + "_16bit.pgm"), o.field_map, 65535, meta);
  }
  if (c.wants("csv")) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < o.field_map.rows(); ++r) {
      for (Eigen::Index col = 0; col < o.field_map.cols(); ++col) {
        rows.push_back({o.map_y0_um + dx * static_cast<double>(col), o.map_z0_um + dx * static_cast<double>(r),
                        o.field_map(r, col)});
      }
    }
    io::write_csv(dir / (stem.str() + ".csv"), meta, {"y_um", "z_um", "intensity"}, rows);
  }
}

std::string describe_grid(const GridSpec& g) {
  std::ostringstream s;
  s << "cell " << fmt(1e3 * g.cell_size_um) << " nm, interior " << fmt(g.domain_extent_um.x()) << " x "
    << fmt(g.domain_extent_um.y()) << " x " << fmt(g.domain_extent_um.z()) << " um, z from "
    << fmt(g.z_floor_um) << " um, " << g.pml_cells << " PML cells, Courant " << fmt(g.courant_factor);
  return s.str();
}

int cmd_simulate(const RunOptions& opts) {
  const RunConfig c = assemble_config(opts);
  const Scene scene = build_scene(c.scene);
  const fs::path dir = resolve_output(c.output_directory);
  io::ensure_directory(dir);
  const auto comments = io::provenance_comments(c.hash());

  std::cerr << "simulating " << scenario_name(c) << " (" << describe_grid(c.grid) << ")\n";
  const ScenarioOutcome o = evaluate_scenario(scene, c.settings(), scenario_name(c));
  const EfficiencyReport& r = o.report;
  write_eta_csv(dir / "eta.csv", r, comments);
  write_field_map(dir, c, o, comments);

  const double oracle = analytic_oracle(scene, c.objective_na);
  double worst = 0.0;
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "scenario: " << r.scenario << "\n";
  s << "geometry: " << to_string(scene.kind()) << "\n";
  s << "grid: " << describe_grid(r.grid) << "\n";
  s << "dipole_position_um: " << fmt(r.dipole_position_um.x()) << " " << fmt(r.dipole_position_um.y()) << " "
    << fmt(r.dipole_position_um.z()) << "\n";
  s << "dipole_orientation: " << fmt(r.dipole_orientation.x()) << " " << fmt(r.dipole_orientation.y()) << " "
    << fmt(r.dipole_orientation.z()) << "\n";
  s << "steps: " << r.steps << (o.stats.hit_step_cap ? " (step cap reached)" : "") << "\n";
  s << "final_energy_ratio: " << fmt(o.stats.final_energy_ratio) << "\n";
  s << "na: " << fmt(r.na) << "\n";
  s << "wavelength_nm eta_fdtd eta_analytic difference_pp\n";
  for (std::size_t i = 0; i < r.eta.size(); ++i) {
    const double d = 100.0 * (r.eta[i] - oracle);
    worst = std::max(worst, std::abs(d));
    s << fmt(r.wavelengths_nm[i]) << " " << fmt(r.eta[i]) << " " << fmt(oracle) << " " << fmt(d)
      << (r.over_unity[i] ? " over_unity" : "") << "\n";
  }
  s << "band_average_eta: " << fmt(r.band_average) << "\n";
  s << "analytic_oracle_eta: " << fmt(oracle) << "\n";
  s << "fdtd_over_analytic: " << fmt(r.band_average / oracle) << "\n";
  s << "max_abs_difference_pp: " << fmt(worst) << "\n";
  io::write_text(dir / "summary.txt", s.str());
  std::cout << s.str();
  std::cerr << "wrote " << dir.string() << "\n";
  return 0;
}

int cmd_sweep(const RunOptions& opts, const std::string& axis_text, const std::vector<double>& offsets) {
  RunConfig c = assemble_config(opts);
  if (!axis_text.empty()) c.sweep.axis = parse_axis(axis_text);
  if (!offsets.empty()) c.sweep.offsets_um = offsets;
  if (c.sweep.offsets_um.empty()) fail(ErrorCategory::Config, "sweep needs at least one offset");
  const Scene scene = build_scene(c.scene);
  const fs::path dir = resolve_output(c.output_directory);
  io::ensure_directory(dir);
  const auto comments = io::provenance_comments(c.hash());

  const auto points = displacement_sweep(scene, c.sweep.axis, c.sweep.offsets_um, c.settings(), scenario_name(c));
  std::vector<std::string> header = {"offset_um", "band_average"};
  for (double wl : points.front().report.wavelengths_nm) header.push_back("eta_" + fmt(wl) + "nm");
  std::vector<std::vector<double>> rows;
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "scenario: " << scenario_name(c) << "\naxis: " << to_string(c.sweep.axis) << "\n";
  s << "offset_um band_average_eta\n";
  for (const auto& p : points) {
    std::vector<double> row = {p.offset_um, p.band_average};
    row.insert(row.end(), p.report.eta.begin(), p.report.eta.end());
    rows.push_back(std::move(row));
    s << fmt(p.offset_um) << " " << fmt(p.band_average) << "\n";
  }
  io::write_csv(dir / "sweep.csv", comments, header, rows);
  io::write_text(dir / "summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_analytic(const std::string& geometry, const std::string& orientation_text, double na, double index,
                 int samples, const std::string& out) {
  const auto orientation = analytic::parse_orientation(orientation_text);
  double eta = 0.0;
  if (geometry == "planar") {
    eta = analytic::planar_collection_efficiency(orientation, na, index, samples);
  } else if (geometry == "sil" || geometry == "hemisphere" || geometry == "sil_trench") {
    eta = analytic::hemisphere_collection_efficiency(orientation, na, index, samples);
  } else {
    fail(ErrorCategory::Config, "geometry must be planar, sil or sil_trench");
  }
  std::ostringstream s;
  s << "geometry: " << geometry << "\norientation: " << analytic::describe(orientation) << "\nna: " << fmt(na)
    << "\nindex: " << fmt(index) << "\neta: " << fmt(eta) << "\n";
  std::cout << s.str();
  if (!out.empty()) {
    const fs::path dir = resolve_output(out);
    io::ensure_directory(dir);
    std::ostringstream key;
    key << geometry << "|" << analytic::describe(orientation) << "|" << fmt(na) << "|" << fmt(index) << "|" << samples;
    io::write_text(dir / "analytic.txt", "# " + io::provenance_comments(io::fnv1a_hex(key.str()))[0] + "\n# " +
                                             io::provenance_comments(io::fnv1a_hex(key.str()))[1] + "\n" + s.str());
  }
  return 0;
}

// Analysis subcommands hash the input file contents together with options.
std::string input_hash(const std::vector<fs::path>& inputs, const std::string& options) {
  std::string text = options;
  for (const auto& p : inputs) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text += "\n" + ss.str();
  }
  return io::fnv1a_hex(text);
}

fs::path analysis_dir(const std::string& out, const std::string& fallback) {
  const fs::path dir = resolve_output(out.empty() ? fs::path("runs") / fallback : fs::path(out));
  io::ensure_directory(dir);
  return dir;
}

int cmd_g2(const fs::path& input, double rho, double signal, double background, int window, const std::string& out) {
  if (rho <= 0.0) {
    if (signal > 0.0) rho = photonstats::signal_fraction(signal, background);
    else fail(ErrorCategory::Config, "give --rho or --signal/--background");
  }
  const io::CsvTable t = io::read_csv(input);
  io::require_columns(t, {"tau_ns", "c_norm"}, input);
  photonstats::G2Histogram h{t.column("tau_ns"), t.column("c_norm"), rho};
  const auto corrected = photonstats::background_correct_g2(h);
  const auto verdict = photonstats::classify_single_emitter(h.delays_ns, corrected, window);

  const auto comments = io::provenance_comments(
      input_hash({input}, "g2|" + fmt(rho) + "|" + std::to_string(window)));
  const fs::path dir = analysis_dir(out, "g2");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < corrected.size(); ++i) rows.push_back({h.delays_ns[i], h.coincidences[i], corrected[i]});
  io::write_csv(dir / "g2_corrected.csv", comments, {"tau_ns", "c_norm", "c_corrected"}, rows);
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "signal_fraction: " << fmt(rho) << "\nwindow_bins: " << window << "\nzero_delay_ns: "
    << fmt(h.delays_ns[verdict.zero_index]) << "\ndip_value: " << fmt(verdict.dip_value)
    << "\nthreshold: " << fmt(photonstats::kSingleEmitterThreshold)
    << "\nsingle_emitter: " << (verdict.is_single ? "yes" : "no") << "\n";
  io::write_text(dir / "g2_summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

photonstats::SaturationSeries read_saturation(const fs::path& path) {
  const io::CsvTable t = io::read_csv(path);
  io::require_columns(t, {"power_mw", "total_kcps", "background_kcps"}, path);
  return {t.column("power_mw"), t.column("total_kcps"), t.column("background_kcps")};
}

void describe_fit(std::ostream& s, const std::string& label, const photonstats::SaturationFit& f) {
  s << label << "_i_sat_kcps: " << pm(f.i_sat_kcps) << "\n"
    << label << "_p_sat_mw: " << pm(f.p_sat_mw) << "\n"
    << label << "_background_slope_kcps_per_mw: " << pm(f.background_slope) << "\n"
    << label << "_reduced_chi2: " << fmt(f.reduced_chi2) << "\n";
  if (!f.warning.empty()) s << label << "_warning: " << f.warning << "\n";
}

int cmd_saturation(const fs::path& input, const std::string& compare, const std::string& mode_text,
                   double ratio_power, const std::string& out) {
  photonstats::BackgroundMode mode = photonstats::BackgroundMode::Joint;
  if (mode_text == "prefit") mode = photonstats::BackgroundMode::Prefit;
  else if (mode_text != "joint") fail(ErrorCategory::Config, "--background-mode must be joint or prefit");

  std::vector<fs::path> inputs = {input};
  if (!compare.empty()) inputs.emplace_back(compare);
  const auto comments =
      io::provenance_comments(input_hash(inputs, "saturation|" + mode_text + "|" + fmt(ratio_power)));
  const fs::path dir = analysis_dir(out, "saturation");

  const auto series = read_saturation(input);
  const auto fit = photonstats::fit_saturation(series, mode);
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "mode: " << mode_text << "\n";
  describe_fit(s, "sample", fit);
  std::vector<std::vector<double>> rows = {{0.0, fit.i_sat_kcps.value, fit.i_sat_kcps.sigma, fit.p_sat_mw.value,
                                            fit.p_sat_mw.sigma, fit.background_slope.value,
                                            fit.background_slope.sigma, fit.reduced_chi2}};
  if (!compare.empty()) {
    const auto ref_series = read_saturation(compare);
    const auto ref = photonstats::fit_saturation(ref_series, mode);
    describe_fit(s, "reference", ref);
    rows.push_back({1.0, ref.i_sat_kcps.value, ref.i_sat_kcps.sigma, ref.p_sat_mw.value, ref.p_sat_mw.sigma,
                    ref.background_slope.value, ref.background_slope.sigma, ref.reduced_chi2});
    const Estimate e = photonstats::enhancement_factor(fit, ref);
    s << "enhancement_factor: " << pm(e) << "\n";
    double p = ratio_power;
    if (!(p > 0.0)) {
      // Highest power present in both series.
      p = std::min(series.powers_mw.back(), ref_series.powers_mw.back());
    }
    const double ratio = photonstats::background_ratio(ref_series, series, p);
    s << "background_ratio_reference_over_sample: " << fmt(ratio) << " at " << fmt(p) << " mW\n";
  }
  io::write_csv(dir / "saturation_fit.csv", comments,
                {"series", "i_sat_kcps", "i_sat_sigma", "p_sat_mw", "p_sat_sigma", "background_slope",
                 "background_slope_sigma", "reduced_chi2"},
                rows);
  io::write_text(dir / "saturation_summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_linescan(const fs::path& input, bool sil, double index, const std::string& out) {
  const io::CsvTable t = io::read_csv(input);
  if (t.header.size() == 3) io::require_columns(t, {"position_um", "counts", "uncertainty"}, input);
  else io::require_columns(t, {"position_um", "counts"}, input);
  confocal::LineScan scan{t.column("position_um"), t.column("counts"), {}};
  if (t.header.size() == 3) scan.uncertainties = t.column("uncertainty");
  confocal::ImagingContext ctx;
  ctx.sil_present = sil;
  ctx.medium_index = index;
  const auto fit = confocal::fit_gaussian_linescan(scan, ctx);

  const auto comments =
      io::provenance_comments(input_hash({input}, "linescan|" + std::string(sil ? "sil" : "bare") + "|" + fmt(index)));
  const fs::path dir = analysis_dir(out, "linescan");
  std::vector<std::vector<double>> rows = {
      {fit.amplitude.value, fit.amplitude.sigma, fit.center_um.value, fit.center_um.sigma, fit.sigma_um.value,
       fit.sigma_um.sigma, fit.offset.value, fit.offset.sigma, fit.fwhm_um.value, fit.fwhm_um.sigma,
       fit.real_fwhm_um ? fit.real_fwhm_um->value : fit.fwhm_um.value,
       fit.real_fwhm_um ? fit.real_fwhm_um->sigma : fit.fwhm_um.sigma, fit.reduced_chi2}};
  io::write_csv(dir / "linescan_fit.csv", comments,
                {"amplitude", "amplitude_sigma", "center_um", "center_sigma", "sigma_um", "sigma_sigma", "offset",
                 "offset_sigma", "fwhm_um", "fwhm_sigma", "real_fwhm_um", "real_fwhm_sigma", "reduced_chi2"},
                rows);
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "amplitude: " << pm(fit.amplitude) << "\ncenter_um: " << pm(fit.center_um) << "\nsigma_um: "
    << pm(fit.sigma_um) << "\noffset: " << pm(fit.offset) << "\nfwhm_nm: "
    << pm({1e3 * fit.fwhm_um.value, 1e3 * fit.fwhm_um.sigma}) << "\n";
  if (fit.real_fwhm_um) {
    s << "real_fwhm_nm: " << pm({1e3 * fit.real_fwhm_um->value, 1e3 * fit.real_fwhm_um->sigma}) << " (index "
      << fmt(index) << ")\n";
  }
  s << "reduced_chi2: " << fmt(fit.reduced_chi2) << "\nuncertainties: 1 sigma\n";
  io::write_text(dir / "linescan_summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_spectrum(const fs::path& input, double lo, double hi, double rate, const std::string& out) {
  const io::CsvTable t = io::read_csv(input);
  io::require_columns(t, {"wavelength_nm", "intensity"}, input);
  const photonstats::Spectrum spec{t.column("wavelength_nm"), t.column("intensity")};
  const double f = photonstats::band_fraction(spec, lo, hi);
  const auto comments =
      io::provenance_comments(input_hash({input}, "spectrum|" + fmt(lo) + "|" + fmt(hi) + "|" + fmt(rate)));
  const fs::path dir = analysis_dir(out, "spectrum");
  std::vector<std::vector<double>> rows = {{lo, hi, f, rate > 0.0 ? photonstats::projected_rate(rate, f) : 0.0}};
  io::write_csv(dir / "spectrum_band.csv", comments, {"band_min_nm", "band_max_nm", "fraction", "projected_rate"},
                rows);
  std::ostringstream s;
  for (const auto& line : comments) s << "# " << line << "\n";
  s << "band_nm: " << fmt(lo) << " " << fmt(hi) << "\nfraction: " << fmt(f) << "\n";
  if (rate > 0.0) s << "measured_rate: " << fmt(rate) << "\nprojected_rate: " << fmt(photonstats::projected_rate(rate, f)) << "\n";
  io::write_text(dir / "spectrum_summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_presets() {
  for (const auto& name : scene_preset_names()) {
    const Scene scene = build_scene(scene_preset(name));
    const GridSpec g = preset_grid(name, GridLevel::Default);
    std::cout << name << "  " << to_string(scene.kind());
    if (scene.kind() == GeometryKind::Planar) std::cout << ", dipole " << fmt(scene.top_z_um()) << " um deep";
    else std::cout << ", radius " << fmt(scene.sil_radius_um()) << " um";
    if (scene.kind() == GeometryKind::SilTrench) std::cout << ", trench " << fmt(scene.trench_width_um()) << " um";
    std::cout << ", interior " << fmt(g.domain_extent_um.x()) << " x " << fmt(g.domain_extent_um.y()) << " x "
              << fmt(g.domain_extent_um.z()) << " um\n";
  }
  std::cout << "grid levels: smoke 50 nm, default 25 nm, accurate 15 nm\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dipole collection efficiency under diamond surfaces, and the confocal analysis chain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);

  RunOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run one FDTD scenario and write efficiency artifacts");
  add_run_options(simulate, sim_opts);

  RunOptions sweep_opts;
  std::string sweep_axis;
  std::vector<double> sweep_offsets;
  auto* sweep = app.add_subcommand("sweep", "Displace the dipole along one axis and rerun");
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--axis", sweep_axis, "x, y or z");
  sweep->add_option("--offsets", sweep_offsets, "Offsets in um")->delimiter(',');

  std::string geometry = "sil", orientation = "x", analytic_out, analytic_preset;
  double na = 0.9, index = kDiamondIndex;
  int samples = analytic::kDefaultSamples;
  auto* an = app.add_subcommand("analytic-efficiency", "Ray-optics collection efficiency");
  an->add_option("--geometry", geometry, "planar, sil or sil_trench");
  an->add_option("--preset", analytic_preset, "Take the geometry from a preset");
  an->add_option("--orientation", orientation, "x, y, z, horizontal, vertical, isotropic or a,b,c");
  an->add_option("--na", na, "Objective numerical aperture");
  an->add_option("--index", index, "Substrate refractive index");
  an->add_option("--samples", samples, "Quadrature nodes in cos(theta)");
  an->add_option("--out", analytic_out, "Also write analytic.txt here");

  auto* analyze = app.add_subcommand("analyze", "Photon statistics and confocal fits");
  analyze->require_subcommand(1);
  std::string g2_in, g2_out;
  double rho = 0.0, signal = 0.0, background = 0.0;
  int window = photonstats::kDefaultDipWindowBins;
  auto* g2 = analyze->add_subcommand("g2", "Background-correct a g2 histogram (tau_ns,c_norm)");
  g2->add_option("input", g2_in)->required();
  g2->add_option("--rho", rho, "Signal fraction S/(S+B)");
  g2->add_option("--signal", signal, "Signal rate, with --background, to derive rho");
  g2->add_option("--background", background, "Background rate");
  g2->add_option("--window", window, "Dip search half-width in bins");
  g2->add_option("--out", g2_out, "Output directory");

  std::string sat_in, sat_cmp, sat_mode = "joint", sat_out;
  double sat_power = 0.0;
  auto* sat = analyze->add_subcommand("saturation", "Fit power_mw,total_kcps,background_kcps");
  sat->add_option("input", sat_in)->required();
  sat->add_option("--compare", sat_cmp, "Reference series (e.g. planar) for enhancement and background ratio");
  sat->add_option("--background-mode", sat_mode, "joint or prefit");
  sat->add_option("--power", sat_power, "Power for the background ratio (default: highest common power)");
  sat->add_option("--out", sat_out, "Output directory");

  std::string ls_in, ls_out;
  bool ls_sil = false;
  double ls_index = kDiamondIndex;
  auto* ls = analyze->add_subcommand("linescan", "Gaussian fit of position_um,counts[,uncertainty]");
  ls->add_option("input", ls_in)->required();
  ls->add_flag("--sil", ls_sil, "Scan taken through a lens: report the real-space FWHM");
  ls->add_option("--index", ls_index, "Lens refractive index");
  ls->add_option("--out", ls_out, "Output directory");

  std::string sp_in, sp_out;
  double band_lo = 630.0, band_hi = 700.0, rate = 0.0;
  auto* sp = analyze->add_subcommand("spectrum", "Fraction of wavelength_nm,intensity inside a filter band");
  sp->add_option("input", sp_in)->required();
  sp->add_option("--band-min", band_lo, "Band lower edge in nm");
  sp->add_option("--band-max", band_hi, "Band upper edge in nm");
  sp->add_option("--rate", rate, "Measured rate to project to the full spectrum");
  sp->add_option("--out", sp_out, "Output directory");

  bool list = false;
  auto* preset = app.add_subcommand("preset", "Named scenarios");
  preset->add_flag("--list", list, "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::Config);
  }

  try {
    if (*simulate) return cmd_simulate(sim_opts);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_axis, sweep_offsets);
    if (*an) {
      if (!analytic_preset.empty()) {
        const Scene scene = build_scene(scene_preset(analytic_preset));
        geometry = scene.kind() == GeometryKind::Planar ? "planar" : "sil";
        index = scene.substrate().refractive_index;
      }
      return cmd_analytic(geometry, orientation, na, index, samples, analytic_out);
    }
    if (*g2) return cmd_g2(g2_in, rho, signal, background, window, g2_out);
    if (*sat) return cmd_saturation(sat_in, sat_cmp, sat_mode, sat_power, sat_out);
    if (*ls) return cmd_linescan(ls_in, ls_sil, ls_index, ls_out);
    if (*sp) return cmd_spectrum(sp_in, band_lo, band_hi, rate, sp_out);
    if (*preset) return cmd_presets();
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

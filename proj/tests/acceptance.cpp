// Acceptance suite: one PASS/FAIL line per criterion.
//
// The FDTD criteria run at the grid level named by SILFDTD_ACCEPTANCE_GRID
// (smoke, default or accurate; smoke when unset). Tolerances are pinned
// below and printed next to each measured value.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "silfdtd/analytic.hpp"
#include "silfdtd/confocal.hpp"
#include "silfdtd/error.hpp"
#include "silfdtd/farfield.hpp"
#include "silfdtd/io.hpp"
#include "silfdtd/photonstats.hpp"

using namespace silfdtd;

namespace {

// Criterion 1: target 0.056, +-20% at 25 nm cells or finer, +-35% for
// the 2x coarser smoke grid.
constexpr double kPlanarTarget = 0.056;
constexpr double kPlanarTol = 0.20;
constexpr double kPlanarSmokeTol = 0.35;
// Criteria 2 and 3.
constexpr double kSilTarget = 0.298;
constexpr double kTrenchTarget = 0.286;
constexpr double kSilTol = 0.15;
constexpr double kTrenchGapMax = 0.02;
// Criterion 4.
constexpr double kOffsetUm = 1.0;
constexpr double kOffsetFloor = 0.18;
// Criterion 5, absolute per wavelength.
constexpr double kAnalyticGap = 0.03;
// Criterion 6.
constexpr double kNormalT = 0.8276;
constexpr double kNormalTTol = 1e-4;
constexpr double kIsotropic = 0.2334;
constexpr double kIsotropicTol = 1e-3;
constexpr double kSphereTol = 1e-6;
// Criterion 7.
constexpr double kPatternDev = 0.03;
constexpr double kPatternKMax = 0.8;
constexpr double kNestedTol = 0.02;
constexpr double kScaleTol = 1e-10;
// Criterion 8.
constexpr double kFwhmTol = 0.1;  // nm
// Criterion 9.
constexpr double kIdentityTol = 1e-12;
constexpr double kSatRefitTol = 1e-3;
constexpr double kRateTol = 1.0;  // kcps
// Criterion 10.
constexpr int kMcTrials = 100;
constexpr int kMcRequired = 90;
constexpr double kZ95 = 1.959963984540054;

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> g_lines;

void report(int id, bool pass, const std::string& detail) {
  g_lines.push_back({id, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << detail << std::endl;
}

// Runs a criterion body; an exception turns into a FAIL line.
void criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("error: ") + e.what());
  }
}

std::string f(double v) { return io::format_number(v); }

std::string within(double value, double lo, double hi) {
  return f(value) + " in [" + f(lo) + ", " + f(hi) + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GridLevel acceptance_level() {
  const char* env = std::getenv("SILFDTD_ACCEPTANCE_GRID");
  return env && *env ? parse_grid_level(env) : GridLevel::Smoke;
}

ScenarioSettings preset_settings(const std::string& preset, GridLevel level) {
  ScenarioSettings s;
  s.grid = preset_grid(preset, level);
  s.record_map = false;
  return s;
}

// Each preset runs once and is shared between criteria.
std::map<std::string, EfficiencyReport> g_reports;

const EfficiencyReport& preset_report(const std::string& preset, GridLevel level) {
  auto it = g_reports.find(preset);
  if (it != g_reports.end()) return it->second;
  const auto t0 = std::chrono::steady_clock::now();
  const Scene scene = build_scene(scene_preset(preset));
  EfficiencyReport r = evaluate_scenario(scene, preset_settings(preset, level), preset).report;
  std::cout << "      (" << preset << " at " << to_string(level) << ": " << r.steps << " steps, "
            << f(seconds_since(t0)) << " s)" << std::endl;
  return g_reports.emplace(preset, std::move(r)).first->second;
}

// Vacuum: a planar scene whose substrate matches the ambient.
Scene vacuum_scene() {
  SceneConfig c;
  c.geometry = "planar";
  c.substrate_index = 1.0;
  c.dipole_depth_um = 50.0;
  return build_scene(c);
}

MonitorSpec box_monitor(const std::string& name, double half, std::vector<double> wl) {
  MonitorSpec m;
  m.kind = MonitorKind::ClosedBox;
  m.name = name;
  m.wavelengths_nm = std::move(wl);
  m.box_half_size_um = Vec3::Constant(half);
  return m;
}

void criterion_planar(GridLevel level) {
  const EfficiencyReport& r = preset_report("fig1a", level);
  const double tol = level == GridLevel::Smoke ? kPlanarSmokeTol : kPlanarTol;
  const double lo = kPlanarTarget * (1 - tol), hi = kPlanarTarget * (1 + tol);
  report(1, r.band_average >= lo && r.band_average <= hi,
         "fig1a band eta " + within(r.band_average, lo, hi) + " (" + to_string(level) + " grid, +-" +
             f(100 * tol) + "%)");
}

void criterion_sil(GridLevel level) {
  const EfficiencyReport& r = preset_report("fig1b", level);
  const double lo = kSilTarget * (1 - kSilTol), hi = kSilTarget * (1 + kSilTol);
  report(2, r.band_average >= lo && r.band_average <= hi,
         "fig1b band eta " + within(r.band_average, lo, hi) + " (" + to_string(level) + " grid)");
}

void criterion_trench(GridLevel level) {
  const EfficiencyReport& b = preset_report("fig1b", level);
  const EfficiencyReport& c = preset_report("fig1c", level);
  const double lo = kTrenchTarget * (1 - kSilTol), hi = kTrenchTarget * (1 + kSilTol);
  const double gap = std::abs(b.band_average - c.band_average);
  report(3, c.band_average >= lo && c.band_average <= hi && gap <= kTrenchGapMax,
         "fig1c band eta " + within(c.band_average, lo, hi) + ", |fig1b - fig1c| = " + f(100 * gap) +
             " pp <= " + f(100 * kTrenchGapMax) + " pp");
}

void criterion_offsets(GridLevel level) {
  const Scene scene = build_scene(scene_preset("fig1c"));
  const ScenarioSettings settings = preset_settings("fig1c", level);
  bool ok = true;
  std::ostringstream detail;
  detail << "fig1c offset " << f(kOffsetUm) << " um:";
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pts = displacement_sweep(scene, axis, {kOffsetUm}, settings, "fig1c");
    const double eta = pts.front().band_average;
    std::cout << "      (offset along " << to_string(axis) << ": " << f(seconds_since(t0)) << " s)" << std::endl;
    ok = ok && eta >= kOffsetFloor;
    detail << " " << to_string(axis) << " " << f(eta);
  }
  detail << " (each >= " << f(kOffsetFloor) << ")";
  report(4, ok, detail.str());
}

void criterion_analytic_match(GridLevel level) {
  bool ok = true;
  std::ostringstream detail;
  detail << "max |FDTD - analytic| per wavelength (" << to_string(level) << " grid):";
  for (const std::string preset : {"fig1a", "fig1b"}) {
    const EfficiencyReport& r = preset_report(preset, level);
    const double oracle = analytic_oracle(build_scene(scene_preset(preset)), r.na);
    double worst = 0.0;
    for (double eta : r.eta) worst = std::max(worst, std::abs(eta - oracle));
    ok = ok && worst <= kAnalyticGap;
    detail << " " << preset << " " << f(100 * worst) << " pp (oracle " << f(oracle) << ")";
  }
  detail << ", limit " << f(100 * kAnalyticGap) << " pp";
  report(5, ok, detail.str());
}

void criterion_closed_form() {
  const double t = analytic::normal_transmission(kDiamondIndex, 1.0);
  const double iso =
      analytic::hemisphere_collection_efficiency(analytic::DipoleOrientation::isotropic(), 0.9, kDiamondIndex);
  // Dipole pattern over the whole sphere, for a few orientations.
  double worst = 0.0;
  for (const Eigen::Vector3d& p : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1),
                                   Eigen::Vector3d(1, -2, 0.5).normalized()}) {
    const double up = analytic::cone_integral(p, std::numbers::pi / 2, 1.0, 1.0, 256);
    const double down = analytic::cone_integral(-p, std::numbers::pi / 2, 1.0, 1.0, 256);
    worst = std::max(worst, std::abs(up + down - 1.0));
  }
  const bool ok = std::abs(t - kNormalT) <= kNormalTTol && std::abs(iso - kIsotropic) <= kIsotropicTol &&
                  worst <= kSphereTol;
  report(6, ok,
         "T(normal) " + f(t) + " vs " + f(kNormalT) + "+-" + f(kNormalTTol) + "; isotropic eta " + f(iso) + " vs " +
             f(kIsotropic) + "+-" + f(kIsotropicTol) + "; sphere integral error " + f(worst) + " <= " +
             f(kSphereTol));
}

// Normalised radiant intensity of a vacuum x dipole against 1 - (u.x)^2,
// which is sin^2 of the angle from the dipole axis.
double pattern_deviation() {
  const double wl = 700.0;
  GridSpec g;
  g.cell_size_um = 1e-3 * wl / 20.0;
  g.domain_extent_um = Vec3(12.0, 12.0, 2.0);
  g.z_floor_um = -1.0;
  MonitorSpec plane;
  plane.kind = MonitorKind::PlaneAbove;
  plane.name = "plane";
  plane.wavelengths_nm = {wl};
  plane.plane_z_um = 0.3;
  Simulation sim = build_simulation(vacuum_scene(), g, {}, {plane});
  const auto res = sim.run(StopCriterion::decay());
  // A cosine taper on the outer 40% keeps the edge truncation from ringing
  // across k-space.
  const auto sp = angular_spectrum(res[0], wl, 4, 0.4);
  const Eigen::ArrayXXd intensity = radiant_intensity(sp);
  const double peak = intensity(sp.size / 2, sp.size / 2);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < sp.size; ++r) {
    for (Eigen::Index c = 0; c < sp.size; ++c) {
      const double kx = sp.kx(c), ky = sp.ky(r);
      if (kx * kx + ky * ky > kPatternKMax * kPatternKMax) continue;
      worst = std::max(worst, std::abs(intensity(r, c) / peak - (1.0 - kx * kx)));
    }
  }
  return worst;
}

double nested_box_mismatch() {
  const std::vector<double> wl = uniform_band(600, 800, 5);
  GridSpec g;
  g.cell_size_um = 0.035;
  g.domain_extent_um = Vec3(2.4, 2.4, 2.4);
  g.z_floor_um = -1.2;
  Simulation sim = build_simulation(vacuum_scene(), g, {}, {box_monitor("inner", 0.2, wl), box_monitor("outer", 0.6, wl)});
  const auto res = sim.run(StopCriterion::decay());
  double worst = 0.0;
  for (double w : wl) {
    const double a = poynting_flux(res[0], w), b = poynting_flux(res[1], w);
    worst = std::max(worst, std::abs(a - b) / a);
  }
  return worst;
}

// Everything scaled by 3 (cell, domain, scene, wavelengths) must give the
// same efficiency. The scaled wavelengths leave the 600-800 nm band, so this
// goes through the monitors directly rather than the band-averaging pipeline.
double scale_mismatch() {
  auto eta = [](double s) {
    SceneConfig c = scene_preset("fig1b");
    c.sil_radius_um = 0.6 * s;
    const Scene scene = build_scene(c);
    GridSpec g;
    g.cell_size_um = 0.05 * s;
    g.domain_extent_um = Vec3(3.2, 3.2, 2.0) * s;
    g.z_floor_um = -0.6 * s;
    const std::vector<double> wl = {650 * s, 700 * s, 750 * s};
    DipoleSource src;
    src.pulse.center_wavelength_nm = 700 * s;
    MonitorSpec plane;
    plane.kind = MonitorKind::PlaneAbove;
    plane.name = "plane";
    plane.wavelengths_nm = wl;
    plane.plane_z_um = 0.9 * s;
    Simulation sim = build_simulation(scene, g, src, {plane, box_monitor("box", 0.2 * s, wl)});
    const auto res = sim.run(StopCriterion::fixed(500));
    std::vector<double> out;
    for (double w : wl) out.push_back(collection_efficiency(angular_spectrum(res[0], w), poynting_flux(res[1], w), 0.9));
    return out;
  };
  const auto a = eta(1.0), b = eta(3.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / a[i]);
  return worst;
}

bool worker_determinism() {
  auto run_with = [](int workers) {
    GridSpec g;
    g.cell_size_um = 0.05;
    g.domain_extent_um = Vec3(2.4, 2.4, 2.4);
    g.z_floor_um = -1.2;
    SceneConfig c = scene_preset("fig1b");
    c.sil_radius_um = 0.5;
    Simulation sim = build_simulation(build_scene(c), g, {}, {box_monitor("b", 0.3, {650, 750})});
    return sim.run(StopCriterion::fixed(400), workers);
  };
  const auto a = run_with(1), b = run_with(3);
  for (std::size_t i = 0; i < a[0].faces.size(); ++i) {
    const FluxFace &fa = a[0].faces[i], &fb = b[0].faces[i];
    for (std::size_t w = 0; w < 2; ++w) {
      if (!(fa.first.e[w] == fb.first.e[w]).all() || !(fa.first.h[w] == fb.first.h[w]).all() ||
          !(fa.second.e[w] == fb.second.e[w]).all() || !(fa.second.h[w] == fb.second.h[w]).all()) {
        return false;
      }
    }
  }
  return true;
}

void criterion_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const double pattern = pattern_deviation();
  const double nested = nested_box_mismatch();
  const double scaled = scale_mismatch();
  const bool same = worker_determinism();
  std::cout << "      (validation runs: " << f(seconds_since(t0)) << " s)" << std::endl;
  report(7, pattern <= kPatternDev && nested <= kNestedTol && scaled <= kScaleTol && same,
         "vacuum pattern max dev " + f(pattern) + " <= " + f(kPatternDev) + " (|k| <= " + f(kPatternKMax) +
             ", cell lambda/20); nested boxes " + f(nested) + " <= " + f(kNestedTol) + "; scale x3 " + f(scaled) +
             " <= " + f(kScaleTol) + "; 1 vs 3 workers " + (same ? "bit-identical" : "DIFFER"));
}

void criterion_confocal() {
  confocal::ImagingContext ctx;
  const double na = confocal::effective_na(ctx);
  const double fwhm = confocal::theoretical_fwhm(532.0, 2.178);
  const double real_fwhm = 1e3 * confocal::image_to_real(ctx, {0.289, 0.0}).lateral;
  const double image = confocal::real_to_image(ctx, {1.0, 0.0}).lateral;
  const double back = confocal::image_to_real(ctx, {image, 0.0}).lateral;
  const bool ok = na == 0.9 * 2.42 && std::abs(na - 2.178) < 1e-12 && std::abs(fwhm - 90.4) <= kFwhmTol &&
                  std::abs(real_fwhm - 119.4) <= kFwhmTol && image == 2.42 && back == 1.0;
  report(8, ok,
         "NA " + f(na) + "; FWHM(532, 2.178) " + f(fwhm) + " nm; real(289 nm) " + f(real_fwhm) + " nm; 1 um -> " +
             f(image) + " um -> " + f(back) + " um");
}

void criterion_photonstats() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  double identity = 0.0, inversion = 0.0;
  std::vector<double> tau(64), corrected(64);
  for (int i = 0; i < 64; ++i) {
    tau[i] = i - 32;
    corrected[i] = u(rng);
  }
  const auto same = photonstats::background_correct_g2({tau, corrected, 1.0});
  for (int i = 0; i < 64; ++i) identity = std::max(identity, std::abs(same[i] - corrected[i]));
  for (double rho : {0.25, 0.6, 0.8, 0.95}) {
    const auto back = photonstats::background_correct_g2({tau, photonstats::apply_background_g2(corrected, rho), rho});
    for (int i = 0; i < 64; ++i) inversion = std::max(inversion, std::abs(back[i] - corrected[i]));
  }

  auto series = [](double i_sat, double p_sat, double b) {
    photonstats::SaturationSeries s;
    for (int i = 1; i <= 10; ++i) {
      const double p = 0.5 * i;
      s.powers_mw.push_back(p);
      s.total_kcps.push_back(i_sat * p / (p + p_sat) + b * p);
      s.background_kcps.push_back(b * p);
    }
    return s;
  };
  const auto fit = photonstats::fit_saturation(series(345.0, 1.0, 5.0));
  const double refit = std::max({std::abs(fit.i_sat_kcps.value / 345.0 - 1), std::abs(fit.p_sat_mw.value - 1.0),
                                 std::abs(fit.background_slope.value / 5.0 - 1)});
  const auto planar = photonstats::fit_saturation(series(34.5, 1.0, 15.0));
  const double enh = photonstats::enhancement_factor(fit, planar).value;

  const photonstats::Spectrum flat{{600, 650, 700, 750, 800}, {1, 1, 1, 1, 1}};
  const double frac = photonstats::band_fraction(flat, 630, 700);
  const double rate = photonstats::projected_rate(345.0, 0.70);

  const bool ok = identity <= kIdentityTol && inversion <= kIdentityTol && refit <= kSatRefitTol &&
                  std::abs(enh - 10.0) < 0.05 && frac == 0.35 && std::abs(rate - 493.0) <= kRateTol;
  report(9, ok,
         "g2 identity " + f(identity) + ", inversion " + f(inversion) + " (<= 1e-12); saturation refit " + f(refit) +
             " (<= 0.1%); enhancement " + f(enh) + "; band fraction " + f(frac) + "; projected " + f(rate) +
             " kcps");
}

void criterion_monte_carlo() {
  std::mt19937_64 rng(12345);
  const double sigma = 0.12, amplitude = 1000.0, offset = 50.0;
  int covered = 0;
  for (int trial = 0; trial < kMcTrials; ++trial) {
    confocal::LineScan scan;
    std::normal_distribution<double> noise(0.0, 0.05 * amplitude);
    for (int i = 0; i < 41; ++i) {
      const double x = -0.6 + 1.2 * i / 40.0;
      const double d = x / sigma;
      scan.positions_um.push_back(x);
      scan.counts.push_back(std::max(0.0, amplitude * std::exp(-0.5 * d * d) + offset + noise(rng)));
    }
    const auto fit = confocal::fit_gaussian_linescan(scan);
    if (std::abs(fit.sigma_um.value - sigma) <= kZ95 * fit.sigma_um.sigma) ++covered;
  }
  report(10, covered >= kMcRequired,
         std::to_string(covered) + "/" + std::to_string(kMcTrials) + " trials cover the true sigma (need >= " +
             std::to_string(kMcRequired) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  // Optional list of criterion numbers to run, e.g. "acceptance 6 8 9".
  // --known-failure=N keeps criterion N's FAIL line but leaves it out of the exit code.
  std::vector<int> only, known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string flag = "--known-failure=";
    if (arg.rfind(flag, 0) == 0)
      known.push_back(std::atoi(arg.c_str() + flag.size()));
    else
      only.push_back(std::atoi(argv[i]));
  }
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  GridLevel level = GridLevel::Smoke;
  try {
    level = acceptance_level();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::cout << "acceptance grid: " << to_string(level) << " (" << f(1e3 * cell_size_um(level)) << " nm cells)"
            << std::endl;

  if (wanted(6)) criterion(6, criterion_closed_form);
  if (wanted(8)) criterion(8, criterion_confocal);
  if (wanted(9)) criterion(9, criterion_photonstats);
  if (wanted(10)) criterion(10, criterion_monte_carlo);
  if (wanted(7)) criterion(7, criterion_validation);
  if (wanted(1)) criterion(1, [&] { criterion_planar(level); });
  if (wanted(2)) criterion(2, [&] { criterion_sil(level); });
  if (wanted(3)) criterion(3, [&] { criterion_trench(level); });
  if (wanted(5)) criterion(5, [&] { criterion_analytic_match(level); });
  if (wanted(4)) criterion(4, [&] { criterion_offsets(level); });

  int failed = 0, excused = 0;
  for (const auto& l : g_lines) {
    if (l.pass) continue;
    ++failed;
    if (std::find(known.begin(), known.end(), l.id) != known.end()) ++excused;
  }
  std::cout << "summary: " << g_lines.size() - failed << " passed, " << failed << " failed";
  if (excused > 0) std::cout << " (" << excused << " listed as known failures)";
  std::cout << std::endl;
  return failed == excused ? 0 : 1;
}

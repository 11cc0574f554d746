#include "silfdtd/farfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "silfdtd/analytic.hpp"
#include "silfdtd/error.hpp"

namespace silfdtd {

namespace {

int next_pow2(int n) {
  int m = 1;
  while (m < n) m <<= 1;
  return m;
}

/// In-place 2D forward FFT of a square array.
void fft2(ComplexArray& a) {
  Eigen::FFT<double> fft;
  const Eigen::Index m = a.rows();
  std::vector<Complex> in(m), out(m);
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < m; ++r) in[r] = a(r, c);
    fft.fwd(out, in);
    for (Eigen::Index r = 0; r < m; ++r) a(r, c) = out[r];
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) in[c] = a(r, c);
    fft.fwd(out, in);
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = out[c];
  }
}

// Tukey window sample; `edge` is the taper length in samples.
double tukey(Eigen::Index i, Eigen::Index n, double edge) {
  if (edge <= 0.0) return 1.0;
  const double d = std::min(static_cast<double>(i) + 0.5, static_cast<double>(n - i) - 0.5);
  if (d >= edge) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * d / edge));
}

ComplexArray padded_transform(const ComplexArray& data, int size, double taper_fraction) {
  ComplexArray a = ComplexArray::Zero(size, size);
  a.topLeftCorner(data.rows(), data.cols()) = data;
  if (taper_fraction > 0.0) {
    const double er = taper_fraction * static_cast<double>(data.rows());
    const double ec = taper_fraction * static_cast<double>(data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      for (Eigen::Index r = 0; r < data.rows(); ++r) {
        a(r, c) *= tukey(r, data.rows(), er) * tukey(c, data.cols(), ec);
      }
    }
  }
  fft2(a);
  return a;
}

}  // namespace

AngularPowerSpectrum angular_spectrum(const SpectralMonitorResult& plane, double wavelength_nm,
                                      int min_padding, double taper_fraction) {
  if (plane.kind != MonitorKind::PlaneAbove || plane.faces.size() != 1) {
    fail(ErrorCategory::Domain, "angular spectrum needs a PlaneAbove monitor");
  }
  if (!plane.homogeneous) {
    fail(ErrorCategory::Domain, "plane monitor is not in a homogeneous region");
  }
  if (!(taper_fraction >= 0.0 && taper_fraction < 0.5)) {
    fail(ErrorCategory::Config, "taper fraction must lie in [0, 0.5)");
  }
  const int w = plane.wavelength_index(wavelength_nm);
  const FluxFace& face = plane.faces.front();
  const int extent = static_cast<int>(std::max({face.first.weight.rows(), face.first.weight.cols(),
                                                face.second.weight.rows(), face.second.weight.cols()}));
  const int size = next_pow2(std::max(2, min_padding) * extent);

  Eigen::ArrayXXd raw = Eigen::ArrayXXd::Zero(size, size);
  for (const FluxPair* pair : {&face.first, &face.second}) {
    const ComplexArray e_hat = padded_transform(pair->e[w], size, taper_fraction);
    const ComplexArray h_hat = padded_transform(pair->h[w], size, taper_fraction);
    raw += pair->sign * 0.5 * (e_hat * h_hat.conjugate()).real();
  }
  const double dx = plane.cell_size_um;
  raw *= face.outward * dx * dx / (static_cast<double>(size) * size);

  AngularPowerSpectrum spectrum;
  spectrum.wavelength_nm = wavelength_nm;
  spectrum.size = size;
  spectrum.k_step = 1e-3 * wavelength_nm / (size * dx);
  spectrum.medium_index = plane.medium_index;
  spectrum.density = Eigen::ArrayXXd::Zero(size, size);
  const double limit2 = plane.medium_index * plane.medium_index;
  // Rows of `raw` follow the monitor's x axis; the spectrum stores ky by row.
  for (int a = 0; a < size; ++a) {
    const int col = (a + size / 2) % size;  // kx index after the shift
    for (int b = 0; b < size; ++b) {
      const int row = (b + size / 2) % size;
      const double kx = spectrum.kx(col), ky = spectrum.ky(row);
      if (kx * kx + ky * ky > limit2) continue;
      const double p = raw(a, b);
      if (p < 0.0) {
        spectrum.clipped_power += p;
        continue;
      }
      spectrum.density(row, col) = p;
    }
  }
  return spectrum;
}

Eigen::ArrayXXd radiant_intensity(const AngularPowerSpectrum& spectrum) {
  const double n = spectrum.medium_index;
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(spectrum.size, spectrum.size);
  const double dk2 = spectrum.k_step * spectrum.k_step;
  for (Eigen::Index r = 0; r < spectrum.size; ++r) {
    for (Eigen::Index c = 0; c < spectrum.size; ++c) {
      const double s2 = (spectrum.kx(c) * spectrum.kx(c) + spectrum.ky(r) * spectrum.ky(r)) / (n * n);
      if (s2 >= 1.0) continue;
      out(r, c) = spectrum.density(r, c) * n * n * std::sqrt(1.0 - s2) / dk2;
    }
  }
  return out;
}

double collection_efficiency(const AngularPowerSpectrum& spectrum, double total_power, double na) {
  if (!(total_power > 0.0)) fail(ErrorCategory::Domain, "total radiated power must be positive");
  if (!(na > 0.0) || na > spectrum.medium_index) {
    fail(ErrorCategory::Config, "numerical aperture must lie in (0, n]");
  }
  double collected = 0.0;
  const double na2 = na * na;
  for (Eigen::Index r = 0; r < spectrum.size; ++r) {
    const double ky = spectrum.ky(r);
    for (Eigen::Index c = 0; c < spectrum.size; ++c) {
      const double kx = spectrum.kx(c);
      if (kx * kx + ky * ky <= na2) collected += spectrum.density(r, c);
    }
  }
  const double eta = collected / total_power;
  if (eta > 1.0 + kEfficiencyTolerance) {
    fail(ErrorCategory::Domain, "collection efficiency " + std::to_string(eta) + " exceeds unity");
  }
  return eta;
}

double band_average(const std::vector<std::pair<double, double>>& etas) {
  if (etas.empty()) fail(ErrorCategory::Domain, "band average of an empty list");
  double sum = 0.0;
  for (const auto& [wl, eta] : etas) {
    if (wl < 600.0 - 1e-9 || wl > 800.0 + 1e-9) {
      fail(ErrorCategory::Domain, "wavelength outside the 600-800 nm band");
    }
    sum += eta;
  }
  return sum / static_cast<double>(etas.size());
}

std::vector<double> uniform_band(double min_nm, double max_nm, int samples) {
  if (samples < 1) fail(ErrorCategory::Config, "band needs at least one sample");
  if (!(max_nm >= min_nm)) fail(ErrorCategory::Config, "band maximum must not be below minimum");
  if (samples == 1) return {0.5 * (min_nm + max_nm)};
  std::vector<double> out(samples);
  for (int i = 0; i < samples; ++i) out[i] = min_nm + (max_nm - min_nm) * i / (samples - 1);
  return out;
}

GridLevel parse_grid_level(const std::string& text) {
  if (text == "smoke") return GridLevel::Smoke;
  if (text == "default") return GridLevel::Default;
  if (text == "accurate") return GridLevel::Accurate;
  fail(ErrorCategory::Config, "unknown grid level '" + text + "' (smoke, default, accurate)");
}

std::string to_string(GridLevel level) {
  switch (level) {
    case GridLevel::Smoke: return "smoke";
    case GridLevel::Default: return "default";
    case GridLevel::Accurate: return "accurate";
  }
  return "?";
}

double cell_size_um(GridLevel level) {
  switch (level) {
    case GridLevel::Smoke: return 0.05;
    case GridLevel::Default: return 0.025;
    case GridLevel::Accurate: return 0.015;
  }
  return 0.025;
}

GridSpec preset_grid(const std::string& preset, GridLevel level) {
  (void)scene_preset(preset);  // rejects unknown names
  GridSpec grid;
  grid.cell_size_um = cell_size_um(level);
  // The plane sits 0.4 um above the 2.5 um apex; a 64 degree ray from the
  // centre reaches it about 6 um off axis.
  const double lateral = preset == "fig1a" ? 6.0 : 13.0;
  grid.domain_extent_um = Vec3(lateral, lateral, 4.4);
  grid.z_floor_um = -1.0;
  return grid;
}

GridSpec fit_grid_to_scene(const GridSpec& grid, const Scene& scene, const ScenarioSettings& settings) {
  GridSpec out = grid;
  const double dx = grid.cell_size_um;
  const double margin = std::max(0.2, 4.0 * dx);
  const double lambda_max = *std::max_element(settings.wavelengths_nm.begin(), settings.wavelengths_nm.end());
  const double clearance = settings.plane_clearance_um >= 0.0 ? settings.plane_clearance_um : 0.5e-3 * lambda_max;
  const double bottom_needed = scene.dipole_position_um().z() - settings.box_half_size_um - margin;
  const double top_needed = std::max(scene.top_z_um() + clearance,
                                     scene.dipole_position_um().z() + settings.box_half_size_um) + margin;
  double floor = out.z_floor_um;
  double top = out.z_floor_um + out.domain_extent_um.z();
  if (bottom_needed < floor) floor = dx * std::floor(bottom_needed / dx);
  if (top_needed > top) top = dx * std::ceil(top_needed / dx);
  out.z_floor_um = floor;
  out.domain_extent_um.z() = top - floor;
  return out;
}

ScenarioOutcome evaluate_scenario(const Scene& scene, const ScenarioSettings& settings,
                                  const std::string& scenario_id) {
  if (settings.wavelengths_nm.empty()) fail(ErrorCategory::Config, "no wavelengths requested");
  const GridSpec grid = fit_grid_to_scene(settings.grid, scene, settings);
  const double lambda_max = *std::max_element(settings.wavelengths_nm.begin(), settings.wavelengths_nm.end());
  const double clearance = settings.plane_clearance_um >= 0.0 ? settings.plane_clearance_um : 0.5e-3 * lambda_max;

  std::vector<MonitorSpec> monitors;
  MonitorSpec plane;
  plane.kind = MonitorKind::PlaneAbove;
  plane.name = "collection_plane";
  plane.wavelengths_nm = settings.wavelengths_nm;
  plane.plane_z_um = scene.top_z_um() + clearance;
  monitors.push_back(plane);

  MonitorSpec box;
  box.kind = MonitorKind::ClosedBox;
  box.name = "dipole_box";
  box.wavelengths_nm = settings.wavelengths_nm;
  box.box_center_um = scene.dipole_position_um();
  box.box_half_size_um = Vec3::Constant(settings.box_half_size_um);
  monitors.push_back(box);

  if (settings.record_map) {
    MonitorSpec map;
    map.kind = MonitorKind::MapPlane;
    map.name = "yz_map";
    map.wavelengths_nm = {settings.map_wavelength_nm};
    map.map_x_um = scene.dipole_position_um().x();
    monitors.push_back(map);
  }

  DipoleSource source;
  source.position_um = scene.dipole_position_um();
  source.orientation = scene.dipole_orientation();
  source.pulse = settings.pulse;

  Simulation sim = build_simulation(scene, grid, source, monitors);
  ScenarioOutcome outcome;
  outcome.monitors = sim.run(settings.stop, settings.workers);
  outcome.stats = sim.stats();

  EfficiencyReport& report = outcome.report;
  report.scenario = scenario_id;
  report.na = settings.na;
  report.grid = grid;
  report.dipole_position_um = sim.source_position_um();
  report.dipole_orientation = source.orientation.normalized();
  report.steps = outcome.stats.steps;
  std::vector<std::pair<double, double>> samples;
  for (double wl : settings.wavelengths_nm) {
    const AngularPowerSpectrum spectrum =
        angular_spectrum(outcome.monitors[0], wl, settings.fft_padding, settings.fft_taper);
    const double total = poynting_flux(outcome.monitors[1], wl);
    const double eta = collection_efficiency(spectrum, total, settings.na);
    report.wavelengths_nm.push_back(wl);
    report.eta.push_back(eta);
    report.total_power.push_back(total);
    report.collected_power.push_back(eta * total);
    report.over_unity.push_back(eta > 1.0);
    samples.emplace_back(wl, eta);
  }
  report.band_average = band_average(samples);

  if (settings.record_map) {
    outcome.field_map = field_map(outcome.monitors[2], settings.map_wavelength_nm);
    outcome.map_y0_um = outcome.monitors[2].map_y0_um;
    outcome.map_z0_um = outcome.monitors[2].map_z0_um;
  }
  return outcome;
}

double analytic_oracle(const Scene& scene, double na) {
  const auto orientation = analytic::DipoleOrientation::along(scene.dipole_orientation());
  const double n = scene.substrate().refractive_index / scene.ambient().refractive_index;
  if (scene.kind() == GeometryKind::Planar) return analytic::planar_collection_efficiency(orientation, na, n);
  return analytic::hemisphere_collection_efficiency(orientation, na, n);
}

Axis parse_axis(const std::string& text) {
  if (text == "x") return Axis::X;
  if (text == "y") return Axis::Y;
  if (text == "z") return Axis::Z;
  fail(ErrorCategory::Config, "unknown axis '" + text + "'");
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

std::vector<SweepPoint> displacement_sweep(const Scene& scene_template, Axis axis,
                                           const std::vector<double>& offsets_um,
                                           const ScenarioSettings& settings,
                                           const std::string& scenario_id) {
  Vec3 direction = Vec3::Zero();
  direction[static_cast<int>(axis)] = 1.0;
  // Validate every displacement before spending time on any simulation.
  std::vector<Scene> scenes;
  for (double offset : offsets_um) scenes.push_back(scene_template.with_dipole_offset(direction * offset));

  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    SweepPoint point;
    point.offset_um = offsets_um[i];
    ScenarioSettings local = settings;
    local.record_map = false;
    point.report = evaluate_scenario(scenes[i], local, scenario_id).report;
    point.band_average = point.report.band_average;
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace silfdtd

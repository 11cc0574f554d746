#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "silfdtd/fdtd.hpp"
#include "silfdtd/scene.hpp"

namespace silfdtd {

/// Upward power carried by each propagating plane wave crossing a plane
/// monitor. Cell (r, c) has transverse wavevector
/// (kx, ky) / k0 = ((c - size/2) * k_step, (r - size/2) * k_step).
struct AngularPowerSpectrum {
  double wavelength_nm = 0.0;
  double k_step = 0.0;
  int size = 0;
  Eigen::ArrayXXd density;
  /// Sum of negative cross-spectrum cells that were zeroed (diagnostic).
  double clipped_power = 0.0;
  double medium_index = 1.0;

  double kx(Eigen::Index col) const { return (static_cast<double>(col) - size / 2) * k_step; }
  double ky(Eigen::Index row) const { return (static_cast<double>(row) - size / 2) * k_step; }
  double total() const { return density.sum(); }
};

/// Plane-wave decomposition of the fields on a PlaneAbove monitor. The
/// monitor data is zero padded to at least `min_padding` times its extent.
/// A nonzero `taper_fraction` rolls the fields off with a cosine over that
/// fraction of each edge, which suppresses truncation ringing in k-space.
AngularPowerSpectrum angular_spectrum(const SpectralMonitorResult& plane, double wavelength_nm,
                                      int min_padding = 2, double taper_fraction = 0.0);

/// Power per steradian for each k-space cell, dP/dOmega = P_cell cos(theta) / dk^2.
Eigen::ArrayXXd radiant_intensity(const AngularPowerSpectrum& spectrum);

/// Fraction of `total_power` carried inside |k_par| / k0 <= na. Cells are
/// included by their centre radius. Values above 1 + kEfficiencyTolerance
/// are an error.
double collection_efficiency(const AngularPowerSpectrum& spectrum, double total_power, double na);

inline constexpr double kEfficiencyTolerance = 0.02;

/// Unweighted mean of per-wavelength efficiencies.
double band_average(const std::vector<std::pair<double, double>>& etas);

struct EfficiencyReport {
  std::string scenario;
  std::vector<double> wavelengths_nm;
  std::vector<double> eta;
  std::vector<double> total_power;
  std::vector<double> collected_power;
  std::vector<bool> over_unity;
  double band_average = 0.0;
  double na = 0.9;
  GridSpec grid;
  Vec3 dipole_position_um = Vec3::Zero();
  Vec3 dipole_orientation = Vec3::UnitX();
  int steps = 0;
};

std::vector<double> uniform_band(double min_nm, double max_nm, int samples);

struct ScenarioSettings {
  GridSpec grid;
  std::vector<double> wavelengths_nm = uniform_band(600.0, 800.0, 9);
  double na = 0.9;
  double box_half_size_um = 0.2;
  /// Height of the collection plane above the top of the substrate; a
  /// negative value selects half the longest monitored wavelength.
  double plane_clearance_um = -1.0;
  bool record_map = true;
  double map_wavelength_nm = 700.0;
  StopCriterion stop = StopCriterion::decay();
  PulseSpec pulse;
  int workers = 1;
  int fft_padding = 2;
  double fft_taper = 0.0;
};

struct ScenarioOutcome {
  EfficiencyReport report;
  std::vector<SpectralMonitorResult> monitors;
  Eigen::ArrayXXd field_map;  // empty when no map was recorded
  double map_y0_um = 0.0, map_z0_um = 0.0;
  RunStats stats;
};

/// Named discretisation levels for the presets: 50, 25 and 15 nm cells.
enum class GridLevel { Smoke, Default, Accurate };
GridLevel parse_grid_level(const std::string& text);
std::string to_string(GridLevel level);
double cell_size_um(GridLevel level);

/// Interior sized for a preset scene: wide enough that the collection plane
/// catches every ray inside NA 0.9 from the hemisphere centre.
GridSpec preset_grid(const std::string& preset, GridLevel level);

/// Grows the z range of `grid` when needed so the dipole box and the
/// collection plane sit in the interior with a few cells of margin.
GridSpec fit_grid_to_scene(const GridSpec& grid, const Scene& scene, const ScenarioSettings& settings);

/// simulate -> angular spectrum -> per-wavelength efficiency -> band average.
ScenarioOutcome evaluate_scenario(const Scene& scene, const ScenarioSettings& settings,
                                  const std::string& scenario_id);

/// Ray-optics reference for a scene: the flat-interface model for planar
/// scenes and the centred-hemisphere model otherwise (the trench and any
/// dipole offset are ignored).
double analytic_oracle(const Scene& scene, double na);

enum class Axis { X, Y, Z };
Axis parse_axis(const std::string& text);
std::string to_string(Axis axis);

struct SweepPoint {
  double offset_um = 0.0;
  double band_average = 0.0;
  EfficiencyReport report;
};

/// One full pipeline per dipole offset along `axis`.
std::vector<SweepPoint> displacement_sweep(const Scene& scene_template, Axis axis,
                                           const std::vector<double>& offsets_um,
                                           const ScenarioSettings& settings,
                                           const std::string& scenario_id);

}  // namespace silfdtd

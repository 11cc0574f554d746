#pragma once

// Three-dimensional Yee-grid FDTD in normalised units.
//
// Fields are stored as E and eta0 * H so the curl updates carry only the
// Courant number S = c dt / dx. Time is counted in steps, lengths in cells.
// The outer boundary is a convolutional PML backed by PEC walls. Frequency
// domain monitors accumulate running DFTs of the tangential fields and are
// divided by the DFT of the injected current on return, so every result is
// per unit source amplitude.

#include <array>
#include <complex>
#include <memory>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "silfdtd/scene.hpp"

namespace silfdtd {

using Complex = std::complex<double>;
using ComplexArray = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic>;

enum class Rasterization { VolumeAverage, Staircase };

/// Discretisation of the interior (non-PML) region.
///
/// The interior spans x, y in [-extent/2, extent/2] and z in
/// [z_floor, z_floor + extent.z]; the scene origin is always a grid node.
struct GridSpec {
  double cell_size_um = 0.025;
  Vec3 domain_extent_um = Vec3(7.0, 7.0, 6.0);
  double z_floor_um = -1.0;
  int pml_cells = 10;
  double courant_factor = 0.5;
  Rasterization rasterization = Rasterization::VolumeAverage;
};

/// Largest stable Courant number for the 3D Yee scheme.
double courant_limit_3d();

struct PulseSpec {
  double center_wavelength_nm = 700.0;
  /// Spectral standard deviation as a fraction of the carrier frequency.
  double relative_bandwidth = 0.1;
  double amplitude = 1.0;
};

struct DipoleSource {
  Vec3 position_um = Vec3::Zero();
  Vec3 orientation = Vec3::UnitX();
  PulseSpec pulse;
};

enum class MonitorKind { PlaneAbove, ClosedBox, MapPlane };

std::string to_string(MonitorKind kind);

struct MonitorSpec {
  MonitorKind kind = MonitorKind::PlaneAbove;
  std::string name;
  std::vector<double> wavelengths_nm;
  /// PlaneAbove: height of the plane; the plane spans the whole interior.
  double plane_z_um = 0.0;
  /// ClosedBox: centre and half-size of the box.
  Vec3 box_center_um = Vec3::Zero();
  Vec3 box_half_size_um = Vec3::Constant(0.2);
  /// MapPlane: the y-z plane at this x.
  double map_x_um = 0.0;
};

/// One tangential field pair on a face, sampled on a common lattice:
/// E along axis `e_axis`, H along `h_axis`. Its contribution to the face
/// normal flux is `sign` * 1/2 Re(E H*).
struct FluxPair {
  int e_axis = 0;
  int h_axis = 1;
  double sign = 1.0;
  Eigen::ArrayXXd weight;       // quadrature weight per sample (dimensionless)
  std::vector<ComplexArray> e;  // one array per wavelength
  std::vector<ComplexArray> h;
};

/// A planar piece of monitor surface with normal along `normal_axis`.
struct FluxFace {
  int normal_axis = 2;
  double outward = 1.0;
  double position_um = 0.0;
  FluxPair first;   // E_u with H_v
  FluxPair second;  // E_v with H_u
};

struct SpectralMonitorResult {
  MonitorKind kind = MonitorKind::PlaneAbove;
  std::string name;
  std::vector<double> wavelengths_nm;
  double cell_size_um = 0.0;
  /// Refractive index around a plane monitor, and whether the plane and the
  /// space above it are homogeneous.
  double medium_index = 1.0;
  bool homogeneous = false;
  std::vector<FluxFace> faces;
  /// MapPlane only: complex Ex, Ey, Ez at nodes, rows = z, cols = y.
  std::vector<std::array<ComplexArray, 3>> map_fields;
  double map_z0_um = 0.0;
  double map_y0_um = 0.0;

  int wavelength_index(double wavelength_nm) const;
};

struct StopCriterion {
  enum class Mode { FixedSteps, EnergyDecay };
  Mode mode = Mode::EnergyDecay;
  int steps = 0;
  double energy_decay = 1e-5;
  int max_steps = 50000;
  int check_interval = 20;

  static StopCriterion fixed(int steps) { return {Mode::FixedSteps, steps, 0.0, steps, 20}; }
  static StopCriterion decay(double ratio = 1e-5, int max_steps = 50000) {
    return {Mode::EnergyDecay, 0, ratio, max_steps, 20};
  }
};

struct RunStats {
  int steps = 0;
  double final_energy_ratio = 0.0;
  bool hit_step_cap = false;
};

struct GridDims {
  int nx = 0, ny = 0, nz = 0;
  int interior_nx = 0, interior_ny = 0, interior_nz = 0;
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny * nz; }
};

/// Owns the fields, material arrays and monitor accumulators for one run.
class Simulation {
 public:
  Simulation(Scene scene, GridSpec grid, DipoleSource source, std::vector<MonitorSpec> monitors);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Scene& scene() const;
  const GridSpec& grid() const;
  const DipoleSource& source() const;
  const GridDims& dims() const;
  /// Time step in seconds.
  double time_step_s() const;
  /// Source node after snapping to the grid.
  Vec3 source_position_um() const;
  /// Relative permittivity seen by the E_axis component of cell (i, j, k).
  double cell_permittivity(int axis, int i, int j, int k) const;

  std::vector<SpectralMonitorResult> run(const StopCriterion& stop, int workers = 1);
  const RunStats& stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Simulation build_simulation(const Scene& scene, const GridSpec& grid, const DipoleSource& source,
                            const std::vector<MonitorSpec>& monitors);

inline std::vector<SpectralMonitorResult> run(Simulation& sim, const StopCriterion& stop,
                                              int workers = 1) {
  return sim.run(stop, workers);
}

/// Net outward time-averaged power through a monitor's faces at one
/// wavelength (arbitrary units, per unit source amplitude squared).
double poynting_flux(const SpectralMonitorResult& monitor, double wavelength_nm);

/// Outward power through each face separately.
std::vector<double> face_fluxes(const SpectralMonitorResult& monitor, double wavelength_nm);

/// |E|^2 on the y-z map plane, scaled so the maximum is 1. Rows run along z
/// (increasing), columns along y.
Eigen::ArrayXXd field_map(const SpectralMonitorResult& monitor, double wavelength_nm);

}  // namespace silfdtd

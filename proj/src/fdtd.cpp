#include "silfdtd/fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parallel.hpp"
#include "silfdtd/error.hpp"

namespace silfdtd {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr int kFractionLevels = 64;  // 4 x 4 x 4 sub-samples per dual cell
constexpr int kPmlOrder = 3;

std::size_t flat(const GridDims& d, int i, int j, int k) {
  return static_cast<std::size_t>(i) +
         static_cast<std::size_t>(d.nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(d.ny) * k);
}

/// One monitored quantity: a field component sampled at a list of points,
/// optionally averaging two neighbouring Yee positions.
struct Channel {
  int field = 0;  // 0..2 E, 3..5 H
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;  // empty when not averaged
  std::vector<double> omega;        // per-step angular frequency for each wavelength
  std::vector<double> re, im;       // [wavelength][point]

  std::size_t points() const { return first.size(); }
};

struct MonitorPlan {
  MonitorSpec spec;
  SpectralMonitorResult shell;  // geometry filled at build time, data at the end
  // For flux faces: channel index for (face, pair, e/h). For maps: Ex, Ey, Ez.
  std::vector<int> channels;
  Eigen::Index map_rows = 0, map_cols = 0;
};

struct PmlAxis {
  // Coefficients indexed by Yee position along the axis (E: i, H: i + 1/2).
  std::vector<double> be, ce, bh, ch;
  int lo_end = 0;    // slab [0, lo_end) on the low side
  int hi_begin = 0;  // slab [hi_begin, n) on the high side
};

}  // namespace

double courant_limit_3d() { return 1.0 / std::sqrt(3.0); }

std::string to_string(MonitorKind kind) {
  switch (kind) {
    case MonitorKind::PlaneAbove: return "PlaneAbove";
    case MonitorKind::ClosedBox: return "ClosedBox";
    case MonitorKind::MapPlane: return "MapPlane";
  }
  return "unknown";
}

int SpectralMonitorResult::wavelength_index(double wavelength_nm) const {
  for (std::size_t i = 0; i < wavelengths_nm.size(); ++i) {
    if (std::abs(wavelengths_nm[i] - wavelength_nm) <= 1e-9 * std::max(1.0, wavelength_nm)) {
      return static_cast<int>(i);
    }
  }
  fail(ErrorCategory::Domain, "wavelength " + std::to_string(wavelength_nm) +
                                  " nm is not monitored by '" + name + "'");
}

struct Simulation::Impl {
  Scene scene;
  GridSpec grid;
  DipoleSource source;
  GridDims dims;
  double courant = 0.5;
  double dx_um = 0.0;
  int origin[3] = {0, 0, 0};
  int source_node[3] = {0, 0, 0};

  std::array<std::vector<double>, 3> e, h;
  std::array<std::vector<std::uint8_t>, 3> mat;
  std::array<double, kFractionLevels + 1> eps_table{};
  std::array<double, kFractionLevels + 1> coef_table{};

  std::array<PmlAxis, 3> pml;
  // psi[axis][side][0..1] for H and E corrections.
  std::array<std::array<std::array<std::vector<double>, 2>, 2>, 3> psi_h, psi_e;

  struct Injection {
    int axis;
    std::size_t index;
    double weight;
  };
  std::vector<Injection> injections;
  double omega0 = 0.0, tau = 0.0, t0 = 0.0;

  std::vector<Channel> channels;
  std::vector<MonitorPlan> plans;
  std::vector<double> source_omega;
  std::vector<Complex> source_dft;

  RunStats stats;
  bool has_run = false;

  double node_coord(int axis, double index) const { return (index - origin[axis]) * dx_um; }

  void validate();
  void setup_dims();
  void rasterize();
  void setup_pml();
  void setup_source();
  void setup_monitors(const std::vector<MonitorSpec>& monitors);
  int add_channel(int field, std::vector<std::size_t> first, std::vector<std::size_t> second,
                  const std::vector<double>& wavelengths);
  FluxFace plan_face(int normal, int p, int lo_u, int hi_u, int lo_v, int hi_v, bool trapezoid,
                     double outward, const std::vector<double>& wavelengths,
                     std::vector<int>& channel_ids);

  double pulse(double t) const {
    const double u = t - t0;
    return source.pulse.amplitude * std::sin(omega0 * u) * std::exp(-0.5 * u * u / (tau * tau));
  }
  double pulse_spectrum_ratio(double omega) const {
    const double d = (omega - omega0) * tau;
    return std::exp(-0.5 * d * d);
  }

  void update_h(int workers);
  void update_e(int workers);
  void accumulate(int field_kind, double t, int workers);
  void energy(int workers, double& total, double& peak_abs) const;
  std::vector<SpectralMonitorResult> collect() const;
};

void Simulation::Impl::validate() {
  if (!(grid.cell_size_um > 0.0)) fail(ErrorCategory::Config, "cell size must be positive");
  if (!(grid.courant_factor > 0.0) || !(grid.courant_factor < courant_limit_3d())) {
    fail(ErrorCategory::Config, "courant factor must lie in (0, 1/sqrt(3))");
  }
  if (grid.pml_cells < 8) fail(ErrorCategory::Config, "at least 8 PML cells are required");
  for (int a = 0; a < 3; ++a) {
    if (!(grid.domain_extent_um[a] > 0.0)) fail(ErrorCategory::Config, "domain extent must be positive");
  }
  const double on = source.orientation.norm();
  if (!(on > 0.0)) fail(ErrorCategory::Config, "source orientation must be nonzero");
  source.orientation /= on;
  if (!(source.pulse.center_wavelength_nm > 0.0) || !(source.pulse.relative_bandwidth > 0.0)) {
    fail(ErrorCategory::Config, "invalid source pulse");
  }
  if (!in_substrate(scene, source.position_um)) {
    fail(ErrorCategory::Domain, "source must lie inside the substrate");
  }
}

void Simulation::Impl::setup_dims() {
  dx_um = grid.cell_size_um;
  courant = grid.courant_factor;
  const int npml = grid.pml_cells;
  const int hx = static_cast<int>(std::lround(0.5 * grid.domain_extent_um.x() / dx_um));
  const int hy = static_cast<int>(std::lround(0.5 * grid.domain_extent_um.y() / dx_um));
  const int below = static_cast<int>(std::lround(-grid.z_floor_um / dx_um));
  const int above = static_cast<int>(std::lround((grid.z_floor_um + grid.domain_extent_um.z()) / dx_um));
  if (hx < 1 || hy < 1 || below + above < 2) fail(ErrorCategory::Config, "domain is smaller than one cell");
  if (below < 0 || above < 0) fail(ErrorCategory::Config, "domain must contain the scene origin");
  dims.interior_nx = 2 * hx;
  dims.interior_ny = 2 * hy;
  dims.interior_nz = below + above;
  dims.nx = dims.interior_nx + 1 + 2 * npml;
  dims.ny = dims.interior_ny + 1 + 2 * npml;
  dims.nz = dims.interior_nz + 1 + 2 * npml;
  origin[0] = npml + hx;
  origin[1] = npml + hy;
  origin[2] = npml + below;
}

void Simulation::Impl::rasterize() {
  const double eps_a = scene.ambient().permittivity();
  const double eps_s = scene.substrate().permittivity();
  for (int f = 0; f <= kFractionLevels; ++f) {
    eps_table[f] = eps_a + (eps_s - eps_a) * f / kFractionLevels;
    coef_table[f] = courant / eps_table[f];
  }
  const std::size_t n = dims.cells();
  for (int a = 0; a < 3; ++a) mat[a].assign(n, 0);

  const bool staircase = grid.rasterization == Rasterization::Staircase;
  static constexpr double kSub[4] = {-0.375, -0.125, 0.125, 0.375};
  static constexpr double kProbe[15][3] = {
      {0, 0, 0},        {-.5, -.5, -.5}, {.5, -.5, -.5}, {-.5, .5, -.5}, {.5, .5, -.5},
      {-.5, -.5, .5},   {.5, -.5, .5},   {-.5, .5, .5},  {.5, .5, .5},   {-.5, 0, 0},
      {.5, 0, 0},       {0, -.5, 0},     {0, .5, 0},     {0, 0, -.5},    {0, 0, .5}};

  for (int a = 0; a < 3; ++a) {
    auto& m = mat[a];
    for (int k = 0; k < dims.nz; ++k) {
      for (int j = 0; j < dims.ny; ++j) {
        for (int i = 0; i < dims.nx; ++i) {
          double c[3] = {static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
          c[a] += 0.5;
          auto inside = [&](double ox, double oy, double oz) {
            const Vec3 p(node_coord(0, c[0] + ox), node_coord(1, c[1] + oy), node_coord(2, c[2] + oz));
            return in_substrate(scene, p);
          };
          std::uint8_t level;
          if (staircase) {
            level = inside(0, 0, 0) ? kFractionLevels : 0;
          } else {
            const bool first = inside(kProbe[0][0], kProbe[0][1], kProbe[0][2]);
            bool uniform = true;
            for (int q = 1; q < 15 && uniform; ++q) {
              uniform = inside(kProbe[q][0], kProbe[q][1], kProbe[q][2]) == first;
            }
            if (uniform) {
              level = first ? kFractionLevels : 0;
            } else {
              int count = 0;
              for (double oz : kSub)
                for (double oy : kSub)
                  for (double ox : kSub) count += inside(ox, oy, oz) ? 1 : 0;
              level = static_cast<std::uint8_t>(count);
            }
          }
          m[flat(dims, i, j, k)] = level;
        }
      }
    }
  }
}

void Simulation::Impl::setup_pml() {
  const int npml = grid.pml_cells;
  const double eps_ref = scene.substrate().permittivity();
  const double sigma_max = 0.8 * (kPmlOrder + 1) * courant / std::sqrt(eps_ref);
  // CFS shift tied to the carrier so the layer scales with the problem.
  const double alpha_max =
      0.1 * 2.0 * std::numbers::pi * courant * dx_um / (1e-3 * source.pulse.center_wavelength_nm);
  const int n_axis[3] = {dims.nx, dims.ny, dims.nz};
  for (int a = 0; a < 3; ++a) {
    const int n = n_axis[a];
    PmlAxis& p = pml[a];
    p.be.assign(n, 1.0);
    p.ce.assign(n, 0.0);
    p.bh.assign(n, 1.0);
    p.ch.assign(n, 0.0);
    p.lo_end = npml;
    p.hi_begin = n - 1 - npml;
    auto depth = [&](double x) {
      if (x < npml) return (npml - x) / npml;
      const double edge = n - 1 - npml;
      if (x > edge) return (x - edge) / npml;
      return 0.0;
    };
    auto coeffs = [&](double d, double& b, double& c) {
      const double sigma = sigma_max * std::pow(d, kPmlOrder);
      const double alpha = alpha_max * (1.0 - d);
      b = std::exp(-(sigma + alpha));
      c = (sigma + alpha) > 0.0 ? sigma / (sigma + alpha) * (b - 1.0) : 0.0;
    };
    for (int i = 0; i < n; ++i) {
      const double de = depth(static_cast<double>(i));
      if (de > 0.0) coeffs(de, p.be[i], p.ce[i]);
      const double dh = depth(i + 0.5);
      if (dh > 0.0) coeffs(dh, p.bh[i], p.ch[i]);
    }
  }
  for (int a = 0; a < 3; ++a) {
    const std::size_t slab = static_cast<std::size_t>(npml + 1) * dims.cells() / n_axis[a];
    for (int s = 0; s < 2; ++s) {
      for (int c = 0; c < 2; ++c) {
        psi_h[a][s][c].assign(slab, 0.0);
        psi_e[a][s][c].assign(slab, 0.0);
      }
    }
  }
}

void Simulation::Impl::setup_source() {
  for (int a = 0; a < 3; ++a) {
    source_node[a] = origin[a] + static_cast<int>(std::lround(source.position_um[a] / dx_um));
  }
  const int npml = grid.pml_cells;
  const int n_axis[3] = {dims.nx, dims.ny, dims.nz};
  for (int a = 0; a < 3; ++a) {
    if (source_node[a] <= npml || source_node[a] >= n_axis[a] - 1 - npml) {
      fail(ErrorCategory::Domain, "source lies inside the absorbing layer");
    }
  }
  // Split each Cartesian component over the two Yee edges meeting at the node.
  for (int a = 0; a < 3; ++a) {
    const double w = 0.5 * source.orientation[a];
    if (w == 0.0) continue;
    int lo[3] = {source_node[0], source_node[1], source_node[2]};
    lo[a] -= 1;
    injections.push_back({a, flat(dims, lo[0], lo[1], lo[2]), w});
    injections.push_back({a, flat(dims, source_node[0], source_node[1], source_node[2]), w});
  }
  omega0 = 2.0 * std::numbers::pi * courant * dx_um / (1e-3 * source.pulse.center_wavelength_nm);
  tau = 1.0 / (source.pulse.relative_bandwidth * omega0);
  t0 = 6.0 * tau;
}

int Simulation::Impl::add_channel(int field, std::vector<std::size_t> first,
                                  std::vector<std::size_t> second,
                                  const std::vector<double>& wavelengths) {
  Channel ch;
  ch.field = field;
  ch.first = std::move(first);
  ch.second = std::move(second);
  for (double wl : wavelengths) {
    ch.omega.push_back(2.0 * std::numbers::pi * courant * dx_um / (1e-3 * wl));
  }
  ch.re.assign(ch.omega.size() * ch.points(), 0.0);
  ch.im.assign(ch.omega.size() * ch.points(), 0.0);
  channels.push_back(std::move(ch));
  return static_cast<int>(channels.size()) - 1;
}

FluxFace Simulation::Impl::plan_face(int normal, int p, int lo_u, int hi_u, int lo_v, int hi_v,
                                     bool trapezoid, double outward,
                                     const std::vector<double>& wavelengths,
                                     std::vector<int>& channel_ids) {
  const int u = (normal + 1) % 3;
  const int v = (normal + 2) % 3;
  auto index = [&](int cu, int cv, int cn) {
    int c[3];
    c[normal] = cn;
    c[u] = cu;
    c[v] = cv;
    return flat(dims, c[0], c[1], c[2]);
  };
  FluxFace face;
  face.normal_axis = normal;
  face.outward = outward;
  face.position_um = node_coord(normal, p);

  // first: E_u at (u + 1/2, v), H_v averaged across the face.
  {
    const int rows = hi_u - lo_u, cols = hi_v - lo_v + 1;
    std::vector<std::size_t> ei, h0, h1;
    face.first.e_axis = u;
    face.first.h_axis = v;
    face.first.sign = 1.0;
    face.first.weight = Eigen::ArrayXXd::Ones(rows, cols);
    for (int cv = lo_v; cv <= hi_v; ++cv) {
      for (int cu = lo_u; cu < hi_u; ++cu) {
        ei.push_back(index(cu, cv, p));
        h0.push_back(index(cu, cv, p - 1));
        h1.push_back(index(cu, cv, p));
      }
    }
    if (trapezoid) {
      face.first.weight.col(0) *= 0.5;
      face.first.weight.col(cols - 1) *= 0.5;
    }
    channel_ids.push_back(add_channel(u, std::move(ei), {}, wavelengths));
    channel_ids.push_back(add_channel(3 + v, std::move(h0), std::move(h1), wavelengths));
  }
  // second: E_v at (u, v + 1/2), H_u averaged across the face.
  {
    const int rows = hi_u - lo_u + 1, cols = hi_v - lo_v;
    std::vector<std::size_t> ei, h0, h1;
    face.second.e_axis = v;
    face.second.h_axis = u;
    face.second.sign = -1.0;
    face.second.weight = Eigen::ArrayXXd::Ones(rows, cols);
    for (int cv = lo_v; cv < hi_v; ++cv) {
      for (int cu = lo_u; cu <= hi_u; ++cu) {
        ei.push_back(index(cu, cv, p));
        h0.push_back(index(cu, cv, p - 1));
        h1.push_back(index(cu, cv, p));
      }
    }
    if (trapezoid) {
      face.second.weight.row(0) *= 0.5;
      face.second.weight.row(rows - 1) *= 0.5;
    }
    channel_ids.push_back(add_channel(v, std::move(ei), {}, wavelengths));
    channel_ids.push_back(add_channel(3 + u, std::move(h0), std::move(h1), wavelengths));
  }
  return face;
}

void Simulation::Impl::setup_monitors(const std::vector<MonitorSpec>& monitors) {
  const int npml = grid.pml_cells;
  const int lo[3] = {npml, npml, npml};
  const int hi[3] = {dims.nx - 1 - npml, dims.ny - 1 - npml, dims.nz - 1 - npml};
  auto node = [&](int axis, double coord_um) {
    return origin[axis] + static_cast<int>(std::lround(coord_um / dx_um));
  };
  auto inside = [&](int axis, int idx) { return idx > lo[axis] && idx < hi[axis]; };

  std::vector<double> all_wavelengths;
  for (const auto& spec : monitors) {
    if (spec.wavelengths_nm.empty()) fail(ErrorCategory::Config, "monitor '" + spec.name + "' has no wavelengths");
    if (!std::is_sorted(spec.wavelengths_nm.begin(), spec.wavelengths_nm.end())) {
      fail(ErrorCategory::Config, "monitor wavelengths must be sorted ascending");
    }
    for (double wl : spec.wavelengths_nm) {
      if (!(wl > 0.0)) fail(ErrorCategory::Config, "wavelengths must be positive");
      const double omega = 2.0 * std::numbers::pi * courant * dx_um / (1e-3 * wl);
      if (pulse_spectrum_ratio(omega) < 1e-3) {
        fail(ErrorCategory::Config, "source spectrum is too weak at " + std::to_string(wl) + " nm");
      }
      all_wavelengths.push_back(wl);
    }

    MonitorPlan plan;
    plan.spec = spec;
    plan.shell.kind = spec.kind;
    plan.shell.name = spec.name;
    plan.shell.wavelengths_nm = spec.wavelengths_nm;
    plan.shell.cell_size_um = dx_um;

    switch (spec.kind) {
      case MonitorKind::PlaneAbove: {
        const int kp = node(2, spec.plane_z_um);
        if (!inside(2, kp)) fail(ErrorCategory::Domain, "plane monitor lies inside the absorbing layer");
        plan.shell.faces.push_back(
            plan_face(2, kp, lo[0], hi[0], lo[1], hi[1], false, 1.0, spec.wavelengths_nm, plan.channels));
        bool homogeneous = true;
        const double eps_ambient = scene.ambient().permittivity();
        for (int a = 0; a < 3 && homogeneous; ++a) {
          for (std::size_t q = flat(dims, 0, 0, kp - 1); q < dims.cells(); ++q) {
            if (eps_table[mat[a][q]] != eps_ambient) {
              homogeneous = false;
              break;
            }
          }
        }
        plan.shell.homogeneous = homogeneous;
        plan.shell.medium_index = scene.ambient().refractive_index;
        break;
      }
      case MonitorKind::ClosedBox: {
        int b0[3], b1[3];
        for (int a = 0; a < 3; ++a) {
          b0[a] = node(a, spec.box_center_um[a] - spec.box_half_size_um[a]);
          b1[a] = node(a, spec.box_center_um[a] + spec.box_half_size_um[a]);
          if (!inside(a, b0[a]) || !inside(a, b1[a]) || b1[a] <= b0[a]) {
            fail(ErrorCategory::Domain, "box monitor must lie inside the non-PML region");
          }
        }
        for (int a = 0; a < 3; ++a) {
          const int u = (a + 1) % 3, v = (a + 2) % 3;
          plan.shell.faces.push_back(plan_face(a, b0[a], b0[u], b1[u], b0[v], b1[v], true, -1.0,
                                               spec.wavelengths_nm, plan.channels));
          plan.shell.faces.push_back(plan_face(a, b1[a], b0[u], b1[u], b0[v], b1[v], true, 1.0,
                                               spec.wavelengths_nm, plan.channels));
        }
        break;
      }
      case MonitorKind::MapPlane: {
        const int im = node(0, spec.map_x_um);
        if (!inside(0, im)) fail(ErrorCategory::Domain, "map plane lies inside the absorbing layer");
        std::array<std::vector<std::size_t>, 3> first, second;
        for (int k = lo[2]; k <= hi[2]; ++k) {
          for (int j = lo[1]; j <= hi[1]; ++j) {
            first[0].push_back(flat(dims, im - 1, j, k));
            second[0].push_back(flat(dims, im, j, k));
            first[1].push_back(flat(dims, im, j - 1, k));
            second[1].push_back(flat(dims, im, j, k));
            first[2].push_back(flat(dims, im, j, k - 1));
            second[2].push_back(flat(dims, im, j, k));
          }
        }
        for (int a = 0; a < 3; ++a) {
          plan.channels.push_back(add_channel(a, std::move(first[a]), std::move(second[a]), spec.wavelengths_nm));
        }
        plan.map_cols = hi[1] - lo[1] + 1;
        plan.map_rows = hi[2] - lo[2] + 1;
        plan.shell.map_y0_um = node_coord(1, lo[1]);
        plan.shell.map_z0_um = node_coord(2, lo[2]);
        break;
      }
    }
    plans.push_back(std::move(plan));
  }

  std::sort(all_wavelengths.begin(), all_wavelengths.end());
  all_wavelengths.erase(std::unique(all_wavelengths.begin(), all_wavelengths.end()), all_wavelengths.end());
  for (double wl : all_wavelengths) {
    source_omega.push_back(2.0 * std::numbers::pi * courant * dx_um / (1e-3 * wl));
  }
  source_dft.assign(source_omega.size(), Complex(0.0, 0.0));
}

void Simulation::Impl::update_h(int workers) {
  const int nx = dims.nx, ny = dims.ny, nz = dims.nz;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = sy * ny;
  const double S = courant;
  double* __restrict hx = h[0].data();
  double* __restrict hy = h[1].data();
  double* __restrict hz = h[2].data();
  const double* __restrict ex = e[0].data();
  const double* __restrict ey = e[1].data();
  const double* __restrict ez = e[2].data();

  detail::parallel_for(0, nz - 1, workers, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      for (int j = 0; j < ny - 1; ++j) {
        const std::size_t b = flat(dims, 0, j, k);
        for (int i = 0; i < nx - 1; ++i) {
          const std::size_t q = b + i;
          hx[q] -= S * ((ez[q + sy] - ez[q]) - (ey[q + sz] - ey[q]));
          hy[q] -= S * ((ex[q + sz] - ex[q]) - (ez[q + sx] - ez[q]));
          hz[q] -= S * ((ey[q + sx] - ey[q]) - (ex[q + sy] - ex[q]));
        }
      }
    }
  });

  // CPML corrections. Each slab is partitioned along z (or y for the z slabs).
  const int dims_n[3] = {nx, ny, nz};
  const std::size_t stride[3] = {sx, sy, sz};
  for (int a = 0; a < 3; ++a) {
    const PmlAxis& p = pml[a];
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    // Forward derivative of E_v and E_u along a feed H_u and H_v.
    const double* ev = e[v].data();
    const double* eu = e[u].data();
    double* hu = h[u].data();
    double* hv = h[v].data();
    for (int side = 0; side < 2; ++side) {
      const int a0 = side == 0 ? 0 : p.hi_begin;
      const int a1 = side == 0 ? p.lo_end : dims_n[a] - 1;
      const int width = grid.pml_cells + 1;
      double* psi_u = psi_h[a][side][0].data();
      double* psi_v = psi_h[a][side][1].data();
      const int outer = a == 2 ? 1 : 2;  // axis used to split work
      const int n_outer = dims_n[outer] - 1;
      detail::parallel_for(0, n_outer, workers, [&](int o0, int o1) {
        int lo[3] = {0, 0, 0}, hi[3] = {nx - 1, ny - 1, nz - 1};
        lo[a] = a0;
        hi[a] = a1;
        lo[outer] = o0;
        hi[outer] = o1;
        for (int k = lo[2]; k < hi[2]; ++k) {
          for (int j = lo[1]; j < hi[1]; ++j) {
            for (int i = lo[0]; i < hi[0]; ++i) {
              const int c[3] = {i, j, k};
              const int ia = c[a];
              int local[3] = {i, j, k};
              local[a] = ia - a0;
              const int dl[3] = {a == 0 ? width : nx, a == 1 ? width : ny, 0};
              const std::size_t l = static_cast<std::size_t>(local[0]) +
                                    static_cast<std::size_t>(dl[0]) *
                                        (static_cast<std::size_t>(local[1]) + static_cast<std::size_t>(dl[1]) * local[2]);
              const std::size_t q = flat(dims, i, j, k);
              const double b = p.bh[ia], cc = p.ch[ia];
              // H_u -= S (d_v E_a - d_a E_v): the d_a E_v term enters with +.
              psi_u[l] = b * psi_u[l] + cc * (ev[q + stride[a]] - ev[q]);
              hu[q] += S * psi_u[l];
              // H_v -= S (d_a E_u - d_u E_a).
              psi_v[l] = b * psi_v[l] + cc * (eu[q + stride[a]] - eu[q]);
              hv[q] -= S * psi_v[l];
            }
          }
        }
      });
    }
  }
}

void Simulation::Impl::update_e(int workers) {
  const int nx = dims.nx, ny = dims.ny, nz = dims.nz;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = sy * ny;
  double* __restrict ex = e[0].data();
  double* __restrict ey = e[1].data();
  double* __restrict ez = e[2].data();
  const double* __restrict hx = h[0].data();
  const double* __restrict hy = h[1].data();
  const double* __restrict hz = h[2].data();
  const std::uint8_t* __restrict mx = mat[0].data();
  const std::uint8_t* __restrict my = mat[1].data();
  const std::uint8_t* __restrict mz = mat[2].data();
  const double* __restrict tab = coef_table.data();

  detail::parallel_for(1, nz - 1, workers, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      for (int j = 1; j < ny - 1; ++j) {
        const std::size_t b = flat(dims, 0, j, k);
        for (int i = 1; i < nx - 1; ++i) {
          const std::size_t q = b + i;
          ex[q] += tab[mx[q]] * ((hz[q] - hz[q - sy]) - (hy[q] - hy[q - sz]));
          ey[q] += tab[my[q]] * ((hx[q] - hx[q - sz]) - (hz[q] - hz[q - sx]));
          ez[q] += tab[mz[q]] * ((hy[q] - hy[q - sx]) - (hx[q] - hx[q - sy]));
        }
      }
    }
  });

  const int dims_n[3] = {nx, ny, nz};
  const std::size_t stride[3] = {sx, sy, sz};
  for (int a = 0; a < 3; ++a) {
    const PmlAxis& p = pml[a];
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    const double* hv = h[v].data();
    const double* hu = h[u].data();
    double* eu = e[u].data();
    double* ev = e[v].data();
    const std::uint8_t* matu = mat[u].data();
    const std::uint8_t* matv = mat[v].data();
    for (int side = 0; side < 2; ++side) {
      const int a0 = side == 0 ? 1 : p.hi_begin + 1;
      const int a1 = side == 0 ? p.lo_end : dims_n[a] - 1;
      const int base = side == 0 ? 0 : p.hi_begin;
      const int width = grid.pml_cells + 1;
      double* psi_u = psi_e[a][side][0].data();
      double* psi_v = psi_e[a][side][1].data();
      const int outer = a == 2 ? 1 : 2;
      detail::parallel_for(1, dims_n[outer] - 1, workers, [&](int o0, int o1) {
        int lo[3] = {1, 1, 1}, hi[3] = {nx - 1, ny - 1, nz - 1};
        lo[a] = a0;
        hi[a] = a1;
        lo[outer] = o0;
        hi[outer] = o1;
        for (int k = lo[2]; k < hi[2]; ++k) {
          for (int j = lo[1]; j < hi[1]; ++j) {
            for (int i = lo[0]; i < hi[0]; ++i) {
              const int c[3] = {i, j, k};
              const int ia = c[a];
              int local[3] = {i, j, k};
              local[a] = ia - base;
              const int dl[2] = {a == 0 ? width : nx, a == 1 ? width : ny};
              const std::size_t l = static_cast<std::size_t>(local[0]) +
                                    static_cast<std::size_t>(dl[0]) *
                                        (static_cast<std::size_t>(local[1]) + static_cast<std::size_t>(dl[1]) * local[2]);
              const std::size_t q = flat(dims, i, j, k);
              const double b = p.be[ia], cc = p.ce[ia];
              // E_u += c (d_v H_a - d_a H_v): the d_a H_v term enters with -.
              psi_u[l] = b * psi_u[l] + cc * (hv[q] - hv[q - stride[a]]);
              eu[q] -= coef_table[matu[q]] * psi_u[l];
              // E_v += c (d_a H_u - d_u H_a).
              psi_v[l] = b * psi_v[l] + cc * (hu[q] - hu[q - stride[a]]);
              ev[q] += coef_table[matv[q]] * psi_v[l];
            }
          }
        }
      });
    }
  }
}

void Simulation::Impl::accumulate(int field_kind, double t, int workers) {
  for (auto& ch : channels) {
    const bool is_h = ch.field >= 3;
    if (is_h != (field_kind == 1)) continue;
    const double* src = is_h ? h[ch.field - 3].data() : e[ch.field].data();
    const std::size_t np = ch.points();
    const std::size_t nw = ch.omega.size();
    std::vector<double> cs(nw), sn(nw);
    for (std::size_t w = 0; w < nw; ++w) {
      cs[w] = std::cos(ch.omega[w] * t);
      sn[w] = std::sin(ch.omega[w] * t);
    }
    const bool averaged = !ch.second.empty();
    detail::parallel_for(0, static_cast<int>(np), workers, [&](int p0, int p1) {
      for (int p = p0; p < p1; ++p) {
        const double value = averaged ? 0.5 * (src[ch.first[p]] + src[ch.second[p]]) : src[ch.first[p]];
        if (value == 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w) {
          ch.re[w * np + p] += value * cs[w];
          ch.im[w * np + p] += value * sn[w];
        }
      }
    });
  }
}

void Simulation::Impl::energy(int workers, double& total, double& peak_abs) const {
  const int nz = dims.nz;
  std::vector<double> plane_energy(nz, 0.0), plane_peak(nz, 0.0);
  const std::size_t per_plane = static_cast<std::size_t>(dims.nx) * dims.ny;
  detail::parallel_for(0, nz, workers, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      double sum = 0.0, peak = 0.0;
      const std::size_t b = per_plane * k;
      for (std::size_t q = b; q < b + per_plane; ++q) {
        for (int a = 0; a < 3; ++a) {
          const double ev = e[a][q], hv = h[a][q];
          sum += eps_table[mat[a][q]] * ev * ev + hv * hv;
          peak = std::max({peak, std::abs(ev), std::abs(hv)});
          if (!std::isfinite(ev) || !std::isfinite(hv)) peak = std::numeric_limits<double>::infinity();
        }
      }
      plane_energy[k] = sum;
      plane_peak[k] = peak;
    }
  });
  total = 0.0;
  peak_abs = 0.0;
  for (int k = 0; k < nz; ++k) {
    total += plane_energy[k];
    peak_abs = std::max(peak_abs, plane_peak[k]);
  }
  total *= 0.5;
}

std::vector<SpectralMonitorResult> Simulation::Impl::collect() const {
  std::vector<SpectralMonitorResult> out;
  auto source_at = [&](double wl) {
    const double omega = 2.0 * std::numbers::pi * courant * dx_um / (1e-3 * wl);
    for (std::size_t w = 0; w < source_omega.size(); ++w) {
      if (std::abs(source_omega[w] - omega) <= 1e-12 * omega) return source_dft[w];
    }
    return Complex(1.0, 0.0);
  };
  auto extract = [&](const Channel& ch, std::size_t w, Eigen::Index rows, Eigen::Index cols, Complex norm) {
    ComplexArray arr(rows, cols);
    const std::size_t np = ch.points();
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t p = static_cast<std::size_t>(r + rows * c);
        arr(r, c) = Complex(ch.re[w * np + p], ch.im[w * np + p]) / norm;
      }
    }
    return arr;
  };

  for (const auto& plan : plans) {
    SpectralMonitorResult result = plan.shell;
    const auto& wls = result.wavelengths_nm;
    if (plan.spec.kind == MonitorKind::MapPlane) {
      for (std::size_t w = 0; w < wls.size(); ++w) {
        const Complex norm = source_at(wls[w]);
        std::array<ComplexArray, 3> comps;
        for (int a = 0; a < 3; ++a) {
          // Points were laid out with y fastest: that is column-major (cols = y) transposed.
          const Channel& ch = channels[plan.channels[a]];
          ComplexArray by_y = extract(ch, w, plan.map_cols, plan.map_rows, norm);
          comps[a] = by_y.transpose();
        }
        result.map_fields.push_back(std::move(comps));
      }
    } else {
      std::size_t c = 0;
      for (auto& face : result.faces) {
        for (FluxPair* pair : {&face.first, &face.second}) {
          const Channel& ce = channels[plan.channels[c++]];
          const Channel& chh = channels[plan.channels[c++]];
          const Eigen::Index rows = pair->weight.rows(), cols = pair->weight.cols();
          for (std::size_t w = 0; w < wls.size(); ++w) {
            const Complex norm = source_at(wls[w]);
            pair->e.push_back(extract(ce, w, rows, cols, norm));
            pair->h.push_back(extract(chh, w, rows, cols, norm));
          }
        }
      }
    }
    out.push_back(std::move(result));
  }
  return out;
}

Simulation::Simulation(Scene scene, GridSpec grid, DipoleSource source, std::vector<MonitorSpec> monitors)
    : impl_(std::make_unique<Impl>()) {
  impl_->scene = std::move(scene);
  impl_->grid = grid;
  impl_->source = source;
  impl_->validate();
  impl_->setup_dims();
  const double lambda_max = [&] {
    double m = 0.0;
    for (const auto& s : monitors)
      for (double wl : s.wavelengths_nm) m = std::max(m, wl);
    return m > 0.0 ? m : impl_->source.pulse.center_wavelength_nm;
  }();
  // Clearance between scene features and the absorbing layer.
  const double clearance = 0.5e-3 * lambda_max;
  const Scene& sc = impl_->scene;
  double feature_radius = 0.0;
  if (sc.kind() == GeometryKind::Sil) feature_radius = sc.sil_radius_um();
  if (sc.kind() == GeometryKind::SilTrench) feature_radius = sc.sil_radius_um() + sc.trench_width_um();
  const auto& d = impl_->dims;
  const double half_x = 0.5 * d.interior_nx * impl_->dx_um;
  const double half_y = 0.5 * d.interior_ny * impl_->dx_um;
  const double top = impl_->node_coord(2, d.nz - 1 - impl_->grid.pml_cells);
  const bool uniform_medium = sc.substrate().refractive_index == sc.ambient().refractive_index;
  if (!uniform_medium && (half_x < feature_radius + clearance || half_y < feature_radius + clearance ||
      top < sc.top_z_um() + clearance)) {
    fail(ErrorCategory::Domain, "domain too small for scene");
  }
  for (int a = 0; a < 3; ++a) {
    impl_->e[a].assign(d.cells(), 0.0);
    impl_->h[a].assign(d.cells(), 0.0);
  }
  impl_->rasterize();
  impl_->setup_pml();
  impl_->setup_source();
  impl_->setup_monitors(monitors);
}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

const Scene& Simulation::scene() const { return impl_->scene; }
const GridSpec& Simulation::grid() const { return impl_->grid; }
const DipoleSource& Simulation::source() const { return impl_->source; }
const GridDims& Simulation::dims() const { return impl_->dims; }
const RunStats& Simulation::stats() const { return impl_->stats; }

double Simulation::time_step_s() const {
  return impl_->courant * impl_->dx_um * 1e-6 / kSpeedOfLight;
}

Vec3 Simulation::source_position_um() const {
  Vec3 p;
  for (int a = 0; a < 3; ++a) p[a] = impl_->node_coord(a, impl_->source_node[a]);
  return p;
}

double Simulation::cell_permittivity(int axis, int i, int j, int k) const {
  return impl_->eps_table[impl_->mat[axis][flat(impl_->dims, i, j, k)]];
}

std::vector<SpectralMonitorResult> Simulation::run(const StopCriterion& stop, int workers) {
  Impl& s = *impl_;
  if (s.has_run) fail(ErrorCategory::Config, "a simulation can only be run once");
  s.has_run = true;
  workers = std::max(1, workers);
  const int max_steps = stop.mode == StopCriterion::Mode::FixedSteps ? stop.steps : stop.max_steps;
  const int interval = std::max(1, stop.check_interval);
  const double source_end = 2.0 * s.t0;

  double peak_energy = 0.0, peak_field = 0.0, energy = 0.0, field = 0.0;
  int n = 0;
  for (; n < max_steps; ++n) {
    const double t_half = n + 0.5;
    s.update_h(workers);
    s.accumulate(1, t_half, workers);
    s.update_e(workers);
    const double amp = s.pulse(t_half);
    if (amp != 0.0) {
      for (const auto& inj : s.injections) {
        s.e[inj.axis][inj.index] -= s.coef_table[s.mat[inj.axis][inj.index]] * inj.weight * amp;
      }
      for (std::size_t w = 0; w < s.source_omega.size(); ++w) {
        s.source_dft[w] += amp * std::polar(1.0, s.source_omega[w] * t_half);
      }
    }
    s.accumulate(0, n + 1.0, workers);

    if ((n + 1) % interval == 0) {
      s.energy(workers, energy, field);
      if (!std::isfinite(field) || (peak_field > 0.0 && field > 1e6 * peak_field)) {
        fail(ErrorCategory::Stability, "field divergence detected at step " + std::to_string(n + 1));
      }
      peak_energy = std::max(peak_energy, energy);
      peak_field = std::max(peak_field, field);
      if (stop.mode == StopCriterion::Mode::EnergyDecay && n + 1 > source_end && peak_energy > 0.0 &&
          energy < stop.energy_decay * peak_energy) {
        ++n;
        break;
      }
    }
  }
  s.energy(workers, energy, field);
  s.stats.steps = n;
  s.stats.final_energy_ratio = peak_energy > 0.0 ? energy / peak_energy : 0.0;
  s.stats.hit_step_cap = stop.mode == StopCriterion::Mode::EnergyDecay && n >= max_steps;
  return s.collect();
}

Simulation build_simulation(const Scene& scene, const GridSpec& grid, const DipoleSource& source,
                            const std::vector<MonitorSpec>& monitors) {
  return Simulation(scene, grid, source, monitors);
}

namespace {

double pair_flux(const FluxPair& pair, int w) {
  return pair.sign * 0.5 * (pair.weight * (pair.e[w] * pair.h[w].conjugate()).real()).sum();
}

}  // namespace

std::vector<double> face_fluxes(const SpectralMonitorResult& monitor, double wavelength_nm) {
  if (monitor.kind == MonitorKind::MapPlane) fail(ErrorCategory::Domain, "map planes carry no flux data");
  const int w = monitor.wavelength_index(wavelength_nm);
  const double area = monitor.cell_size_um * monitor.cell_size_um;
  std::vector<double> out;
  for (const auto& face : monitor.faces) {
    out.push_back(face.outward * area * (pair_flux(face.first, w) + pair_flux(face.second, w)));
  }
  return out;
}

double poynting_flux(const SpectralMonitorResult& monitor, double wavelength_nm) {
  double total = 0.0;
  for (double f : face_fluxes(monitor, wavelength_nm)) total += f;
  return total;
}

Eigen::ArrayXXd field_map(const SpectralMonitorResult& monitor, double wavelength_nm) {
  if (monitor.kind != MonitorKind::MapPlane) fail(ErrorCategory::Domain, "field_map needs a MapPlane monitor");
  const int w = monitor.wavelength_index(wavelength_nm);
  const auto& comps = monitor.map_fields[w];
  Eigen::ArrayXXd intensity = comps[0].abs2() + comps[1].abs2() + comps[2].abs2();
  const double peak = intensity.maxCoeff();
  if (peak > 0.0) intensity /= peak;
  return intensity;
}

}  // namespace silfdtd

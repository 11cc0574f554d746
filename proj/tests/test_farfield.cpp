#include <doctest.h>

#include <cmath>

#include "silfdtd/error.hpp"
#include "silfdtd/farfield.hpp"

using namespace silfdtd;

namespace {

Scene vacuum_scene() {
  SceneConfig c;
  c.geometry = "planar";
  c.substrate_index = 1.0;
  c.dipole_depth_um = 50.0;
  return build_scene(c);
}

struct PlaneRun {
  std::vector<SpectralMonitorResult> res;
};

PlaneRun plane_run() {
  GridSpec g;
  g.cell_size_um = 0.05;
  g.domain_extent_um = Vec3(4.0, 4.0, 1.6);
  g.z_floor_um = -0.8;
  g.pml_cells = 8;
  MonitorSpec plane;
  plane.kind = MonitorKind::PlaneAbove;
  plane.name = "p";
  plane.wavelengths_nm = {700};
  plane.plane_z_um = 0.15;
  MonitorSpec box;
  box.kind = MonitorKind::ClosedBox;
  box.name = "b";
  box.wavelengths_nm = {700};
  Simulation sim = build_simulation(vacuum_scene(), g, {}, {plane, box});
  return {sim.run(StopCriterion::decay())};
}

}  // namespace

TEST_CASE("angular spectrum accounts for the plane power") {
  static const PlaneRun run = plane_run();
  const auto sp = angular_spectrum(run.res[0], 700, 2);
  const double plane = poynting_flux(run.res[0], 700);
  const double total = poynting_flux(run.res[1], 700);
  // Only propagating components are kept, so the sum cannot exceed the flux
  // through the plane by more than clipping noise.
  CHECK(sp.total() <= plane * 1.02);
  CHECK(sp.total() > 0.8 * plane);
  CHECK(plane < 0.5 * total * 1.02);
  CHECK(sp.k_step == doctest::Approx(0.7 / (sp.size * 0.05)));
  // Half the power goes up; a plane 0.15 um above misses little of it.
  const double up = collection_efficiency(sp, total, 1.0);
  CHECK(up == doctest::Approx(0.5).epsilon(0.06));
  const double eta = collection_efficiency(sp, total, 0.9);
  CHECK(eta < up);
  CHECK_THROWS_AS(collection_efficiency(sp, total, 1.5), Error);
  CHECK_THROWS_AS(collection_efficiency(sp, 0.0, 0.9), Error);
  CHECK_THROWS_AS(collection_efficiency(sp, 1e-3 * total, 0.9), Error);
  CHECK_THROWS_AS(angular_spectrum(run.res[1], 700), Error);
  CHECK_THROWS_AS(angular_spectrum(run.res[0], 700, 2, 0.6), Error);
}

TEST_CASE("padding refines the k grid without moving power") {
  static const PlaneRun run = plane_run();
  const auto a = angular_spectrum(run.res[0], 700, 2);
  const auto b = angular_spectrum(run.res[0], 700, 4);
  CHECK(b.size == 2 * a.size);
  CHECK(b.total() == doctest::Approx(a.total()).epsilon(0.01));
}

TEST_CASE("band helpers") {
  CHECK(uniform_band(600, 800, 9).size() == 9);
  CHECK(uniform_band(600, 800, 9)[1] == doctest::Approx(625));
  CHECK(uniform_band(600, 800, 1) == std::vector<double>{700});
  CHECK(band_average({{600, 0.2}, {700, 0.4}}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(band_average({}), Error);
  CHECK_THROWS_AS(band_average({{550, 0.2}}), Error);
  CHECK_THROWS_AS(uniform_band(800, 600, 3), Error);
}

TEST_CASE("grid levels and preset domains") {
  CHECK(parse_grid_level("smoke") == GridLevel::Smoke);
  CHECK(cell_size_um(GridLevel::Default) == 0.025);
  CHECK(cell_size_um(GridLevel::Accurate) == 0.015);
  CHECK_THROWS_AS(parse_grid_level("fast"), Error);
  const GridSpec g = preset_grid("fig1b", GridLevel::Smoke);
  CHECK(g.cell_size_um == 0.05);
  // A ray at the NA edge from the centre meets the plane inside the interior.
  const double reach = (2.5 + 0.4) * std::tan(std::asin(0.9));
  CHECK(g.domain_extent_um.x() / 2 > reach);
}

TEST_CASE("analytic oracle follows the geometry") {
  const Scene planar = build_scene(scene_preset("fig1a"));
  const Scene sil = build_scene(scene_preset("fig1b"));
  CHECK(analytic_oracle(planar, 0.9) == doctest::Approx(0.04214).epsilon(1e-3));
  CHECK(analytic_oracle(sil, 0.9) == doctest::Approx(0.26996).epsilon(1e-3));
}

TEST_CASE("sweeps reject offsets outside the substrate before running") {
  const Scene c = build_scene(scene_preset("fig1c"));
  ScenarioSettings st;
  CHECK_THROWS_AS(displacement_sweep(c, Axis::Z, {0.0, 3.0}, st, "fig1c"), Error);
  CHECK(parse_axis("y") == Axis::Y);
  CHECK_THROWS_AS(parse_axis("w"), Error);
}

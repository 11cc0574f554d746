#pragma once

// Run configuration for the command-line tool. The on-disk format is JSON
// with the sections documented in README.md; unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "silfdtd/farfield.hpp"
#include "silfdtd/scene.hpp"

namespace silfdtd {

struct SweepSpec {
  Axis axis = Axis::X;
  std::vector<double> offsets_um = {-1.0, -0.5, 0.0, 0.5, 1.0};
};

struct RunConfig {
  std::string preset;  // empty for a hand-written scene
  GridLevel level = GridLevel::Default;
  SceneConfig scene;
  GridSpec grid;
  double band_min_nm = 600.0;
  double band_max_nm = 800.0;
  int band_samples = 9;
  double objective_na = 0.9;

  int workers = 1;
  StopCriterion stop = StopCriterion::decay();
  PulseSpec pulse;
  double box_half_size_um = 0.2;
  double plane_clearance_um = -1.0;
  double map_wavelength_nm = 700.0;
  int fft_padding = 2;
  double fft_taper = 0.0;

  SweepSpec sweep;

  std::filesystem::path output_directory = "runs/out";
  std::vector<std::string> formats = {"csv", "pgm"};

  void validate() const;
  ScenarioSettings settings() const;
  /// Canonical JSON text (sorted keys). Output location is excluded so the
  /// hash only reflects the physics and numerics.
  std::string canonical() const;
  std::string hash() const;
  bool wants(const std::string& format) const;
};

/// Scene and grid of a named preset at a grid level.
RunConfig preset_config(const std::string& preset, GridLevel level = GridLevel::Default);

/// Applies a JSON document on top of `base`. A "scene.preset" or
/// "grid.level" key re-seeds the scene or grid before the other keys apply.
RunConfig parse_config(const std::string& json_text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace silfdtd

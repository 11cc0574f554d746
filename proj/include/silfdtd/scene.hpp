#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace silfdtd {

using Vec3 = Eigen::Vector3d;

inline constexpr double kDiamondIndex = 2.42;

struct Material {
  double refractive_index = 1.0;

  double permittivity() const { return refractive_index * refractive_index; }
};

inline Material diamond() { return {kDiamondIndex}; }
inline Material vacuum() { return {1.0}; }

enum class GeometryKind { Planar, Sil, SilTrench };

std::string to_string(GeometryKind kind);

/// User-facing scene description. Lengths in micrometres.
///
/// `dipole_position_um` is measured from the surface reference point: for
/// Planar the flat surface is z = 0 and the dipole must sit below it; for Sil
/// and SilTrench the origin is the hemisphere centre on its base plane. When
/// unset, Planar uses (0, 0, -dipole_depth_um) and the SIL kinds use the
/// origin.
struct SceneConfig {
  std::string geometry = "sil";
  double sil_radius_um = 2.5;
  double trench_width_um = 2.0;
  double dipole_depth_um = 2.5;
  std::optional<Vec3> dipole_position_um;
  Vec3 dipole_orientation = Vec3::UnitX();
  double substrate_index = kDiamondIndex;
  double ambient_index = 1.0;
};

/// Validated, immutable geometry in the simulation frame.
///
/// Frame: z is the optical axis pointing out of the diamond. The SIL base
/// plane (and trench floor) is z = 0 with the hemisphere bulging into z > 0.
/// A planar surface sits at z = planar_surface_z so the nominal dipole is at
/// the origin. The trench is an annulus R <= rho < R + w with a flat floor at
/// z = 0; outside it the original surface is at z = R.
class Scene {
 public:
  GeometryKind kind() const { return kind_; }
  double sil_radius_um() const { return sil_radius_; }
  double trench_width_um() const { return trench_width_; }
  double trench_depth_um() const { return trench_depth_; }
  double planar_surface_z_um() const { return planar_surface_z_; }
  const Vec3& dipole_position_um() const { return dipole_position_; }
  const Vec3& dipole_orientation() const { return dipole_orientation_; }
  const Material& substrate() const { return substrate_; }
  const Material& ambient() const { return ambient_; }

  /// Highest point of the substrate (top of hemisphere or planar surface).
  double top_z_um() const;

  /// Copy with the dipole moved by `offset_um`; throws if it leaves the substrate.
  Scene with_dipole_offset(const Vec3& offset_um) const;
  Scene with_dipole_orientation(const Vec3& orientation) const;

 private:
  friend Scene build_scene(const SceneConfig& config);

  GeometryKind kind_ = GeometryKind::Sil;
  double sil_radius_ = 2.5;
  double trench_width_ = 0.0;
  double trench_depth_ = 0.0;
  double planar_surface_z_ = 0.0;
  Vec3 dipole_position_ = Vec3::Zero();
  Vec3 dipole_orientation_ = Vec3::UnitX();
  Material substrate_ = diamond();
  Material ambient_ = vacuum();
};

Scene build_scene(const SceneConfig& config);

/// Config for one of the named scenarios: "fig1a" (planar, dipole 2.5 um deep),
/// "fig1b" (2.5 um hemisphere), "fig1c" (hemisphere plus 2 um trench).
SceneConfig scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

/// True when `point_um` lies strictly inside the substrate.
bool in_substrate(const Scene& scene, const Vec3& point_um);

/// Relative permittivity at a point: substrate n^2 inside diamond, ambient n^2 elsewhere.
double permittivity_at(const Scene& scene, const Vec3& point_um);

}  // namespace silfdtd

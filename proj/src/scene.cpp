#include "silfdtd/scene.hpp"

#include <cmath>

#include "silfdtd/error.hpp"

namespace silfdtd {

std::string to_string(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::Planar: return "planar";
    case GeometryKind::Sil: return "sil";
    case GeometryKind::SilTrench: return "sil_trench";
  }
  return "unknown";
}

namespace {

GeometryKind parse_kind(const std::string& name) {
  if (name == "planar") return GeometryKind::Planar;
  if (name == "sil") return GeometryKind::Sil;
  if (name == "sil_trench" || name == "siltrench") return GeometryKind::SilTrench;
  fail(ErrorCategory::Config, "unknown geometry kind '" + name + "'");
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    fail(ErrorCategory::Config, std::string(name) + " must be positive");
  }
}

}  // namespace

double Scene::top_z_um() const {
  switch (kind_) {
    case GeometryKind::Planar: return planar_surface_z_;
    case GeometryKind::Sil:
    case GeometryKind::SilTrench: return sil_radius_;
  }
  return 0.0;
}

Scene Scene::with_dipole_offset(const Vec3& offset_um) const {
  Scene moved = *this;
  moved.dipole_position_ = dipole_position_ + offset_um;
  if (!in_substrate(moved, moved.dipole_position_)) {
    fail(ErrorCategory::Domain, "displaced dipole lies outside the substrate");
  }
  return moved;
}

Scene Scene::with_dipole_orientation(const Vec3& orientation) const {
  const double norm = orientation.norm();
  if (!(norm > 0.0)) fail(ErrorCategory::Config, "dipole orientation must be nonzero");
  Scene rotated = *this;
  rotated.dipole_orientation_ = orientation / norm;
  return rotated;
}

Scene build_scene(const SceneConfig& config) {
  Scene scene;
  scene.kind_ = parse_kind(config.geometry);

  if (!(config.substrate_index >= 1.0) || !(config.ambient_index >= 1.0)) {
    fail(ErrorCategory::Config, "refractive indices must be >= 1");
  }
  scene.substrate_ = Material{config.substrate_index};
  scene.ambient_ = Material{config.ambient_index};

  const double norm = config.dipole_orientation.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    fail(ErrorCategory::Config, "dipole orientation must be a nonzero finite vector");
  }
  scene.dipole_orientation_ = config.dipole_orientation / norm;

  switch (scene.kind_) {
    case GeometryKind::Planar: {
      Vec3 position = config.dipole_position_um.value_or(Vec3(0.0, 0.0, -config.dipole_depth_um));
      const double depth = -position.z();
      if (!(depth > 0.0)) {
        fail(ErrorCategory::Config, "planar dipole must lie below the surface");
      }
      // Surface moves to z = +depth so the dipole sits at the frame origin.
      scene.planar_surface_z_ = depth;
      scene.dipole_position_ = Vec3(position.x(), position.y(), 0.0);
      scene.sil_radius_ = 0.0;
      break;
    }
    case GeometryKind::Sil:
    case GeometryKind::SilTrench: {
      require_positive(config.sil_radius_um, "sil_radius_um");
      scene.sil_radius_ = config.sil_radius_um;
      if (scene.kind_ == GeometryKind::SilTrench) {
        require_positive(config.trench_width_um, "trench_width_um");
        scene.trench_width_ = config.trench_width_um;
        scene.trench_depth_ = config.sil_radius_um;
      }
      scene.dipole_position_ = config.dipole_position_um.value_or(Vec3::Zero());
      break;
    }
  }

  if (!in_substrate(scene, scene.dipole_position_)) {
    fail(ErrorCategory::Config, "dipole lies outside the substrate");
  }
  return scene;
}

SceneConfig scene_preset(const std::string& name) {
  SceneConfig config;
  if (name == "fig1a") {
    config.geometry = "planar";
    config.dipole_depth_um = 2.5;
  } else if (name == "fig1b") {
    config.geometry = "sil";
    config.sil_radius_um = 2.5;
  } else if (name == "fig1c") {
    config.geometry = "sil_trench";
    config.sil_radius_um = 2.5;
    config.trench_width_um = 2.0;
  } else {
    fail(ErrorCategory::Config, "unknown preset '" + name + "'");
  }
  return config;
}

std::vector<std::string> scene_preset_names() { return {"fig1a", "fig1b", "fig1c"}; }

bool in_substrate(const Scene& scene, const Vec3& p) {
  switch (scene.kind()) {
    case GeometryKind::Planar:
      return p.z() < scene.planar_surface_z_um();
    case GeometryKind::Sil: {
      const double r = scene.sil_radius_um();
      return p.z() < 0.0 || p.squaredNorm() < r * r;
    }
    case GeometryKind::SilTrench: {
      const double r = scene.sil_radius_um();
      if (p.z() < 0.0 || p.squaredNorm() < r * r) return true;
      const double outer = r + scene.trench_width_um();
      const double rho2 = p.x() * p.x() + p.y() * p.y();
      return rho2 >= outer * outer && p.z() < scene.trench_depth_um();
    }
  }
  return false;
}

double permittivity_at(const Scene& scene, const Vec3& point_um) {
  return in_substrate(scene, point_um) ? scene.substrate().permittivity()
                                       : scene.ambient().permittivity();
}

}  // namespace silfdtd

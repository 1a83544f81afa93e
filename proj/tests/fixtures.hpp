#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "hatnav/error.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/scene.hpp"

namespace fixtures {

using namespace hatnav;

inline FloorSlab floor_slab(double w, double d) {
  FloorSlab f;
  f.width = w;
  f.depth = d;
  return f;
}

inline BoxPrimitive box(double cx, double cy, double cz, double ex, double ey, double ez) {
  return BoxPrimitive{Vec3(cx, cy, cz), Vec3(ex, ey, ez)};
}

/// Box resting on z = 0 with the given footprint center and height.
inline BoxPrimitive standing_box(double cx, double cy, double ex, double ey, double h) {
  return box(cx, cy, 0.5 * h, ex, ey, h);
}

inline ArchPrimitive arch(double cx, double cy, double span, double clearance, char axis = 'x') {
  ArchPrimitive a;
  a.center = Vec2(cx, cy);
  a.span = span;
  a.pillar_width = 0.05;
  a.clearance = clearance;
  a.depth = 0.3;
  a.lintel_thickness = 0.05;
  a.span_axis = axis;
  return a;
}

inline SceneSpec arch_scene() {
  return SceneSpec{{floor_slab(3.0, 3.0), arch(1.5, 1.5, 1.2, 0.25)}};
}

inline SceneSpec table_scene() {
  SceneSpec s{{floor_slab(3.0, 3.0)}};
  s.primitives.emplace_back(box(1.5, 1.5, 0.40, 1.0, 0.6, 0.04));
  for (double dx : {-0.45, 0.45}) {
    for (double dy : {-0.25, 0.25}) s.primitives.emplace_back(standing_box(1.5 + dx, 1.5 + dy, 0.05, 0.05, 0.38));
  }
  return s;
}

inline SceneSpec low_box_scene() {
  return SceneSpec{{floor_slab(2.0, 2.0), standing_box(0.7, 1.0, 0.4, 0.4, 0.06), standing_box(1.4, 1.0, 0.3, 0.3, 0.12)}};
}

inline SceneSpec wall_scene() {
  return SceneSpec{{floor_slab(3.0, 2.0), standing_box(1.5, 1.0, 0.05, 1.4, 0.5)}};
}

/// Everything together in a 5 x 5 m room, including an overhang shelf.
inline SceneSpec room_scene() {
  SceneSpec s{{floor_slab(5.0, 5.0), arch(1.2, 3.8, 1.0, 0.22), arch(3.8, 1.2, 0.8, 0.28, 'y')}};
  s.primitives.emplace_back(box(3.6, 3.6, 0.40, 1.0, 0.6, 0.04));
  s.primitives.emplace_back(standing_box(3.15, 3.35, 0.05, 0.05, 0.38));
  s.primitives.emplace_back(standing_box(4.05, 3.85, 0.05, 0.05, 0.38));
  s.primitives.emplace_back(standing_box(1.0, 1.0, 0.5, 0.5, 0.05));
  s.primitives.emplace_back(standing_box(2.5, 2.5, 0.05, 1.5, 0.6));
  s.primitives.emplace_back(box(1.4, 2.2, 0.30, 0.6, 0.4, 0.10));  // floating shelf
  return s;
}

/// The benchmark room shipped in configs/.
inline std::filesystem::path source_dir() { return HATNAV_SOURCE_DIR; }

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hatnav_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline TraversabilityGrid uniform_grid(int nx, int ny, double res, CellClass cls = CellClass::kFree) {
  TraversabilityGrid g(Vec2::Zero(), res, {nx, ny}, 0.0);
  for (auto& c : g.cells()) {
    c.cls = cls;
    c.required_height = cls == CellClass::kFree ? 0.30 : cls == CellClass::kDuck ? 0.2 : NAN;
    c.clearance = cls == CellClass::kFree ? kUnbounded : 0.22;
  }
  return g;
}

template <typename Fn>
ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

}  // namespace fixtures

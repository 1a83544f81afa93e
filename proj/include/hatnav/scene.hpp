#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hatnav/geometry.hpp"

namespace hatnav {

inline constexpr double kDefaultVoxelResolution = 0.05;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;

  /// Throws ParseError on out-of-range or repeated indices.
  void validate() const;
  Aabb3 bounds() const;
  double surface_area() const;
  void append(const TriMesh& other);
};

struct PointCloud {
  std::vector<Vec3> points;

  Aabb3 bounds() const;
};

/// Dense occupancy volume. Voxel (ix, iy, iz) covers the half-open box
/// origin + [i, i+1) * resolution along each axis; linear index is x-fastest.
class VoxelGrid {
 public:
  using Index3 = std::array<int, 3>;

  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const Index3& dims);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return occupancy_.size(); }

  bool in_bounds(const Index3& idx) const;
  std::size_t linear(const Index3& idx) const {
    return (static_cast<std::size_t>(idx[2]) * dims_[1] + idx[1]) * dims_[0] + idx[0];
  }
  Index3 unlinear(std::size_t i) const;

  /// World point to voxel index. Points on a voxel face belong to the upper
  /// voxel; a relative bias of 1e-9 voxels absorbs round-off on such faces.
  Index3 index_of(const Vec3& p) const;
  Vec3 center(const Index3& idx) const;
  Aabb3 voxel_box(const Index3& idx) const;
  Aabb3 bounds() const;

  bool occupied(const Index3& idx) const { return occupancy_[linear(idx)] != 0; }
  bool occupied(std::size_t linear_index) const { return occupancy_[linear_index] != 0; }
  void set(const Index3& idx, bool value = true) { occupancy_[linear(idx)] = value ? 1 : 0; }
  std::size_t occupied_count() const;

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  std::vector<std::uint8_t>& occupancy() { return occupancy_; }

  /// Same origin/resolution/dims, nothing occupied.
  VoxelGrid empty_like() const { return VoxelGrid(origin_, resolution_, dims_); }

  bool operator==(const VoxelGrid& other) const = default;

 private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 1.0;
  Index3 dims_{0, 0, 0};
  std::vector<std::uint8_t> occupancy_;
};

inline constexpr double kVoxelFaceBias = 1e-9;

// ---------------------------------------------------------------------------
// Synthetic scenes

struct FloorSlab {
  double width = 5.0;   // along x
  double depth = 5.0;   // along y
  double thickness = 0.02;
  Vec2 corner = Vec2::Zero();  // min (x, y); top surface sits at z = 0
};

struct BoxPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 extents = Vec3::Ones();  // full edge lengths
};

/// Two pillars and a lintel standing on z = 0. `span` is the outer width
/// along the span axis; the opening under the lintel is span - 2 * pillar_width
/// wide and exactly `clearance` tall.
struct ArchPrimitive {
  Vec2 center = Vec2::Zero();
  double span = 1.0;
  double pillar_width = 0.05;
  double clearance = 0.25;
  double depth = 0.3;
  double lintel_thickness = 0.05;
  char span_axis = 'x';

  double total_height() const { return clearance + lintel_thickness; }
};

using Primitive = std::variant<FloorSlab, BoxPrimitive, ArchPrimitive>;

struct SceneSpec {
  std::vector<Primitive> primitives;
};

TriMesh gen_scene(const SceneSpec& spec);

/// Closed, outward-facing box mesh (8 vertices, 12 triangles).
TriMesh make_box(const Aabb3& box);

// ---------------------------------------------------------------------------
// I/O

/// ASCII OBJ (`v`, `f`) or ASCII PLY with vertex and face elements, picked by
/// extension. Polygons are fan-triangulated.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text);
TriMesh parse_ply_mesh(const std::string& text);

/// Reads the vertex element of an ASCII PLY (faces, if any, are ignored).
PointCloud load_point_cloud(const std::filesystem::path& path);
PointCloud parse_ply_points(const std::string& text);

void write_obj(const TriMesh& mesh, const std::filesystem::path& path);
std::string format_ply_points(const PointCloud& cloud);
void write_ply_points(const PointCloud& cloud, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// ---------------------------------------------------------------------------
// Voxelization and sampling

/// Surface voxelization. Each triangle is sampled on a barycentric lattice
/// with spacing <= resolution / 2 and its vertices are marked; an exact
/// triangle/box overlap pass then adds voxels the lattice stepped over.
/// Without explicit bounds the grid covers the mesh AABB padded by one voxel.
VoxelGrid voxelize(const TriMesh& mesh, double resolution,
                   const std::optional<Aabb3>& bounds = std::nullopt);

/// Marks voxels of `like`'s geometry containing at least one point.
VoxelGrid voxelize_points(const PointCloud& cloud, const VoxelGrid& like);

/// Area-weighted uniform sampling, round(area * density) points.
PointCloud sample_surface(const TriMesh& mesh, double density, std::uint64_t seed);

/// Greedy in-order thinning: keeps a point only if no kept point lies within
/// `min_distance`.
PointCloud thin_points(const PointCloud& cloud, double min_distance);

}  // namespace hatnav

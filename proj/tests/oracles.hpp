#pragma once

// Brute-force reference implementations used only by the tests. They are kept
// deliberately naive and share no code paths with the library beyond the
// plain data types.

#include <optional>
#include <vector>

#include "hatnav/heightmap.hpp"
#include "hatnav/scene.hpp"

namespace oracle {

using hatnav::Vec2;
using hatnav::Vec3;

/// Separating-axis test of a triangle against a closed box.
bool triangle_box_overlap(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& box_min, const Vec3& box_max);

/// Occupancy on `like`'s lattice: a voxel is set iff some triangle touches its
/// closed box, shifted down by 1e-9 * res so that shared faces belong to the
/// upper voxel.
hatnav::VoxelGrid sat_voxelize(const hatnav::TriMesh& mesh, const hatnav::VoxelGrid& like);

/// Per-cell classification straight from the definitions, scanning the
/// column's occupied voxel intervals.
hatnav::CellAnalysis classify_column(const hatnav::VoxelGrid& grid, int ix, int iy, double floor_z,
                                     const hatnav::RobotProfile& profile);

/// Equal class and heights; NaN equals NaN, finite values to 1e-12.
bool same_cell(const hatnav::CellAnalysis& a, const hatnav::CellAnalysis& b);

/// Cells of `tgrid` that disagree with classify_column over `grid`.
std::size_t segment_mismatches(const hatnav::VoxelGrid& grid, const hatnav::TraversabilityGrid& tgrid,
                               const hatnav::RobotProfile& profile);

/// Floor estimate recomputed by counting lowest voxels per column.
double floor_by_count(const hatnav::VoxelGrid& grid);

/// Moller-Trumbore; returns the ray parameter of the hit.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c);

/// All hit parameters of a ray against a mesh, sorted.
std::vector<double> ray_mesh(const Vec3& origin, const Vec3& dir, const hatnav::TriMesh& mesh);

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

double nearest_distance(const std::vector<Vec3>& cloud, const Vec3& q);

/// Inflation by painting each source cell's square neighbourhood.
hatnav::TraversabilityGrid paint_inflate(const hatnav::TraversabilityGrid& grid, int k);

}  // namespace oracle

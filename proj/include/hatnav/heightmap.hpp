#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hatnav/geometry.hpp"
#include "hatnav/scene.hpp"

namespace hatnav {

/// Geometric capability envelope of the legged robot.
struct RobotProfile {
  double h_max = 0.30;
  double h_min = 0.15;
  double step_max = 0.08;
  double footprint_radius = 0.15;
  double safety_margin = 0.02;

  /// Throws InvalidConfig when the envelope is inconsistent.
  void validate() const;
};

enum class CellClass : std::uint8_t { kFree = 0, kDuck = 1, kBlocked = 2 };

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct CellAnalysis {
  double support_height = 0.0;
  double clearance = kUnbounded;
  CellClass cls = CellClass::kFree;
  /// NaN for BLOCKED cells.
  double required_height = std::numeric_limits<double>::quiet_NaN();

  bool passable() const { return cls != CellClass::kBlocked; }
};

class TraversabilityGrid {
 public:
  using Index2 = std::array<int, 2>;

  TraversabilityGrid() = default;
  TraversabilityGrid(const Vec2& origin, double resolution, const Index2& dims, double floor_z);

  const Vec2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index2& dims() const { return dims_; }
  double floor_z() const { return floor_z_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(const Index2& idx) const {
    return idx[0] >= 0 && idx[1] >= 0 && idx[0] < dims_[0] && idx[1] < dims_[1];
  }
  std::size_t linear(const Index2& idx) const {
    return static_cast<std::size_t>(idx[1]) * dims_[0] + idx[0];
  }
  Index2 index_of(const Vec2& p) const;
  Vec2 center(const Index2& idx) const;
  Rect2 world_rect() const;

  CellAnalysis& at(const Index2& idx) { return cells_[linear(idx)]; }
  const CellAnalysis& at(const Index2& idx) const { return cells_[linear(idx)]; }
  const std::vector<CellAnalysis>& cells() const { return cells_; }
  std::vector<CellAnalysis>& cells() { return cells_; }

  /// Cell containing `p`, or nullptr outside the grid.
  const CellAnalysis* lookup(const Vec2& p) const;

  std::size_t count(CellClass cls) const;

 private:
  Vec2 origin_ = Vec2::Zero();
  double resolution_ = 1.0;
  Index2 dims_{0, 0};
  double floor_z_ = 0.0;
  std::vector<CellAnalysis> cells_;
};

/// Mode of the per-column lowest occupied voxel centers; ties go low.
double estimate_floor(const VoxelGrid& grid);

/// Thresholds are compared with this slack so values that are equal up to
/// round-off classify the same way.
inline constexpr double kClassifyTolerance = 1e-9;

/// Classifies one voxel column. `z_centers` must be strictly increasing with
/// spacing equal to `resolution`.
///
/// The support run is the highest maximal occupied run whose bottom face lies
/// in [floor_z - resolution, floor_z + step_max]. Support height and the
/// support top are measured at the center of the run's top voxel, so a
/// one-voxel floor has zero support height at any resolution. Clearance runs
/// from the support top to the bottom face of the next occupied voxel.
CellAnalysis analyze_column(std::span<const std::uint8_t> occupied, std::span<const double> z_centers,
                            double resolution, double floor_z, const RobotProfile& profile);

TraversabilityGrid segment(const VoxelGrid& grid, const RobotProfile& profile);

/// Square (Chebyshev) dilation with half-width ceil(radius / resolution) cells.
/// BLOCKED spreads over everything; DUCK spreads over FREE and takes the
/// lowest contributing requirement.
TraversabilityGrid inflate(const TraversabilityGrid& grid, double radius);

}  // namespace hatnav

#include "hatnav/heightmap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hatnav/error.hpp"

namespace hatnav {

void RobotProfile::validate() const {
  const bool ok = std::isfinite(h_max) && std::isfinite(h_min) && std::isfinite(step_max) &&
                  std::isfinite(footprint_radius) && std::isfinite(safety_margin) && h_min > 0.0 && h_min <= h_max &&
                  step_max >= 0.0 && step_max < h_min && footprint_radius > 0.0 && safety_margin >= 0.0;
  if (!ok) throw Error(ErrorCode::kInvalidConfig, "robot profile violates 0 < h_min <= h_max, 0 <= step_max < h_min");
}

TraversabilityGrid::TraversabilityGrid(const Vec2& origin, double resolution, const Index2& dims, double floor_z)
    : origin_(origin), resolution_(resolution), dims_(dims), floor_z_(floor_z) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::kInvalidResolution, "cell resolution must be positive");
  if (dims[0] <= 0 || dims[1] <= 0) throw Error(ErrorCode::kEmptyGrid, "grid dimensions must be positive");
  if (!std::isfinite(floor_z)) throw Error(ErrorCode::kInvalidArgument, "floor height must be finite");
  cells_.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
}

TraversabilityGrid::Index2 TraversabilityGrid::index_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_ + kVoxelFaceBias)),
          static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_ + kVoxelFaceBias))};
}

Vec2 TraversabilityGrid::center(const Index2& idx) const {
  return origin_ + resolution_ * Vec2(idx[0] + 0.5, idx[1] + 0.5);
}

Rect2 TraversabilityGrid::world_rect() const {
  return {origin_, origin_ + resolution_ * Vec2(dims_[0], dims_[1])};
}

const CellAnalysis* TraversabilityGrid::lookup(const Vec2& p) const {
  const auto idx = index_of(p);
  return in_bounds(idx) ? &at(idx) : nullptr;
}

std::size_t TraversabilityGrid::count(CellClass cls) const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [cls](const CellAnalysis& c) { return c.cls == cls; }));
}

double estimate_floor(const VoxelGrid& grid) {
  const auto& d = grid.dims();
  std::vector<std::size_t> histogram(static_cast<std::size_t>(d[2]), 0);
  bool any = false;
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      for (int iz = 0; iz < d[2]; ++iz) {
        if (grid.occupied({ix, iy, iz})) {
          ++histogram[iz];
          any = true;
          break;
        }
      }
    }
  }
  if (!any) throw Error(ErrorCode::kEmptyGrid, "no occupied voxels");
  // max_element returns the first maximum, i.e. the lowest level on ties.
  const auto best = std::max_element(histogram.begin(), histogram.end()) - histogram.begin();
  return grid.center({0, 0, static_cast<int>(best)}).z();
}

CellAnalysis analyze_column(std::span<const std::uint8_t> occupied, std::span<const double> z_centers,
                            double resolution, double floor_z, const RobotProfile& profile) {
  if (occupied.size() != z_centers.size()) {
    throw Error(ErrorCode::kInvalidArgument, "occupancy and z-center lists differ in length");
  }
  if (!(resolution > 0.0)) throw Error(ErrorCode::kInvalidResolution, "column resolution must be positive");
  const double spacing_tol = 1e-9 * std::max(1.0, resolution);
  for (std::size_t i = 1; i < z_centers.size(); ++i) {
    if (std::abs(z_centers[i] - z_centers[i - 1] - resolution) > spacing_tol) {
      throw Error(ErrorCode::kNonUniformSpacing, "column z-centers must be increasing at the voxel resolution");
    }
  }

  const double half = 0.5 * resolution;
  const std::size_t n = occupied.size();
  std::size_t support_end = n;  // index of the support run's top voxel, n if none
  for (std::size_t i = 0; i < n;) {
    if (!occupied[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && occupied[j + 1]) ++j;
    const double bottom = z_centers[i] - half;
    if (bottom >= floor_z - resolution - kClassifyTolerance && bottom <= floor_z + profile.step_max + kClassifyTolerance) {
      support_end = j;
    }
    i = j + 1;
  }

  CellAnalysis cell;
  const double support_top = support_end < n ? z_centers[support_end] : floor_z;
  cell.support_height = std::max(0.0, support_top - floor_z);

  std::size_t next = n;
  for (std::size_t i = support_end < n ? support_end + 1 : 0; i < n; ++i) {
    if (occupied[i] && z_centers[i] > support_top) {
      next = i;
      break;
    }
  }
  cell.clearance = next < n ? std::max(0.0, z_centers[next] - half - support_top) : kUnbounded;

  if (cell.support_height > profile.step_max + kClassifyTolerance) {
    cell.cls = CellClass::kBlocked;
    return cell;
  }
  const double usable = cell.clearance - profile.safety_margin;
  if (usable >= profile.h_max - kClassifyTolerance) {
    cell.cls = CellClass::kFree;
    cell.required_height = profile.h_max;
  } else if (usable >= profile.h_min - kClassifyTolerance) {
    cell.cls = CellClass::kDuck;
    cell.required_height = std::clamp(usable, profile.h_min, std::nextafter(profile.h_max, 0.0));
  } else {
    cell.cls = CellClass::kBlocked;
  }
  return cell;
}

TraversabilityGrid segment(const VoxelGrid& grid, const RobotProfile& profile) {
  profile.validate();
  if (grid.size() == 0) throw Error(ErrorCode::kEmptyGrid, "voxel grid is empty");
  const double floor_z = estimate_floor(grid);
  const auto& d = grid.dims();
  TraversabilityGrid out(grid.origin().head<2>(), grid.resolution(), {d[0], d[1]}, floor_z);

  std::vector<double> z_centers(static_cast<std::size_t>(d[2]));
  for (int iz = 0; iz < d[2]; ++iz) z_centers[iz] = grid.center({0, 0, iz}).z();
  std::vector<std::uint8_t> column(static_cast<std::size_t>(d[2]));
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      for (int iz = 0; iz < d[2]; ++iz) column[iz] = grid.occupied({ix, iy, iz}) ? 1 : 0;
      out.at({ix, iy}) = analyze_column(column, z_centers, grid.resolution(), floor_z, profile);
    }
  }
  return out;
}

TraversabilityGrid inflate(const TraversabilityGrid& grid, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "inflation radius must be non-negative");
  }
  const int k = static_cast<int>(std::ceil(radius / grid.resolution() - 1e-9));
  if (k <= 0) return grid;

  TraversabilityGrid out = grid;
  const auto& d = grid.dims();
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      bool blocked = false;
      bool duck = false;
      double required = kUnbounded;
      double clearance = kUnbounded;
      for (int dy = -k; dy <= k && !blocked; ++dy) {
        for (int dx = -k; dx <= k; ++dx) {
          const TraversabilityGrid::Index2 nb{ix + dx, iy + dy};
          if (!grid.in_bounds(nb)) continue;
          const auto& c = grid.at(nb);
          if (c.cls == CellClass::kBlocked) {
            blocked = true;
            break;
          }
          if (c.cls == CellClass::kDuck) {
            duck = true;
            required = std::min(required, c.required_height);
            clearance = std::min(clearance, c.clearance);
          }
        }
      }
      auto& cell = out.at({ix, iy});
      if (blocked) {
        cell.cls = CellClass::kBlocked;
        cell.required_height = std::numeric_limits<double>::quiet_NaN();
      } else if (duck) {
        cell.cls = CellClass::kDuck;
        cell.required_height = required;
        cell.clearance = clearance;
      }
    }
  }
  return out;
}

}  // namespace hatnav

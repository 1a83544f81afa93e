#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hatnav/geometry.hpp"
#include "hatnav/scene.hpp"

namespace hatnav {

struct MapObject {
  int id = 0;
  Aabb3 box;
  std::vector<std::size_t> voxels;  // linear indices into the source grid
};

struct ObjectSet {
  std::vector<MapObject> objects;
};

/// 26-connected components of occupied voxels whose centers lie strictly
/// above floor_z + resolution / 2.
ObjectSet extract_objects(const VoxelGrid& grid, double floor_z, std::size_t min_voxels = 5);

double bbox_iou(const Aabb3& a, const Aabb3& b);

/// Occupied-voxel IoU of two grids on the same lattice; 0 when both are empty.
double voxel_iou(const VoxelGrid& a, const VoxelGrid& b);

struct MatchPair {
  int pred = 0;
  int gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<MatchPair> pairs;
};

/// Greedy matching in descending IoU order.
MatchResult match_objects(const ObjectSet& pred, const ObjectSet& gt, double iou_threshold);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

Prf prf(int tp, int fp, int fn);

/// RMS nearest-neighbour distance from each reconstructed point to the ground
/// truth cloud (exact search over a hashed grid).
double sdf_rmse(const PointCloud& recon, const PointCloud& gt);

/// Exact nearest-neighbour distances through a uniform hash grid.
class NearestNeighborIndex {
 public:
  explicit NearestNeighborIndex(const PointCloud& cloud, double cell_size = 0.0);
  double nearest_distance(const Vec3& q) const;

 private:
  std::int64_t key(std::int64_t x, std::int64_t y, std::int64_t z) const;
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const;

  const PointCloud& cloud_;
  double cell_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  std::array<std::int64_t, 3> span_{1, 1, 1};
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> sorted_;
  std::array<std::int64_t, 3> lo_{0, 0, 0};
};

struct EvalSettings {
  double iou_threshold = 0.5;
  std::size_t min_object_voxels = 5;
  bool voxel_iou = false;  // also report occupied-voxel IoU
};

struct EvalReport {
  std::vector<double> iou_per_object;  // per ground-truth object, 0 when unmatched
  double iou_mean = 0.0;
  double iou_pooled = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double sdf_rmse = 0.0;
  std::optional<double> voxel_iou;
  double mapping_time = 0.0;
};

/// Objects come from `pred_grid` and from the ground-truth cloud voxelized on
/// the same lattice; the surface error compares `recon` against `gt`.
EvalReport evaluate_map(const VoxelGrid& pred_grid, const PointCloud& recon, const PointCloud& gt,
                        const EvalSettings& settings);

}  // namespace hatnav

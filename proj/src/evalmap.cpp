#include "hatnav/evalmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hatnav/error.hpp"
#include "hatnav/heightmap.hpp"

namespace hatnav {

ObjectSet extract_objects(const VoxelGrid& grid, double floor_z, std::size_t min_voxels) {
  if (grid.size() == 0) throw Error(ErrorCode::kEmptyGrid, "voxel grid is empty");
  const double z_cut = floor_z + 0.5 * grid.resolution();
  std::vector<std::uint8_t> visited(grid.size(), 0);
  ObjectSet set;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (visited[start] || !grid.occupied(start)) continue;
    if (!(grid.center(grid.unlinear(start)).z() > z_cut)) continue;
    MapObject obj;
    stack.assign(1, start);
    visited[start] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      obj.voxels.push_back(cur);
      const auto c = grid.unlinear(cur);
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const VoxelGrid::Index3 nb{c[0] + dx, c[1] + dy, c[2] + dz};
            if (!grid.in_bounds(nb)) continue;
            const std::size_t li = grid.linear(nb);
            if (visited[li] || !grid.occupied(li)) continue;
            if (!(grid.center(nb).z() > z_cut)) continue;
            visited[li] = 1;
            stack.push_back(li);
          }
        }
      }
    }
    if (obj.voxels.size() < min_voxels) continue;
    std::sort(obj.voxels.begin(), obj.voxels.end());
    for (auto li : obj.voxels) {
      const Aabb3 vb = grid.voxel_box(grid.unlinear(li));
      obj.box.extend(vb.min);
      obj.box.extend(vb.max);
    }
    obj.id = static_cast<int>(set.objects.size());
    set.objects.push_back(std::move(obj));
  }
  return set;
}

namespace {

double intersection_volume(const Aabb3& a, const Aabb3& b) {
  double vol = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double overlap = std::min(a.max[k], b.max[k]) - std::max(a.min[k], b.min[k]);
    if (overlap <= 0.0) return 0.0;
    vol *= overlap;
  }
  return vol;
}

}  // namespace

double bbox_iou(const Aabb3& a, const Aabb3& b) {
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double voxel_iou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.dims() != b.dims() || a.origin() != b.origin() || a.resolution() != b.resolution()) {
    throw Error(ErrorCode::kInvalidArgument, "voxel IoU needs grids on the same lattice");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.occupied(i) && b.occupied(i);
    uni += a.occupied(i) || b.occupied(i);
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

MatchResult match_objects(const ObjectSet& pred, const ObjectSet& gt, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0, 1)");
  }
  std::vector<MatchPair> candidates;
  for (std::size_t i = 0; i < pred.objects.size(); ++i) {
    for (std::size_t j = 0; j < gt.objects.size(); ++j) {
      const double iou = bbox_iou(pred.objects[i].box, gt.objects[j].box);
      if (iou >= iou_threshold) candidates.push_back({static_cast<int>(i), static_cast<int>(j), iou});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const MatchPair& a, const MatchPair& b) { return a.iou > b.iou; });
  std::vector<std::uint8_t> pred_used(pred.objects.size(), 0);
  std::vector<std::uint8_t> gt_used(gt.objects.size(), 0);
  MatchResult out;
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = 1;
    out.pairs.push_back(c);
  }
  out.tp = static_cast<int>(out.pairs.size());
  out.fp = static_cast<int>(pred.objects.size()) - out.tp;
  out.fn = static_cast<int>(gt.objects.size()) - out.tp;
  return out;
}

Prf prf(int tp, int fp, int fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw Error(ErrorCode::kInvalidArgument, "confusion counts must be >= 0");
  Prf out;
  out.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  const double s = out.precision + out.recall;
  out.f_score = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Nearest neighbour

NearestNeighborIndex::NearestNeighborIndex(const PointCloud& cloud, double cell_size) : cloud_(cloud) {
  if (cloud.points.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot index an empty cloud");
  const Aabb3 box = cloud.bounds();
  const Vec3 ext = box.extents().cwiseMax(1e-9);
  const double n = static_cast<double>(cloud.points.size());
  cell_ = cell_size > 0.0 ? cell_size : std::max(std::cbrt(ext.prod() / n), ext.maxCoeff() / std::sqrt(n));
  if (!(cell_ > 0.0)) cell_ = 1.0;
  const double cap = 8.0 * n + 1024.0;
  for (;;) {
    double cells = 1.0;
    for (int a = 0; a < 3; ++a) {
      span_[a] = static_cast<std::int64_t>(std::floor(ext[a] / cell_)) + 1;
      cells *= static_cast<double>(span_[a]);
    }
    if (cells <= cap) break;
    cell_ *= 1.5;
  }
  origin_ = box.min;

  const auto total = static_cast<std::size_t>(span_[0] * span_[1] * span_[2]);
  std::vector<std::size_t> counts(total + 1, 0);
  std::vector<std::size_t> keys(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto c = cell_of(cloud.points[i]);
    keys[i] = static_cast<std::size_t>(key(c[0], c[1], c[2]));
    ++counts[keys[i] + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  cell_start_ = counts;
  sorted_.resize(cloud.points.size());
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) sorted_[fill[keys[i]]++] = i;
}

std::int64_t NearestNeighborIndex::key(std::int64_t x, std::int64_t y, std::int64_t z) const {
  return (z * span_[1] + y) * span_[0] + x;
}

std::array<std::int64_t, 3> NearestNeighborIndex::cell_of(const Vec3& p) const {
  std::array<std::int64_t, 3> c;
  for (int a = 0; a < 3; ++a) {
    c[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p[a] - origin_[a]) / cell_)), 0, span_[a] - 1);
  }
  return c;
}

double NearestNeighborIndex::nearest_distance(const Vec3& q) const {
  const auto c = cell_of(q);
  double best2 = std::numeric_limits<double>::infinity();
  const std::int64_t max_ring = std::max({span_[0], span_[1], span_[2]});
  for (std::int64_t r = 0; r <= max_ring; ++r) {
    for (std::int64_t z = c[2] - r; z <= c[2] + r; ++z) {
      if (z < 0 || z >= span_[2]) continue;
      for (std::int64_t y = c[1] - r; y <= c[1] + r; ++y) {
        if (y < 0 || y >= span_[1]) continue;
        const bool yz_shell = std::abs(z - c[2]) == r || std::abs(y - c[1]) == r;
        for (std::int64_t x = c[0] - r; x <= c[0] + r; ++x) {
          if (x < 0 || x >= span_[0]) continue;
          if (!yz_shell && std::abs(x - c[0]) != r) continue;
          const auto k = static_cast<std::size_t>(key(x, y, z));
          for (std::size_t s = cell_start_[k]; s < cell_start_[k + 1]; ++s) {
            best2 = std::min(best2, (cloud_.points[sorted_[s]] - q).squaredNorm());
          }
        }
      }
    }
    // Anything beyond ring r is at least r cells away from q's cell.
    const double reach = static_cast<double>(r) * cell_;
    if (best2 <= reach * reach) break;
  }
  return std::sqrt(best2);
}

double sdf_rmse(const PointCloud& recon, const PointCloud& gt) {
  if (recon.points.empty() || gt.points.empty()) throw Error(ErrorCode::kEmptyCloud, "both clouds must be non-empty");
  const NearestNeighborIndex index(gt);
  double sum = 0.0;
  for (const auto& p : recon.points) {
    const double dist = index.nearest_distance(p);
    sum += dist * dist;
  }
  return std::sqrt(sum / static_cast<double>(recon.points.size()));
}

EvalReport evaluate_map(const VoxelGrid& pred_grid, const PointCloud& recon, const PointCloud& gt,
                        const EvalSettings& settings) {
  if (gt.points.empty() || recon.points.empty()) throw Error(ErrorCode::kEmptyCloud, "evaluation clouds are empty");
  const VoxelGrid gt_grid = voxelize_points(gt, pred_grid);
  const ObjectSet pred_objects = extract_objects(pred_grid, estimate_floor(pred_grid), settings.min_object_voxels);
  const ObjectSet gt_objects = extract_objects(gt_grid, estimate_floor(gt_grid), settings.min_object_voxels);
  const MatchResult match = match_objects(pred_objects, gt_objects, settings.iou_threshold);
  const Prf scores = prf(match.tp, match.fp, match.fn);

  EvalReport report;
  report.tp = match.tp;
  report.fp = match.fp;
  report.fn = match.fn;
  report.precision = scores.precision;
  report.recall = scores.recall;
  report.f_score = scores.f_score;
  report.iou_per_object.assign(gt_objects.objects.size(), 0.0);
  double inter_sum = 0.0;
  double union_sum = 0.0;
  for (const auto& pair : match.pairs) {
    report.iou_per_object[pair.gt] = pair.iou;
    const Aabb3& a = pred_objects.objects[pair.pred].box;
    const Aabb3& b = gt_objects.objects[pair.gt].box;
    const double inter = intersection_volume(a, b);
    inter_sum += inter;
    union_sum += a.volume() + b.volume() - inter;
  }
  if (!report.iou_per_object.empty()) {
    report.iou_mean = std::accumulate(report.iou_per_object.begin(), report.iou_per_object.end(), 0.0) /
                      static_cast<double>(report.iou_per_object.size());
  }
  report.iou_pooled = union_sum > 0.0 ? inter_sum / union_sum : 0.0;
  report.sdf_rmse = sdf_rmse(recon, gt);
  if (settings.voxel_iou) report.voxel_iou = voxel_iou(pred_grid, gt_grid);
  return report;
}

}  // namespace hatnav

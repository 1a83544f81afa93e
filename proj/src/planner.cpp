#include "hatnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "hatnav/error.hpp"

namespace hatnav {

bool Trajectory::valid() const {
  if (waypoints.size() < 2) return false;
  if (waypoints.front().position != start || waypoints.back().position != goal) return false;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (waypoints[i].position == waypoints[i - 1].position) return false;
  }
  return true;
}

double Trajectory::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i].position - waypoints[i - 1].position).norm();
  return len;
}

void PlannerConfig::validate() const {
  const bool weights_ok = w_len >= 0.0 && w_smooth >= 0.0 && w_col >= 0.0 && w_duck >= 0.0;
  if (n_waypoints < 8) throw Error(ErrorCode::kInvalidConfig, "n_waypoints must be >= 8");
  if (!weights_ok) throw Error(ErrorCode::kInvalidConfig, "objective weights must be non-negative");
  if (!(p_stop > 0.0 && p_stop < 1.0)) throw Error(ErrorCode::kInvalidConfig, "p_stop must lie in (0, 1)");
  if (footprint_samples < 1) throw Error(ErrorCode::kInvalidConfig, "footprint_samples must be >= 1");
  if (!(waypoint_lr > 0.0)) throw Error(ErrorCode::kInvalidConfig, "waypoint_lr must be positive");
  if (outer_iterations < 1 || field_steps < 0 || waypoint_steps < 0) {
    throw Error(ErrorCode::kInvalidConfig, "iteration counts must be non-negative (outer >= 1)");
  }
  if (!(footprint_radius >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "footprint_radius must be >= 0");
  field.validate();
}

bool passable_for(const CellAnalysis& cell, PlanMode mode) {
  return mode == PlanMode::kHat ? cell.cls != CellClass::kBlocked : cell.cls == CellClass::kFree;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& polyline, int n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two samples");
  std::vector<Vec2> pts;
  for (const auto& p : polyline) {
    if (pts.empty() || p != pts.back()) pts.push_back(p);
  }
  if (pts.size() < 2) throw Error(ErrorCode::kInvalidArgument, "polyline has zero length");
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = cum.back();

  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(pts.front());
  std::size_t seg = 1;
  for (int k = 1; k + 1 < n; ++k) {
    const double s = total * k / (n - 1);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(pts[seg - 1] + t * (pts[seg] - pts[seg - 1]));
  }
  out.push_back(pts.back());
  return out;
}

Trajectory seed_path(const TraversabilityGrid& grid, const Vec2& start, const Vec2& goal, PlanMode mode, int n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two waypoints");
  const auto s_idx = grid.index_of(start);
  const auto g_idx = grid.index_of(goal);
  if (!grid.in_bounds(s_idx) || !passable_for(grid.at(s_idx), mode)) {
    throw Error(ErrorCode::kStartBlocked, "start is not in a passable cell");
  }
  if (!grid.in_bounds(g_idx) || !passable_for(grid.at(g_idx), mode)) {
    throw Error(ErrorCode::kGoalBlocked, "goal is not in a passable cell");
  }
  if (start == goal) throw Error(ErrorCode::kInvalidArgument, "start and goal coincide");

  const auto& d = grid.dims();
  const std::size_t total = grid.size();
  const double res = grid.resolution();
  std::vector<double> g_cost(total, kUnbounded);
  std::vector<std::int64_t> parent(total, -1);
  std::vector<std::uint8_t> closed(total, 0);
  const Vec2 goal_center = grid.center(g_idx);
  auto heuristic = [&](const TraversabilityGrid::Index2& idx) { return (grid.center(idx) - goal_center).norm(); };
  auto passable = [&](int ix, int iy) {
    return grid.in_bounds({ix, iy}) && passable_for(grid.at({ix, iy}), mode);
  };

  using Entry = std::tuple<double, int, int>;  // f, ix, iy: ties resolve to the smaller (ix, iy)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g_cost[grid.linear(s_idx)] = 0.0;
  open.emplace(heuristic(s_idx), s_idx[0], s_idx[1]);
  bool found = false;
  while (!open.empty()) {
    const auto [f, ix, iy] = open.top();
    open.pop();
    const std::size_t cur = grid.linear({ix, iy});
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (ix == g_idx[0] && iy == g_idx[1]) {
      found = true;
      break;
    }
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = ix + dx;
        const int ny = iy + dy;
        if (!passable(nx, ny)) continue;
        // Diagonal moves may not clip a non-passable corner.
        if (dx != 0 && dy != 0 && (!passable(ix + dx, iy) || !passable(ix, iy + dy))) continue;
        const std::size_t nb = grid.linear({nx, ny});
        if (closed[nb]) continue;
        const double step = (dx != 0 && dy != 0) ? res * M_SQRT2 : res;
        const double cand = g_cost[cur] + step;
        if (cand < g_cost[nb]) {
          g_cost[nb] = cand;
          parent[nb] = static_cast<std::int64_t>(cur);
          open.emplace(cand + heuristic({nx, ny}), nx, ny);
        }
      }
    }
  }
  if (!found) throw Error(ErrorCode::kNoFeasiblePath, "no passable connection between start and goal");

  std::vector<std::size_t> cells;
  for (auto c = static_cast<std::int64_t>(grid.linear(g_idx)); c >= 0; c = parent[static_cast<std::size_t>(c)]) {
    cells.push_back(static_cast<std::size_t>(c));
  }
  std::reverse(cells.begin(), cells.end());
  std::vector<Vec2> polyline{start};
  for (std::size_t i = 1; i + 1 < cells.size(); ++i) {
    const auto c = cells[i];
    polyline.push_back(grid.center({static_cast<int>(c % d[0]), static_cast<int>(c / d[0])}));
  }
  polyline.push_back(goal);

  Trajectory traj;
  traj.start = start;
  traj.goal = goal;
  for (const auto& p : resample_polyline(polyline, n)) traj.waypoints.push_back({p});
  return traj;
}

namespace {

/// Cost and (optionally) gradient over the waypoint positions.
ObjectiveResult evaluate_objective(const std::vector<Vec2>& p, const NeuralField& field, const PlannerConfig& cfg,
                                   bool with_grad) {
  const std::size_t n = p.size();
  ObjectiveResult out;
  if (with_grad) out.grad.assign(n, Vec2::Zero());

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 seg = p[i + 1] - p[i];
    out.terms.length += cfg.w_len * seg.squaredNorm();
    if (with_grad) {
      out.grad[i + 1] += 2.0 * cfg.w_len * seg;
      out.grad[i] -= 2.0 * cfg.w_len * seg;
    }
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 acc = p[i + 1] - 2.0 * p[i] + p[i - 1];
    out.terms.smooth += cfg.w_smooth * acc.squaredNorm();
    if (with_grad) {
      out.grad[i + 1] += 2.0 * cfg.w_smooth * acc;
      out.grad[i] -= 4.0 * cfg.w_smooth * acc;
      out.grad[i - 1] += 2.0 * cfg.w_smooth * acc;
    }
  }

  const int k = cfg.footprint_samples;
  Eigen::Matrix2Xd samples(2, static_cast<Eigen::Index>(n) * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (int s = 0; s < k; ++s) {
      const double a = 2.0 * M_PI * s / k;
      samples.col(static_cast<Eigen::Index>(i) * k + s) = p[i] + cfg.footprint_radius * Vec2(std::cos(a), std::sin(a));
    }
  }
  Eigen::Matrix2Xd probs;
  Eigen::Matrix4Xd grads;
  field_evaluate(field, samples, probs, with_grad ? &grads : nullptr);
  const double inv_k = 1.0 / k;
  for (std::size_t i = 0; i < n; ++i) {
    double block = 0.0;
    double duck = 0.0;
    Vec2 g_block = Vec2::Zero();
    Vec2 g_duck = Vec2::Zero();
    for (int s = 0; s < k; ++s) {
      const Eigen::Index c = static_cast<Eigen::Index>(i) * k + s;
      block += probs(0, c);
      duck += probs(1, c);
      if (with_grad) {
        g_block += Vec2(grads(0, c), grads(1, c));
        g_duck += Vec2(grads(2, c), grads(3, c));
      }
    }
    out.terms.collision += cfg.w_col * block * inv_k;
    out.terms.duck += cfg.w_duck * duck * inv_k;
    if (with_grad) out.grad[i] += inv_k * (cfg.w_col * g_block + cfg.w_duck * g_duck);
  }
  if (with_grad) {
    out.grad.front().setZero();
    out.grad.back().setZero();
  }
  out.cost = out.terms.total();
  return out;
}

std::vector<Vec2> positions(const Trajectory& traj) {
  std::vector<Vec2> p;
  p.reserve(traj.waypoints.size());
  for (const auto& w : traj.waypoints) p.push_back(w.position);
  return p;
}

}  // namespace

ObjectiveResult objective(const Trajectory& traj, const NeuralField& field, const PlannerConfig& cfg) {
  return evaluate_objective(positions(traj), field, cfg, true);
}

OptimizeResult optimize(const Trajectory& traj, const TraversabilityGrid& grid, PlanMode mode,
                        const PlannerConfig& cfg) {
  cfg.validate();
  if (!traj.valid()) throw Error(ErrorCode::kInvalidArgument, "trajectory violates its invariants");

  FieldConfig field_cfg = cfg.field;
  field_cfg.seed = derive_seed(cfg.seed, "planner-field");
  OptimizeResult result{traj, {}, {}, field_init(field_cfg, grid.world_rect())};
  FieldTrainer trainer(result.field, make_labels(grid, mode));

  std::vector<Vec2> p = positions(traj);
  const std::size_t n = p.size();
  std::vector<Vec2> m(n, Vec2::Zero());
  std::vector<Vec2> v(n, Vec2::Zero());
  long t = 0;
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr int kMaxHalvings = 10;
  constexpr double kConvergedRel = 1e-4;
  constexpr int kConvergedWindow = 10;

  auto feasible = [&](const std::vector<Vec2>& q) {
    for (std::size_t i = 1; i + 1 < q.size(); ++i) {
      const CellAnalysis* cell = grid.lookup(q[i]);
      if (cell == nullptr || !passable_for(*cell, mode)) return false;
    }
    for (std::size_t i = 1; i < q.size(); ++i) {
      if (q[i] == q[i - 1]) return false;
    }
    return true;
  };
  auto check_finite = [](double c) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kDivergedCost, "objective became non-finite");
  };

  int calm = 0;
  std::vector<Vec2> trial(n);
  for (int outer = 0; outer < cfg.outer_iterations; ++outer) {
    if (cfg.field_steps > 0) {
      const auto losses = trainer.train(cfg.field_steps);
      result.train.losses.insert(result.train.losses.end(), losses.begin(), losses.end());
    }
    if (!result.field.all_finite()) throw Error(ErrorCode::kDivergedCost, "field parameters became non-finite");

    double cost = evaluate_objective(p, result.field, cfg, false).cost;
    check_finite(cost);
    for (int w = 0; w < cfg.waypoint_steps; ++w) {
      const ObjectiveResult eval = evaluate_objective(p, result.field, cfg, true);
      check_finite(eval.cost);
      ++t;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
      std::vector<Vec2> dir(n, Vec2::Zero());
      for (std::size_t i = 1; i + 1 < n; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * eval.grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * eval.grad[i].cwiseAbs2();
        dir[i] = ((m[i] / c1).array() / ((v[i] / c2).array().sqrt() + kEps)).matrix();
      }
      double scale = 1.0;
      bool accepted = false;
      for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = p[i] - cfg.waypoint_lr * scale * dir[i];
        trial.front() = p.front();
        trial.back() = p.back();
        if (!feasible(trial)) continue;
        const double c = evaluate_objective(trial, result.field, cfg, false).cost;
        if (std::isfinite(c) && c <= eval.cost) {
          p.swap(trial);
          cost = c;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        ++result.rejected_steps;
        cost = eval.cost;
      }
    }

    const double prev = result.cost_history.empty() ? cost : result.cost_history.back();
    result.cost_history.push_back(cost);
    result.outer_iterations_run = outer + 1;
    const double rel = std::abs(cost - prev) / std::max(std::abs(prev), 1e-12);
    calm = (outer > 0 && rel < kConvergedRel) ? calm + 1 : 0;
    if (calm >= kConvergedWindow) break;
  }

  for (std::size_t i = 0; i < n; ++i) result.trajectory.waypoints[i].position = p[i];
  const auto acc = trainer.accuracy();
  result.train.accuracy_block = acc[0];
  result.train.accuracy_duck = acc[1];
  for (const auto& q : p) {
    if (field_forward(result.field, q).p_block >= cfg.p_stop) result.warning = true;
  }
  return result;
}

Trajectory annotate_heights(const Trajectory& traj, const TraversabilityGrid& grid, const RobotProfile& profile,
                            double max_slope) {
  profile.validate();
  if (!(max_slope >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_slope must be non-negative");
  Trajectory out = traj;
  const std::size_t n = out.waypoints.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellAnalysis* cell = grid.lookup(out.waypoints[i].position);
    if (cell == nullptr || cell->cls == CellClass::kBlocked) {
      throw Error(ErrorCode::kWaypointBlocked, "waypoint " + std::to_string(i) + " lies in a blocked cell");
    }
    h[i] = cell->cls == CellClass::kFree ? profile.h_max : cell->required_height;
  }
  if (std::isfinite(max_slope)) {
    for (std::size_t i = 1; i < n; ++i) {
      const double dist = (out.waypoints[i].position - out.waypoints[i - 1].position).norm();
      h[i] = std::min(h[i], h[i - 1] + max_slope * dist);
    }
    for (std::size_t i = n - 1; i-- > 0;) {
      const double dist = (out.waypoints[i + 1].position - out.waypoints[i].position).norm();
      h[i] = std::min(h[i], h[i + 1] + max_slope * dist);
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.waypoints[i].body_height = std::clamp(h[i], profile.h_min, profile.h_max);
  return out;
}

PathMetrics path_metrics(const Trajectory& traj, const TimeModel& model) {
  const auto& w = traj.waypoints;
  if (w.size() < 3) throw Error(ErrorCode::kTooFewWaypoints, "curvature needs at least three waypoints");
  if (!(model.speed > 0.0)) throw Error(ErrorCode::kInvalidArgument, "speed must be positive");

  PathMetrics out;
  std::vector<double> seg(w.size() - 1);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    seg[i] = (w[i + 1].position - w[i].position).norm();
    out.length += seg[i];
  }
  double total_turn = 0.0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const Vec2 a = w[i].position - w[i - 1].position;
    const Vec2 b = w[i + 1].position - w[i].position;
    const double cross = a.x() * b.y() - a.y() * b.x();
    const double theta = std::atan2(std::abs(cross), a.dot(b));
    total_turn += theta;
    const double mean_len = 0.5 * (seg[i - 1] + seg[i]);
    if (mean_len > 0.0) out.max_curvature = std::max(out.max_curvature, theta / mean_len);
  }

  auto ducking = [&](const Waypoint& p) {
    return std::isfinite(p.body_height) && p.body_height < model.h_max - 1e-9;
  };
  int transitions = 0;
  double duck_len = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const bool a = ducking(w[i]);
    const bool b = ducking(w[i + 1]);
    if (a != b) ++transitions;
    duck_len += seg[i] * 0.5 * ((a ? 1.0 : 0.0) + (b ? 1.0 : 0.0));
  }
  out.duck_fraction = out.length > 0.0 ? duck_len / out.length : 0.0;
  out.est_time = out.length / model.speed + model.turn_time_per_rad * total_turn +
                 model.duck_transition_time * transitions;
  return out;
}

}  // namespace hatnav

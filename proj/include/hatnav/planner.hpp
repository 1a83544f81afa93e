#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "hatnav/geometry.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/neural_field.hpp"

namespace hatnav {

struct Waypoint {
  Vec2 position = Vec2::Zero();
  /// NaN until annotate_heights runs.
  double body_height = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  std::vector<Waypoint> waypoints;

  /// Checks the anchor and distinct-neighbour invariants.
  bool valid() const;
  double length() const;
};

struct PlannerConfig {
  int n_waypoints = 64;
  double w_len = 100.0;
  double w_smooth = 400.0;
  double w_col = 30.0;
  double w_duck = 0.1;
  double waypoint_lr = 0.01;
  int outer_iterations = 300;
  int field_steps = 10;     // field updates per outer iteration
  int waypoint_steps = 5;   // waypoint updates per outer iteration
  double p_stop = 0.3;
  int footprint_samples = 8;
  double footprint_radius = 0.15;
  std::uint64_t seed = 0;
  FieldConfig field;

  void validate() const;
};

struct PathMetrics {
  double length = 0.0;
  double max_curvature = 0.0;
  double est_time = 0.0;
  double duck_fraction = 0.0;
};

struct TimeModel {
  double speed = 0.2;
  double turn_time_per_rad = 2.0;
  double duck_transition_time = 2.0;
  double h_max = 0.30;
};

bool passable_for(const CellAnalysis& cell, PlanMode mode);

/// A* over the passable cells (8-connected, no corner cutting), then
/// arc-length resampled to exactly `n` waypoints.
Trajectory seed_path(const TraversabilityGrid& grid, const Vec2& start, const Vec2& goal, PlanMode mode, int n);

/// Polyline resampled to `n` points equally spaced in arc length.
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& polyline, int n);

struct ObjectiveTerms {
  double length = 0.0;
  double smooth = 0.0;
  double collision = 0.0;
  double duck = 0.0;
  double total() const { return length + smooth + collision + duck; }
};

struct ObjectiveResult {
  double cost = 0.0;
  ObjectiveTerms terms;
  std::vector<Vec2> grad;  // per waypoint, zero at both anchors
};

ObjectiveResult objective(const Trajectory& traj, const NeuralField& field, const PlannerConfig& cfg);

struct OptimizeResult {
  Trajectory trajectory;
  TrainStats train;
  std::vector<double> cost_history;  // one entry per outer iteration
  NeuralField field;
  bool warning = false;  // some waypoint ended with p_block >= p_stop
  int outer_iterations_run = 0;
  int rejected_steps = 0;
};

OptimizeResult optimize(const Trajectory& traj, const TraversabilityGrid& grid, PlanMode mode,
                        const PlannerConfig& cfg);

/// Assigns body heights from the cell requirements, then limits the rate of
/// change to `max_slope` by lowering heights ahead of and behind duck zones.
Trajectory annotate_heights(const Trajectory& traj, const TraversabilityGrid& grid, const RobotProfile& profile,
                            double max_slope);

PathMetrics path_metrics(const Trajectory& traj, const TimeModel& model);

}  // namespace hatnav

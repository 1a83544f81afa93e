#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "hatnav/evalmap.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/planner.hpp"
#include "hatnav/serialize.hpp"

namespace hatnav {

struct PipelineConfig {
  std::filesystem::path scene_spec;  // resolved against the config file's directory
  RobotProfile robot;
  double resolution = kDefaultVoxelResolution;
  double inflate_radius = 0.15;
  PlannerConfig planner;
  TimeModel time_model;
  double max_slope = 0.2;
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  EvalSettings eval;
  double sample_density = 2000.0;  // surface points per m^2 for evaluation clouds
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 0;

  void validate() const;
};

/// Relative paths inside the file are resolved against `base_dir`.
PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Everything `plan` produces for one mode.
struct PlanOutcome {
  Trajectory seed;
  OptimizeResult optimized;
  Trajectory annotated;
  PathMetrics metrics;
};

PlanOutcome plan_route(const TraversabilityGrid& grid, const Vec2& start, const Vec2& goal, PlanMode mode,
                       const PlannerConfig& cfg, const RobotProfile& robot, const TimeModel& time_model,
                       double max_slope);

struct RunReport {
  std::map<std::string, double> stage_seconds;
  EvalReport eval;
  PathMetrics hat;
  PathMetrics flat;
  bool hat_warning = false;
  bool flat_warning = false;
  double length_reduction = 0.0;
  double time_reduction = 0.0;
  std::uint64_t seed = 0;
};

/// (flat - hat) / flat.
double reduction_ratio(double flat, double hat);

/// Stage timings are left out so equal seeds give byte-identical output.
Json to_json(const RunReport& report);
Json timings_json(const RunReport& report);

/// Runs scene -> voxelize -> segment -> plan (both modes) -> evaluate, writing
/// each artifact to cfg.out_dir and reading it back for the next stage. Stage
/// failures are rethrown with the stage name prefixed.
RunReport run_pipeline(const PipelineConfig& cfg);

struct MetricDelta {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double abs_delta = 0.0;
  double rel_delta = 0.0;  // (b - a) / a; NaN when a == 0 and b != 0
};

/// Compares numeric leaves of two report documents (arrays are skipped).
/// Differing key sets raise SchemaMismatch. Output is ordered by key.
std::vector<MetricDelta> compare_runs(const Json& a, const Json& b);
Json to_json(const std::vector<MetricDelta>& deltas);
std::string format_deltas(const std::vector<MetricDelta>& deltas);

}  // namespace hatnav

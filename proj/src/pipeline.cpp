#include "hatnav/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "hatnav/error.hpp"
#include "hatnav/raster.hpp"
#include "hatnav/rng.hpp"

namespace hatnav {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  robot.validate();
  planner.validate();
  if (!(resolution > 0.0)) throw Error(ErrorCode::kInvalidResolution, "voxel resolution must be positive");
  if (!(inflate_radius >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "inflate_radius must be >= 0");
  if (!(max_slope > 0.0)) throw Error(ErrorCode::kInvalidConfig, "max_slope must be positive");
  if (!(sample_density > 0.0)) throw Error(ErrorCode::kInvalidConfig, "sample_density must be positive");
  if (!(eval.iou_threshold > 0.0 && eval.iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "iou_threshold must be in (0, 1)");
  }
  if (!(time_model.speed > 0.0)) throw Error(ErrorCode::kInvalidConfig, "speed must be positive");
}

PipelineConfig pipeline_config_from_json(const Json& j, const fs::path& base_dir) {
  PipelineConfig cfg;
  try {
    const fs::path spec = j.at("scene_spec").get<std::string>();
    cfg.scene_spec = spec.is_absolute() ? spec : base_dir / spec;
    if (j.contains("robot")) cfg.robot = robot_profile_from_json(j.at("robot"));
    cfg.resolution = j.value("resolution", cfg.resolution);
    cfg.inflate_radius = j.value("inflate_radius", cfg.inflate_radius);
    if (j.contains("planner")) cfg.planner = planner_config_from_json(j.at("planner"));
    if (j.contains("time_model")) cfg.time_model = time_model_from_json(j.at("time_model"));
    cfg.max_slope = j.value("max_slope", cfg.max_slope);
    const auto start = j.at("start").get<std::array<double, 2>>();
    const auto goal = j.at("goal").get<std::array<double, 2>>();
    cfg.start = {start[0], start[1]};
    cfg.goal = {goal[0], goal[1]};
    if (j.contains("eval")) {
      const Json& e = j.at("eval");
      cfg.eval.iou_threshold = e.value("iou_threshold", cfg.eval.iou_threshold);
      cfg.eval.min_object_voxels = e.value("min_object_voxels", cfg.eval.min_object_voxels);
      cfg.sample_density = e.value("sample_density", cfg.sample_density);
    }
    if (j.contains("out_dir")) {
      const fs::path out = j.at("out_dir").get<std::string>();
      cfg.out_dir = out.is_absolute() ? out : base_dir / out;
    }
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const Json::exception& e) {
    throw ParseError(0, std::string("pipeline config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return pipeline_config_from_json(read_json(path), path.parent_path());
}

PlanOutcome plan_route(const TraversabilityGrid& grid, const Vec2& start, const Vec2& goal, PlanMode mode,
                       const PlannerConfig& cfg, const RobotProfile& robot, const TimeModel& time_model,
                       double max_slope) {
  PlanOutcome out;
  out.seed = seed_path(grid, start, goal, mode, cfg.n_waypoints);
  out.optimized = optimize(out.seed, grid, mode, cfg);
  out.annotated = annotate_heights(out.optimized.trajectory, grid, robot, max_slope);
  out.metrics = path_metrics(out.annotated, time_model);
  return out;
}

double reduction_ratio(double flat, double hat) { return flat == 0.0 ? 0.0 : (flat - hat) / flat; }

Json to_json(const RunReport& report) {
  Json eval = to_json(report.eval, false);
  eval.erase("schema_version");
  Json hat = to_json(report.hat);
  hat.erase("schema_version");
  hat["warning"] = report.hat_warning;
  Json flat = to_json(report.flat);
  flat.erase("schema_version");
  flat["warning"] = report.flat_warning;
  return {{"schema_version", kSchemaVersion},
          {"seed", report.seed},
          {"eval", std::move(eval)},
          {"hat", std::move(hat)},
          {"flat2d", std::move(flat)},
          {"reduction", {{"length", report.length_reduction}, {"time", report.time_reduction}}}};
}

Json timings_json(const RunReport& report) {
  Json j = {{"schema_version", kSchemaVersion}};
  Json stages = Json::object();
  for (const auto& [name, secs] : report.stage_seconds) stages[name] = secs;
  j["stage_seconds"] = std::move(stages);
  j["mapping_time_sec"] = report.eval.mapping_time;
  return j;
}

namespace {

template <typename Fn>
auto run_stage(const char* name, RunReport& report, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      report.stage_seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto result = fn();
      report.stage_seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return result;
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.message());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.seed = cfg.seed;
  const fs::path& out = cfg.out_dir;

  PlannerConfig planner = cfg.planner;
  planner.seed = cfg.seed;

  run_stage("scene", report, [&] {
    if (!fs::exists(cfg.scene_spec)) {
      throw Error(ErrorCode::kFileNotFound, "scene spec not found: " + cfg.scene_spec.string());
    }
    fs::create_directories(out);
    const SceneSpec spec = scene_spec_from_json(read_json(cfg.scene_spec));
    write_obj(gen_scene(spec), out / "scene.obj");
  });

  run_stage("voxelize", report, [&] {
    const TriMesh mesh = load_mesh(out / "scene.obj");
    write_json(out / "grid.json", to_json(voxelize(mesh, cfg.resolution)));
  });

  run_stage("segment", report, [&] {
    const VoxelGrid grid = voxel_grid_from_json(read_json(out / "grid.json"));
    const TraversabilityGrid tgrid = segment(grid, cfg.robot);
    const TraversabilityGrid inflated = inflate(tgrid, cfg.inflate_radius);
    write_json(out / "tgrid.json", to_json(tgrid));
    write_json(out / "tgrid_inflated.json", to_json(inflated));
    write_ppm(out / "classes.ppm", render_classes(inflated));
  });
  report.eval.mapping_time = report.stage_seconds["voxelize"] + report.stage_seconds["segment"];

  for (const PlanMode mode : {PlanMode::kHat, PlanMode::kFlat2d}) {
    const std::string tag = to_string(mode);
    const std::string stage = "plan_" + tag;
    run_stage(stage.c_str(), report, [&] {
      const TraversabilityGrid tgrid = traversability_from_json(read_json(out / "tgrid_inflated.json"));
      const PlanOutcome plan =
          plan_route(tgrid, cfg.start, cfg.goal, mode, planner, cfg.robot, cfg.time_model, cfg.max_slope);
      write_json(out / ("seed_" + tag + ".json"), to_json(plan.seed));
      write_json(out / ("traj_" + tag + ".json"), to_json(plan.annotated));
      write_json(out / ("metrics_" + tag + ".json"), to_json(plan.metrics));
      write_json(out / ("field_" + tag + ".json"), to_json(plan.optimized.field));
      Json hist = {{"schema_version", kSchemaVersion},
                   {"cost_history", plan.optimized.cost_history},
                   {"train", to_json(plan.optimized.train)},
                   {"rejected_steps", plan.optimized.rejected_steps},
                   {"warning", plan.optimized.warning}};
      write_json(out / ("optimize_" + tag + ".json"), hist);
      Image img = render_classes(tgrid);
      draw_trajectory(img, tgrid, plan.annotated, cfg.robot.h_max);
      write_ppm(out / ("plan_" + tag + ".ppm"), img);
      write_ppm(out / ("field_" + tag + ".ppm"), render_field(plan.optimized.field, tgrid));
      if (mode == PlanMode::kHat) {
        report.hat = path_metrics_from_json(read_json(out / ("metrics_" + tag + ".json")));
        report.hat_warning = plan.optimized.warning;
      } else {
        report.flat = path_metrics_from_json(read_json(out / ("metrics_" + tag + ".json")));
        report.flat_warning = plan.optimized.warning;
      }
    });
  }

  run_stage("evaluate", report, [&] {
    const TriMesh mesh = load_mesh(out / "scene.obj");
    const VoxelGrid grid = voxel_grid_from_json(read_json(out / "grid.json"));
    write_ply_points(sample_surface(mesh, cfg.sample_density, derive_seed(cfg.seed, "gt-surface")), out / "gt.ply");
    write_ply_points(sample_surface(mesh, cfg.sample_density, derive_seed(cfg.seed, "recon-surface")),
                     out / "recon.ply");
    const PointCloud gt = load_point_cloud(out / "gt.ply");
    const PointCloud recon = load_point_cloud(out / "recon.ply");
    const double mapping_time = report.eval.mapping_time;
    report.eval = evaluate_map(grid, recon, gt, cfg.eval);
    report.eval.mapping_time = mapping_time;
    write_json(out / "eval.json", to_json(report.eval, false));
  });

  report.length_reduction = reduction_ratio(report.flat.length, report.hat.length);
  report.time_reduction = reduction_ratio(report.flat.est_time, report.hat.est_time);
  write_json(out / "report.json", to_json(report));
  write_json(out / "timings.json", timings_json(report));
  return report;
}

namespace {

void flatten(const Json& j, const std::string& prefix, std::map<std::string, const Json*>& leaves) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), leaves);
    }
  } else if (!j.is_array()) {
    leaves[prefix] = &j;
  }
}

}  // namespace

std::vector<MetricDelta> compare_runs(const Json& a, const Json& b) {
  std::map<std::string, const Json*> la;
  std::map<std::string, const Json*> lb;
  flatten(a, "", la);
  flatten(b, "", lb);
  if (!la.count("schema_version")) throw Error(ErrorCode::kSchemaMismatch, "first report has no schema_version");
  for (const auto& [key, _] : la) {
    if (!lb.count(key)) throw Error(ErrorCode::kSchemaMismatch, "second report lacks '" + key + "'");
  }
  for (const auto& [key, _] : lb) {
    if (!la.count(key)) throw Error(ErrorCode::kSchemaMismatch, "first report lacks '" + key + "'");
  }
  if (*la["schema_version"] != *lb["schema_version"]) {
    throw Error(ErrorCode::kSchemaMismatch, "schema versions differ");
  }
  std::vector<MetricDelta> deltas;
  for (const auto& [key, va] : la) {
    const Json* vb = lb[key];
    if (va->is_number() != vb->is_number()) throw Error(ErrorCode::kSchemaMismatch, "type of '" + key + "' differs");
    if (!va->is_number() || va->is_boolean() || key == "schema_version") continue;
    MetricDelta d;
    d.metric = key;
    d.a = va->get<double>();
    d.b = vb->get<double>();
    d.abs_delta = d.b - d.a;
    if (d.a != 0.0) {
      d.rel_delta = d.abs_delta / d.a;
    } else {
      d.rel_delta = d.b == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    }
    deltas.push_back(d);
  }
  return deltas;
}

Json to_json(const std::vector<MetricDelta>& deltas) {
  Json rows = Json::array();
  for (const auto& d : deltas) {
    rows.push_back({{"metric", d.metric},
                    {"a", d.a},
                    {"b", d.b},
                    {"abs_delta", d.abs_delta},
                    {"rel_delta", std::isfinite(d.rel_delta) ? Json(d.rel_delta) : Json(nullptr)}});
  }
  return {{"schema_version", kSchemaVersion}, {"deltas", std::move(rows)}};
}

std::string format_deltas(const std::vector<MetricDelta>& deltas) {
  std::string text;
  char line[256];
  for (const auto& d : deltas) {
    std::snprintf(line, sizeof line, "%-28s %14.6g %14.6g %+14.6g %+10.4f\n", d.metric.c_str(), d.a, d.b,
                  d.abs_delta, d.rel_delta);
    text += line;
  }
  return text;
}

}  // namespace hatnav

#include <CLI11.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "hatnav/error.hpp"
#include "hatnav/evalmap.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/neural_field.hpp"
#include "hatnav/pipeline.hpp"
#include "hatnav/planner.hpp"
#include "hatnav/raster.hpp"
#include "hatnav/scene.hpp"
#include "hatnav/serialize.hpp"

namespace fs = std::filesystem;
using namespace hatnav;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string config;

  fs::path output(const std::string& p) const {
    const fs::path path = p;
    if (out_dir.empty() || path.is_absolute()) return path;
    fs::create_directories(out_dir);
    return fs::path(out_dir) / path;
  }
  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

Vec2 parse_point(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "expected x,y but got '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "expected x,y but got '" + s + "'");
  }
}

RobotProfile load_profile(const std::string& path) {
  return path.empty() ? RobotProfile{} : robot_profile_from_json(read_json(path));
}

bool has_ext(const fs::path& p, const char* ext) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Height-aware traversability mapping and planning"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Root seed for every stochastic stage");
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
  app.add_option("--config", g.config, "Config JSON (pipeline config, or planner config for plan)");

  std::function<void()> action;

  // scene
  auto* scene = app.add_subcommand("scene", "Scene generation and voxelization");
  scene->require_subcommand(1);
  std::string spec_path, mesh_out;
  auto* gen = scene->add_subcommand("gen", "Build a mesh from a primitive spec");
  gen->add_option("--spec", spec_path)->required();
  gen->add_option("--out", mesh_out)->required();
  gen->callback([&] {
    action = [&] {
      const TriMesh mesh = gen_scene(scene_spec_from_json(read_json(spec_path)));
      write_obj(mesh, g.output(mesh_out));
      std::printf("%zu vertices, %zu triangles\n", mesh.vertices.size(), mesh.faces.size());
    };
  });

  std::string vox_in, vox_out;
  double vox_res = kDefaultVoxelResolution;
  auto* vox = scene->add_subcommand("voxelize", "Voxelize an OBJ/PLY mesh");
  vox->add_option("--in", vox_in)->required();
  vox->add_option("--res", vox_res);
  vox->add_option("--out", vox_out)->required();
  vox->callback([&] {
    action = [&] {
      const VoxelGrid grid = voxelize(load_mesh(vox_in), vox_res);
      write_json(g.output(vox_out), to_json(grid));
      std::printf("%d x %d x %d voxels, %zu occupied\n", grid.dims()[0], grid.dims()[1], grid.dims()[2],
                  grid.occupied_count());
    };
  });

  // segment
  std::string seg_grid, seg_profile, seg_out, seg_raster;
  double seg_inflate = 0.0;
  auto* seg = app.add_subcommand("segment", "Height-segment a voxel grid");
  seg->add_option("--grid", seg_grid)->required();
  seg->add_option("--profile", seg_profile);
  seg->add_option("--inflate", seg_inflate);
  seg->add_option("--out", seg_out)->required();
  seg->add_option("--raster", seg_raster);
  seg->callback([&] {
    action = [&] {
      const TraversabilityGrid tgrid =
          inflate(segment(voxel_grid_from_json(read_json(seg_grid)), load_profile(seg_profile)), seg_inflate);
      write_json(g.output(seg_out), to_json(tgrid));
      if (!seg_raster.empty()) write_ppm(g.output(seg_raster), render_classes(tgrid));
      std::printf("free %zu, duck %zu, blocked %zu\n", tgrid.count(CellClass::kFree), tgrid.count(CellClass::kDuck),
                  tgrid.count(CellClass::kBlocked));
    };
  });

  // field
  auto* field = app.add_subcommand("field", "Neural field training and inspection");
  field->require_subcommand(1);
  std::string ft_grid, ft_mode = "hat", ft_out, ft_stats;
  int ft_steps = 2000;
  auto* ft = field->add_subcommand("train", "Fit a field to a traversability grid");
  ft->add_option("--grid", ft_grid)->required();
  ft->add_option("--mode", ft_mode);
  ft->add_option("--steps", ft_steps);
  ft->add_option("--out", ft_out)->required();
  ft->add_option("--stats", ft_stats, "Write the loss curve and accuracies");
  ft->callback([&] {
    action = [&] {
      const TraversabilityGrid tgrid = traversability_from_json(read_json(ft_grid));
      FieldConfig fc;
      fc.seed = g.seed_or(0);
      NeuralField nf = field_init(fc, tgrid.world_rect());
      const TrainStats stats = field_train(nf, tgrid, plan_mode_from_string(ft_mode), ft_steps);
      write_json(g.output(ft_out), to_json(nf));
      if (!ft_stats.empty()) {
        Json j = to_json(stats);
        j["schema_version"] = kSchemaVersion;
        write_json(g.output(ft_stats), j);
      }
      std::printf("final loss %.6g, accuracy block %.4f duck %.4f\n", stats.losses.empty() ? 0.0 : stats.losses.back(),
                  stats.accuracy_block, stats.accuracy_duck);
    };
  });

  std::string fe_field, fe_raster, fe_duck_raster;
  double fe_res = kDefaultVoxelResolution;
  auto* fe = field->add_subcommand("eval", "Rasterize field probabilities");
  fe->add_option("--field", fe_field)->required();
  fe->add_option("--raster", fe_raster)->required();
  fe->add_option("--duck-raster", fe_duck_raster);
  fe->add_option("--res", fe_res, "Sampling spacing in meters");
  fe->callback([&] {
    action = [&] {
      const NeuralField nf = field_from_json(read_json(fe_field));
      const Vec2 ext = nf.world_rect.extents();
      const int nx = std::max(1, static_cast<int>(std::ceil(ext.x() / fe_res - 1e-9)));
      const int ny = std::max(1, static_cast<int>(std::ceil(ext.y() / fe_res - 1e-9)));
      const TraversabilityGrid lattice(nf.world_rect.min, fe_res, {nx, ny}, 0.0);
      write_ppm(g.output(fe_raster), render_field(nf, lattice, 0));
      if (!fe_duck_raster.empty()) write_ppm(g.output(fe_duck_raster), render_field(nf, lattice, 1));
    };
  });

  // plan
  std::string pl_grid, pl_profile, pl_mode = "hat", pl_start, pl_goal, pl_out, pl_metrics, pl_raster;
  double pl_slope = 0.2;
  auto* pl = app.add_subcommand("plan", "Plan a trajectory on a traversability grid");
  pl->add_option("--grid", pl_grid)->required();
  pl->add_option("--profile", pl_profile);
  pl->add_option("--mode", pl_mode);
  pl->add_option("--start", pl_start)->required();
  pl->add_option("--goal", pl_goal)->required();
  pl->add_option("--max-slope", pl_slope);
  pl->add_option("--out", pl_out)->required();
  pl->add_option("--metrics", pl_metrics);
  pl->add_option("--raster", pl_raster);
  pl->callback([&] {
    action = [&] {
      const TraversabilityGrid tgrid = traversability_from_json(read_json(pl_grid));
      const RobotProfile robot = load_profile(pl_profile);
      PlannerConfig cfg = g.config.empty() ? PlannerConfig{} : planner_config_from_json(read_json(g.config));
      cfg.seed = g.seed_or(cfg.seed);
      const PlanOutcome plan = plan_route(tgrid, parse_point(pl_start), parse_point(pl_goal),
                                          plan_mode_from_string(pl_mode), cfg, robot, TimeModel{}, pl_slope);
      write_json(g.output(pl_out), to_json(plan.annotated));
      if (!pl_metrics.empty()) write_json(g.output(pl_metrics), to_json(plan.metrics));
      if (!pl_raster.empty()) {
        Image img = render_classes(tgrid);
        draw_trajectory(img, tgrid, plan.annotated, robot.h_max);
        write_ppm(g.output(pl_raster), img);
      }
      std::printf("length %.4f m, max curvature %.4f 1/m, est time %.2f s, duck fraction %.3f%s\n",
                  plan.metrics.length, plan.metrics.max_curvature, plan.metrics.est_time, plan.metrics.duck_fraction,
                  plan.optimized.warning ? " (warning: waypoint near obstacle)" : "");
    };
  });

  // eval-map
  std::string ev_pred, ev_recon, ev_gt, ev_out;
  double ev_iou = 0.5, ev_res = kDefaultVoxelResolution;
  bool ev_voxel_iou = false;
  auto* ev = app.add_subcommand("eval-map", "Score a reconstructed map against a ground-truth cloud");
  ev->add_option("--pred", ev_pred, "Voxel grid JSON or PLY cloud")->required();
  ev->add_option("--recon", ev_recon, "Reconstructed surface cloud for the SDF error (grid input only)");
  ev->add_option("--gt", ev_gt)->required();
  ev->add_option("--iou-threshold", ev_iou);
  ev->add_option("--res", ev_res, "Voxel size when --pred is a cloud");
  ev->add_option("--out", ev_out)->required();
  ev->add_flag("--voxel-iou", ev_voxel_iou, "Also report occupied-voxel IoU");
  ev->callback([&] {
    action = [&] {
      const PointCloud gt = load_point_cloud(ev_gt);
      EvalSettings settings;
      settings.iou_threshold = ev_iou;
      settings.voxel_iou = ev_voxel_iou;
      const auto t0 = std::chrono::steady_clock::now();
      EvalReport report;
      if (has_ext(ev_pred, ".ply")) {
        const PointCloud pred = load_point_cloud(ev_pred);
        Aabb3 box = pred.bounds();
        box.extend(gt.bounds().min);
        box.extend(gt.bounds().max);
        box.min -= Vec3::Constant(ev_res);
        box.max += Vec3::Constant(ev_res);
        const VoxelGrid lattice = voxelize(make_box(box), ev_res, box).empty_like();
        report = evaluate_map(voxelize_points(pred, lattice), pred, gt, settings);
      } else {
        const VoxelGrid grid = voxel_grid_from_json(read_json(ev_pred));
        PointCloud recon;
        if (!ev_recon.empty()) {
          recon = load_point_cloud(ev_recon);
        } else {
          for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid.occupied(i)) recon.points.push_back(grid.center(grid.unlinear(i)));
          }
        }
        report = evaluate_map(grid, recon, gt, settings);
      }
      report.mapping_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_json(g.output(ev_out), to_json(report, true));
      std::printf("P %.4f R %.4f F %.4f IoU %.2f%% sdf_rmse %.6g m\n", report.precision, report.recall,
                  report.f_score, 100.0 * report.iou_mean, report.sdf_rmse);
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "End-to-end runs");
  pipe->require_subcommand(1);
  auto* run = pipe->add_subcommand("run", "Run every stage from a config (--config)");
  run->callback([&] {
    action = [&] {
      if (g.config.empty()) throw Error(ErrorCode::kInvalidArgument, "pipeline run needs --config");
      PipelineConfig cfg = load_pipeline_config(g.config);
      if (g.seed) cfg.seed = *g.seed;
      if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
      const RunReport report = run_pipeline(cfg);
      std::printf("hat: length %.3f m, time %.1f s, max curvature %.3f\n", report.hat.length, report.hat.est_time,
                  report.hat.max_curvature);
      std::printf("flat2d: length %.3f m, time %.1f s, max curvature %.3f\n", report.flat.length,
                  report.flat.est_time, report.flat.max_curvature);
      std::printf("reduction: length %.1f%%, time %.1f%%\n", 100.0 * report.length_reduction,
                  100.0 * report.time_reduction);
      std::printf("artifacts in %s\n", cfg.out_dir.string().c_str());
    };
  });

  std::string cmp_a, cmp_b, cmp_out;
  auto* cmp = pipe->add_subcommand("compare", "Per-metric deltas between two reports");
  cmp->add_option("a", cmp_a)->required();
  cmp->add_option("b", cmp_b)->required();
  cmp->add_option("--out", cmp_out);
  cmp->callback([&] {
    action = [&] {
      const auto deltas = compare_runs(read_json(cmp_a), read_json(cmp_b));
      std::fputs(format_deltas(deltas).c_str(), stdout);
      if (!cmp_out.empty()) write_json(g.output(cmp_out), to_json(deltas));
    };
  });

  CLI11_PARSE(app, argc, argv);
  try {
    if (action) action();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

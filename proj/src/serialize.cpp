#include "hatnav/serialize.hpp"

#include <cmath>

#include "hatnav/error.hpp"

namespace hatnav {

namespace {

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }
Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

/// NaN/inf are not representable in JSON; they travel as null.
Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double num_or(const Json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

Vec2 vec2_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError(0, "expected a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError(0, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ParseError(0, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::vector<std::int64_t> rle_encode(const std::vector<std::uint8_t>& bits) {
  std::vector<std::int64_t> runs;
  std::uint8_t current = 0;
  std::int64_t len = 0;
  for (auto b : bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v == current) {
      ++len;
    } else {
      runs.push_back(len);
      current = v;
      len = 1;
    }
  }
  runs.push_back(len);
  return runs;
}

std::vector<std::uint8_t> rle_decode(const std::vector<std::int64_t>& runs, std::size_t expected) {
  std::vector<std::uint8_t> bits;
  bits.reserve(expected);
  std::uint8_t current = 0;
  for (auto r : runs) {
    if (r < 0) throw ParseError(0, "negative run length");
    if (bits.size() + static_cast<std::size_t>(r) > expected) throw ParseError(0, "run lengths exceed grid size");
    bits.insert(bits.end(), static_cast<std::size_t>(r), current);
    current ^= 1;
  }
  if (bits.size() != expected) throw ParseError(0, "run lengths do not cover the grid");
  return bits;
}

Json to_json(const VoxelGrid& grid) {
  return {{"schema_version", kSchemaVersion},
          {"origin", vec_json(grid.origin())},
          {"resolution", grid.resolution()},
          {"dims", {grid.dims()[0], grid.dims()[1], grid.dims()[2]}},
          {"occupancy", rle_encode(grid.occupancy())}};
}

VoxelGrid voxel_grid_from_json(const Json& j) {
  return guarded("voxel grid", [&] {
    const auto dims = j.at("dims").get<std::array<int, 3>>();
    VoxelGrid grid(vec3_from(j.at("origin")), j.at("resolution").get<double>(), dims);
    grid.occupancy() = rle_decode(j.at("occupancy").get<std::vector<std::int64_t>>(), grid.size());
    return grid;
  });
}

Json to_json(const TraversabilityGrid& grid) {
  Json cells = Json::array();
  for (const auto& c : grid.cells()) {
    cells.push_back({static_cast<int>(c.cls), c.support_height, num_or_null(c.clearance), num_or_null(c.required_height)});
  }
  return {{"schema_version", kSchemaVersion},
          {"origin", vec_json(grid.origin())},
          {"resolution", grid.resolution()},
          {"dims", {grid.dims()[0], grid.dims()[1]}},
          {"floor_z", grid.floor_z()},
          {"cells", std::move(cells)}};
}

TraversabilityGrid traversability_from_json(const Json& j) {
  return guarded("traversability grid", [&] {
    const auto dims = j.at("dims").get<std::array<int, 2>>();
    TraversabilityGrid grid(vec2_from(j.at("origin")), j.at("resolution").get<double>(), dims,
                            j.at("floor_z").get<double>());
    const Json& cells = j.at("cells");
    if (cells.size() != grid.size()) throw ParseError(0, "cell count does not match dims");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Json& c = cells[i];
      const int code = c.at(0).get<int>();
      if (code < 0 || code > 2) throw ParseError(0, "invalid cell class code");
      auto& cell = grid.cells()[i];
      cell.cls = static_cast<CellClass>(code);
      cell.support_height = c.at(1).get<double>();
      cell.clearance = num_or(c.at(2), kUnbounded);
      cell.required_height = num_or(c.at(3), std::numeric_limits<double>::quiet_NaN());
    }
    return grid;
  });
}

Json to_json(const Trajectory& traj) {
  Json pts = Json::array();
  for (const auto& w : traj.waypoints) pts.push_back({w.position.x(), w.position.y(), num_or_null(w.body_height)});
  return {{"schema_version", kSchemaVersion},
          {"start", vec_json(traj.start)},
          {"goal", vec_json(traj.goal)},
          {"waypoints", std::move(pts)}};
}

Trajectory trajectory_from_json(const Json& j) {
  return guarded("trajectory", [&] {
    Trajectory traj;
    traj.start = vec2_from(j.at("start"));
    traj.goal = vec2_from(j.at("goal"));
    for (const auto& w : j.at("waypoints")) {
      traj.waypoints.push_back({Vec2(w.at(0).get<double>(), w.at(1).get<double>()),
                                num_or(w.at(2), std::numeric_limits<double>::quiet_NaN())});
    }
    return traj;
  });
}

Json to_json(const PathMetrics& m) {
  return {{"schema_version", kSchemaVersion},
          {"length_m", m.length},
          {"max_curvature", m.max_curvature},
          {"est_time_s", m.est_time},
          {"duck_fraction", m.duck_fraction}};
}

PathMetrics path_metrics_from_json(const Json& j) {
  return guarded("path metrics", [&] {
    return PathMetrics{j.at("length_m").get<double>(), j.at("max_curvature").get<double>(),
                       j.at("est_time_s").get<double>(), j.at("duck_fraction").get<double>()};
  });
}

Json to_json(const FieldConfig& c) {
  return {{"fourier_bands", c.fourier_bands},
          {"hidden_sizes", c.hidden_sizes},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

FieldConfig field_config_from_json(const Json& j) {
  return guarded("field config", [&] {
    FieldConfig c;
    c.fourier_bands = get_or(j, "fourier_bands", c.fourier_bands);
    c.hidden_sizes = get_or(j, "hidden_sizes", c.hidden_sizes);
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.batch_size = get_or(j, "batch_size", c.batch_size);
    c.seed = get_or(j, "seed", c.seed);
    c.validate();
    return c;
  });
}

Json to_json(const NeuralField& field) {
  Json layers = Json::array();
  for (const auto& l : field.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    layers.push_back({{"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", std::move(w)},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"schema_version", kSchemaVersion},
          {"config", to_json(field.config)},
          {"world_rect", {vec_json(field.world_rect.min), vec_json(field.world_rect.max)}},
          {"layers", std::move(layers)}};
}

NeuralField field_from_json(const Json& j) {
  return guarded("field checkpoint", [&] {
    NeuralField field;
    field.config = field_config_from_json(j.at("config"));
    field.world_rect = {vec2_from(j.at("world_rect").at(0)), vec2_from(j.at("world_rect").at(1))};
    Eigen::Index expected_in = field.config.input_dim();
    for (const auto& lj : j.at("layers")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (cols != expected_in || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows) {
        throw ParseError(0, "layer shapes do not chain");
      }
      DenseLayer layer;
      layer.weights.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
      field.layers.push_back(std::move(layer));
      expected_in = rows;
    }
    if (field.layers.size() != field.config.hidden_sizes.size() + 1 || expected_in != 2) {
      throw ParseError(0, "checkpoint layers do not match the config");
    }
    return field;
  });
}

Json to_json(const RobotProfile& p) {
  return {{"h_max", p.h_max},
          {"h_min", p.h_min},
          {"step_max", p.step_max},
          {"footprint_radius", p.footprint_radius},
          {"safety_margin", p.safety_margin}};
}

RobotProfile robot_profile_from_json(const Json& j) {
  return guarded("robot profile", [&] {
    RobotProfile p;
    p.h_max = get_or(j, "h_max", p.h_max);
    p.h_min = get_or(j, "h_min", p.h_min);
    p.step_max = get_or(j, "step_max", p.step_max);
    p.footprint_radius = get_or(j, "footprint_radius", p.footprint_radius);
    p.safety_margin = get_or(j, "safety_margin", p.safety_margin);
    p.validate();
    return p;
  });
}

Json to_json(const PlannerConfig& c) {
  return {{"n_waypoints", c.n_waypoints},   {"w_len", c.w_len},
          {"w_smooth", c.w_smooth},         {"w_col", c.w_col},
          {"w_duck", c.w_duck},             {"waypoint_lr", c.waypoint_lr},
          {"outer_iterations", c.outer_iterations}, {"field_steps", c.field_steps},
          {"waypoint_steps", c.waypoint_steps}, {"p_stop", c.p_stop},
          {"footprint_samples", c.footprint_samples}, {"footprint_radius", c.footprint_radius},
          {"seed", c.seed},                 {"field", to_json(c.field)}};
}

PlannerConfig planner_config_from_json(const Json& j) {
  return guarded("planner config", [&] {
    PlannerConfig c;
    c.n_waypoints = get_or(j, "n_waypoints", c.n_waypoints);
    c.w_len = get_or(j, "w_len", c.w_len);
    c.w_smooth = get_or(j, "w_smooth", c.w_smooth);
    c.w_col = get_or(j, "w_col", c.w_col);
    c.w_duck = get_or(j, "w_duck", c.w_duck);
    c.waypoint_lr = get_or(j, "waypoint_lr", c.waypoint_lr);
    c.outer_iterations = get_or(j, "outer_iterations", c.outer_iterations);
    c.field_steps = get_or(j, "field_steps", c.field_steps);
    c.waypoint_steps = get_or(j, "waypoint_steps", c.waypoint_steps);
    c.p_stop = get_or(j, "p_stop", c.p_stop);
    c.footprint_samples = get_or(j, "footprint_samples", c.footprint_samples);
    c.footprint_radius = get_or(j, "footprint_radius", c.footprint_radius);
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("field")) c.field = field_config_from_json(j.at("field"));
    c.validate();
    return c;
  });
}

Json to_json(const TimeModel& m) {
  return {{"speed", m.speed},
          {"turn_time_per_rad", m.turn_time_per_rad},
          {"duck_transition_time", m.duck_transition_time},
          {"h_max", m.h_max}};
}

TimeModel time_model_from_json(const Json& j) {
  return guarded("time model", [&] {
    TimeModel m;
    m.speed = get_or(j, "speed", m.speed);
    m.turn_time_per_rad = get_or(j, "turn_time_per_rad", m.turn_time_per_rad);
    m.duck_transition_time = get_or(j, "duck_transition_time", m.duck_transition_time);
    m.h_max = get_or(j, "h_max", m.h_max);
    return m;
  });
}

Json to_json(const TrainStats& s) {
  return {{"losses", s.losses}, {"accuracy_block", s.accuracy_block}, {"accuracy_duck", s.accuracy_duck}};
}

SceneSpec scene_spec_from_json(const Json& j) {
  return guarded("scene spec", [&] {
    SceneSpec spec;
    for (const auto& p : j.at("primitives")) {
      const auto type = p.at("type").get<std::string>();
      if (type == "floor") {
        FloorSlab f;
        f.width = p.at("width").get<double>();
        f.depth = p.at("depth").get<double>();
        f.thickness = get_or(p, "thickness", f.thickness);
        if (p.contains("corner")) f.corner = vec2_from(p.at("corner"));
        spec.primitives.emplace_back(f);
      } else if (type == "box") {
        spec.primitives.emplace_back(BoxPrimitive{vec3_from(p.at("center")), vec3_from(p.at("extents"))});
      } else if (type == "arch") {
        ArchPrimitive a;
        a.center = vec2_from(p.at("center"));
        a.span = p.at("span").get<double>();
        a.pillar_width = p.at("pillar_width").get<double>();
        a.clearance = p.at("clearance").get<double>();
        a.depth = p.at("depth").get<double>();
        a.lintel_thickness = p.at("lintel_thickness").get<double>();
        const auto axis = get_or<std::string>(p, "span_axis", "x");
        if (axis.size() != 1) throw Error(ErrorCode::kInvalidSpec, "span_axis must be 'x' or 'y'");
        a.span_axis = axis[0];
        spec.primitives.emplace_back(a);
      } else {
        throw Error(ErrorCode::kInvalidSpec, "unknown primitive type '" + type + "'");
      }
    }
    return spec;
  });
}

Json to_json(const SceneSpec& spec) {
  Json prims = Json::array();
  for (const auto& prim : spec.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, FloorSlab>) {
            prims.push_back({{"type", "floor"}, {"width", p.width}, {"depth", p.depth},
                             {"thickness", p.thickness}, {"corner", vec_json(p.corner)}});
          } else if constexpr (std::is_same_v<T, BoxPrimitive>) {
            prims.push_back({{"type", "box"}, {"center", vec_json(p.center)}, {"extents", vec_json(p.extents)}});
          } else {
            prims.push_back({{"type", "arch"}, {"center", vec_json(p.center)}, {"span", p.span},
                             {"pillar_width", p.pillar_width}, {"clearance", p.clearance}, {"depth", p.depth},
                             {"lintel_thickness", p.lintel_thickness}, {"span_axis", std::string(1, p.span_axis)}});
          }
        },
        prim);
  }
  return {{"primitives", std::move(prims)}};
}

Json to_json(const EvalReport& r, bool include_time) {
  Json j = {{"schema_version", kSchemaVersion},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f_score", r.f_score},
            {"rmse_sdf_m", r.sdf_rmse},
            {"iou_pct", 100.0 * r.iou_mean},
            {"iou_pooled_pct", 100.0 * r.iou_pooled},
            {"iou_per_object", r.iou_per_object},
            {"tp", r.tp},
            {"fp", r.fp},
            {"fn", r.fn}};
  if (r.voxel_iou) j["voxel_iou_pct"] = 100.0 * *r.voxel_iou;
  if (include_time) j["time_sec"] = r.mapping_time;
  return j;
}

PlanMode plan_mode_from_string(const std::string& s) {
  if (s == "hat") return PlanMode::kHat;
  if (s == "flat2d") return PlanMode::kFlat2d;
  throw Error(ErrorCode::kInvalidArgument, "mode must be 'hat' or 'flat2d'");
}

std::string to_string(PlanMode mode) { return mode == PlanMode::kHat ? "hat" : "flat2d"; }

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace hatnav

#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

#include "hatnav/evalmap.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/neural_field.hpp"
#include "hatnav/planner.hpp"
#include "hatnav/scene.hpp"

namespace hatnav {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Run lengths alternating empty/occupied, starting with an (possibly zero)
/// empty run.
std::vector<std::int64_t> rle_encode(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> rle_decode(const std::vector<std::int64_t>& runs, std::size_t expected);

Json to_json(const VoxelGrid& grid);
VoxelGrid voxel_grid_from_json(const Json& j);

Json to_json(const TraversabilityGrid& grid);
TraversabilityGrid traversability_from_json(const Json& j);

Json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const PathMetrics& m);
PathMetrics path_metrics_from_json(const Json& j);

Json to_json(const FieldConfig& c);
FieldConfig field_config_from_json(const Json& j);
Json to_json(const NeuralField& field);
NeuralField field_from_json(const Json& j);

Json to_json(const RobotProfile& p);
RobotProfile robot_profile_from_json(const Json& j);

Json to_json(const PlannerConfig& c);
PlannerConfig planner_config_from_json(const Json& j);

Json to_json(const TimeModel& m);
TimeModel time_model_from_json(const Json& j);

Json to_json(const TrainStats& s);

SceneSpec scene_spec_from_json(const Json& j);
Json to_json(const SceneSpec& spec);

Json to_json(const EvalReport& r, bool include_time);

PlanMode plan_mode_from_string(const std::string& s);
std::string to_string(PlanMode mode);

/// Reads and parses a JSON file; malformed content raises ParseError.
Json read_json(const std::filesystem::path& path);
/// Writes with a trailing newline; output is byte-stable for equal input.
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace hatnav

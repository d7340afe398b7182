#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xicm {

using Vec3 = std::array<double, 3>;

/// Wraps an angle in degrees into [0, 360).
double wrap_degrees(double deg);

/// Axis-aligned workspace in the robot-base frame, split into a uniform grid.
struct WorkspaceBounds {
  Vec3 min_xyz{0.0, 0.0, 0.0};
  Vec3 max_xyz{1.0, 1.0, 1.0};
  int grid_resolution = 100;

  /// Throws RangeError when an invariant does not hold.
  void validate() const;
  double cell_width(int axis) const {
    return (max_xyz[axis] - min_xyz[axis]) / grid_resolution;
  }
  bool operator==(const WorkspaceBounds&) const = default;
};

/// End-effector state: position (m), roll/pitch/yaw (deg, in [0, 360)) and
/// gripper flag.
class Pose7 {
 public:
  Pose7() = default;
  Pose7(const Vec3& position, const Vec3& rpy_deg, bool gripper_open);

  const Vec3& position() const { return position_; }
  const Vec3& rpy() const { return rpy_; }
  bool gripper_open() const { return gripper_open_; }

  bool operator==(const Pose7&) const = default;

 private:
  Vec3 position_{0.0, 0.0, 0.0};
  Vec3 rpy_{0.0, 0.0, 0.0};
  bool gripper_open_ = true;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major RGB

  bool operator==(const Image&) const = default;
};

struct Observation {
  Image rgb;
  std::vector<double> joint_velocities;
  bool gripper_open = true;
  std::int64_t timestep = 0;

  bool operator==(const Observation&) const = default;
};

struct ObjectRecord {
  std::string name;
  Vec3 center_xyz{0.0, 0.0, 0.0};

  bool operator==(const ObjectRecord&) const = default;
};

/// Lowercases and trims an object name.
std::string normalize_object_name(std::string_view name);

struct Demonstration {
  std::string id;
  std::string task_name;
  std::string language;
  std::vector<Observation> observations;
  std::vector<Pose7> actions;
  std::vector<ObjectRecord> objects;  // scene snapshot at t = 0

  std::size_t length() const { return actions.size(); }
  bool operator==(const Demonstration&) const = default;
};

/// Simulator constants recorded alongside the data so prompts, parser and
/// executor agree on conventions.
struct ManifestExtras {
  int gripper_open_value = 1;
  double grasp_radius = 0.05;
  double region_tolerance = 0.04;

  bool operator==(const ManifestExtras&) const = default;
};

struct Dataset {
  WorkspaceBounds workspace;
  std::vector<std::string> tasks;
  ManifestExtras extras;
  std::vector<Demonstration> demos;  // sorted by id

  std::size_t size() const { return demos.size(); }
  bool operator==(const Dataset&) const = default;
};

}  // namespace xicm

#pragma once

#include <array>
#include <string>

#include "xicm/types.hpp"

namespace xicm {

inline constexpr int kAngleBins = 72;
inline constexpr double kAngleBinWidth = 360.0 / kAngleBins;

using GridIndex = std::array<int, 3>;

/// Integer end-effector state in the order the prompt uses:
/// x, y, z, roll, pitch, yaw, gripper (1 = open).
struct QuantizedPose {
  GridIndex grid{0, 0, 0};
  std::array<int, 3> rpy_bins{0, 0, 0};
  int gripper = 0;

  std::array<int, 7> components() const {
    return {grid[0], grid[1], grid[2], rpy_bins[0], rpy_bins[1], rpy_bins[2], gripper};
  }
  static QuantizedPose from_components(const std::array<int, 7>& c) {
    return {{c[0], c[1], c[2]}, {c[3], c[4], c[5]}, c[6]};
  }
  bool in_range(int grid_resolution) const;
  bool operator==(const QuantizedPose&) const = default;
};

struct QuantizedObject {
  std::string name;
  GridIndex grid{0, 0, 0};
  bool operator==(const QuantizedObject&) const = default;
};

/// floor((p - min) / (max - min) * res), clamped into [0, res - 1]. Total.
GridIndex quantize_position(const Vec3& p, const WorkspaceBounds& ws);
/// Cell center. Throws RangeError for an index outside the grid.
Vec3 dequantize_position(const GridIndex& g, const WorkspaceBounds& ws);

/// Wraps into [0, 360) then bins by 5 degrees.
int quantize_angle(double deg);
/// Bin center in degrees. Throws RangeError outside [0, 71].
double dequantize_angle(int bin);

QuantizedPose quantize_pose(const Pose7& pose, const WorkspaceBounds& ws);
Pose7 dequantize_pose(const QuantizedPose& q, const WorkspaceBounds& ws);

/// Quantizes an object center; centers outside the workspace are clamped and
/// a warning is logged.
QuantizedObject quantize_object(const ObjectRecord& obj, const WorkspaceBounds& ws);

}  // namespace xicm

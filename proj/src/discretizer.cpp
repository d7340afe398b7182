#include "xicm/discretizer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "xicm/errors.hpp"

namespace xicm {

bool QuantizedPose::in_range(int grid_resolution) const {
  for (int v : grid)
    if (v < 0 || v >= grid_resolution) return false;
  for (int v : rpy_bins)
    if (v < 0 || v >= kAngleBins) return false;
  return gripper == 0 || gripper == 1;
}

GridIndex quantize_position(const Vec3& p, const WorkspaceBounds& ws) {
  GridIndex g{};
  for (int i = 0; i < 3; ++i) {
    double scaled = (p[i] - ws.min_xyz[i]) / (ws.max_xyz[i] - ws.min_xyz[i]) * ws.grid_resolution;
    if (!std::isfinite(scaled)) scaled = std::isnan(scaled) ? 0.0 : (scaled > 0 ? ws.grid_resolution : 0.0);
    scaled = std::clamp(std::floor(scaled), 0.0, static_cast<double>(ws.grid_resolution - 1));
    g[i] = static_cast<int>(scaled);
  }
  return g;
}

Vec3 dequantize_position(const GridIndex& g, const WorkspaceBounds& ws) {
  Vec3 p{};
  for (int i = 0; i < 3; ++i) {
    if (g[i] < 0 || g[i] >= ws.grid_resolution)
      throw RangeError("grid index " + std::to_string(g[i]) + " outside [0, " +
                       std::to_string(ws.grid_resolution - 1) + "]");
    p[i] = ws.min_xyz[i] + (g[i] + 0.5) * ws.cell_width(i);
  }
  return p;
}

int quantize_angle(double deg) {
  int bin = static_cast<int>(std::floor(wrap_degrees(deg) / kAngleBinWidth));
  return std::clamp(bin, 0, kAngleBins - 1);
}

double dequantize_angle(int bin) {
  if (bin < 0 || bin >= kAngleBins)
    throw RangeError("angle bin " + std::to_string(bin) + " outside [0, 71]");
  return bin * kAngleBinWidth + kAngleBinWidth / 2.0;
}

QuantizedPose quantize_pose(const Pose7& pose, const WorkspaceBounds& ws) {
  QuantizedPose q;
  q.grid = quantize_position(pose.position(), ws);
  for (int i = 0; i < 3; ++i) q.rpy_bins[i] = quantize_angle(pose.rpy()[i]);
  q.gripper = pose.gripper_open() ? 1 : 0;
  return q;
}

Pose7 dequantize_pose(const QuantizedPose& q, const WorkspaceBounds& ws) {
  if (q.gripper != 0 && q.gripper != 1) throw RangeError("gripper flag must be 0 or 1");
  Vec3 rpy{dequantize_angle(q.rpy_bins[0]), dequantize_angle(q.rpy_bins[1]), dequantize_angle(q.rpy_bins[2])};
  return Pose7(dequantize_position(q.grid, ws), rpy, q.gripper == 1);
}

QuantizedObject quantize_object(const ObjectRecord& obj, const WorkspaceBounds& ws) {
  for (int i = 0; i < 3; ++i) {
    if (obj.center_xyz[i] < ws.min_xyz[i] || obj.center_xyz[i] > ws.max_xyz[i]) {
      spdlog::warn("object '{}' lies outside the workspace on axis {}; clamping", obj.name, i);
      break;
    }
  }
  return {obj.name, quantize_position(obj.center_xyz, ws)};
}

}  // namespace xicm

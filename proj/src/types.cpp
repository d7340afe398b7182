#include "xicm/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "xicm/errors.hpp"

namespace xicm {

double wrap_degrees(double deg) {
  if (!std::isfinite(deg)) return 0.0;
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value plus 360 can round up to exactly 360.
  if (r >= 360.0) r -= 360.0;
  return r;
}

void WorkspaceBounds::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(std::isfinite(min_xyz[i]) && std::isfinite(max_xyz[i])))
      throw RangeError("workspace bounds must be finite");
    if (!(min_xyz[i] < max_xyz[i]))
      throw RangeError("workspace min must be below max on axis " + std::to_string(i));
  }
  if (grid_resolution < 2) throw RangeError("grid resolution must be at least 2");
}

Pose7::Pose7(const Vec3& position, const Vec3& rpy_deg, bool gripper_open)
    : position_(position),
      rpy_{wrap_degrees(rpy_deg[0]), wrap_degrees(rpy_deg[1]), wrap_degrees(rpy_deg[2])},
      gripper_open_(gripper_open) {}

std::string normalize_object_name(std::string_view name) {
  auto begin = name.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = name.find_last_not_of(" \t\r\n");
  std::string out(name.substr(begin, end - begin + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace xicm

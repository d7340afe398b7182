#include "xicm/keyframes.hpp"

#include <cmath>

#include "xicm/errors.hpp"

namespace xicm {

std::vector<std::int64_t> keyframe_candidates(const Demonstration& demo, double velocity_epsilon) {
  if (!(velocity_epsilon > 0.0)) throw Error("velocity epsilon must be positive");
  const std::size_t n = demo.length();
  if (n < 2 || demo.observations.size() != n) throw Error("demonstration '" + demo.id + "' is not valid");

  std::vector<std::int64_t> out;
  for (std::size_t t = 1; t < n; ++t) {
    bool toggled = demo.actions[t].gripper_open() != demo.actions[t - 1].gripper_open();
    double vmax = 0.0;
    for (double v : demo.observations[t].joint_velocities) vmax = std::max(vmax, std::abs(v));
    bool still = vmax < velocity_epsilon;
    if (toggled || still || t == n - 1) out.push_back(static_cast<std::int64_t>(t));
  }
  return out;
}

KeyActionSequence extract_keyframes(const Demonstration& demo, double velocity_epsilon) {
  KeyActionSequence seq;
  seq.demo_id = demo.id;
  const auto last = static_cast<std::int64_t>(demo.length()) - 1;
  for (std::int64_t t : keyframe_candidates(demo, velocity_epsilon)) {
    const Pose7& pose = demo.actions[static_cast<std::size_t>(t)];
    if (!seq.keyframes.empty() && seq.keyframes.back().action == pose) {
      if (t == last) seq.keyframes.back().timestep = t;
      continue;
    }
    seq.keyframes.push_back({t, pose});
  }
  return seq;
}

}  // namespace xicm

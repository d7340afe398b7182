#pragma once

#include <string>
#include <vector>

#include "xicm/types.hpp"

namespace xicm {

inline constexpr double kDefaultVelocityEpsilon = 0.01;  // rad/s

struct KeyAction {
  std::int64_t timestep = 0;  // index into the trajectory
  Pose7 action;
  bool operator==(const KeyAction&) const = default;
};

struct KeyActionSequence {
  std::string demo_id;
  std::vector<KeyAction> keyframes;
  bool operator==(const KeyActionSequence&) const = default;
};

/// Trajectory indices t >= 1 where the gripper flag toggles, the max-norm of
/// the joint velocities drops below `velocity_epsilon`, or t is the last step.
/// No coalescing is applied.
std::vector<std::int64_t> keyframe_candidates(const Demonstration& demo, double velocity_epsilon);

/// Key-actions of a demonstration. Consecutive candidates with identical poses
/// collapse onto the earliest index, except that a run reaching the final
/// step is represented by the final step.
KeyActionSequence extract_keyframes(const Demonstration& demo,
                                    double velocity_epsilon = kDefaultVelocityEpsilon);

}  // namespace xicm

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "xicm/discretizer.hpp"
#include "xicm/errors.hpp"
#include "xicm/rng.hpp"

using namespace xicm;
using xicm::testing::unit_workspace;

namespace {

// Counts cell boundaries at or below p instead of dividing.
int oracle_cell(double p, double lo, double hi, int res) {
  const double w = (hi - lo) / res;
  int cell = 0;
  for (int j = 1; j < res; ++j)
    if (lo + j * w <= p) cell = j;
  return cell;
}

int oracle_bin(double deg) {
  while (deg < 0.0) deg += 360.0;
  while (deg >= 360.0) deg -= 360.0;
  int bin = 0;
  for (int j = 1; j < 72; ++j)
    if (j * 5.0 <= deg) bin = j;
  return bin;
}

const WorkspaceBounds kSim{{-0.5, -0.5, -0.1}, {0.5, 0.5, 0.9}, 100};

}  // namespace

TEST_CASE("quantize_position boundary examples") {
  const auto ws = unit_workspace();
  CHECK(quantize_position({0, 0, 0}, ws) == GridIndex{0, 0, 0});
  CHECK(quantize_position({1, 1, 1}, ws) == GridIndex{99, 99, 99});
  CHECK(quantize_position({0.5, 0.5, 0.5}, ws) == GridIndex{50, 50, 50});
  CHECK(quantize_position({-3, 7, 0.5}, ws) == GridIndex{0, 99, 50});
}

TEST_CASE("quantize_position matches the boundary-count oracle") {
  Rng r(11);
  for (int i = 0; i < 20000; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = r.uniform(kSim.min_xyz[a], kSim.max_xyz[a]);
    const auto g = quantize_position(p, kSim);
    for (int a = 0; a < 3; ++a) REQUIRE(g[a] == oracle_cell(p[a], kSim.min_xyz[a], kSim.max_xyz[a], 100));
  }
}

TEST_CASE("dequantize_position returns cell centers") {
  const auto ws = unit_workspace();
  const auto c = dequantize_position({0, 0, 0}, ws);
  for (double v : c) CHECK(v == doctest::Approx(0.005).epsilon(1e-12));
  CHECK_THROWS_AS(dequantize_position({100, 0, 0}, ws), RangeError);
  CHECK_THROWS_AS(dequantize_position({0, -1, 0}, ws), RangeError);
}

TEST_CASE("angle bins") {
  CHECK(quantize_angle(0.0) == 0);
  CHECK(quantize_angle(359.9) == 71);
  CHECK(quantize_angle(-5.0) == 71);
  CHECK(quantize_angle(180.0) == 36);
  CHECK(dequantize_angle(0) == 2.5);
  CHECK(dequantize_angle(36) == 182.5);
  CHECK_THROWS_AS(dequantize_angle(72), RangeError);
  CHECK_THROWS_AS(dequantize_angle(-1), RangeError);
  Rng r(12);
  for (int i = 0; i < 20000; ++i) {
    const double d = r.uniform(-720.0, 720.0);
    REQUIRE(quantize_angle(d) == oracle_bin(d));
  }
}

TEST_CASE("quantize_pose at the workspace midpoint") {
  const auto ws = unit_workspace();
  const Pose7 p({0.5, 0.5, 0.5}, {0.0, 180.0, 265.0}, false);
  CHECK(quantize_pose(p, ws).components() == std::array<int, 7>{50, 50, 50, 0, 36, 53, 0});
  const Pose7 open({0.5, 0.5, 0.5}, {0.0, 0.0, 0.0}, true);
  CHECK(quantize_pose(open, ws).gripper == 1);
}

TEST_CASE("quantize after dequantize is the identity on integers") {
  Rng r(13);
  for (int i = 0; i < 20000; ++i) {
    QuantizedPose q{{int(r.below(100)), int(r.below(100)), int(r.below(100))},
                    {int(r.below(72)), int(r.below(72)), int(r.below(72))},
                    int(r.below(2))};
    REQUIRE(quantize_pose(dequantize_pose(q, kSim), kSim) == q);
  }
}

TEST_CASE("dequantize after quantize stays within half a cell and half a bin") {
  Rng r(14);
  for (int i = 0; i < 20000; ++i) {
    Vec3 p, rpy;
    for (int a = 0; a < 3; ++a) {
      p[a] = r.uniform(kSim.min_xyz[a], kSim.max_xyz[a]);
      rpy[a] = r.uniform(0.0, 360.0);
    }
    const Pose7 pose(p, rpy, r.below(2) == 1);
    const Pose7 back = dequantize_pose(quantize_pose(pose, kSim), kSim);
    for (int a = 0; a < 3; ++a) {
      REQUIRE(std::abs(back.position()[a] - p[a]) <= kSim.cell_width(a) / 2 + 1e-12);
      double d = std::abs(back.rpy()[a] - pose.rpy()[a]);
      d = std::min(d, 360.0 - d);
      REQUIRE(d <= 2.5 + 1e-9);
    }
    REQUIRE(back.gripper_open() == pose.gripper_open());
  }
}

TEST_CASE("quantization is monotone per axis") {
  Rng r(15);
  for (int i = 0; i < 5000; ++i) {
    const double a = r.uniform(-1.0, 2.0), b = r.uniform(-1.0, 2.0);
    const auto ga = quantize_position({a, a, a}, unit_workspace());
    const auto gb = quantize_position({b, b, b}, unit_workspace());
    if (a <= b) REQUIRE(ga[0] <= gb[0]);
    else REQUIRE(ga[0] >= gb[0]);
  }
}

TEST_CASE("objects outside the workspace clamp") {
  const auto o = quantize_object({"block", {2.0, -1.0, 0.5}}, unit_workspace());
  CHECK(o.name == "block");
  CHECK(o.grid == GridIndex{99, 0, 50});
}

TEST_CASE("in_range") {
  CHECK(QuantizedPose{{99, 0, 0}, {71, 0, 0}, 1}.in_range(100));
  CHECK_FALSE(QuantizedPose{{100, 0, 0}, {0, 0, 0}, 1}.in_range(100));
  CHECK_FALSE(QuantizedPose{{0, 0, 0}, {72, 0, 0}, 1}.in_range(100));
  CHECK_FALSE(QuantizedPose{{0, 0, 0}, {0, 0, 0}, 2}.in_range(100));
}

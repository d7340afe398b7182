#include <algorithm>

#include "xicm/errors.hpp"
#include "xicm/toy_sim.hpp"

namespace xicm {
namespace {

using Color = std::array<std::uint8_t, 3>;
using Slots = std::vector<std::array<double, 2>>;

// Palette. Objects that share a name across tasks share a color.
constexpr Color kBlue{40, 90, 230};
constexpr Color kOrange{240, 140, 30};
constexpr Color kRed{220, 30, 30};
constexpr Color kCrimson{200, 40, 70};
constexpr Color kGray{150, 150, 150};
constexpr Color kStone{165, 145, 125};
constexpr Color kBrown{140, 90, 40};
constexpr Color kYellow{230, 210, 40};
constexpr Color kTan{200, 170, 110};
constexpr Color kWhite{235, 235, 235};
constexpr Color kIvory{225, 225, 245};
constexpr Color kPurple{130, 60, 170};
constexpr Color kGreen{40, 180, 70};
constexpr Color kTeal{30, 170, 170};
constexpr Color kPink{240, 100, 180};
constexpr Color kCharcoal{80, 80, 80};
constexpr Color kSilver{190, 190, 205};
constexpr Color kBeige{185, 165, 125};
constexpr Color kSlate{70, 70, 95};
constexpr Color kOlive{120, 140, 40};
constexpr Color kMaroon{120, 30, 40};
constexpr Color kSky{110, 180, 240};

ObjectSpec movable(std::string name, Color c, double z, double hh, double r, Slots slots) {
  ObjectSpec o;
  o.name = std::move(name);
  o.color = c;
  o.z = z;
  o.half_height = hh;
  o.radius = r;
  o.slots = std::move(slots);
  return o;
}

ObjectSpec fixture(std::string name, Color c, double z, double hh, double r, Slots slots) {
  ObjectSpec o = movable(std::move(name), c, z, hh, r, std::move(slots));
  o.fixed = true;
  return o;
}

ObjectSpec button(std::string name, Color c, Slots slots) {
  ObjectSpec o = fixture(std::move(name), c, 0.02, 0.02, 0.04, std::move(slots));
  o.pressable = true;
  return o;
}

TaskSpec place(std::string name, TaskLevel level, std::string language, std::string verb, ObjectSpec actor,
               ObjectSpec target, double offset, Motion motion = Motion::kPickPlace) {
  TaskSpec t;
  t.name = std::move(name);
  t.level = level;
  t.language = std::move(language);
  t.verb = std::move(verb);
  t.motion = motion;
  t.actor = actor.name;
  t.target = target.name;
  t.place_offset = offset;
  t.objects = {std::move(actor), std::move(target)};
  return t;
}

TaskSpec press(std::string name, TaskLevel level, std::string language, std::string verb, ObjectSpec target) {
  TaskSpec t;
  t.name = std::move(name);
  t.level = level;
  t.language = std::move(language);
  t.verb = std::move(verb);
  t.motion = Motion::kPress;
  t.actor = target.name;
  t.objects = {std::move(target)};
  return t;
}

TaskSpec displace(std::string name, TaskLevel level, std::string language, std::string verb, ObjectSpec actor,
                  Vec3 d, double yaw, std::vector<ObjectSpec> extra = {}) {
  TaskSpec t;
  t.name = std::move(name);
  t.level = level;
  t.language = std::move(language);
  t.verb = std::move(verb);
  t.motion = Motion::kDisplace;
  t.actor = actor.name;
  t.displacement = d;
  t.yaw_deg = yaw;
  t.objects = {std::move(actor)};
  for (auto& e : extra) t.objects.push_back(std::move(e));
  return t;
}

// Slot sets shared between a seen task and the unseen task that mirrors it.
const Slots kButtonSlots{{-0.30, 0.30}, {-0.30, 0.10}, {-0.10, 0.30}};
const Slots kBinBlockSlots{{-0.30, -0.10}, {-0.10, -0.10}};
const Slots kBinSlots{{-0.35, -0.35}, {-0.15, -0.35}, {0.05, -0.35}};
const Slots kCupSlots{{0.35, 0.40}, {0.15, 0.40}};
const Slots kRackSlots{{0.35, 0.15}, {0.15, 0.15}, {-0.05, 0.15}};

std::vector<TaskSpec> make_seen() {
  constexpr auto S = TaskLevel::kSeen;
  std::vector<TaskSpec> v;
  v.push_back(press("push_button", S, "push the red button", "push", button("button", kRed, kButtonSlots)));
  v.push_back(place("stack_block", S, "stack the cube on the block", "stack",
                    movable("cube", kOrange, 0.02, 0.02, 0.035, {{0.10, 0.35}, {0.30, 0.35}}),
                    fixture("block", kBlue, 0.02, 0.02, 0.04, {{0.10, 0.10}, {0.30, 0.10}, {0.40, -0.10}}), 0.04));
  v.push_back(place("put_block_in_bin", S, "put the block in the bin", "put",
                    movable("block", kBlue, 0.02, 0.02, 0.04, kBinBlockSlots),
                    fixture("bin", kGray, 0.05, 0.05, 0.07, kBinSlots), 0.0));
  v.push_back(displace("open_drawer", S, "open the drawer", "open",
                       movable("drawer", kBrown, 0.08, 0.02, 0.05, {{0.30, -0.15}, {0.10, -0.15}}),
                       {0.0, -0.15, 0.0}, 90.0));
  v.push_back(place("close_lid_seen", S, "close the lid of the box", "close",
                    movable("lid", kYellow, 0.01, 0.01, 0.05, {{0.0, 0.35}, {-0.20, 0.35}}),
                    fixture("box", kTan, 0.04, 0.04, 0.06, {{0.20, -0.05}, {0.0, -0.10}, {-0.20, -0.05}}), 0.05));
  v.push_back(place("place_cup_on_rack", S, "place the cup on the rack", "place",
                    movable("cup", kWhite, 0.04, 0.04, 0.04, kCupSlots),
                    fixture("rack", kPurple, 0.05, 0.05, 0.06, kRackSlots), 0.09));
  v.push_back(place("slide_block_to_zone", S, "slide the block to the green zone", "slide",
                    movable("block", kBlue, 0.02, 0.02, 0.04, {{-0.35, 0.05}, {-0.15, 0.05}}),
                    fixture("zone", kGreen, 0.001, 0.001, 0.07, {{-0.35, -0.25}, {-0.15, -0.25}, {0.05, -0.25}}),
                    0.019, Motion::kSlide));
  v.push_back(place("put_item_in_drawer", S, "put the item in the drawer", "put",
                    movable("item", kTeal, 0.02, 0.02, 0.035, {{0.35, -0.40}, {0.15, -0.40}}),
                    fixture("drawer", kBrown, 0.06, 0.06, 0.07, {{0.35, -0.15}, {0.15, -0.15}, {-0.05, -0.15}}),
                    0.0));
  return v;
}

std::vector<TaskSpec> make_extended_seen() {
  constexpr auto S = TaskLevel::kSeen;
  std::vector<TaskSpec> v;
  v.push_back(displace("lift_cube", S, "lift the cube", "lift",
                       movable("cube", kOrange, 0.02, 0.02, 0.035, {{-0.20, 0.20}, {0.0, 0.20}, {0.20, 0.20}}),
                       {0.0, 0.0, 0.20}, 0.0));
  v.push_back(place("put_cube_in_box", S, "put the cube in the box", "put",
                    movable("cube", kOrange, 0.02, 0.02, 0.035, {{-0.35, 0.35}, {-0.15, 0.35}}),
                    fixture("box", kTan, 0.04, 0.04, 0.06, {{-0.35, 0.05}, {-0.15, 0.05}, {0.05, 0.05}}), 0.0));
  v.push_back(displace("move_block_forward", S, "move the block forward", "move",
                       movable("block", kBlue, 0.02, 0.02, 0.04, {{-0.25, -0.30}, {0.0, -0.30}, {0.25, -0.30}}),
                       {0.0, 0.15, 0.0}, 0.0));
  v.push_back(place("stack_cup_on_saucer", S, "stack the cup on the saucer", "stack",
                    movable("cup", kWhite, 0.04, 0.04, 0.04, {{0.35, -0.35}, {0.15, -0.35}}),
                    fixture("saucer", kSky, 0.005, 0.005, 0.06, {{0.35, -0.05}, {0.15, -0.05}, {-0.05, -0.05}}),
                    0.045));
  v.push_back(displace("open_cabinet", S, "open the cabinet", "open",
                       movable("cabinet", kMaroon, 0.15, 0.02, 0.05, {{0.30, 0.30}, {0.30, 0.10}}),
                       {-0.15, 0.0, 0.0}, 0.0));
  v.push_back(place("place_block_on_plate", S, "place the block on the plate", "place",
                    movable("block", kBlue, 0.02, 0.02, 0.04, {{-0.40, 0.40}, {-0.40, 0.20}}),
                    fixture("plate", kOlive, 0.005, 0.005, 0.07, {{-0.10, 0.40}, {-0.10, 0.20}, {0.10, 0.30}}),
                    0.025));
  v.push_back(place("slide_cup_to_zone", S, "slide the cup to the green zone", "slide",
                    movable("cup", kWhite, 0.04, 0.04, 0.04, {{0.35, 0.0}, {0.15, 0.0}}),
                    fixture("zone", kGreen, 0.001, 0.001, 0.07, {{0.35, -0.30}, {0.15, -0.30}, {-0.05, -0.30}}),
                    0.039, Motion::kSlide));
  v.push_back(press("press_switch", S, "press the switch", "press",
                    button("switch", kCharcoal, {{0.30, -0.30}, {0.10, -0.30}, {0.30, -0.10}})));
  v.push_back(place("put_cup_in_bin", S, "put the cup in the bin", "put",
                    movable("cup", kWhite, 0.04, 0.04, 0.04, {{-0.35, 0.10}, {-0.15, 0.10}}),
                    fixture("bin", kGray, 0.05, 0.05, 0.07, {{-0.35, -0.20}, {-0.15, -0.20}, {0.05, -0.20}}), 0.0));
  v.push_back(displace("lift_lid", S, "lift the lid", "lift",
                       movable("lid", kYellow, 0.01, 0.01, 0.05, {{0.20, -0.20}, {0.0, -0.20}, {-0.20, -0.20}}),
                       {0.0, 0.0, 0.15}, 0.0));
  return v;
}

std::vector<TaskSpec> make_level1() {
  constexpr auto L1 = TaskLevel::kUnseenLevel1;
  std::vector<TaskSpec> v;
  v.push_back(place("put_block_on_shelf", L1, "put the block on the shelf", "put",
                    movable("block", kBlue, 0.02, 0.02, 0.04, kBinBlockSlots),
                    fixture("shelf", kStone, 0.02, 0.02, 0.07, kBinSlots), 0.04));
  v.push_back(press("push_lever", L1, "push the lever", "push", button("lever", kCrimson, kButtonSlots)));
  v.push_back(place("place_mug_on_rack", L1, "place the mug on the rack", "place",
                    movable("mug", kIvory, 0.04, 0.04, 0.045, kCupSlots),
                    fixture("rack", kPurple, 0.05, 0.05, 0.06, kRackSlots), 0.09));
  v.push_back(displace("close_drawer", L1, "close the drawer", "close",
                       movable("drawer", kBrown, 0.08, 0.02, 0.05, {{0.30, -0.30}, {0.10, -0.30}}),
                       {0.0, 0.15, 0.0}, 90.0));
  return v;
}

std::vector<TaskSpec> make_level2() {
  constexpr auto L2 = TaskLevel::kUnseenLevel2;
  std::vector<TaskSpec> v;
  v.push_back(place("hang_ring_on_peg", L2, "hang the ring on the peg", "hang",
                    movable("ring", kPink, 0.01, 0.01, 0.04, {{-0.05, 0.40}, {0.15, 0.40}}),
                    fixture("peg", kCharcoal, 0.08, 0.08, 0.02, {{-0.40, -0.40}, {-0.20, -0.40}, {0.0, -0.40}}),
                    0.02));
  TaskSpec tap;
  tap.name = "turn_tap";
  tap.level = L2;
  tap.language = "turn the tap";
  tap.verb = "turn";
  tap.motion = Motion::kTurn;
  tap.actor = "tap";
  tap.turn_deg = 90.0;
  ObjectSpec t = fixture("tap", kSilver, 0.10, 0.03, 0.04, {{0.0, 0.0}, {0.20, 0.20}, {-0.20, 0.20}});
  t.turnable = true;
  tap.objects = {t};
  v.push_back(tap);
  v.push_back(place("sweep_dust_into_pan", L2, "sweep the dust into the pan", "sweep",
                    movable("dust", kBeige, 0.005, 0.005, 0.04, {{0.25, 0.25}, {0.05, 0.25}}),
                    fixture("pan", kSlate, 0.01, 0.01, 0.07, {{0.25, -0.05}, {0.05, -0.05}, {-0.15, -0.05}}),
                    -0.005, Motion::kSlide));
  return v;
}

}  // namespace

const std::vector<TaskSpec>& seen_tasks() {
  static const auto v = make_seen();
  return v;
}
const std::vector<TaskSpec>& extended_seen_tasks() {
  static const auto v = make_extended_seen();
  return v;
}
const std::vector<TaskSpec>& unseen_level1_tasks() {
  static const auto v = make_level1();
  return v;
}
const std::vector<TaskSpec>& unseen_level2_tasks() {
  static const auto v = make_level2();
  return v;
}

const std::vector<TaskSpec>& all_tasks() {
  static const auto v = [] {
    std::vector<TaskSpec> all;
    for (const auto* group : {&seen_tasks(), &extended_seen_tasks(), &unseen_level1_tasks(), &unseen_level2_tasks()})
      all.insert(all.end(), group->begin(), group->end());
    return all;
  }();
  return v;
}

const TaskSpec& find_task(std::string_view name) {
  for (const auto& t : all_tasks())
    if (t.name == name) return t;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::vector<std::string> resolve_task_names(std::string_view spec) {
  auto names = [](std::initializer_list<const std::vector<TaskSpec>*> groups) {
    std::vector<std::string> out;
    for (const auto* g : groups)
      for (const auto& t : *g) out.push_back(t.name);
    return out;
  };
  if (spec == "seen") return names({&seen_tasks()});
  if (spec == "seen_full") return names({&seen_tasks(), &extended_seen_tasks()});
  if (spec == "level1") return names({&unseen_level1_tasks()});
  if (spec == "level2") return names({&unseen_level2_tasks()});
  if (spec == "unseen") return names({&unseen_level1_tasks(), &unseen_level2_tasks()});
  if (spec == "suite") return names({&seen_tasks(), &unseen_level1_tasks(), &unseen_level2_tasks()});
  if (spec == "all") return names({&seen_tasks(), &extended_seen_tasks(), &unseen_level1_tasks(), &unseen_level2_tasks()});
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    auto item = spec.substr(start, end - start);
    if (!item.empty()) out.push_back(find_task(item).name);
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("empty task list");
  return out;
}

}  // namespace xicm

#include <doctest.h>

#include <stdexcept>

#include "dwl/obs.hpp"
#include "dwl/rng.hpp"

using namespace dwl;
using namespace dwl::obs;

namespace {

EnvConfig paper_config() {
  EnvConfig cfg;
  cfg.joint_count = 12;
  cfg.height_scan_count = 96;
  cfg.scan_x_count = 12;
  cfg.scan_y_count = 8;
  cfg.nominal_pose.assign(12, 0.0);
  cfg.noise_specs = noise::default_noise_specs();
  return cfg;
}

SimTruth truth_for(const EnvConfig& cfg) {
  SimTruth t;
  t.joint_pos.assign(static_cast<std::size_t>(cfg.joint_count), 0.25);
  t.joint_vel.assign(static_cast<std::size_t>(cfg.joint_count), -0.5);
  t.torques.assign(static_cast<std::size_t>(cfg.joint_count), 3.0);
  t.height_scan.assign(static_cast<std::size_t>(cfg.height_scan_count), -0.4);
  t.base_lin_vel = {0.3, 0.0, -0.05};
  t.friction = 1.3;
  t.feet_contact = {1.0, 1.0};
  t.body_mass = 38.5;
  return t;
}

}  // namespace

TEST_CASE("published configuration packs 47 observation and 184 state dims") {
  const auto cfg = paper_config();
  CHECK(cfg.obs_dim() == 47);
  CHECK(cfg.state_dim() == 184);

  gait::GaitClock clock{1.0, 0.25};
  std::vector<double> action(12, 0.1);
  const auto s = assemble_state(truth_for(cfg), clock, Command{0.4, 0.0, 0.0}, action,
                                2.5, cfg);
  CHECK(s.size() == 184);
  RngStream rng(3, 0);
  const auto o = assemble_observation(s, rng, cfg);
  CHECK(o.size() == 47);
}

TEST_CASE("dimension identities hold over random configurations") {
  RngStream rng(9, 0);
  for (int i = 0; i < 100; ++i) {
    EnvConfig cfg;
    cfg.joint_count = rng.uniform_int(1, 24);
    cfg.scan_x_count = rng.uniform_int(1, 16);
    cfg.scan_y_count = rng.uniform_int(1, 8);
    cfg.height_scan_count = cfg.scan_x_count * cfg.scan_y_count;
    cfg.nominal_pose.assign(static_cast<std::size_t>(cfg.joint_count), 0.0);
    const int J = cfg.joint_count;
    const int H = cfg.height_scan_count;
    CHECK(cfg.obs_dim() == 2 + 3 + 2 * J + 3 + 3 + J);
    CHECK(cfg.state_dim() == cfg.obs_dim() + 3 + 1 + 6 + 1 + 2 + 12 + 2 + 1 + 1 + J + H);

    const auto layout = make_layout(cfg);
    CHECK(layout.obs_dim == cfg.obs_dim());
    CHECK(layout.state_dim == cfg.state_dim());
    CHECK(static_cast<int>(channel_names(cfg).size()) == cfg.state_dim());

    SimTruth t = truth_for(cfg);
    gait::GaitClock clock{1.0, rng.uniform()};
    std::vector<double> action(static_cast<std::size_t>(J), 0.0);
    const auto s = assemble_state(t, clock, Command{}, action, 0.0, cfg);
    CHECK(static_cast<int>(s.size()) == cfg.state_dim());
  }
}

TEST_CASE("channel packing round-trips every named value") {
  const auto cfg = paper_config();
  const auto layout = make_layout(cfg);
  gait::GaitClock clock{0.8, 0.6};
  SimTruth t = truth_for(cfg);
  t.push_wrench = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 12; ++i) {
    t.feet_movement[static_cast<std::size_t>(i)] = 10.0 + i;
  }
  std::vector<double> action(12);
  for (int i = 0; i < 12; ++i) action[static_cast<std::size_t>(i)] = 0.01 * i;
  const Command cmd{0.5, -0.1, 0.2};
  const auto s = assemble_state(t, clock, cmd, action, 1.25, cfg);

  const auto sig = clock.clock_signal();
  CHECK(s[static_cast<std::size_t>(layout.clock)] == sig[0]);
  CHECK(s[static_cast<std::size_t>(layout.clock) + 1] == sig[1]);
  CHECK(s[static_cast<std::size_t>(layout.commands)] == 0.5);
  CHECK(s[static_cast<std::size_t>(layout.commands) + 2] == 0.2);
  for (int i = 0; i < 12; ++i) {
    CHECK(s[static_cast<std::size_t>(layout.joint_pos + i)] == 0.25);
    CHECK(s[static_cast<std::size_t>(layout.joint_vel + i)] == -0.5);
    CHECK(s[static_cast<std::size_t>(layout.last_actions + i)] == 0.01 * i);
    CHECK(s[static_cast<std::size_t>(layout.torques + i)] == 3.0);
    CHECK(s[static_cast<std::size_t>(layout.feet_movement + i)] == 10.0 + i);
  }
  CHECK(s[static_cast<std::size_t>(layout.base_lin_vel)] == 0.3);
  CHECK(s[static_cast<std::size_t>(layout.frictions)] == 1.3);
  for (int i = 0; i < 6; ++i) {
    CHECK(s[static_cast<std::size_t>(layout.push_wrench + i)] == 1.0 + i);
  }
  CHECK(s[static_cast<std::size_t>(layout.cycle_time)] == 0.8);
  // phase 0.6: right stance
  CHECK(s[static_cast<std::size_t>(layout.stance_mask)] == 0.0);
  CHECK(s[static_cast<std::size_t>(layout.stance_mask) + 1] == 1.0);
  CHECK(s[static_cast<std::size_t>(layout.feet_contact)] == 1.0);
  CHECK(s[static_cast<std::size_t>(layout.body_mass)] == 38.5);
  CHECK(s[static_cast<std::size_t>(layout.current_reward)] == 1.25);
  for (int i = 0; i < 96; ++i) {
    CHECK(s[static_cast<std::size_t>(layout.height_scan + i)] == -0.4);
  }
}

TEST_CASE("sentinel privileged values never reach the observation") {
  auto cfg = paper_config();
  const auto layout = make_layout(cfg);
  gait::GaitClock clock{1.0, 0.0};
  SimTruth t = truth_for(cfg);
  const double sentinel = 77777.0;
  t.base_lin_vel = {sentinel, sentinel, sentinel};
  t.friction = sentinel;
  t.push_wrench.fill(sentinel);
  t.feet_movement.fill(sentinel);
  t.feet_contact = {sentinel, sentinel};
  t.body_mass = sentinel;
  t.torques.assign(12, sentinel);
  t.height_scan.assign(96, sentinel);
  std::vector<double> action(12, 0.0);
  const auto s = assemble_state(t, clock, Command{}, action, sentinel, cfg);
  RngStream rng(5, 0);
  const auto o = assemble_observation(s, rng, cfg);
  for (double v : o) CHECK(std::abs(v) < sentinel / 2);
}

TEST_CASE("missing channels are reported by name") {
  const auto cfg = paper_config();
  gait::GaitClock clock{1.0, 0.0};
  SimTruth t = truth_for(cfg);
  t.height_scan.resize(10);
  std::vector<double> action(12, 0.0);
  CHECK_THROWS_WITH_AS(assemble_state(t, clock, Command{}, action, 0.0, cfg),
                       doctest::Contains("height_scan"), std::invalid_argument);

  SimTruth t2 = truth_for(cfg);
  t2.joint_vel.clear();
  CHECK_THROWS_WITH_AS(assemble_state(t2, clock, Command{}, action, 0.0, cfg),
                       doctest::Contains("joint_vel"), std::invalid_argument);
}

TEST_CASE("config validation rejects inconsistent grids") {
  EnvConfig cfg;
  cfg.joint_count = 6;
  cfg.nominal_pose.assign(6, 0.0);
  cfg.height_scan_count = 17;  // not scan_x_count * scan_y_count
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

#include "dwl/obs.hpp"

#include <stdexcept>

namespace dwl::obs {

void EnvConfig::validate() const {
  if (joint_count <= 0) throw std::invalid_argument("EnvConfig: joint_count must be positive");
  if (height_scan_count < 0) throw std::invalid_argument("EnvConfig: height_scan_count negative");
  if (scan_x_count * scan_y_count != height_scan_count) {
    throw std::invalid_argument("EnvConfig: scan grid does not match height_scan_count");
  }
  if (cycle_time <= 0.0) throw std::invalid_argument("EnvConfig: cycle_time must be positive");
  if (control_rate_hz <= 0.0 || inner_rate_hz < control_rate_hz) {
    throw std::invalid_argument("EnvConfig: control/inner rates inconsistent");
  }
  if (static_cast<int>(nominal_pose.size()) != joint_count) {
    throw std::invalid_argument("EnvConfig: nominal_pose size != joint_count");
  }
}

Layout make_layout(const EnvConfig& cfg) {
  Layout l;
  l.joint_count = cfg.joint_count;
  l.height_scan_count = cfg.height_scan_count;
  int off = 0;
  auto next = [&](int width) {
    const int at = off;
    off += width;
    return at;
  };
  l.clock = next(2);
  l.commands = next(EnvConfig::command_dims);
  l.joint_pos = next(cfg.joint_count);
  l.joint_vel = next(cfg.joint_count);
  l.ang_vel = next(3);
  l.orientation = next(3);
  l.last_actions = next(cfg.joint_count);
  l.obs_dim = off;

  l.base_lin_vel = next(3);
  l.frictions = next(1);
  l.push_wrench = next(6);
  l.cycle_time = next(1);
  l.stance_mask = next(2);
  l.feet_movement = next(12);
  l.feet_contact = next(2);
  l.body_mass = next(1);
  l.current_reward = next(1);
  l.torques = next(cfg.joint_count);
  l.height_scan = next(cfg.height_scan_count);
  l.state_dim = off;
  return l;
}

noise::SensorSlices Layout::sensor_slices() const {
  noise::SensorSlices s;
  s.obs_dim = obs_dim;
  s.joint_count = joint_count;
  s.joint_pos_offset = joint_pos;
  s.joint_vel_offset = joint_vel;
  s.ang_vel_offset = ang_vel;
  s.orientation_offset = orientation;
  return s;
}

std::vector<std::string> channel_names(const EnvConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(cfg.state_dim()));
  auto group = [&](const std::string& base, int n) {
    for (int i = 0; i < n; ++i) names.push_back(base + "_" + std::to_string(i));
  };
  group("clock", 2);
  group("command", 3);
  group("joint_pos", cfg.joint_count);
  group("joint_vel", cfg.joint_count);
  group("ang_vel", 3);
  group("orientation", 3);
  group("last_action", cfg.joint_count);
  group("base_lin_vel", 3);
  names.push_back("friction");
  group("push_wrench", 6);
  names.push_back("cycle_time");
  group("stance_mask", 2);
  group("feet_movement", 12);
  group("feet_contact", 2);
  names.push_back("body_mass");
  names.push_back("current_reward");
  group("torque", cfg.joint_count);
  group("height_scan", cfg.height_scan_count);
  return names;
}

StateVector assemble_state(const SimTruth& truth, const gait::GaitClock& clock,
                           const Command& command, std::span<const double> last_action,
                           double current_reward, const EnvConfig& cfg) {
  const std::size_t nj = static_cast<std::size_t>(cfg.joint_count);
  auto require = [&](std::size_t got, std::size_t want, const char* channel) {
    if (got != want) {
      throw std::invalid_argument(std::string("assemble_state: channel '") + channel +
                                  "' has size " + std::to_string(got) + ", expected " +
                                  std::to_string(want));
    }
  };
  require(truth.joint_pos.size(), nj, "joint_pos");
  require(truth.joint_vel.size(), nj, "joint_vel");
  require(truth.torques.size(), nj, "torques");
  require(truth.height_scan.size(), static_cast<std::size_t>(cfg.height_scan_count),
          "height_scan");
  require(last_action.size(), nj, "last_actions");

  const Layout l = make_layout(cfg);
  StateVector s(static_cast<std::size_t>(l.state_dim), 0.0);
  auto put = [&](int off, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) s[static_cast<std::size_t>(off) + i] = v[i];
  };

  const auto sig = clock.clock_signal();
  put(l.clock, sig);
  const std::array<double, 3> cmd = {command.vx, command.vy, command.yaw_rate};
  put(l.commands, cmd);
  put(l.joint_pos, truth.joint_pos);
  put(l.joint_vel, truth.joint_vel);
  put(l.ang_vel, truth.base_ang_vel);
  put(l.orientation, truth.orientation);
  put(l.last_actions, last_action);

  put(l.base_lin_vel, truth.base_lin_vel);
  s[static_cast<std::size_t>(l.frictions)] = truth.friction;
  put(l.push_wrench, truth.push_wrench);
  s[static_cast<std::size_t>(l.cycle_time)] = clock.cycle_time;
  const gait::StanceMask mask = gait::stance_mask(clock);
  s[static_cast<std::size_t>(l.stance_mask)] = mask.left;
  s[static_cast<std::size_t>(l.stance_mask) + 1] = mask.right;
  put(l.feet_movement, truth.feet_movement);
  put(l.feet_contact, truth.feet_contact);
  s[static_cast<std::size_t>(l.body_mass)] = truth.body_mass;
  s[static_cast<std::size_t>(l.current_reward)] = current_reward;
  put(l.torques, truth.torques);
  put(l.height_scan, truth.height_scan);
  return s;
}

ObsVector assemble_observation(const StateVector& state, RngStream& rng,
                               const EnvConfig& cfg) {
  const Layout l = make_layout(cfg);
  if (static_cast<int>(state.size()) != l.state_dim) {
    throw std::invalid_argument("assemble_observation: state dimension mismatch");
  }
  return noise::corrupt_observation(state, rng, cfg.noise_specs, l.sensor_slices());
}

}  // namespace dwl::obs

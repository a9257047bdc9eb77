#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dwl/gait.hpp"
#include "dwl/noise.hpp"
#include "dwl/rewards.hpp"

namespace dwl::obs {

using ObsVector = std::vector<double>;
using StateVector = std::vector<double>;

/// Desired base velocities (vx, vy, yaw rate).
struct Command {
  double vx = 0.0;        // [m/s]
  double vy = 0.0;        // [m/s]
  double yaw_rate = 0.0;  // [rad/s]
};

/// Everything the observation/state builder needs from a single environment:
/// dimensions, gait timing, nominal pose, randomization table and reward
/// scales. All vector dimensions in the artifact flow from this struct.
struct EnvConfig {
  int joint_count = 12;
  int height_scan_count = 96;
  static constexpr int command_dims = 3;

  double control_rate_hz = 100.0;
  double inner_rate_hz = 500.0;
  double cycle_time = 1.0;  // [s]

  // Height-scan grid: scan_x_count points along x spaced scan_dx starting at
  // scan_x0 (relative to the base), replicated over scan_y_count lateral rows.
  int scan_x_count = 12;
  int scan_y_count = 8;
  double scan_x0 = -0.55;
  double scan_dx = 0.1;

  std::vector<double> nominal_pose;  // theta_0 per joint [rad]
  gait::QuinticConstraints trajectory{0.0, 0.1, 10.0, 0.1, 0.0, 0.0, 0.5};
  std::vector<noise::NoiseSpec> noise_specs;
  rewards::RewardWeights reward_weights;

  // Command envelope and episode mixing.
  std::array<double, 2> cmd_vx_range{0.0, 0.5};
  std::array<double, 2> cmd_vy_range{0.0, 0.0};
  std::array<double, 2> cmd_yaw_range{0.0, 0.0};
  double standing_prob = 0.0;

  int obs_dim() const { return 2 + command_dims + 2 * joint_count + 3 + 3 + joint_count; }
  int state_dim() const {
    return obs_dim() + 3 + 1 + 6 + 1 + 2 + 12 + 2 + 1 + 1 + joint_count + height_scan_count;
  }
  double control_dt() const { return 1.0 / control_rate_hz; }
  double inner_dt() const { return 1.0 / inner_rate_hz; }
  int inner_substeps() const {
    return static_cast<int>(inner_rate_hz / control_rate_hz + 0.5);
  }

  /// Throws std::invalid_argument if fields are inconsistent.
  void validate() const;
};

/// Channel offsets of the packed vectors. The observation channels form the
/// state's prefix, in the same order; privileged channels follow.
struct Layout {
  int joint_count = 0;
  int height_scan_count = 0;

  int clock = 0;
  int commands = 0;
  int joint_pos = 0;
  int joint_vel = 0;
  int ang_vel = 0;
  int orientation = 0;
  int last_actions = 0;
  int obs_dim = 0;

  int base_lin_vel = 0;
  int frictions = 0;
  int push_wrench = 0;
  int cycle_time = 0;
  int stance_mask = 0;
  int feet_movement = 0;
  int feet_contact = 0;
  int body_mass = 0;
  int current_reward = 0;
  int torques = 0;
  int height_scan = 0;
  int state_dim = 0;

  noise::SensorSlices sensor_slices() const;
};

Layout make_layout(const EnvConfig& cfg);

/// Names for every state channel, index-aligned with the packed vector.
std::vector<std::string> channel_names(const EnvConfig& cfg);

/// Ground truth snapshot produced by the simulator for one control step.
/// Planar quantities are embedded in their 3-D channels with zeros elsewhere.
struct SimTruth {
  std::array<double, 3> base_lin_vel{};
  std::array<double, 3> base_ang_vel{};
  std::array<double, 3> orientation{};  // roll, pitch, yaw
  std::vector<double> joint_pos;
  std::vector<double> joint_vel;
  std::vector<double> torques;
  double friction = 1.0;
  std::array<double, 6> push_wrench{};
  std::array<double, 12> feet_movement{};  // L pos xyz, R pos xyz, L vel xyz, R vel xyz
  std::array<double, 2> feet_contact{};
  double body_mass = 0.0;
  std::vector<double> height_scan;
};

/// Packs the full privileged state in the documented channel order.
/// Throws std::invalid_argument naming the first channel whose size is wrong.
StateVector assemble_state(const SimTruth& truth, const gait::GaitClock& clock,
                           const Command& command, std::span<const double> last_action,
                           double current_reward, const EnvConfig& cfg);

/// Masks and perturbs the state into the deployable observation.
ObsVector assemble_observation(const StateVector& state, RngStream& rng,
                               const EnvConfig& cfg);

}  // namespace dwl::obs

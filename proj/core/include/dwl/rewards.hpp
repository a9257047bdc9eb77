#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dwl/gait.hpp"

namespace dwl::rewards {

/// Per-term scales and the reward-shaping constants. Defaults are the
/// published walking configuration.
struct RewardWeights {
  double lin_vel_tracking = 1.0;
  double ang_vel_tracking = 1.0;
  double orientation_tracking = 1.0;
  double base_height_tracking = 0.5;
  double periodic_force = 1.0;
  double periodic_velocity = 1.0;
  double foot_height_tracking = 1.0;
  double foot_vel_tracking = 0.5;
  double default_joint = 0.2;
  double energy_cost = -0.0001;
  double action_smoothness = -0.01;
  double feet_movements = -0.01;
  double large_contact = -0.01;

  double target_base_height = 0.7;   // [m]
  double force_scale = 400.0;        // contact-force normalizer [N]
  double velocity_scale = 2.0;       // swing-foot speed normalizer [m/s]
  double contact_force_limit = 400.0;  // large-contact threshold [N]
  double contact_clip = 100.0;         // large-contact penalty ceiling [N]
};

struct RewardTerm {
  std::string name;
  double raw = 0.0;
  double weighted = 0.0;
};

struct RewardBreakdown {
  std::vector<RewardTerm> terms;
  double total = 0.0;

  double raw(const std::string& name) const;
  double weighted(const std::string& name) const;
};

/// Everything a reward step needs, already expressed in the planar model's
/// ground-truth quantities. Feet heights are relative to the local terrain.
struct RewardInputs {
  std::array<double, 3> base_lin_vel{};  // (vx, vy, vz) [m/s]
  std::array<double, 3> base_ang_vel{};  // (roll, pitch, yaw) rates [rad/s]
  std::array<double, 2> base_roll_pitch{};  // [rad]
  double base_height = 0.0;                 // [m]
  std::array<double, 3> command{};          // (vx, vy, yaw rate)

  std::vector<double> joint_pos;       // [rad]
  std::vector<double> joint_vel;       // [rad/s]
  std::vector<double> torques;         // [N*m]
  std::vector<double> nominal_pose;    // theta_0 [rad]

  std::array<double, 2> foot_height{};    // sole height above terrain, L/R [m]
  std::array<double, 2> foot_vert_vel{};  // [m/s]
  std::array<double, 2> foot_vert_acc{};  // [m/s^2]
  std::array<double, 2> foot_speed{};     // planar speed magnitude [m/s]
  std::array<double, 2> contact_force{};  // normal force, L/R [N]

  gait::StanceMask mask;
  gait::FootReferences foot_ref;
  bool has_foot_ref = true;

  std::vector<double> action_t;    // a_t
  std::vector<double> action_tm1;  // a_{t-1}
  std::vector<double> action_tm2;  // a_{t-2}
};

/// Tracking kernel exp(-w * ||e||^2). Always in (0, 1]; 1 iff e == 0 or w == 0.
double phi(std::span<const double> e, double w);
double phi(double e, double w);

/// Stance-masked, normalized contact-force reward:
/// I_L * clip(F_L / scale, 0, 1) + I_R * clip(F_R / scale, 0, 1).
double periodic_force_reward(const gait::StanceMask& mask, double force_left,
                             double force_right, double force_scale = 400.0);

/// Swing-masked, normalized foot-speed reward:
/// (1 - I_L) * clip(v_L / scale, 0, 1) + (1 - I_R) * clip(v_R / scale, 0, 1).
double periodic_velocity_reward(const gait::StanceMask& mask, double speed_left,
                                double speed_right, double velocity_scale = 2.0);

/// Computes every reward term and the weighted total for one control step.
/// Throws std::invalid_argument if foot references are missing.
RewardBreakdown step_reward(const RewardInputs& in, const RewardWeights& w);

/// Fixed column order of the breakdown, for CSV headers.
const std::vector<std::string>& reward_term_names();

}  // namespace dwl::rewards

#include "dwl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dwl::rewards {

namespace {

// Error-tolerance strengths w of the published reward table.
constexpr double kWLinVel = 5.0;
constexpr double kWAngVel = 7.0;
constexpr double kWOrientation = 5.0;
constexpr double kWBaseHeight = 10.0;
constexpr double kWFootHeight = 5.0;
constexpr double kWFootVel = 3.0;
constexpr double kWDefaultJoint = 2.0;

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double RewardBreakdown::raw(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t.raw;
  }
  throw std::invalid_argument("RewardBreakdown: unknown term " + name);
}

double RewardBreakdown::weighted(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t.weighted;
  }
  throw std::invalid_argument("RewardBreakdown: unknown term " + name);
}

double phi(std::span<const double> e, double w) {
  double sq = 0.0;
  for (double x : e) sq += x * x;
  return std::exp(-w * sq);
}

double phi(double e, double w) { return std::exp(-w * e * e); }

double periodic_force_reward(const gait::StanceMask& mask, double force_left,
                             double force_right, double force_scale) {
  return mask.left * clip01(force_left / force_scale) +
         mask.right * clip01(force_right / force_scale);
}

double periodic_velocity_reward(const gait::StanceMask& mask, double speed_left,
                                double speed_right, double velocity_scale) {
  return (1 - mask.left) * clip01(speed_left / velocity_scale) +
         (1 - mask.right) * clip01(speed_right / velocity_scale);
}

const std::vector<std::string>& reward_term_names() {
  static const std::vector<std::string> names = {
      "lin_vel_tracking",   "ang_vel_tracking", "orientation_tracking",
      "base_height_tracking", "periodic_force", "periodic_velocity",
      "foot_height_tracking", "foot_vel_tracking", "default_joint",
      "energy_cost",        "action_smoothness", "feet_movements",
      "large_contact"};
  return names;
}

RewardBreakdown step_reward(const RewardInputs& in, const RewardWeights& w) {
  if (!in.has_foot_ref) {
    throw std::invalid_argument("step_reward: foot reference trajectory missing");
  }
  const std::size_t n_joints = in.joint_pos.size();
  if (in.joint_vel.size() != n_joints || in.torques.size() != n_joints ||
      in.nominal_pose.size() != n_joints) {
    throw std::invalid_argument("step_reward: joint array sizes disagree");
  }
  if (in.action_t.size() != in.action_tm1.size() ||
      in.action_t.size() != in.action_tm2.size()) {
    throw std::invalid_argument("step_reward: action history sizes disagree");
  }

  RewardBreakdown out;
  out.terms.reserve(13);
  auto push = [&](const std::string& name, double raw, double mu) {
    out.terms.push_back({name, raw, raw * mu});
    out.total += raw * mu;
  };

  // Velocity tracking. The vertical, roll-rate and pitch-rate commands are
  // held at zero; x, y and yaw rate come from the command input.
  const std::array<double, 3> lin_err = {in.base_lin_vel[0] - in.command[0],
                                         in.base_lin_vel[1] - in.command[1],
                                         in.base_lin_vel[2] - 0.0};
  push("lin_vel_tracking", phi(lin_err, kWLinVel), w.lin_vel_tracking);

  const std::array<double, 3> ang_err = {in.base_ang_vel[0] - 0.0,
                                         in.base_ang_vel[1] - 0.0,
                                         in.base_ang_vel[2] - in.command[2]};
  push("ang_vel_tracking", phi(ang_err, kWAngVel), w.ang_vel_tracking);

  push("orientation_tracking", phi(in.base_roll_pitch, kWOrientation),
       w.orientation_tracking);
  push("base_height_tracking",
       phi(in.base_height - w.target_base_height, kWBaseHeight),
       w.base_height_tracking);

  // Periodic gait rewards.
  push("periodic_force",
       periodic_force_reward(in.mask, in.contact_force[0], in.contact_force[1],
                             w.force_scale),
       w.periodic_force);
  push("periodic_velocity",
       periodic_velocity_reward(in.mask, in.foot_speed[0], in.foot_speed[1],
                                w.velocity_scale),
       w.periodic_velocity);

  // Feet trajectory tracking against the quintic reference.
  const std::array<double, 2> fh_err = {
      in.foot_height[0] - in.foot_ref.left.height,
      in.foot_height[1] - in.foot_ref.right.height};
  push("foot_height_tracking", phi(fh_err, kWFootHeight), w.foot_height_tracking);

  const std::array<double, 2> fv_err = {
      in.foot_vert_vel[0] - in.foot_ref.left.velocity,
      in.foot_vert_vel[1] - in.foot_ref.right.velocity};
  push("foot_vel_tracking", phi(fv_err, kWFootVel), w.foot_vel_tracking);

  // Regularization.
  double joint_err_sq = 0.0;
  for (std::size_t j = 0; j < n_joints; ++j) {
    const double d = in.joint_pos[j] - in.nominal_pose[j];
    joint_err_sq += d * d;
  }
  push("default_joint", std::exp(-kWDefaultJoint * joint_err_sq), w.default_joint);

  double energy = 0.0;
  for (std::size_t j = 0; j < n_joints; ++j) {
    energy += std::abs(in.torques[j]) * std::abs(in.joint_vel[j]);
  }
  push("energy_cost", energy, w.energy_cost);

  std::vector<double> jerk(in.action_t.size());
  for (std::size_t j = 0; j < jerk.size(); ++j) {
    jerk[j] = in.action_t[j] - 2.0 * in.action_tm1[j] + in.action_tm2[j];
  }
  push("action_smoothness", l2_norm(jerk), w.action_smoothness);

  push("feet_movements", l2_norm(in.foot_vert_vel) + l2_norm(in.foot_vert_acc),
       w.feet_movements);

  double large_contact = 0.0;
  for (double f : in.contact_force) {
    large_contact += std::clamp(f - w.contact_force_limit, 0.0, w.contact_clip);
  }
  push("large_contact", large_contact, w.large_contact);

  return out;
}

}  // namespace dwl::rewards

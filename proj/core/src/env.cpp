#include "dwl/env.hpp"

#include <algorithm>
#include <cmath>

namespace dwl::env {

namespace {
constexpr std::uint64_t kStreamsPerEnv = 8;
}

PlanarEnv::PlanarEnv(obs::EnvConfig cfg, sim::RobotModel model, EnvOptions opts,
                     std::uint64_t seed, std::uint64_t stream)
    : cfg_(std::move(cfg)),
      opts_(std::move(opts)),
      sim_(std::move(model), [&] {
        auto t = sim::TerrainProfile::by_name(opts_.terrain, opts_.terrain_seed);
        t.max_elev = opts_.terrain_max_elev;
        return t;
      }()),
      rng_dyn_(seed, stream * kStreamsPerEnv + 0),
      rng_noise_(seed, stream * kStreamsPerEnv + 1),
      rng_init_(seed, stream * kStreamsPerEnv + 2),
      rng_cmd_(seed, stream * kStreamsPerEnv + 3),
      rng_push_(seed, stream * kStreamsPerEnv + 4) {
  cfg_.validate();
  if (cfg_.joint_count != sim::kNumJoints) {
    throw std::invalid_argument("PlanarEnv: planar model has exactly 6 joints");
  }
  coeffs_ = gait::solve_quintic(cfg_.trajectory);
  swing_T_ = cfg_.trajectory.T;
  nominal_height_ = sim_.model().nominal_base_height();
  reset();
}

bool PlanarEnv::standing_mode() const {
  return std::abs(cmd_.vx) + std::abs(cmd_.vy) + std::abs(cmd_.yaw_rate) <
         opts_.standing_cmd_threshold;
}

gait::StanceMask PlanarEnv::reward_mask() const {
  if (standing_mode()) return {1, 1};
  return gait::stance_mask(clock_);
}

gait::FootReferences PlanarEnv::reward_refs() const {
  if (standing_mode()) return {};
  return gait::foot_reference(clock_, coeffs_, swing_T_);
}

void PlanarEnv::reset() {
  auto dyn = noise::sample_dynamics(rng_dyn_, cfg_.noise_specs, cfg_.joint_count);
  sim_.set_dynamics(dyn);
  sim_.reset_standing(0.0, &rng_init_, opts_.init_joint_noise);

  clock_.cycle_time = cfg_.cycle_time;
  clock_.phase = opts_.random_init_phase ? rng_init_.uniform() : 0.0;

  if (rng_cmd_.uniform() < cfg_.standing_prob) {
    cmd_ = obs::Command{};
  } else {
    cmd_.vx = rng_cmd_.uniform(cfg_.cmd_vx_range[0], cfg_.cmd_vx_range[1]);
    cmd_.vy = rng_cmd_.uniform(cfg_.cmd_vy_range[0], cfg_.cmd_vy_range[1]);
    cmd_.yaw_rate = rng_cmd_.uniform(cfg_.cmd_yaw_range[0], cfg_.cmd_yaw_range[1]);
  }

  const std::size_t nj = static_cast<std::size_t>(cfg_.joint_count);
  last_action_.assign(nj, 0.0);
  prev_action_.assign(nj, 0.0);
  prev2_action_.assign(nj, 0.0);
  // pre-fill with the held nominal pose so the largest representable delay
  // has history to reach back into from the first substep
  target_history_.assign(8, sim_.model().nominal_pose());
  prev_foot_vert_vel_ = {0.0, 0.0};
  prev_reward_ = 0.0;
  steps_ = 0;
  refresh_outputs();
}

StepInfo PlanarEnv::step(std::span<const double> action) {
  const std::size_t nj = static_cast<std::size_t>(cfg_.joint_count);
  if (action.size() != nj) {
    throw std::invalid_argument("PlanarEnv::step: action size mismatch");
  }

  prev2_action_ = prev_action_;
  prev_action_ = last_action_;
  last_action_.assign(action.begin(), action.end());

  if (opts_.push_enabled && steps_ > 0 && steps_ % opts_.push_interval_steps == 0) {
    sim_.apply_push(rng_push_.uniform(-opts_.push_force_max, opts_.push_force_max),
                    rng_push_.uniform(-0.5 * opts_.push_force_max,
                                      0.5 * opts_.push_force_max),
                    rng_push_.uniform(-opts_.push_torque_max, opts_.push_torque_max),
                    opts_.push_duration);
  }

  const auto nominal = sim_.model().nominal_pose();
  std::vector<double> targets(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    targets[j] = nominal[j] + opts_.action_scale * action[j];
  }

  const double inner_dt = cfg_.inner_dt();
  const int substeps = cfg_.inner_substeps();
  const double delay_ms = sim_.dynamics().system_delay_ms;
  for (int k = 0; k < substeps; ++k) {
    target_history_.push_back(targets);
    if (target_history_.size() > 16) {
      target_history_.erase(target_history_.begin());
    }
    const auto effective = noise::apply_delay(target_history_, delay_ms, inner_dt);
    sim_.substep(effective, inner_dt);
  }

  clock_ = gait::phase_advance(clock_, cfg_.control_dt());
  ++steps_;

  const auto& st = sim_.state();
  const auto& terrain = sim_.terrain();

  rewards::RewardInputs rin;
  rin.base_lin_vel = {st.qd[0], 0.0, st.qd[1]};
  rin.base_ang_vel = {0.0, st.qd[2], 0.0};
  rin.base_roll_pitch = {0.0, st.pitch()};
  rin.base_height = st.base_z() - terrain.height(st.base_x());
  rin.command = {cmd_.vx, cmd_.vy, cmd_.yaw_rate};
  rin.joint_pos.assign(st.q.data() + 3, st.q.data() + 3 + cfg_.joint_count);
  rin.joint_vel.assign(st.qd.data() + 3, st.qd.data() + 3 + cfg_.joint_count);
  rin.torques.assign(st.torque.begin(), st.torque.end());
  rin.nominal_pose = nominal;
  for (int foot = 0; foot < 2; ++foot) {
    const auto& fs = st.feet[static_cast<std::size_t>(foot)];
    rin.foot_height[static_cast<std::size_t>(foot)] =
        fs.sole_pos.y() - terrain.height(fs.sole_pos.x());
    rin.foot_vert_vel[static_cast<std::size_t>(foot)] = fs.sole_vel.y();
    rin.foot_vert_acc[static_cast<std::size_t>(foot)] =
        (fs.sole_vel.y() - prev_foot_vert_vel_[static_cast<std::size_t>(foot)]) /
        cfg_.control_dt();
    prev_foot_vert_vel_[static_cast<std::size_t>(foot)] = fs.sole_vel.y();
    rin.foot_speed[static_cast<std::size_t>(foot)] = fs.sole_vel.norm();
    rin.contact_force[static_cast<std::size_t>(foot)] = fs.contact_force;
  }
  rin.mask = reward_mask();
  rin.foot_ref = reward_refs();
  rin.action_t = last_action_;
  rin.action_tm1 = prev_action_;
  rin.action_tm2 = prev2_action_;

  StepInfo info;
  info.breakdown = rewards::step_reward(rin, cfg_.reward_weights);
  info.reward = info.breakdown.total;
  prev_reward_ = info.reward;

  const double height_above = st.base_z() - terrain.height(st.base_x());
  info.fall = st.failed || height_above < opts_.fall_height_frac * nominal_height_ ||
              std::abs(st.pitch()) > opts_.fall_pitch;
  info.timeout = steps_ >= opts_.max_episode_steps;
  info.done = info.fall || info.timeout;

  refresh_outputs();
  return info;
}

void PlanarEnv::refresh_outputs() {
  const auto& st = sim_.state();
  obs::SimTruth truth;
  truth.base_lin_vel = {st.qd[0], 0.0, st.qd[1]};
  truth.base_ang_vel = {0.0, st.qd[2], 0.0};
  truth.orientation = {0.0, st.pitch(), 0.0};
  truth.joint_pos.assign(st.q.data() + 3, st.q.data() + 3 + cfg_.joint_count);
  truth.joint_vel.assign(st.qd.data() + 3, st.qd.data() + 3 + cfg_.joint_count);
  truth.torques.assign(st.torque.begin(), st.torque.end());
  truth.friction = sim_.dynamics().friction;
  truth.push_wrench = sim_.active_push_wrench();
  for (int foot = 0; foot < 2; ++foot) {
    const auto& fs = st.feet[static_cast<std::size_t>(foot)];
    truth.feet_movement[static_cast<std::size_t>(3 * foot) + 0] = fs.sole_pos.x();
    truth.feet_movement[static_cast<std::size_t>(3 * foot) + 1] = 0.0;
    truth.feet_movement[static_cast<std::size_t>(3 * foot) + 2] = fs.sole_pos.y();
    truth.feet_movement[static_cast<std::size_t>(6 + 3 * foot) + 0] = fs.sole_vel.x();
    truth.feet_movement[static_cast<std::size_t>(6 + 3 * foot) + 1] = 0.0;
    truth.feet_movement[static_cast<std::size_t>(6 + 3 * foot) + 2] = fs.sole_vel.y();
    truth.feet_contact[static_cast<std::size_t>(foot)] = fs.in_contact ? 1.0 : 0.0;
  }
  truth.body_mass = sim_.total_mass_with_payload();
  truth.height_scan =
      sim_.height_scan(cfg_.scan_x_count, cfg_.scan_y_count, cfg_.scan_x0, cfg_.scan_dx);

  state_ = obs::assemble_state(truth, clock_, cmd_, last_action_, prev_reward_, cfg_);
  obs_ = obs::assemble_observation(state_, rng_noise_, cfg_);
}

// ---------------------------------------------------------------------------

StubEnv::StubEnv(obs::EnvConfig cfg, EnvOptions opts, std::uint64_t seed,
                 std::uint64_t stream)
    : cfg_(std::move(cfg)),
      opts_(std::move(opts)),
      rng_dyn_(seed, stream * kStreamsPerEnv + 0),
      rng_noise_(seed, stream * kStreamsPerEnv + 1),
      rng_cmd_(seed, stream * kStreamsPerEnv + 3) {
  cfg_.validate();
  coeffs_ = gait::solve_quintic(cfg_.trajectory);
  swing_T_ = cfg_.trajectory.T;
  reset();
}

void StubEnv::reset() {
  dyn_ = noise::sample_dynamics(rng_dyn_, cfg_.noise_specs, cfg_.joint_count);
  clock_.cycle_time = cfg_.cycle_time;
  clock_.phase = opts_.random_init_phase ? rng_cmd_.uniform() : 0.0;
  cmd_.vx = rng_cmd_.uniform(cfg_.cmd_vx_range[0], cfg_.cmd_vx_range[1]);
  cmd_.vy = 0.0;
  cmd_.yaw_rate = 0.0;
  const std::size_t nj = static_cast<std::size_t>(cfg_.joint_count);
  joint_pos_ = cfg_.nominal_pose;
  joint_vel_.assign(nj, 0.0);
  last_action_.assign(nj, 0.0);
  prev_action_.assign(nj, 0.0);
  prev2_action_.assign(nj, 0.0);
  base_x_ = 0.0;
  prev_reward_ = 0.0;
  steps_ = 0;
  refresh_outputs();
}

StepInfo StubEnv::step(std::span<const double> action) {
  const std::size_t nj = static_cast<std::size_t>(cfg_.joint_count);
  if (action.size() != nj) {
    throw std::invalid_argument("StubEnv::step: action size mismatch");
  }
  prev2_action_ = prev_action_;
  prev_action_ = last_action_;
  last_action_.assign(action.begin(), action.end());

  const double dt = cfg_.control_dt();
  // first-order lag toward the commanded targets
  const double lag = 0.4;
  for (std::size_t j = 0; j < nj; ++j) {
    const double target = cfg_.nominal_pose[j] + opts_.action_scale * action[j];
    const double next = joint_pos_[j] + lag * (target - joint_pos_[j]);
    joint_vel_[j] = (next - joint_pos_[j]) / dt;
    joint_pos_[j] = next;
  }
  base_x_ += cmd_.vx * dt;
  clock_ = gait::phase_advance(clock_, dt);
  ++steps_;

  const auto mask = gait::stance_mask(clock_);
  const auto refs = gait::foot_reference(clock_, coeffs_, swing_T_);
  const double weight = 38.0 * 9.81;

  rewards::RewardInputs rin;
  rin.base_lin_vel = {cmd_.vx, cmd_.vy, 0.0};
  rin.base_ang_vel = {0.0, 0.0, cmd_.yaw_rate};
  rin.base_height = cfg_.reward_weights.target_base_height;
  rin.command = {cmd_.vx, cmd_.vy, cmd_.yaw_rate};
  rin.joint_pos = joint_pos_;
  rin.joint_vel = joint_vel_;
  rin.torques.assign(nj, 0.0);
  rin.nominal_pose = cfg_.nominal_pose;
  rin.foot_height = {refs.left.height, refs.right.height};
  rin.foot_vert_vel = {refs.left.velocity, refs.right.velocity};
  rin.foot_speed = {std::abs(refs.left.velocity), std::abs(refs.right.velocity)};
  rin.contact_force = {mask.left * weight, mask.right * weight};
  rin.mask = mask;
  rin.foot_ref = refs;
  rin.action_t = last_action_;
  rin.action_tm1 = prev_action_;
  rin.action_tm2 = prev2_action_;

  StepInfo info;
  info.breakdown = rewards::step_reward(rin, cfg_.reward_weights);
  info.reward = info.breakdown.total;
  prev_reward_ = info.reward;
  info.fall = false;
  info.timeout = steps_ >= opts_.max_episode_steps;
  info.done = info.timeout;
  refresh_outputs();
  return info;
}

void StubEnv::refresh_outputs() {
  const std::size_t nj = static_cast<std::size_t>(cfg_.joint_count);
  const auto mask = gait::stance_mask(clock_);
  const auto refs = gait::foot_reference(clock_, coeffs_, swing_T_);

  obs::SimTruth truth;
  truth.base_lin_vel = {cmd_.vx, cmd_.vy, 0.0};
  truth.base_ang_vel = {0.0, 0.0, cmd_.yaw_rate};
  truth.orientation = {0.0, 0.0, 0.0};
  truth.joint_pos = joint_pos_;
  truth.joint_vel = joint_vel_;
  truth.torques.assign(nj, 0.0);
  truth.friction = dyn_.friction;
  truth.feet_movement[2] = refs.left.height;
  truth.feet_movement[5] = refs.right.height;
  truth.feet_movement[8] = refs.left.velocity;
  truth.feet_movement[11] = refs.right.velocity;
  truth.feet_contact = {static_cast<double>(mask.left),
                        static_cast<double>(mask.right)};
  truth.body_mass = 38.0 + dyn_.payload;
  truth.height_scan.assign(static_cast<std::size_t>(cfg_.height_scan_count), 0.0);

  state_ = obs::assemble_state(truth, clock_, cmd_, last_action_, prev_reward_, cfg_);
  obs_ = obs::assemble_observation(state_, rng_noise_, cfg_);
}

}  // namespace dwl::env

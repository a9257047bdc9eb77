#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dwl/gait.hpp"
#include "dwl/noise.hpp"
#include "dwl/obs.hpp"
#include "dwl/rewards.hpp"
#include "dwl/sim.hpp"

namespace dwl::env {

/// Episode mechanics that live outside the observation/state definition.
struct EnvOptions {
  double action_scale = 0.25;       // joint target = nominal + scale * action
  double init_joint_noise = 0.05;   // [rad]
  bool random_init_phase = true;
  int max_episode_steps = 600;
  double fall_height_frac = 0.3;    // terminate below frac * nominal height
  double fall_pitch = 1.0;          // [rad]
  std::string terrain = "flat";
  std::uint64_t terrain_seed = 0;
  double terrain_max_elev = 0.10;  // irregular-terrain elevation bound [m]
  bool push_enabled = false;
  int push_interval_steps = 300;
  double push_force_max = 40.0;     // [N]
  double push_torque_max = 5.0;     // [N*m]
  double push_duration = 0.1;       // [s]
  double standing_cmd_threshold = 0.05;
};

struct StepInfo {
  double reward = 0.0;
  bool done = false;
  bool fall = false;
  bool timeout = false;
  rewards::RewardBreakdown breakdown;
};

/// One training environment: owns its RNG streams, produces (obs, state)
/// pairs and scalar rewards. Implementations must be independent across
/// instances so rollouts can step them from parallel workers.
class EnvBase {
 public:
  virtual ~EnvBase() = default;

  virtual void reset() = 0;
  virtual StepInfo step(std::span<const double> action) = 0;

  virtual const obs::ObsVector& observation() const = 0;
  virtual const obs::StateVector& state() const = 0;
  virtual const obs::EnvConfig& config() const = 0;
  virtual int episode_steps() const = 0;
};

/// Planar-biped environment backed by the rigid-body simulator.
class PlanarEnv : public EnvBase {
 public:
  PlanarEnv(obs::EnvConfig cfg, sim::RobotModel model, EnvOptions opts,
            std::uint64_t seed, std::uint64_t stream);

  void reset() override;
  StepInfo step(std::span<const double> action) override;

  const obs::ObsVector& observation() const override { return obs_; }
  const obs::StateVector& state() const override { return state_; }
  const obs::EnvConfig& config() const override { return cfg_; }
  int episode_steps() const override { return steps_; }

  const sim::Simulator& simulator() const { return sim_; }
  sim::Simulator& simulator() { return sim_; }
  const obs::Command& command() const { return cmd_; }
  const gait::GaitClock& clock() const { return clock_; }
  bool standing_mode() const;

 private:
  void refresh_outputs();
  gait::StanceMask reward_mask() const;
  gait::FootReferences reward_refs() const;

  obs::EnvConfig cfg_;
  EnvOptions opts_;
  sim::Simulator sim_;
  gait::GaitClock clock_;
  gait::QuinticCoeffs coeffs_;
  double swing_T_;
  double nominal_height_;

  RngStream rng_dyn_, rng_noise_, rng_init_, rng_cmd_, rng_push_;
  obs::Command cmd_;
  std::vector<double> last_action_;
  std::vector<double> prev_action_;   // a_{t-1}
  std::vector<double> prev2_action_;  // a_{t-2}
  std::vector<std::vector<double>> target_history_;  // inner-rate, for delay
  std::array<double, 2> prev_foot_vert_vel_{};
  double prev_reward_ = 0.0;
  int steps_ = 0;

  obs::ObsVector obs_;
  obs::StateVector state_;
};

/// Kinematic stand-in that exercises arbitrary joint/scan dimensions (the
/// 12-joint published configuration has no planar dynamics). Joints track
/// their targets with first-order lag; the base follows the command exactly;
/// feet alternate contact with the stance mask and follow the swing profile.
class StubEnv : public EnvBase {
 public:
  StubEnv(obs::EnvConfig cfg, EnvOptions opts, std::uint64_t seed,
          std::uint64_t stream);

  void reset() override;
  StepInfo step(std::span<const double> action) override;

  const obs::ObsVector& observation() const override { return obs_; }
  const obs::StateVector& state() const override { return state_; }
  const obs::EnvConfig& config() const override { return cfg_; }
  int episode_steps() const override { return steps_; }

 private:
  void refresh_outputs();

  obs::EnvConfig cfg_;
  EnvOptions opts_;
  gait::GaitClock clock_;
  gait::QuinticCoeffs coeffs_;
  double swing_T_;

  RngStream rng_dyn_, rng_noise_, rng_cmd_;
  noise::RandomizedDynamics dyn_;
  obs::Command cmd_;
  std::vector<double> joint_pos_, joint_vel_, last_action_, prev_action_, prev2_action_;
  double base_x_ = 0.0;
  double prev_reward_ = 0.0;
  int steps_ = 0;

  obs::ObsVector obs_;
  obs::StateVector state_;
};

}  // namespace dwl::env

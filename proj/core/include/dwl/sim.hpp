#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dwl/noise.hpp"
#include "dwl/rng.hpp"

namespace dwl::sim {

inline constexpr int kNumJoints = 6;   // hip, knee, ankle per leg
inline constexpr int kNumDofs = 9;     // base (x, z, pitch) + joints

using Vec2 = Eigen::Vector2d;
using GenVec = Eigen::Matrix<double, kNumDofs, 1>;

struct JointParams {
  double kp = 0.0;
  double kd = 0.0;
  double torque_limit = 0.0;  // [N*m]
  double lower = 0.0;         // [rad]
  double upper = 0.0;         // [rad]
};

/// Sagittal-plane biped: trunk plus two hip-knee-ankle legs with segment
/// feet. Hip and knee actuators are strong, ankles weak, mirroring the
/// torque hierarchy of the reference platform. The model is sized so the
/// reference ankle gains (Kp 20, Kd 5) stabilize quiet standing: combined
/// ankle stiffness must exceed m*g*h_com of the ankle-pivot pendulum mode.
struct RobotModel {
  double trunk_mass = 3.0;
  double trunk_inertia = 0.05;
  double hip_offset_x = 0.0;
  double hip_offset_z = -0.08;  // hip joint relative to trunk COM

  double thigh_mass = 0.9;
  double thigh_len = 0.2;
  double shank_mass = 0.6;
  double shank_len = 0.2;
  double foot_mass = 0.35;
  double heel_x = -0.04;
  double toe_x = 0.10;
  double sole_drop = 0.04;  // ankle height above the sole

  // per-leg joint parameters in order hip, knee, ankle
  std::array<JointParams, 3> leg_joints{
      JointParams{80.0, 4.0, 55.0, -1.2, 1.2},
      JointParams{80.0, 4.0, 55.0, -2.2, -0.01},
      JointParams{20.0, 5.0, 8.0, -1.0, 1.0},
  };

  std::array<double, 3> nominal_leg_pose{0.15, -0.3, 0.15};  // hip, knee, ankle

  // reflected actuator inertia on the joint coordinate (rotor + gearing);
  // keeps stiff joint damping integrable at the 2 ms substep
  std::array<double, 3> rotor_inertia{0.015, 0.015, 0.02};

  double gravity = 9.81;
  double contact_kn = 4.0e3;   // normal stiffness [N/m]
  double contact_dn = 2.0e2;   // normal damping [N*s/m]
  double contact_kt = 2.0e3;   // tangential anchor stiffness [N/m]
  double contact_dt = 5.0e1;   // tangential damping [N*s/m]
  double joint_limit_k = 200.0;
  double joint_limit_d = 2.0;
  double settle_time = 0.5;   // quiet-stance settling after a reset [s]

  double thigh_inertia() const { return thigh_mass * thigh_len * thigh_len / 12.0; }
  double shank_inertia() const { return shank_mass * shank_len * shank_len / 12.0; }
  double foot_inertia() const {
    const double l = toe_x - heel_x;
    return foot_mass * l * l / 12.0;
  }
  double total_mass() const {
    return trunk_mass + 2.0 * (thigh_mass + shank_mass + foot_mass);
  }
  std::vector<double> nominal_pose() const {
    return {nominal_leg_pose[0], nominal_leg_pose[1], nominal_leg_pose[2],
            nominal_leg_pose[0], nominal_leg_pose[1], nominal_leg_pose[2]};
  }
  /// Base height above flat ground when standing in the nominal pose.
  double nominal_base_height() const;
};

/// Piecewise height field h(x). Features begin at x >= 0; ground is flat
/// before that so episodes start on level footing.
struct TerrainProfile {
  enum class Kind { flat, slope, stairs, irregular };
  Kind kind = Kind::flat;
  double grade = 0.25;      // slope rise per run
  double rise = 0.10;       // stair rise [m]
  double run = 0.20;        // stair run [m]
  double max_elev = 0.10;   // irregular elevation bound [m]
  double cell = 0.4;        // irregular cell width [m]
  std::uint64_t seed = 0;

  double height(double x) const;
  static TerrainProfile by_name(const std::string& name, std::uint64_t seed = 0);
  std::string name() const;
};

struct FootState {
  Vec2 sole_pos = Vec2::Zero();  // sole midpoint, world frame
  Vec2 sole_vel = Vec2::Zero();
  double contact_force = 0.0;    // summed normal force [N]
  bool in_contact = false;
};

struct SimState {
  GenVec q = GenVec::Zero();   // x, z, pitch, qL_hip, qL_knee, qL_ankle, qR_...
  GenVec qd = GenVec::Zero();
  std::array<FootState, 2> feet;              // left, right
  std::array<double, kNumJoints> torque{};    // applied this substep
  bool failed = false;
  double time = 0.0;

  double base_x() const { return q[0]; }
  double base_z() const { return q[1]; }
  double pitch() const { return q[2]; }
};

/// tau = strength * (kp * (target + offset - q) - kd * qd), clamped to the
/// torque limit. Gains arrive with any PD randomization factors already
/// applied.
double pd_torque(double target, double q, double qd, double kp, double kd,
                 double strength, double offset, double torque_limit);

class Simulator {
 public:
  Simulator(RobotModel model, TerrainProfile terrain);

  /// Stands the robot at x0 in the nominal pose, soles resting on the
  /// terrain. Optional rng jitters the joint angles.
  void reset_standing(double x0 = 0.0, RngStream* rng = nullptr,
                      double joint_noise = 0.0);

  void set_dynamics(const noise::RandomizedDynamics& d);
  const noise::RandomizedDynamics& dynamics() const { return dyn_; }

  /// Schedules an external wrench on the trunk starting now.
  void apply_push(double force_x, double force_z, double torque, double duration);
  std::array<double, 6> active_push_wrench() const;  // (fx, fy, fz, tx, ty, tz)

  /// One inner PD + integration substep of length dt.
  void substep(std::span<const double> joint_targets, double dt);

  const SimState& state() const { return state_; }
  SimState& mutable_state() { return state_; }
  const RobotModel& model() const { return model_; }
  const TerrainProfile& terrain() const { return terrain_; }

  double total_mass_with_payload() const { return model_.total_mass() + dyn_.payload; }

  /// Kinetic + potential energy of the articulated chain.
  double total_energy() const;

  /// Whole-robot center of mass, world frame.
  Vec2 robot_com() const;

  /// Terrain heights relative to the base over the x grid, replicated
  /// row-major over y rows (planar model has no lateral variation).
  std::vector<double> height_scan(int x_count, int y_count, double x0,
                                  double dx) const;

  /// Inverse dynamics of the chain (exposed for diagnostics and tests).
  GenVec inverse_dynamics(const GenVec& q, const GenVec& qd, const GenVec& qdd,
                          bool with_gravity, bool with_external) const;

 private:
  void update_foot_cache();
  void forward_dynamics(const std::array<double, kNumJoints>& actuation,
                        GenVec& qdd) const;
  void contact_forces(std::array<Vec2, 4>& point_forces,
                      std::array<Vec2, 4>& points, std::array<int, 4>& bodies,
                      std::array<double, 2>& per_foot_normal) const;

  RobotModel model_;
  TerrainProfile terrain_;
  noise::RandomizedDynamics dyn_;
  SimState state_;
  double push_fx_ = 0.0, push_fz_ = 0.0, push_tq_ = 0.0;
  double push_until_ = -1.0;
  // stick-slip anchors, one per sole point (L heel, L toe, R heel, R toe)
  std::array<double, 4> anchor_x_{};
  std::array<bool, 4> anchored_{};
};

}  // namespace dwl::sim

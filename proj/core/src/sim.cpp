#include "dwl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dwl::sim {

namespace {

inline Vec2 rot(double phi, const Vec2& v) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}
// omega x v for planar angular velocity (about the out-of-plane axis)
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }
inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

constexpr int kNumBodies = 7;  // trunk, L thigh/shank/foot, R thigh/shank/foot
constexpr int kParent[kNumBodies] = {-1, 0, 1, 2, 0, 4, 5};
// q index of the joint connecting a body to its parent (-1 for the base)
constexpr int kJointQ[kNumBodies] = {-1, 3, 4, 5, 6, 7, 8};
constexpr int kLeftFoot = 3;
constexpr int kRightFoot = 6;

struct Body {
  Vec2 anchor = Vec2::Zero();  // joint location in the parent frame
  Vec2 com = Vec2::Zero();     // COM in the body frame
  double mass = 0.0;
  double inertia = 0.0;
};

struct Frame {
  double phi = 0.0, omega = 0.0, alpha = 0.0;
  Vec2 o = Vec2::Zero();   // joint origin, world
  Vec2 vo = Vec2::Zero();
  Vec2 ao = Vec2::Zero();
  Vec2 rc = Vec2::Zero();  // COM, world
  Vec2 vc = Vec2::Zero();
  Vec2 ac = Vec2::Zero();
};

}  // namespace

double pd_torque(double target, double q, double qd, double kp, double kd,
                 double strength, double offset, double torque_limit) {
  const double tau = strength * (kp * (target + offset - q) - kd * qd);
  return std::clamp(tau, -torque_limit, torque_limit);
}

double RobotModel::nominal_base_height() const {
  // FK of one leg in the nominal pose with zero pitch; the base sits at the
  // negative of the lowest sole point.
  const double phi_t = nominal_leg_pose[0];
  const double phi_s = phi_t + nominal_leg_pose[1];
  const double phi_f = phi_s + nominal_leg_pose[2];
  Vec2 hip{hip_offset_x, hip_offset_z};
  Vec2 knee = hip + rot(phi_t, Vec2{0.0, -thigh_len});
  Vec2 ankle = knee + rot(phi_s, Vec2{0.0, -shank_len});
  const Vec2 heel = ankle + rot(phi_f, Vec2{heel_x, -sole_drop});
  const Vec2 toe = ankle + rot(phi_f, Vec2{toe_x, -sole_drop});
  return -std::min(heel.y(), toe.y());
}

double TerrainProfile::height(double x) const {
  if (x < 0.0) return 0.0;
  switch (kind) {
    case Kind::flat:
      return 0.0;
    case Kind::slope:
      return grade * x;
    case Kind::stairs:
      return rise * (std::floor(x / run) + 1.0);
    case Kind::irregular: {
      const auto cell_index = static_cast<std::int64_t>(std::floor(x / cell));
      // hash the cell index with the profile seed into [0, max_elev]
      std::uint64_t h = static_cast<std::uint64_t>(cell_index) * 0x9e3779b97f4a7c15ULL;
      h ^= seed + 0xbf58476d1ce4e5b9ULL;
      h ^= h >> 30;
      h *= 0x94d049bb133111ebULL;
      h ^= h >> 31;
      const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      return max_elev * u;
    }
  }
  return 0.0;
}

TerrainProfile TerrainProfile::by_name(const std::string& name, std::uint64_t seed) {
  TerrainProfile t;
  t.seed = seed;
  if (name == "flat") {
    t.kind = Kind::flat;
  } else if (name == "slope") {
    t.kind = Kind::slope;
  } else if (name == "stairs") {
    t.kind = Kind::stairs;
  } else if (name == "irregular") {
    t.kind = Kind::irregular;
  } else {
    throw std::invalid_argument("TerrainProfile: unknown terrain '" + name + "'");
  }
  return t;
}

std::string TerrainProfile::name() const {
  switch (kind) {
    case Kind::flat: return "flat";
    case Kind::slope: return "slope";
    case Kind::stairs: return "stairs";
    case Kind::irregular: return "irregular";
  }
  return "flat";
}

Simulator::Simulator(RobotModel model, TerrainProfile terrain)
    : model_(std::move(model)), terrain_(terrain) {
  dyn_.motor_offset.assign(kNumJoints, 0.0);
  reset_standing();
}

void Simulator::set_dynamics(const noise::RandomizedDynamics& d) {
  dyn_ = d;
  if (dyn_.motor_offset.size() != static_cast<std::size_t>(kNumJoints)) {
    dyn_.motor_offset.assign(kNumJoints, 0.0);
  }
}

void Simulator::apply_push(double force_x, double force_z, double torque,
                           double duration) {
  if (duration <= 0.0) throw std::invalid_argument("apply_push: duration must be > 0");
  push_fx_ = force_x;
  push_fz_ = force_z;
  push_tq_ = torque;
  push_until_ = state_.time + duration;
}

std::array<double, 6> Simulator::active_push_wrench() const {
  if (state_.time < push_until_) {
    return {push_fx_, 0.0, push_fz_, 0.0, push_tq_, 0.0};
  }
  return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
}

namespace {

std::array<Body, kNumBodies> build_bodies(const RobotModel& m, double payload) {
  std::array<Body, kNumBodies> b;
  b[0].mass = m.trunk_mass + payload;
  b[0].inertia = m.trunk_inertia;
  b[0].com = Vec2::Zero();
  for (int leg = 0; leg < 2; ++leg) {
    const int thigh = 1 + 3 * leg;
    b[thigh].anchor = {m.hip_offset_x, m.hip_offset_z};
    b[thigh].com = {0.0, -0.5 * m.thigh_len};
    b[thigh].mass = m.thigh_mass;
    b[thigh].inertia = m.thigh_inertia();
    b[thigh + 1].anchor = {0.0, -m.thigh_len};
    b[thigh + 1].com = {0.0, -0.5 * m.shank_len};
    b[thigh + 1].mass = m.shank_mass;
    b[thigh + 1].inertia = m.shank_inertia();
    b[thigh + 2].anchor = {0.0, -m.shank_len};
    b[thigh + 2].com = {0.5 * (m.heel_x + m.toe_x), -0.5 * m.sole_drop};
    b[thigh + 2].mass = m.foot_mass;
    b[thigh + 2].inertia = m.foot_inertia();
  }
  return b;
}

void kinematics_pass(const std::array<Body, kNumBodies>& bodies, const GenVec& q,
                     const GenVec& qd, const GenVec& qdd, double gravity,
                     std::array<Frame, kNumBodies>& f) {
  f[0].phi = q[2];
  f[0].omega = qd[2];
  f[0].alpha = qdd[2];
  f[0].o = {q[0], q[1]};
  f[0].vo = {qd[0], qd[1]};
  // the base "accelerates upward" by g so gravity reaches every body
  f[0].ao = {qdd[0], qdd[1] + gravity};
  for (int i = 0; i < kNumBodies; ++i) {
    if (i > 0) {
      const Frame& p = f[kParent[i]];
      const int j = kJointQ[i];
      const Vec2 r = rot(p.phi, bodies[i].anchor);
      f[i].o = p.o + r;
      f[i].vo = p.vo + p.omega * perp(r);
      f[i].ao = p.ao + p.alpha * perp(r) - p.omega * p.omega * r;
      f[i].phi = p.phi + q[j];
      f[i].omega = p.omega + qd[j];
      f[i].alpha = p.alpha + qdd[j];
    }
    const Vec2 s = rot(f[i].phi, bodies[i].com);
    f[i].rc = f[i].o + s;
    f[i].vc = f[i].vo + f[i].omega * perp(s);
    f[i].ac = f[i].ao + f[i].alpha * perp(s) - f[i].omega * f[i].omega * s;
  }
}

}  // namespace

GenVec Simulator::inverse_dynamics(const GenVec& q, const GenVec& qd,
                                   const GenVec& qdd, bool with_gravity,
                                   bool with_external) const {
  const auto bodies = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(bodies, q, qd, qdd, with_gravity ? model_.gravity : 0.0, f);

  // external loads: contact forces at sole points, push wrench at the trunk
  std::array<Vec2, kNumBodies> f_ext;
  f_ext.fill(Vec2::Zero());
  std::array<double, kNumBodies> tau_ext{};
  if (with_external) {
    std::array<Vec2, 4> forces, points;
    std::array<int, 4> point_body;
    std::array<double, 2> per_foot;
    contact_forces(forces, points, point_body, per_foot);
    for (int k = 0; k < 4; ++k) {
      const int b = point_body[k];
      f_ext[b] += forces[k];
      tau_ext[b] += cross2(points[k] - f[b].rc, forces[k]);
    }
    if (state_.time < push_until_) {
      f_ext[0] += Vec2{push_fx_, push_fz_};
      tau_ext[0] += push_tq_;
    }
  }

  std::array<Vec2, kNumBodies> F;
  F.fill(Vec2::Zero());
  std::array<double, kNumBodies> N{};
  GenVec out = GenVec::Zero();
  for (int i = kNumBodies - 1; i >= 0; --i) {
    Vec2 Fi = bodies[i].mass * f[i].ac - f_ext[i];
    double Ni = bodies[i].inertia * f[i].alpha - tau_ext[i];
    for (int c = 0; c < kNumBodies; ++c) {
      if (kParent[c] != i) continue;
      Fi += F[c];
      Ni += N[c] + cross2(f[c].o - f[i].rc, F[c]);
    }
    Ni -= cross2(f[i].o - f[i].rc, Fi);
    F[i] = Fi;
    N[i] = Ni;
    if (i == 0) {
      out[0] = Fi.x();
      out[1] = Fi.y();
      out[2] = Ni;
    } else {
      const int j = kJointQ[i];
      out[j] = Ni + model_.rotor_inertia[static_cast<std::size_t>((j - 3) % 3)] * qdd[j];
    }
  }
  return out;
}

void Simulator::contact_forces(std::array<Vec2, 4>& point_forces,
                               std::array<Vec2, 4>& points, std::array<int, 4>& bodies,
                               std::array<double, 2>& per_foot_normal) const {
  const auto body_params = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(body_params, state_.q, state_.qd, GenVec::Zero(), 0.0, f);

  per_foot_normal = {0.0, 0.0};
  const double mu = dyn_.friction;
  int k = 0;
  for (int foot = 0; foot < 2; ++foot) {
    const int b = foot == 0 ? kLeftFoot : kRightFoot;
    for (const double px : {model_.heel_x, model_.toe_x}) {
      const Vec2 local{px, -model_.sole_drop};
      const Vec2 rp = rot(f[b].phi, local);
      const Vec2 p = f[b].o + rp;
      const Vec2 v = f[b].vo + f[b].omega * perp(rp);
      bodies[k] = b;
      points[k] = p;
      Vec2 force = Vec2::Zero();
      const double ground = terrain_.height(p.x());
      const double depth = ground - p.y();
      if (depth > 0.0) {
        double fn = model_.contact_kn * depth - model_.contact_dn * v.y();
        fn = std::max(fn, 0.0);
        // stick-slip: tangential spring against the contact anchor, capped
        // by the friction cone
        double ft = 0.0;
        if (anchored_[static_cast<std::size_t>(k)]) {
          ft = -model_.contact_kt * (p.x() - anchor_x_[static_cast<std::size_t>(k)]) -
               model_.contact_dt * v.x();
          ft = std::clamp(ft, -mu * fn, mu * fn);
        }
        force = {ft, fn};
        per_foot_normal[foot] += fn;
      }
      point_forces[k] = force;
      ++k;
    }
  }
}

void Simulator::forward_dynamics(const std::array<double, kNumJoints>& actuation,
                                 GenVec& qdd) const {
  // actuation on the joints only; contacts and pushes enter through the
  // external terms of the inverse dynamics
  GenVec q_act = GenVec::Zero();
  for (int j = 0; j < kNumJoints; ++j) q_act[3 + j] = actuation[static_cast<std::size_t>(j)];

  const GenVec bias = inverse_dynamics(state_.q, state_.qd, GenVec::Zero(),
                                       /*with_gravity=*/true, /*with_external=*/true);

  Eigen::Matrix<double, kNumDofs, kNumDofs> M;
  for (int k = 0; k < kNumDofs; ++k) {
    GenVec unit = GenVec::Zero();
    unit[k] = 1.0;
    M.col(k) = inverse_dynamics(state_.q, GenVec::Zero(), unit,
                                /*with_gravity=*/false, /*with_external=*/false);
  }
  qdd = M.ldlt().solve(q_act - bias);
}

void Simulator::substep(std::span<const double> joint_targets, double dt) {
  if (joint_targets.size() != static_cast<std::size_t>(kNumJoints)) {
    throw std::invalid_argument("substep: expected one target per joint");
  }
  if (state_.failed) return;

  // PD torques with randomized gains, strength and offsets; passive limit
  // springs keep joints inside their range
  std::array<double, kNumJoints> actuation{};
  for (int j = 0; j < kNumJoints; ++j) {
    const JointParams& jp = model_.leg_joints[static_cast<std::size_t>(j % 3)];
    const double kp = jp.kp * dyn_.pd_factors[0];
    const double kd = jp.kd * dyn_.pd_factors[1];
    const double target =
        std::clamp(joint_targets[static_cast<std::size_t>(j)], jp.lower, jp.upper);
    const double qj = state_.q[3 + j];
    const double qdj = state_.qd[3 + j];
    double tau = pd_torque(target, qj, qdj, kp, kd, dyn_.motor_strength,
                           dyn_.motor_offset[static_cast<std::size_t>(j)],
                           jp.torque_limit);
    state_.torque[static_cast<std::size_t>(j)] = tau;
    if (qj < jp.lower) {
      tau += model_.joint_limit_k * (jp.lower - qj) - model_.joint_limit_d * qdj;
    } else if (qj > jp.upper) {
      tau += model_.joint_limit_k * (jp.upper - qj) - model_.joint_limit_d * qdj;
    }
    actuation[static_cast<std::size_t>(j)] = tau;
  }

  GenVec qdd;
  forward_dynamics(actuation, qdd);

  state_.qd += qdd * dt;
  state_.q += state_.qd * dt;
  state_.time += dt;

  if (!state_.q.allFinite() || !state_.qd.allFinite() ||
      state_.q.cwiseAbs().maxCoeff() > 1.0e4 ||
      state_.qd.cwiseAbs().maxCoeff() > 1.0e4) {
    state_.failed = true;
    return;
  }
  update_foot_cache();
}

void Simulator::update_foot_cache() {
  const auto bodies = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(bodies, state_.q, state_.qd, GenVec::Zero(), 0.0, f);

  // refresh the stick-slip anchors against the integrated positions
  int k = 0;
  for (int foot = 0; foot < 2; ++foot) {
    const int b = foot == 0 ? kLeftFoot : kRightFoot;
    for (const double px : {model_.heel_x, model_.toe_x}) {
      const Vec2 rp = rot(f[b].phi, Vec2{px, -model_.sole_drop});
      const Vec2 p = f[b].o + rp;
      const double depth = terrain_.height(p.x()) - p.y();
      auto& anchored = anchored_[static_cast<std::size_t>(k)];
      auto& anchor = anchor_x_[static_cast<std::size_t>(k)];
      if (depth <= 0.0) {
        anchored = false;
      } else if (!anchored) {
        anchored = true;
        anchor = p.x();
      } else {
        const double fn = std::max(0.0, model_.contact_kn * depth);
        const double stretch_max = dyn_.friction * fn / model_.contact_kt;
        const double stretch = p.x() - anchor;
        if (stretch > stretch_max) {
          anchor = p.x() - stretch_max;
        } else if (stretch < -stretch_max) {
          anchor = p.x() + stretch_max;
        }
      }
      ++k;
    }
  }

  std::array<Vec2, 4> forces, points;
  std::array<int, 4> point_body;
  std::array<double, 2> per_foot;
  contact_forces(forces, points, point_body, per_foot);

  for (int foot = 0; foot < 2; ++foot) {
    const int b = foot == 0 ? kLeftFoot : kRightFoot;
    const Vec2 local{0.5 * (model_.heel_x + model_.toe_x), -model_.sole_drop};
    const Vec2 rp = rot(f[b].phi, local);
    FootState& fs = state_.feet[static_cast<std::size_t>(foot)];
    fs.sole_pos = f[b].o + rp;
    fs.sole_vel = f[b].vo + f[b].omega * perp(rp);
    fs.contact_force = per_foot[static_cast<std::size_t>(foot)];
    fs.in_contact = per_foot[static_cast<std::size_t>(foot)] > 1e-9;
  }
}

void Simulator::reset_standing(double x0, RngStream* rng, double joint_noise) {
  state_ = SimState{};
  state_.q[0] = x0;
  const auto pose = model_.nominal_pose();
  for (int j = 0; j < kNumJoints; ++j) {
    double v = pose[static_cast<std::size_t>(j)];
    if (rng && joint_noise > 0.0) v += rng->uniform(-joint_noise, joint_noise);
    const JointParams& jp = model_.leg_joints[static_cast<std::size_t>(j % 3)];
    state_.q[3 + j] = std::clamp(v, jp.lower, jp.upper);
  }
  // drop the base so the lowest sole point touches the terrain
  const auto bodies = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(bodies, state_.q, state_.qd, GenVec::Zero(), 0.0, f);
  double shift = -1.0e30;
  for (const int b : {kLeftFoot, kRightFoot}) {
    for (const double px : {model_.heel_x, model_.toe_x}) {
      const Vec2 p = f[b].o + rot(f[b].phi, Vec2{px, -model_.sole_drop});
      shift = std::max(shift, terrain_.height(p.x()) - p.y());
    }
  }
  state_.q[1] += shift;
  push_until_ = -1.0;
  update_foot_cache();

  // let the contact transient die out so episodes start from quiet stance
  if (model_.settle_time > 0.0) {
    std::vector<double> hold(static_cast<std::size_t>(kNumJoints));
    for (int j = 0; j < kNumJoints; ++j) hold[static_cast<std::size_t>(j)] = state_.q[3 + j];
    const int n = static_cast<int>(model_.settle_time / 0.002);
    for (int i = 0; i < n && !state_.failed; ++i) substep(hold, 0.002);
    state_.time = 0.0;
  }
}

double Simulator::total_energy() const {
  const auto bodies = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(bodies, state_.q, state_.qd, GenVec::Zero(), 0.0, f);
  double e = 0.0;
  for (int i = 0; i < kNumBodies; ++i) {
    e += 0.5 * bodies[i].mass * f[i].vc.squaredNorm();
    e += 0.5 * bodies[i].inertia * f[i].omega * f[i].omega;
    e += bodies[i].mass * model_.gravity * f[i].rc.y();
  }
  for (int j = 0; j < kNumJoints; ++j) {
    e += 0.5 * model_.rotor_inertia[static_cast<std::size_t>(j % 3)] * state_.qd[3 + j] *
         state_.qd[3 + j];
  }
  return e;
}

Vec2 Simulator::robot_com() const {
  const auto bodies = build_bodies(model_, dyn_.payload);
  std::array<Frame, kNumBodies> f;
  kinematics_pass(bodies, state_.q, state_.qd, GenVec::Zero(), 0.0, f);
  Vec2 com = Vec2::Zero();
  double m = 0.0;
  for (int i = 0; i < kNumBodies; ++i) {
    com += bodies[i].mass * f[i].rc;
    m += bodies[i].mass;
  }
  return com / m;
}

std::vector<double> Simulator::height_scan(int x_count, int y_count, double x0,
                                           double dx) const {
  std::vector<double> scan;
  scan.reserve(static_cast<std::size_t>(x_count) * y_count);
  for (int y = 0; y < y_count; ++y) {
    for (int i = 0; i < x_count; ++i) {
      const double x = state_.base_x() + x0 + i * dx;
      scan.push_back(terrain_.height(x) - state_.base_z());
    }
  }
  return scan;
}

}  // namespace dwl::sim
